import init, { cohomology, lyapunov, growth } from "./pkg/toral_web.js";

const $ = (id) => document.getElementById(id);
const out = $("out");
const canvas = $("plot");
const ctx = canvas.getContext("2d");
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

function show(text, isError = false) {
  out.textContent = text;
  out.className = isError ? "err" : "";
}

// lines: [{points: [[x, y], ...], label, dashed}]
function plot(lines, xlabel, logx = false) {
  const w = canvas.width, h = canvas.height, pad = 70;
  ctx.clearRect(0, 0, w, h);
  const tx = (x) => (logx ? Math.log10(x) : x);
  const all = lines.flatMap((l) => l.points);
  let [x0, x1] = [Math.min(...all.map((p) => tx(p[0]))), Math.max(...all.map((p) => tx(p[0])))];
  let [y0, y1] = [Math.min(...all.map((p) => p[1])), Math.max(...all.map((p) => p[1]))];
  if (y1 - y0 < 1e-9) { y0 -= 1; y1 += 1; }
  const m = 0.05 * (y1 - y0);
  y0 -= m; y1 += m;
  const sx = (x) => pad + ((tx(x) - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#888";
  ctx.lineWidth = 2;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "24px system-ui";
  ctx.fillText(xlabel, w / 2 - 40, h - 15);
  ctx.fillText(y1.toFixed(3), 5, pad + 8);
  ctx.fillText(y0.toFixed(3), 5, h - pad);

  lines.forEach((l, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.setLineDash(l.dashed ? [12, 8] : []);
    ctx.lineWidth = 3;
    ctx.beginPath();
    l.points.forEach(([x, y], k) => (k ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(l.label, pad + 15, pad + 30 * (i + 1));
  });
  ctx.setLineDash([]);
}

function run(f) {
  try {
    f();
  } catch (e) {
    show(String(e), true);
  }
}

const system = () => $("system").value;
const seed = () => BigInt($("seed").value || 0);

$("cohomology").onclick = () => run(() => {
  const r = JSON.parse(cohomology(system()));
  const rows = r.degrees.map((d) => `degree ${d.degree}: log spec ${d.log_spec.toFixed(12)}${d.is_unstable_dimension ? "  (u)" : ""}`);
  show(`moduli ${r.moduli.map((m) => m.toFixed(6)).join(", ")}\n` +
       `${r.unstable} expanding, ${r.center} neutral, ${r.stable} contracting\n` + rows.join("\n"));
  plot([{ points: r.degrees.map((d) => [d.degree, d.log_spec]), label: "log spec by degree" }], "degree");
});

$("lyapunov").onclick = () => run(() => {
  const r = JSON.parse(lyapunov(system(), Number($("steps").value), seed()));
  const d = r.checkpoints[0][1].length;
  const lines = [...Array(d).keys()].map((i) => ({
    points: r.checkpoints.map(([n, ex]) => [n, ex[i]]),
    label: `λ${i + 1}`,
  }));
  const [n, last] = r.checkpoints[r.checkpoints.length - 1];
  show(`after ${n} steps: ${last.map((v) => v.toFixed(6)).join(", ")}\nsum ${last.reduce((a, b) => a + b, 0).toExponential(2)}`);
  plot(lines, "orbit length (log scale)", true);
});

$("growth").onclick = () => run(() => {
  const r = JSON.parse(growth(system(), Number($("samples").value), seed()));
  const n1 = r.series[r.series.length - 1][0];
  show(`u = ${r.unstable}\nfitted rate ${r.rate.toFixed(6)} (residual ${r.residual.toFixed(4)})\nlog spec    ${r.log_spec.toFixed(6)}`);
  plot([
    { points: r.series, label: "log of mean volume factor" },
    { points: [[0, 0], [n1, n1 * r.log_spec]], label: "n · log spec", dashed: true },
  ], "n");
});

await init();
show("ready");
