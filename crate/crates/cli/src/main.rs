use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use toral_core::cohomology::{form_certificate, theorem2_rhs, unstable_dimension};
use toral_core::harness::{
    estimate_invariants, run_campaign, CampaignConfig, CheckName, Invariant, VerificationReport,
};
use toral_core::IntMatrix;

/// Exit status for errors that prevent a run from producing a report.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "toral", version, about = "Dynamical invariants of torus diffeomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Print JSON instead of the text summary.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Print the estimator series as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run estimators once, outside any check.
    Invariants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// lyapunov, growth, entropy, exponent or cohomology; repeatable.
        /// Defaults to lyapunov and cohomology.
        #[arg(long = "estimator", value_parser = parse_invariant)]
        estimators: Vec<Invariant>,
        /// Orbit length of the Lyapunov spectrum.
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Directory for invariants.json and series/*.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run a verification campaign; the exit code follows the check statuses.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the check list of the config; repeatable.
        #[arg(long = "check", value_parser = parse_check)]
        checks: Vec<CheckName>,
        /// Directory for report.json and series/*.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Exact log spectral radius of the action on cohomology.
    Cohomology {
        /// System from a campaign config.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        config: Option<PathBuf>,
        /// Integer matrix, rows separated by ';', e.g. "2,1;1,1".
        #[arg(long)]
        matrix: Option<String>,
        /// Single degree; all degrees 1..d-1 when absent.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Print a saved report.
    Report {
        path: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_check(s: &str) -> std::result::Result<CheckName, String> {
    CheckName::parse(s).ok_or_else(|| {
        let names: Vec<_> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
        format!("unknown check '{s}', expected one of {}", names.join(", "))
    })
}

fn parse_invariant(s: &str) -> std::result::Result<Invariant, String> {
    Invariant::parse(s).ok_or_else(|| {
        let names: Vec<_> = Invariant::ALL.iter().map(|c| c.as_str()).collect();
        format!("unknown estimator '{s}', expected one of {}", names.join(", "))
    })
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<i64>().with_context(|| format!("bad matrix entry '{}'", v.trim())))
                .collect()
        })
        .collect()
}

fn load(path: &Path, seed: Option<u64>) -> Result<CampaignConfig> {
    let mut cfg = CampaignConfig::load(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Concatenates CSV files, repeating the header only when it changes.
fn print_series(series: &[(String, String)]) {
    let mut last = "";
    for (_, body) in series {
        let (header, rows) = body.split_once('\n').unwrap_or((body, ""));
        if header != last {
            println!("{header}");
            last = header;
        }
        print!("{rows}");
    }
}

fn write_bundle(dir: &Path, name: &str, json: &str, series: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir.join("series"))?;
    std::fs::write(dir.join(name), format!("{json}\n"))?;
    for (file, body) in series {
        std::fs::write(dir.join("series").join(file), body)?;
    }
    Ok(())
}

fn invariants(
    cfg: &CampaignConfig,
    which: &[Invariant],
    steps: usize,
    out: Option<&Path>,
    output: &Output,
) -> Result<u8> {
    let which = if which.is_empty() { vec![Invariant::Lyapunov, Invariant::Cohomology] } else { which.to_vec() };
    let r = estimate_invariants(cfg, &which, steps)?;
    let mut series: Vec<(String, String)> =
        r.estimates.growth.iter().map(|g| (format!("{}.csv", g.estimator.tag()), g.to_csv())).collect();
    if let Some(e) = &r.estimates.entropy {
        series.push(("entropy.csv".into(), e.to_csv()));
    }
    let json = serde_json::to_string_pretty(&r)?;
    if let Some(dir) = out {
        write_bundle(dir, "invariants.json", &json, &series)?;
    }
    if output.json {
        println!("{json}");
    } else if output.csv {
        print_series(&series);
    } else {
        println!("d = {}, u = {}, {} map, seed {}", r.system.dimension, r.system.unstable_dimension, r.system.kind, r.seed);
        if let Some(l) = &r.lyapunov {
            let ex: Vec<String> = l.exponents.iter().map(|v| format!("{v:.6}")).collect();
            println!("  lyapunov ({} steps)   [{}]", l.steps, ex.join(", "));
        }
        for g in &r.estimates.growth {
            let flag = if g.converged { "" } else { "  UNCONVERGED" };
            println!("  {:<20} {:>10.6}  residual {:.4}{flag}", g.estimator.tag(), g.rate, g.residual);
        }
        if let Some(e) = &r.estimates.entropy {
            println!("  {:<20} {:>10.6}  residual {:.4}", "entropy", e.rate, e.residual);
        }
        if let Some(x) = &r.estimates.cs_top_exponent {
            println!("  {:<20} {:>10.6}  over {} orbits", "cs_top_exponent", x.mean, x.samples);
        }
        if let Some(c) = &r.estimates.cohomology {
            println!("  {:<20} {:>10.6}  degree {}", "log_spec", c.value, c.degree);
        }
        for (name, e) in &r.errors {
            println!("  {name}: [{}] {}", e.code, e.message);
        }
    }
    Ok(if r.errors.is_empty() { 0 } else { EXIT_ERROR })
}

fn verify(cfg: &CampaignConfig, out: Option<&Path>, output: &Output) -> Result<u8> {
    let r = run_campaign(cfg)?;
    if let Some(dir) = out {
        r.write(dir).with_context(|| format!("writing report to {}", dir.display()))?;
    }
    show(&r, output)?;
    Ok(r.exit_code() as u8)
}

fn show(r: &VerificationReport, output: &Output) -> Result<()> {
    if output.json {
        println!("{}", r.to_json()?);
    } else if output.csv {
        print_series(&r.series_csv());
    } else {
        print!("{}", r.render());
    }
    Ok(())
}

fn cohomology(rows: Vec<Vec<i64>>, degree: Option<usize>, json: bool) -> Result<u8> {
    let a = IntMatrix::from_rows(rows).map_err(anyhow::Error::msg)?;
    let d = a.dim();
    let degrees: Vec<usize> = match degree {
        Some(u) if u == 0 || u >= d => bail!("degree must lie in 1..{}", d - 1),
        Some(u) => vec![u],
        None => (1..d).collect(),
    };
    let dims = unstable_dimension(&a);
    let mut records = Vec::new();
    for u in degrees {
        let rhs = theorem2_rhs(&a, u)?;
        let cert = form_certificate(&a, u)?;
        records.push(serde_json::json!({ "rhs": rhs, "certificate": cert }));
    }
    if json {
        let v = serde_json::json!({ "unstable_dimension": dims, "degrees": records });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("d = {d}: {} expanding, {} neutral, {} contracting", dims.unstable, dims.center, dims.stable);
        for r in &records {
            let rhs = &r["rhs"];
            let mark = if rhs["degree_is_unstable_dimension"].as_bool() == Some(true) { "  (u)" } else { "" };
            println!("  degree {}  log spec {:.12}{mark}", rhs["degree"], rhs["value"].as_f64().unwrap_or(f64::NAN));
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Invariants { config, seed, estimators, steps, out, output } => {
            invariants(&load(&config, seed)?, &estimators, steps, out.as_deref(), &output)
        }
        Command::Verify { config, seed, checks, out, output } => {
            let mut cfg = load(&config, seed)?;
            if !checks.is_empty() {
                cfg.checks = checks;
            }
            verify(&cfg, out.as_deref(), &output)
        }
        Command::Cohomology { config, matrix, degree, json } => {
            let rows = match (config, matrix) {
                (Some(p), _) => load(&p, None)?.system.matrix,
                (None, Some(m)) => parse_matrix(&m)?,
                (None, None) => bail!("either --config or --matrix is required"),
            };
            cohomology(rows, degree, json)
        }
        Command::Report { path, output } => {
            let r = VerificationReport::read(&path).with_context(|| format!("reading report {}", path.display()))?;
            show(&r, &output)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
