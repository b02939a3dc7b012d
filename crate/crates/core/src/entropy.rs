//! Metric entropy from growth of `(n, δ)`-separated sets in the Bowen metric.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::growth::{fit_rate, uniform_sample, RateFit};
use crate::system::{torus_distance, wrap, TorusDiffeo};
use crate::{par, rng, Error, Result};

/// Default fraction of the sample a count may reach before it is treated as
/// saturated.
pub const DEFAULT_SATURATION: f64 = 0.125;

pub const MIN_SAMPLES: usize = 100;

/// `d_n(x, y) = max_{0 ≤ i ≤ n} d(f^i x, f^i y)`. With a cutoff the loop
/// stops as soon as the running maximum exceeds it.
pub fn bowen_distance<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    y: &[f64],
    n: usize,
    cutoff: Option<f64>,
) -> f64 {
    let (mut a, mut b) = (x.to_vec(), y.to_vec());
    let mut max = torus_distance(&a, &b);
    for _ in 0..n {
        if cutoff.is_some_and(|c| max > c) {
            break;
        }
        a = f.step(&a);
        b = f.step(&b);
        max = max.max(torus_distance(&a, &b));
    }
    max
}

/// Orbits of a sample stored row-major as `[point][step][coord]`.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    dim: usize,
    steps: usize,
    data: Vec<f64>,
    count: usize,
}

impl OrbitTable {
    pub fn new<M: TorusDiffeo + ?Sized>(f: &M, points: &[Vec<f64>], n_max: usize) -> Self {
        let dim = f.dim();
        let len = n_max + 1;
        let rows = par::map_indexed(points.len(), |i| {
            let mut row = Vec::with_capacity(len * dim);
            let mut z = points[i].clone();
            row.extend_from_slice(&z);
            for _ in 0..n_max {
                z = f.step(&z);
                row.extend_from_slice(&z);
            }
            row
        });
        OrbitTable { dim, steps: len, data: rows.concat(), count: points.len() }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn max_steps(&self) -> usize {
        self.steps - 1
    }

    /// True when `d_n(p_i, p_j) ≤ δ`.
    fn within(&self, i: usize, j: usize, n: usize, delta_sq: f64) -> bool {
        let stride = self.steps * self.dim;
        let (a, b) = (&self.data[i * stride..], &self.data[j * stride..]);
        for k in 0..=n {
            let off = k * self.dim;
            let mut s = 0.0;
            for c in 0..self.dim {
                s += wrap(a[off + c] - b[off + c]).powi(2);
            }
            if s > delta_sq {
                return false;
            }
        }
        true
    }

    /// Greedy maximal `(n, δ)`-separated subset, scanned in sample order.
    pub fn separated_set(&self, n: usize, delta: f64) -> Vec<usize> {
        assert!(n <= self.max_steps(), "orbit table too short");
        let delta_sq = delta * delta;
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..self.count {
            if !chosen.iter().any(|&j| self.within(i, j, n, delta_sq)) {
                chosen.push(i);
            }
        }
        chosen
    }
}

pub fn separated_count<M: TorusDiffeo + ?Sized>(f: &M, points: &[Vec<f64>], n: usize, delta: f64) -> Result<usize> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Precondition(format!("δ must be positive, got {delta}")));
    }
    Ok(OrbitTable::new(f, points, n).separated_set(n, delta).len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Lebesgue,
    /// Lebesgue pushed forward `burn_in` times.
    Pushforward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSampler {
    pub kind: SamplerKind,
    #[serde(default)]
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
}

impl MeasureSampler {
    pub fn lebesgue(samples: usize, seed: u64) -> Self {
        MeasureSampler { kind: SamplerKind::Lebesgue, burn_in: 0, samples, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Precondition(format!(
                "measure sample needs at least {MIN_SAMPLES} points, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn draw<M: TorusDiffeo + ?Sized>(&self, f: &M) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut pts = uniform_sample(f.dim(), self.samples, rng::derive(self.seed, "measure"));
        if self.kind == SamplerKind::Pushforward {
            for p in &mut pts {
                for _ in 0..self.burn_in {
                    *p = f.step(p);
                }
            }
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub delta: f64,
    /// `(n, count)` up to and including the first saturated count.
    pub counts: Vec<(usize, usize)>,
    /// Values of `n` at the start of the range whose counts stay below the
    /// saturation cap.
    pub usable: usize,
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub ladder: Vec<f64>,
    pub records: Vec<DeltaRecord>,
    /// Rate at the smallest δ with at least three usable values of `n`.
    pub rate: f64,
    pub rate_delta: f64,
    pub residual: f64,
    pub sample_size: usize,
    pub saturation_cap: usize,
    pub caveats: Vec<String>,
}

impl EntropyEstimate {
    /// Rows `entropy,delta,n,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("estimator,delta,n,count\n");
        for r in &self.records {
            for (n, c) in &r.counts {
                let _ = writeln!(s, "entropy,{},{},{}", r.delta, n, c);
            }
        }
        s
    }
}

/// Separated-set entropy estimate over a δ ladder.
///
/// For each δ the counts for `n` in `n_range` are computed; the fit uses the
/// initial run of `n` whose count stays at or below `saturation · N`.
pub fn katok_entropy<M: TorusDiffeo + ?Sized>(
    f: &M,
    sampler: &MeasureSampler,
    ladder: &[f64],
    n_range: (usize, usize),
    saturation: f64,
) -> Result<EntropyEstimate> {
    if ladder.is_empty() || ladder.iter().any(|d| d.is_nan() || *d <= 0.0) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("δ ladder must be positive and strictly decreasing".into()));
    }
    if n_range.1 < n_range.0 {
        return Err(Error::Precondition("empty n range".into()));
    }
    if !(saturation > 0.0 && saturation <= 1.0) {
        return Err(Error::Precondition("saturation fraction must lie in (0, 1]".into()));
    }
    let points = sampler.draw(f)?;
    let table = OrbitTable::new(f, &points, n_range.1);
    let cap = (saturation * points.len() as f64).floor() as usize;
    let records = par::map_indexed(ladder.len(), |k| -> Result<DeltaRecord> {
        let delta = ladder[k];
        let mut counts = Vec::new();
        let mut usable = 0;
        for n in n_range.0..=n_range.1 {
            let c = table.separated_set(n, delta).len();
            counts.push((n, c));
            if c > cap {
                break;
            }
            usable += 1;
        }
        let series: Vec<(usize, f64)> =
            counts[..usable].iter().map(|&(n, c)| (n, (c as f64).ln())).collect();
        let fit = if usable >= 3 { Some(fit_rate(&series, n_range)?) } else { None };
        Ok(DeltaRecord { delta, counts, usable, fit })
    });
    let records: Vec<DeltaRecord> = records.into_iter().collect::<Result<_>>()?;
    let best = records.iter().rev().find(|r| r.fit.is_some()).ok_or(Error::SampleTooSmall)?;
    let fit = best.fit.expect("checked");
    let mut caveats = Vec::new();
    if sampler.kind == SamplerKind::Pushforward {
        caveats.push(
            "measure surrogate: pushforward of Lebesgue stands in for an invariant measure whose \
             ergodicity is not certified"
                .to_string(),
        );
    }
    if best.delta != ladder[ladder.len() - 1] {
        caveats.push(format!(
            "smaller δ values saturated the sample; rate reported at δ = {}",
            best.delta
        ));
    }
    Ok(EntropyEstimate {
        ladder: ladder.to_vec(),
        rate: fit.rate,
        rate_delta: best.delta,
        residual: fit.residual,
        records,
        sample_size: points.len(),
        saturation_cap: cap,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_linear_toral;

    #[test]
    fn bowen_examples() {
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let (x, y) = ([0.1, 0.2], [0.4, 0.9]);
        let d = torus_distance(&x, &y);
        assert_eq!(bowen_distance(&id, &x, &y, 17, None), d);
        let cat = make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(bowen_distance(&cat, &x, &y, 0, None), d);
        assert!(bowen_distance(&cat, &[0.0, 0.0], &[0.001, 0.0], 10, None) >= 0.25);
        assert!(bowen_distance(&cat, &[0.0, 0.0], &[0.001, 0.0], 10, Some(0.01)) > 0.01);
    }

    #[test]
    fn large_delta_gives_one() {
        let cat = make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let pts = uniform_sample(2, 200, 4);
        assert_eq!(separated_count(&cat, &pts, 30, 0.75).unwrap(), 1);
    }

    #[test]
    fn identity_has_zero_rate() {
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let e = katok_entropy(&id, &MeasureSampler::lebesgue(500, 1), &[0.2, 0.1], (1, 10), DEFAULT_SATURATION)
            .unwrap();
        assert!(e.rate.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ladder() {
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let s = MeasureSampler::lebesgue(500, 1);
        assert!(katok_entropy(&id, &s, &[0.1, 0.2], (1, 5), DEFAULT_SATURATION).is_err());
        assert!(MeasureSampler::lebesgue(99, 1).validate().is_err());
    }
}
