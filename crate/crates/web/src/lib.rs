//! WebAssembly bindings for the browser demo. Every export takes and
//! returns JSON; the `*_json` functions behind them run natively too.

use serde::Serialize;
use toral_core::bundles::lyapunov_spectrum;
use toral_core::cohomology::{theorem2_rhs, unstable_dimension};
use toral_core::growth::{integrated_growth, uniform_sample};
use toral_core::system::{SystemConfig, TorusDiffeo};
use wasm_bindgen::prelude::*;

const MAX_STEPS: usize = 200_000;
const MAX_SAMPLES: usize = 2000;

fn system(json: &str) -> Result<SystemConfig, String> {
    serde_json::from_str(json).map_err(|e| format!("bad system: {e}"))
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Degree {
    degree: usize,
    log_spec: f64,
    is_unstable_dimension: bool,
}

#[derive(Serialize)]
struct Cohomology {
    moduli: Vec<f64>,
    unstable: usize,
    center: usize,
    stable: usize,
    degrees: Vec<Degree>,
}

/// Log spectral radius of the action on every cohomology degree.
pub fn cohomology_json(system_json: &str) -> Result<String, String> {
    let f = system(system_json)?.build().map_err(|e| e.to_string())?;
    let a = f.matrix();
    let dims = unstable_dimension(a);
    let mut degrees = Vec::new();
    for u in 1..a.dim() {
        let r = theorem2_rhs(a, u).map_err(|e| e.to_string())?;
        degrees.push(Degree { degree: u, log_spec: r.value, is_unstable_dimension: r.degree_is_unstable_dimension });
    }
    to_json(&Cohomology { moduli: dims.moduli, unstable: dims.unstable, center: dims.center, stable: dims.stable, degrees })
}

#[derive(Serialize)]
struct Convergence {
    /// `(n, exponents)` at geometrically spaced orbit lengths.
    checkpoints: Vec<(usize, Vec<f64>)>,
}

/// Lyapunov spectrum from one seeded point at orbit lengths up to `steps`.
pub fn lyapunov_json(system_json: &str, steps: usize, seed: u64) -> Result<String, String> {
    let f = system(system_json)?.build().map_err(|e| e.to_string())?;
    let steps = steps.clamp(10, MAX_STEPS);
    let x = uniform_sample(f.dim(), 1, seed).swap_remove(0);
    let mut checkpoints = Vec::new();
    let mut n = 10;
    loop {
        let s = lyapunov_spectrum(&f, &x, n).map_err(|e| e.to_string())?;
        checkpoints.push((n, s.exponents));
        if n == steps {
            break;
        }
        n = (2 * n).min(steps);
    }
    to_json(&Convergence { checkpoints })
}

#[derive(Serialize)]
struct Growth {
    unstable: usize,
    series: Vec<(usize, f64)>,
    rate: f64,
    residual: f64,
    log_spec: f64,
}

/// Integrated volume growth of the unstable bundle with `samples` points.
pub fn growth_json(system_json: &str, samples: usize, seed: u64) -> Result<String, String> {
    let f = system(system_json)?.build().map_err(|e| e.to_string())?;
    let u = unstable_dimension(f.matrix()).unstable;
    if u == 0 || u == f.dim() {
        return Err("growth needs 0 < u < d".into());
    }
    let g = integrated_growth(&f, u, samples.clamp(1, MAX_SAMPLES), (5, 25), 40, seed).map_err(|e| e.to_string())?;
    let log_spec = theorem2_rhs(f.matrix(), u).map_err(|e| e.to_string())?.value;
    to_json(&Growth { unstable: u, series: g.series, rate: g.rate, residual: g.residual, log_spec })
}

#[wasm_bindgen]
pub fn cohomology(system_json: &str) -> Result<String, JsValue> {
    cohomology_json(system_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lyapunov(system_json: &str, steps: usize, seed: u64) -> Result<String, JsValue> {
    lyapunov_json(system_json, steps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn growth(system_json: &str, samples: usize, seed: u64) -> Result<String, JsValue> {
    growth_json(system_json, samples, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const CAT: &str = r#"{"dimension": 2, "matrix": [[2, 1], [1, 1]]}"#;
    const H: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn cat_cohomology() {
        let v: Value = serde_json::from_str(&cohomology_json(CAT).unwrap()).unwrap();
        assert!((v["degrees"][0]["log_spec"].as_f64().unwrap() - H).abs() < 1e-12);
        assert_eq!(v["unstable"], 1);
    }

    #[test]
    fn lyapunov_checkpoints_converge() {
        let v: Value = serde_json::from_str(&lyapunov_json(CAT, 5000, 1).unwrap()).unwrap();
        let cps = v["checkpoints"].as_array().unwrap();
        assert_eq!(cps.last().unwrap()[0], 5000);
        let top = cps.last().unwrap()[1][1].as_f64().unwrap();
        assert!((top - H).abs() < 1e-3);
    }

    #[test]
    fn growth_tracks_log_spec() {
        let v: Value = serde_json::from_str(&growth_json(CAT, 100, 1).unwrap()).unwrap();
        assert!((v["rate"].as_f64().unwrap() - H).abs() < 0.03);
        assert_eq!(v["series"].as_array().unwrap().len(), 26);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(cohomology_json("{").is_err());
        assert!(cohomology_json(r#"{"dimension": 2, "matrix": [[2, 1], [1, 2]]}"#).is_err());
        assert!(growth_json(r#"{"dimension": 2, "matrix": [[1, 0], [0, 1]]}"#, 10, 1).is_err());
    }
}
