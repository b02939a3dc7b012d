//! Property suites, run both from `#[test]` functions and from the
//! acceptance target.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};

use super::*;
use toral_core::cohomology::theorem2_rhs;
use toral_core::entropy::{bowen_distance, OrbitTable};
use toral_core::growth::{log_cocycle_volume, uniform_sample, CocycleState};
use toral_core::linalg::{exterior_power, push_subspace, qr, volume_expansion, IntMatrix, Mat, Subspace};
use toral_core::rng;
use toral_core::system::{make_linear_toral, make_perturbed_toral, torus_distance, Mode, TorusDiffeo, TorusMap};

pub type Outcome = Result<(), String>;
pub type Suite = (&'static str, fn() -> Outcome);

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| match e {
        TestError::Abort(r) => format!("aborted: {r}"),
        TestError::Fail(r, v) => format!("{r}; minimal input {v:?}"),
    })
}

fn matrix(d: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| Mat::from_row_slice(d, d, &v))
}

fn frame(d: usize, k: usize) -> impl Strategy<Value = Subspace> {
    prop::collection::vec(-1.0f64..1.0, d * k)
        .prop_filter_map("rank deficient", move |v| Subspace::from_frame(Mat::from_row_slice(d, k, &v)).ok())
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, d)
}

pub fn perturbed_cat(eps: f64) -> TorusMap {
    let mode = Mode { amplitude: eps, target: 0, k: vec![1, 0], phase: 0.0 };
    make_perturbed_toral(cat(), vec![mode], 1.0).unwrap()
}

pub fn perturbed_u2(eps: f64) -> TorusMap {
    let modes = vec![
        Mode { amplitude: eps, target: 0, k: vec![0, 1, 0], phase: 0.3 },
        Mode { amplitude: eps, target: 2, k: vec![1, 0, 1], phase: 0.0 },
    ];
    make_perturbed_toral(u2(), modes, 1.0).unwrap()
}

/// `Λ^k(AB) = Λ^k A · Λ^k B`.
pub fn functoriality() -> Outcome {
    let s = (2usize..=5).prop_flat_map(|d| (matrix(d), matrix(d), 1..=d));
    run(1000, s, |(a, b, k)| {
        let lhs = exterior_power(&(&a * &b), k).unwrap().matrix;
        let rhs = exterior_power(&a, k).unwrap().matrix * exterior_power(&b, k).unwrap().matrix;
        let scale = 1.0 + (a.norm() * b.norm()).powi(k as i32);
        prop_assert!((&lhs - &rhs).norm() <= 1e-9 * scale, "{} vs scale {scale}", (&lhs - &rhs).norm());
        Ok(())
    })
}

pub fn submultiplicativity() -> Outcome {
    let s = (2usize..=5).prop_flat_map(|d| (matrix(d), matrix(d), (1..=d).prop_flat_map(move |k| frame(d, k))));
    run(1000, s, |(a, b, f)| {
        prop_assume!(a.determinant().abs() > 1e-3 && b.determinant().abs() > 1e-3);
        let bf = push_subspace(&b, &f).unwrap();
        let whole = volume_expansion(&(&a * &b), &f).unwrap();
        let split = volume_expansion(&a, &bf).unwrap() * volume_expansion(&b, &f).unwrap();
        prop_assert!(whole <= split * (1.0 + 1e-9), "{whole} > {split}");
        Ok(())
    })
}

pub fn qr_reconstruction() -> Outcome {
    run(1000, (2usize..=5).prop_flat_map(matrix), |a| {
        prop_assume!(a.determinant().abs() > 1e-6);
        let (q, r) = qr(&a).unwrap();
        prop_assert!((&q * &r - &a).norm() <= 1e-10 * a.norm());
        for i in 0..r.nrows() {
            prop_assert!(r[(i, i)] > 0.0);
        }
        Ok(())
    })
}

fn additivity(f: &TorusMap, x: &[f64], u: usize, m: usize, n: usize, seed: u64) -> Result<(), TestCaseError> {
    let start = rng::random_frame(&mut rng::stream(seed, 0), f.dim(), u).unwrap();
    let whole = log_cocycle_volume(f, x, &start, m + n).unwrap();
    let mut s = CocycleState::new(x.to_vec(), start);
    s.advance(f, m).unwrap();
    let tail = log_cocycle_volume(f, &s.point, &s.frame, n).unwrap();
    prop_assert!((whole - (s.log_volume + tail)).abs() <= 1e-10 * (1.0 + whole.abs()));
    Ok(())
}

/// `log vol_{m+n}(x, F) = log vol_m(x, F) + log vol_n(f^m x, F_m)` on rank-one
/// and rank-two bundles of perturbed maps.
pub fn cocycle_additivity() -> Outcome {
    let s = (point(2), 0usize..15, 0usize..15, 0.0f64..0.05, any::<u64>());
    run(1000, s, |(x, m, n, eps, seed)| additivity(&perturbed_cat(eps), &x, 1, m, n, seed))?;
    let s = (point(3), 0usize..15, 0usize..15, 0.0f64..0.02, any::<u64>());
    run(1000, s, |(x, m, n, eps, seed)| additivity(&perturbed_u2(eps), &x, 2, m, n, seed))
}

pub fn inverse_roundtrip() -> Outcome {
    let f = make_linear_toral(u2()).unwrap();
    run(1000, point(3), |x| {
        let back = f.step_back(&f.step(&x)).unwrap().unwrap();
        prop_assert!(torus_distance(&back, &x) < 1e-12);
        Ok(())
    })
}

pub fn jacobian_finite_differences() -> Outcome {
    run(1000, (point(3), 0.0f64..0.02), |(x, eps)| {
        let f = perturbed_u2(eps);
        let j = f.jacobian(&x);
        let h = 1e-6;
        for c in 0..3 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (f.lift_image(&xp), f.lift_image(&xm));
            for r in 0..3 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((fd - j[(r, c)]).abs() < 1e-6, "({r},{c}) fd {fd} vs {}", j[(r, c)]);
            }
        }
        Ok(())
    })
}

pub fn torus_metric() -> Outcome {
    let s = (1usize..=5).prop_flat_map(|d| (point(d), point(d), point(d)));
    run(10_000, s, |(x, y, z)| {
        let d = x.len() as f64;
        let xy = torus_distance(&x, &y);
        prop_assert_eq!(xy, torus_distance(&y, &x));
        prop_assert_eq!(torus_distance(&x, &x), 0.0);
        prop_assert!(xy >= 0.0);
        prop_assert!(xy <= d.sqrt() / 2.0 + 1e-15);
        prop_assert!(torus_distance(&x, &z) <= xy + torus_distance(&y, &z) + 1e-12);
        Ok(())
    })
}

pub fn bowen_metric() -> Outcome {
    let f = make_linear_toral(cat()).unwrap();
    run(10_000, (point(2), point(2), point(2), 0usize..12), |(x, y, z, n)| {
        let xy = bowen_distance(&f, &x, &y, n, None);
        prop_assert_eq!(xy, bowen_distance(&f, &y, &x, n, None));
        prop_assert!(xy >= torus_distance(&x, &y));
        prop_assert!(bowen_distance(&f, &x, &z, n, None) <= xy + bowen_distance(&f, &y, &z, n, None) + 1e-12);
        prop_assert!(bowen_distance(&f, &x, &y, n + 1, None) >= xy);
        Ok(())
    })
}

/// Counts on the ladders and orbit lengths the entropy estimator uses are
/// non-decreasing in `n` and non-increasing in `δ`.
pub fn separated_count_monotonicity() -> Outcome {
    run(1000, (any::<u64>(), 0usize..3), |(seed, which)| {
        let (f, ladder): (TorusMap, [f64; 3]) = match which {
            0 => (make_linear_toral(cat()).unwrap(), [0.2, 0.1, 0.05]),
            1 => (perturbed_cat(0.02), [0.2, 0.1, 0.05]),
            _ => (make_linear_toral(t3()).unwrap(), [0.4, 0.3, 0.2]),
        };
        let pts = uniform_sample(f.dim(), 200, seed);
        let table = OrbitTable::new(&f, &pts, 6);
        let counts: Vec<Vec<usize>> =
            ladder.iter().map(|&delta| (0..=6).map(|n| table.separated_set(n, delta).len()).collect()).collect();
        for row in &counts {
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]), "not monotone in n: {row:?}");
        }
        for k in 1..ladder.len() {
            for n in 0..=6 {
                prop_assert!(counts[k - 1][n] <= counts[k][n], "not monotone in δ at n={n}: {counts:?}");
            }
        }
        Ok(())
    })
}

/// Greedy sets are separated and every sample point lies within `δ` of one
/// of their points.
pub fn greedy_spanning() -> Outcome {
    let f = make_linear_toral(cat()).unwrap();
    run(200, (any::<u64>(), 0usize..6, 0.05f64..0.4), |(seed, n, delta)| {
        let pts = uniform_sample(2, 300, seed);
        let chosen = OrbitTable::new(&f, &pts, n).separated_set(n, delta);
        for (i, p) in pts.iter().enumerate() {
            let near = chosen.iter().any(|&j| bowen_distance(&f, p, &pts[j], n, None) <= delta);
            prop_assert!(near, "point {i} is not covered");
        }
        for (a, &i) in chosen.iter().enumerate() {
            for &j in &chosen[..a] {
                prop_assert!(bowen_distance(&f, &pts[i], &pts[j], n, None) > delta);
            }
        }
        Ok(())
    })
}

/// `theorem2_rhs(A, u) = theorem2_rhs(A⁻¹, d − u)` on random unimodular
/// matrices with `d ≤ 4`.
pub fn duality(trials: usize) -> Outcome {
    let mut g = super::rng(2024);
    for trial in 0..trials {
        let d = 2 + trial % 3;
        let a = IntMatrix::from_rows(random_unimodular(&mut g, d)).unwrap();
        let inv = a.inverse_unimodular().unwrap();
        for u in 1..d {
            let lhs = theorem2_rhs(&a, u).map_err(|e| e.to_string())?.value;
            let rhs = theorem2_rhs(&inv, d - u).map_err(|e| e.to_string())?.value;
            if (lhs - rhs).abs() >= 1e-8 {
                return Err(format!("{a:?} u={u}: {lhs} vs {rhs}"));
            }
        }
    }
    Ok(())
}

/// Every suite, with the name printed in reports.
pub fn all() -> Vec<Suite> {
    vec![
        ("exterior power functoriality", functoriality),
        ("volume submultiplicativity", submultiplicativity),
        ("qr reconstruction", qr_reconstruction),
        ("cocycle additivity", cocycle_additivity),
        ("linear inverse roundtrip", inverse_roundtrip),
        ("jacobian finite differences", jacobian_finite_differences),
        ("torus metric axioms", torus_metric),
        ("bowen metric axioms", bowen_metric),
        ("separated count monotonicity", separated_count_monotonicity),
        ("greedy spanning", greedy_spanning),
    ]
}
