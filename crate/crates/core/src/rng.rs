//! Deterministic random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, stream)`, so per-sample draws do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Mat, Subspace};
use crate::Result;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed from a parent seed and a label.
pub fn derive(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn uniform_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// A Haar-random `k`-frame in `R^d`.
pub fn random_frame<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Result<Subspace> {
    let m = Mat::from_fn(dim, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    Subspace::from_frame(m)
}

/// A random unit vector orthogonal to every column of `frame`.
pub fn random_orthogonal_unit<R: Rng>(rng: &mut R, frame: &Subspace) -> Result<Vec<f64>> {
    let d = frame.ambient_dim();
    if frame.rank() >= d {
        return Err(crate::Error::Precondition(
            "subspace has no orthogonal complement".into(),
        ));
    }
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for j in 0..frame.rank() {
                let q = frame.frame().column(j);
                let c: f64 = (0..d).map(|i| q[i] * v[i]).sum();
                for i in 0..d {
                    v[i] -= c * q[i];
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            return Ok(v);
        }
    }
}

/// Seed for the `index`-th sample of a computation seeded with `seed`.
pub fn for_index(seed: u64, index: usize) -> u64 {
    derive(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), "index")
}
