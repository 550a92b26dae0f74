//! Seeded Monte Carlo plumbing: reproducible parallel estimators, sphere
//! and Gaussian sampling, time-simplex sampling and least-squares slope
//! fits for scaling ladders.
//!
//! Parallelism never changes results: the sample budget is split into
//! fixed-size chunks, each chunk draws from its own ChaCha stream seeded
//! by `(seed, chunk_index)`, and partial sums are merged in chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::vec::Vect;

/// Samples per parallel chunk; fixed so results are worker-count independent.
pub const CHUNK: u64 = 4096;

/// Surface measure of the unit sphere S^{d-1}.
///
/// For d = 1 the "sphere" is the two-point set {-1, +1} with counting
/// measure, so the area is 2.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

/// Uniform direction on S^{d-1} via normalized Gaussian components.
pub fn sample_unit_sphere(d: usize, rng: &mut impl Rng) -> Vect {
    if d == 1 {
        let s: bool = rng.gen();
        return Vect::from_slice(&[if s { 1.0 } else { -1.0 }]);
    }
    loop {
        let mut a = [0.0; 3];
        for slot in a.iter_mut().take(d) {
            *slot = rng.sample(StandardNormal);
        }
        let v = Vect(a);
        let n = v.norm();
        if n > 1e-12 {
            return v.scale(1.0 / n);
        }
    }
}

/// Centered isotropic Gaussian sample with per-axis standard deviation `sigma`.
pub fn sample_gauss_vec(d: usize, sigma: f64, rng: &mut impl Rng) -> Vect {
    let mut a = [0.0; 3];
    for slot in a.iter_mut().take(d) {
        let z: f64 = rng.sample(StandardNormal);
        *slot = sigma * z;
    }
    Vect(a)
}

/// Density of `sample_gauss_vec` at `v`.
pub fn gauss_pdf(d: usize, sigma: f64, v: &Vect) -> f64 {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-(d as f64) / 2.0);
    norm * (-v.norm_sq() / (2.0 * sigma * sigma)).exp()
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl McEstimate {
    pub fn combined_err(&self, other: &McEstimate) -> f64 {
        (self.stderr * self.stderr + other.stderr * other.stderr).sqrt()
    }
}

/// Deterministic parallel Monte Carlo over `budget` samples of a
/// K-component integrand. Returns per-component estimates.
pub fn parallel_mc<const K: usize, F>(seed: u64, budget: u64, f: F) -> [McEstimate; K]
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync,
{
    let n_chunks = budget.div_ceil(CHUNK);
    let partials: Vec<([f64; K], [f64; K], u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(budget);
            let mut sum = [0.0; K];
            let mut sumsq = [0.0; K];
            for _ in lo..hi {
                let v = f(&mut rng);
                for k in 0..K {
                    sum[k] += v[k];
                    sumsq[k] += v[k] * v[k];
                }
            }
            (sum, sumsq, hi - lo)
        })
        .collect();

    let mut sum = [0.0; K];
    let mut sumsq = [0.0; K];
    let mut n = 0u64;
    // merge in chunk order (collect preserves it) so sums are reproducible
    for (s, sq, m) in partials {
        for k in 0..K {
            sum[k] += s[k];
            sumsq[k] += sq[k];
        }
        n += m;
    }
    std::array::from_fn(|k| {
        let mean = sum[k] / n as f64;
        let var = (sumsq[k] / n as f64 - mean * mean).max(0.0);
        McEstimate {
            value: mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    })
}

/// RNG stream for chunk `c` of a run with master seed `seed`.
pub fn chunk_rng(seed: u64, c: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&c.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Strictly decreasing collision times `t > t_1 > ... > t_n > 0`, sampled
/// uniformly on the ordered simplex. The associated volume factor is
/// `t^n / n!`. Ties (probability zero) are rejected and redrawn.
pub fn sample_time_simplex(t: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut ts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * t).collect();
        ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let distinct = ts.windows(2).all(|w| w[0] > w[1]) && ts.first().map_or(true, |&x| x < t) && ts.last().map_or(true, |&x| x > 0.0);
        if distinct {
            return ts;
        }
    }
}

/// Simplex volume `t^n / n!` matching `sample_time_simplex`.
pub fn simplex_volume(t: f64, n: usize) -> f64 {
    let mut v = 1.0;
    for k in 1..=n {
        v *= t / k as f64;
    }
    v
}

/// Ordinary least squares fit of `y = a + slope * x`; returns the slope
/// and its standard error.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 3);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (a + slope * x);
            r * r
        })
        .sum();
    let dof = (xs.len() - 2).max(1) as f64;
    let se = (ss_res / dof / sxx).sqrt();
    (slope, se)
}
