//! The limiting collision-history series: evaluation of single history
//! terms, summation over graphs and orders, an independent Picard
//! oracle for the homogeneous equation, and the geometric
//! convergence-radius estimate.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::histories::{classical_trajectories, ClassicalHistory, Graph};
use crate::kernel::CrossSection;
use crate::mc::{
    gauss_pdf, parallel_mc, sample_gauss_vec, sample_time_simplex, sample_unit_sphere,
    simplex_volume, sphere_area, McEstimate,
};
use crate::spectral::InitialDatum;
use crate::vec::Vect;

/// Parameters for a series summation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub t: f64,
    pub n_max: usize,
    pub mc_budget: u64,
    pub seed: u64,
    /// Drop the spatial dependence of the datum: the histories then
    /// sum the homogeneous equation comparable to the Picard oracle.
    #[serde(default)]
    pub homogeneous: bool,
    /// Importance width for injected velocities.
    #[serde(default = "default_importance")]
    pub sigma_importance: f64,
    /// Evaluate beyond the estimated convergence radius without
    /// failing.
    #[serde(default)]
    pub allow_beyond_radius: bool,
}

fn default_importance() -> f64 {
    1.4
}

fn datum_product(
    f0: &InitialDatum,
    homogeneous: bool,
    trajs: &[crate::histories::Trajectory],
) -> f64 {
    let mut prod = 1.0;
    for tr in trajs {
        prod *= if homogeneous {
            f0.velocity_density(&tr.velocity(0.0))
        } else {
            f0.eval(&tr.position(0.0), &tr.velocity(0.0))
        };
    }
    prod
}

/// Evaluates one limiting history term at fixed collision times
/// `times` (strictly decreasing inside `(0, t)`): the Monte Carlo
/// average over injected velocities and scattering directions of
///
/// `sum_sigma prod_j sigma_j B(omega_j, w_j)
///    f0_{n+1}(endpoints of the classical backward flow)`.
///
/// The 2^n sign vectors are summed exactly inside each sample.
#[allow(clippy::too_many_arguments)]
pub fn eval_t_limit(
    graph: &Graph,
    t: f64,
    times: &[f64],
    x1: Vect,
    v1: Vect,
    f0: &InitialDatum,
    cs: &CrossSection,
    homogeneous: bool,
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> McEstimate {
    let n = graph.order();
    assert_eq!(times.len(), n);
    if n == 0 {
        let value = if homogeneous {
            f0.velocity_density(&v1)
        } else {
            f0.eval(&(x1 - v1 * t), &v1)
        };
        return McEstimate { value, stderr: 0.0, n: 0 };
    }
    if cs.potential.is_zero() {
        return McEstimate { value: 0.0, stderr: 0.0, n: 0 };
    }
    let d = cs.dim();
    let area = sphere_area(d);
    let [est] = parallel_mc::<1, _>(seed, budget, |rng: &mut ChaCha8Rng| {
        let inject_v: Vec<Vect> = (0..n).map(|_| sample_gauss_vec(d, sigma_importance, rng)).collect();
        let omegas: Vec<Vect> = (0..n).map(|_| sample_unit_sphere(d, rng)).collect();
        let mut weight = area.powi(n as i32);
        for v in &inject_v {
            weight /= gauss_pdf(d, sigma_importance, v);
        }
        [weight * sigma_sum(graph, t, times, x1, v1, &inject_v, &omegas, f0, cs, homogeneous)]
    });
    est
}

#[allow(clippy::too_many_arguments)]
fn sigma_sum(
    graph: &Graph,
    t: f64,
    times: &[f64],
    x1: Vect,
    v1: Vect,
    inject_v: &[Vect],
    omegas: &[Vect],
    f0: &InitialDatum,
    cs: &CrossSection,
    homogeneous: bool,
) -> f64 {
    let n = graph.order();
    let mut total = 0.0;
    for mask in 0..(1u32 << n) {
        let sigmas: Vec<i8> = (0..n).map(|b| if mask >> b & 1 == 0 { 1 } else { -1 }).collect();
        let h = ClassicalHistory {
            graph: graph.clone(),
            t,
            times: times.to_vec(),
            sigmas,
            omegas: omegas.to_vec(),
        };
        let (trajs, ws) = classical_trajectories(&h, x1, v1, inject_v);
        let mut term = datum_product(f0, homogeneous, &trajs);
        for (j, w) in ws.iter().enumerate() {
            term *= h.sigmas[j] as f64 * cs.eval(&omegas[j], w);
        }
        total += term;
    }
    total
}

/// One order of the series together with its statistical error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderContribution {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Output of a series summation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesResult {
    pub orders: Vec<OrderContribution>,
    pub total: f64,
    pub stderr: f64,
    /// Calibrated per-order amplification constant.
    pub c_hat: f64,
    /// Geometric tail bound on the truncated remainder; infinite when
    /// the measured ratio is not contracting at this time.
    pub truncation_bound: f64,
}

/// Sums the collision-history series
///
/// `f1(t) = sum_n sum_graphs \int_{t > t_1 > ... > t_n > 0}
///     T(t_1, ..., t_n; graph)`
///
/// up to order `n_max`. Each (order, graph) pair is integrated by Monte
/// Carlo over the time simplex (sorted uniforms, volume t^n/n!)
/// jointly with the velocity and direction variables of the term.
pub fn boltzmann_series(
    x1: Vect,
    v1: Vect,
    cfg: &SeriesConfig,
    f0: &InitialDatum,
    cs: &CrossSection,
) -> SeriesResult {
    let d = cs.dim();
    let area = sphere_area(d);
    let zero_pot = cs.potential.is_zero();
    let mut orders = Vec::new();
    for n in 0..=cfg.n_max {
        if n == 0 {
            let free = eval_t_limit(
                &Graph::new(vec![]).unwrap(),
                cfg.t,
                &[],
                x1,
                v1,
                f0,
                cs,
                cfg.homogeneous,
                cfg.sigma_importance,
                cfg.seed,
                0,
            );
            orders.push(OrderContribution { order: 0, value: free.value, stderr: 0.0 });
            continue;
        }
        if zero_pot {
            orders.push(OrderContribution { order: n, value: 0.0, stderr: 0.0 });
            continue;
        }
        let mut value = 0.0;
        let mut var = 0.0;
        for (gi, graph) in Graph::enumerate(n).into_iter().enumerate() {
            let seed = cfg
                .seed
                .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(1 + n as u64))
                .wrapping_add(0x2545_f491_4f6c_dd1du64.wrapping_mul(gi as u64));
            let [est] = parallel_mc::<1, _>(seed, cfg.mc_budget, |rng: &mut ChaCha8Rng| {
                let times = sample_time_simplex(cfg.t, n, rng);
                let inject_v: Vec<Vect> =
                    (0..n).map(|_| sample_gauss_vec(d, cfg.sigma_importance, rng)).collect();
                let omegas: Vec<Vect> = (0..n).map(|_| sample_unit_sphere(d, rng)).collect();
                let mut weight = simplex_volume(cfg.t, n) * area.powi(n as i32);
                for v in &inject_v {
                    weight /= gauss_pdf(d, cfg.sigma_importance, v);
                }
                [weight
                    * sigma_sum(
                        &graph,
                        cfg.t,
                        &times,
                        x1,
                        v1,
                        &inject_v,
                        &omegas,
                        f0,
                        cs,
                        cfg.homogeneous,
                    )]
            });
            value += est.value;
            var += est.stderr * est.stderr;
        }
        orders.push(OrderContribution { order: n, value, stderr: var.sqrt() });
    }
    let mags: Vec<f64> = orders.iter().map(|o| o.value.abs()).collect();
    let (n1, n2) = f0.norms();
    let c_hat = calibrate_c(&mags, cfg.t, n1 + n2);
    let r = c_hat * (n1 + n2) * cfg.t;
    let truncation_bound = if r < 1.0 && mags[0] > 0.0 {
        mags[0] * r.powi(cfg.n_max as i32 + 1) / (1.0 - r)
    } else {
        f64::INFINITY
    };
    let total = orders.iter().map(|o| o.value).sum();
    let stderr = orders.iter().map(|o| o.stderr * o.stderr).sum::<f64>().sqrt();
    SeriesResult { orders, total, stderr, c_hat, truncation_bound }
}

/// Calibrates the empirical amplification constant: the smallest C
/// such that `|order_n| <= |order_0| [C (N1 + N2) t]^n` on the
/// measured ladder.
pub fn calibrate_c(order_magnitudes: &[f64], t: f64, norm_sum: f64) -> f64 {
    assert!(!order_magnitudes.is_empty() && t > 0.0 && norm_sum > 0.0);
    let base = order_magnitudes[0].max(f64::MIN_POSITIVE);
    order_magnitudes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &m)| (m / base).powf(1.0 / n as f64) / (norm_sum * t))
        .fold(0.0, f64::max)
}

/// Convergence horizon `t0 = 1 / (C (N1 + N2))` of the geometric
/// domination of the series.
pub fn convergence_radius(f0: &InitialDatum, c: f64) -> f64 {
    assert!(c > 0.0);
    let (n1, n2) = f0.norms();
    1.0 / (c * (n1 + n2))
}

/// Result of the homogeneous Picard oracle.
#[derive(Clone, Debug)]
pub struct PicardValue {
    pub value: f64,
    /// Richardson-style grid sensitivity: difference against a coarser
    /// velocity grid.
    pub grid_err: f64,
}

/// Independent oracle for the homogeneous equation: `m`-fold Picard
/// iteration of `f(t) = f0 + \int_0^t Q(f, f)(s) ds` on a tensor
/// velocity grid, entirely separate from the history machinery. Only
/// d = 2 grids are practical.
pub fn picard_oracle(
    v1: &Vect,
    t: f64,
    f0: &InitialDatum,
    cs: &CrossSection,
    iterations: usize,
    grid_points: usize,
) -> PicardValue {
    assert_eq!(cs.dim(), 2, "the velocity-grid oracle is built for d = 2");
    let fine = picard_grid_value(v1, t, f0, cs, iterations, grid_points);
    let coarse = picard_grid_value(v1, t, f0, cs, iterations, grid_points / 2 + 1);
    PicardValue { value: fine, grid_err: (fine - coarse).abs() }
}

const PICARD_SPAN: f64 = 4.5;
const PICARD_OMEGAS: usize = 16;
const PICARD_TIME_NODES: usize = 5;

struct VGrid {
    ng: usize,
    h: f64,
    vals: Vec<f64>,
}

impl VGrid {
    fn coord(&self, i: usize) -> f64 {
        -PICARD_SPAN + self.h * i as f64
    }

    fn sample(f: &impl Fn(&Vect) -> f64, ng: usize) -> VGrid {
        let h = 2.0 * PICARD_SPAN / (ng - 1) as f64;
        let mut g = VGrid { ng, h, vals: vec![0.0; ng * ng] };
        for i in 0..ng {
            for j in 0..ng {
                g.vals[i * ng + j] = f(&Vect::from_slice(&[g.coord(i), g.coord(j)]));
            }
        }
        g
    }

    fn interp(&self, v: &Vect) -> f64 {
        let fx = (v.0[0] + PICARD_SPAN) / self.h;
        let fy = (v.0[1] + PICARD_SPAN) / self.h;
        if fx < 0.0 || fy < 0.0 || fx > (self.ng - 1) as f64 || fy > (self.ng - 1) as f64 {
            return 0.0;
        }
        let i = (fx as usize).min(self.ng - 2);
        let j = (fy as usize).min(self.ng - 2);
        let (ax, ay) = (fx - i as f64, fy - j as f64);
        let g = |a: usize, b: usize| self.vals[a * self.ng + b];
        (1.0 - ax) * ((1.0 - ay) * g(i, j) + ay * g(i, j + 1))
            + ax * ((1.0 - ay) * g(i + 1, j) + ay * g(i + 1, j + 1))
    }
}

/// Collision integral of a gridded density at every grid node, by the
/// trapezoid rule over the partner velocity and a uniform circle rule.
/// The relative velocity lives on a lattice, so the kernel values and
/// momentum kicks are tabulated once per call.
fn q_on_grid(cs: &CrossSection, f: &VGrid) -> VGrid {
    use rayon::prelude::*;
    let ng = f.ng;
    let tau = 2.0 * std::f64::consts::PI;
    let omegas: Vec<Vect> = (0..PICARD_OMEGAS)
        .map(|k| {
            let th = tau * (k as f64 + 0.5) / PICARD_OMEGAS as f64;
            Vect::from_slice(&[th.cos(), th.sin()])
        })
        .collect();
    let d_omega = tau / PICARD_OMEGAS as f64;
    // w = v - v2 has components (i - a) h, (j - b) h with offsets in
    // -(ng-1)..=(ng-1)
    let nw = 2 * ng - 1;
    let mut b_tab = vec![0.0f64; PICARD_OMEGAS * nw * nw];
    let mut kick_tab = vec![Vect::zero(); PICARD_OMEGAS * nw * nw];
    for (k, omega) in omegas.iter().enumerate() {
        for di in 0..nw {
            for dj in 0..nw {
                let w = Vect::from_slice(&[
                    (di as f64 - (ng - 1) as f64) * f.h,
                    (dj as f64 - (ng - 1) as f64) * f.h,
                ]);
                let idx = (k * nw + di) * nw + dj;
                b_tab[idx] = cs.eval(omega, &w) * d_omega;
                kick_tab[idx] = *omega * omega.dot(&w);
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..ng)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; ng];
            for j in 0..ng {
                let v = Vect::from_slice(&[f.coord(i), f.coord(j)]);
                let fv = f.vals[i * ng + j];
                let mut acc = 0.0;
                for a in 0..ng {
                    let wa = if a == 0 || a == ng - 1 { 0.5 } else { 1.0 };
                    let di = i + ng - 1 - a;
                    for b in 0..ng {
                        let wb = if b == 0 || b == ng - 1 { 0.5 } else { 1.0 };
                        let dj = j + ng - 1 - b;
                        let v2 = Vect::from_slice(&[f.coord(a), f.coord(b)]);
                        let f2 = f.vals[a * ng + b];
                        let mut node = 0.0;
                        for k in 0..PICARD_OMEGAS {
                            let idx = (k * nw + di) * nw + dj;
                            let b_val = b_tab[idx];
                            let kick = kick_tab[idx];
                            node += b_val * (f.interp(&(v - kick)) * f.interp(&(v2 + kick)) - fv * f2);
                        }
                        acc += wa * wb * node;
                    }
                }
                row[j] = acc * f.h * f.h;
            }
            row
        })
        .collect();
    let mut out = VGrid { ng, h: f.h, vals: vec![0.0; ng * ng] };
    for (i, row) in rows.into_iter().enumerate() {
        out.vals[i * ng..(i + 1) * ng].copy_from_slice(&row);
    }
    out
}

fn picard_grid_value(
    v1: &Vect,
    t: f64,
    f0: &InitialDatum,
    cs: &CrossSection,
    iterations: usize,
    ng: usize,
) -> f64 {
    let base = VGrid::sample(&|v| f0.velocity_density(v), ng);
    // time nodes 0 = s_0 < ... < s_{nt-1} = t; each iterate holds the
    // density at every node and is refreshed through the mild form by
    // trapezoid integration in time
    let nt = PICARD_TIME_NODES;
    let dt = t / (nt - 1) as f64;
    let mut iterate: Vec<VGrid> =
        (0..nt).map(|_| VGrid { ng, h: base.h, vals: base.vals.clone() }).collect();
    for _ in 0..iterations {
        let qs: Vec<VGrid> = iterate.iter().map(|g| q_on_grid(cs, g)).collect();
        let mut next = Vec::with_capacity(nt);
        for k in 0..nt {
            let mut vals = base.vals.clone();
            // trapezoid over s_0..s_k
            for (idx, val) in vals.iter_mut().enumerate() {
                let mut acc = 0.0;
                for m in 0..=k {
                    let w = if m == 0 || m == k { 0.5 } else { 1.0 };
                    acc += w * qs[m].vals[idx];
                }
                *val += dt * acc * if k == 0 { 0.0 } else { 1.0 };
            }
            next.push(VGrid { ng, h: base.h, vals });
        }
        iterate = next;
    }
    iterate[nt - 1].interp(v1)
}
