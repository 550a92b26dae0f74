//! Finite-eps history terms through the Fourier-side representation:
//! the rescaled term integrand with its bounded phase, a direct
//! oscillatory-quadrature oracle at low dimension, the uniform
//! integrability bound with its s-decay envelope, the half-line
//! delta-function mechanism, and the term-by-term convergence check
//! against the limiting evaluator.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::histories::{eps_trajectories, phase_decomposition, EpsHistory, Graph};
use crate::kernel::CrossSection;
use crate::mc::{gauss_pdf, ols_slope, parallel_mc, sample_gauss_vec, McEstimate};
use crate::oscillatory::gauss::GaussianIntegrand;
use crate::spectral::{InitialDatum, PotentialSpec};
use crate::vec::Vect;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Draws s from the density proportional to `(1+s)^{-2}` truncated to
/// `(0, r)`; returns the sample and its density.
fn sample_s(r: f64, rng: &mut impl Rng) -> (f64, f64) {
    let z = r / (1.0 + r);
    let y: f64 = rng.gen::<f64>() * z;
    let s = y / (1.0 - y);
    (s, 1.0 / ((1.0 + s) * (1.0 + s) * z))
}

/// Monte Carlo evaluation of one rescaled finite-eps history term at
/// fixed collision times, through the closed integrand
///
/// `I = e^{i Gamma~} f0_1(y_1, u_1) prod_j phi^(k_j) phi^(-k_j + eps xi_j)
///      f0_n^(-A' Xi, A' S K - A' T Xi)`,
///
/// whose phase is bounded uniformly in eps: no oscillatory quadrature
/// happens here. Sampled variables are the momenta `(Xi, K)` (Gaussian
/// importance) and the stretched recollision times `s_j` (importance
/// `(1+s)^{-2}` on the admissible range); the 4^n half-kick signs are
/// summed exactly. Returns (real part, imaginary part).
#[allow(clippy::too_many_arguments)]
pub fn eval_t_eps_term(
    graph: &Graph,
    t: f64,
    times: &[f64],
    eps: f64,
    x1: Vect,
    v1: Vect,
    f0: &InitialDatum,
    potential: &PotentialSpec,
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> (McEstimate, McEstimate) {
    let n = graph.order();
    assert_eq!(times.len(), n);
    let d = potential.dim;
    if n == 0 {
        let v = f0.eval(&(x1 - v1 * t), &v1);
        return (
            McEstimate { value: v, stderr: 0.0, n: 0 },
            McEstimate { value: 0.0, stderr: 0.0, n: 0 },
        );
    }
    if potential.is_zero() {
        let z = McEstimate { value: 0.0, stderr: 0.0, n: 0 };
        return (z.clone(), z);
    }
    // bulk amplification (N-1)...(N-n) with N = eps^{-d}, the exact
    // counterpart of the eps^{dn} rescaling of the momenta
    let big_n = eps.powi(-(d as i32));
    let mut prefactor = if n % 2 == 0 { 1.0 } else { -1.0 };
    for m in 1..=n {
        prefactor *= (big_n - m as f64) * eps.powi(d as i32) / TAU.powi(2 * d as i32);
    }
    let s_ranges: Vec<f64> = {
        let template = EpsHistory {
            graph: graph.clone(),
            eps,
            t,
            times: times.to_vec(),
            s_times: vec![0.0; n],
            sigmas: vec![1; n],
            sigmas_prime: vec![1; n],
            ks: vec![Vect::zero(); n],
            xis: vec![Vect::zero(); n],
        };
        (1..=n).map(|j| template.s_range(j)).collect::<Vec<_>>()
    };
    let zeros = vec![Vect::zero(); n];
    let [re, im] = parallel_mc::<2, _>(seed, budget, |rng: &mut ChaCha8Rng| {
        let xis: Vec<Vect> = (0..n).map(|_| sample_gauss_vec(d, sigma_importance, rng)).collect();
        let ks: Vec<Vect> = (0..n).map(|_| sample_gauss_vec(d, sigma_importance, rng)).collect();
        let mut weight = 1.0;
        let mut s_times = Vec::with_capacity(n);
        for &r in &s_ranges {
            let (s, pdf) = sample_s(r, rng);
            s_times.push(s);
            weight /= pdf;
        }
        for z in xis.iter().chain(&ks) {
            weight /= gauss_pdf(d, sigma_importance, z);
        }
        // phi^ products and the transformed datum depend only on the
        // momenta, not on the signs
        let mut phi_prod = 1.0;
        for j in 0..n {
            phi_prod *= potential.fourier(&ks[j]) * potential.fourier(&(xis[j] * eps - ks[j]));
        }
        let minus_at_xi: Vec<Vect> =
            graph.apply_a_transpose(&xis).iter().map(|z| -*z).collect();
        let mixed: Vec<Vect> = (0..n)
            .map(|j| ks[j] * s_times[j] - xis[j] * times[j])
            .collect();
        let at_mixed = graph.apply_a_transpose(&mixed);
        let fhat = f0.factorized_fourier(&minus_at_xi, &at_mixed);
        let mut acc = Complex64::new(0.0, 0.0);
        for mask in 0..(1u32 << (2 * n)) {
            let sigmas: Vec<i8> =
                (0..n).map(|b| if mask >> b & 1 == 0 { 1 } else { -1 }).collect();
            let sigmas_prime: Vec<i8> =
                (0..n).map(|b| if mask >> (n + b) & 1 == 0 { 1 } else { -1 }).collect();
            let mut sign = 1.0;
            for j in 0..n {
                sign *= (sigmas[j] * sigmas_prime[j]) as f64;
            }
            let h = EpsHistory {
                graph: graph.clone(),
                eps,
                t,
                times: times.to_vec(),
                s_times: s_times.clone(),
                sigmas,
                sigmas_prime,
                ks: ks.clone(),
                xis: xis.clone(),
            };
            let trajs = eps_trajectories(&h, x1, v1, &zeros, &zeros);
            let parts = phase_decomposition(&h, &trajs);
            let (y1, u1) = parts.root_endpoint;
            let val = Complex64::new(0.0, parts.gamma_tilde).exp()
                * f0.eval(&y1, &u1)
                * phi_prod
                * fhat;
            acc += val * sign;
        }
        acc *= prefactor * weight;
        [acc.re, acc.im]
    });
    (re, im)
}

/// Direct oscillatory-quadrature oracle for the n = 1, d = 1 term at
/// moderate eps: transcribes the rescaled time-integrand with explicit
/// trajectory endpoints, integrates the free position analytically
/// (Gaussian with a linear phase) and the remaining four variables
/// `(s_1, xi, k, v_2)` by dense tensor quadrature. Entirely
/// independent of the history and phase-decomposition machinery.
pub fn direct_quadrature_t_eps_1d(
    t: f64,
    t1: f64,
    eps: f64,
    x1: f64,
    v1: f64,
    f0: &InitialDatum,
    potential: &PotentialSpec,
) -> Complex64 {
    use rayon::prelude::*;
    assert_eq!(f0.dim, 1);
    assert_eq!(potential.dim, 1);
    assert_eq!(f0.components.len(), 1, "oracle transcribed for a single component");
    let c = f0.components[0];
    let (wt, xc, vc, wx, wv) =
        (c.weight, c.x_center.0[0], c.v_center.0[0], c.x_width, c.v_width);
    let gx = |x: f64| (TAU * wx * wx).powf(-0.5) * (-(x - xc) * (x - xc) / (2.0 * wx * wx)).exp();
    let gv = |v: f64| (TAU * wv * wv).powf(-0.5) * (-(v - vc) * (v - vc) / (2.0 * wv * wv)).exp();
    let phi_hat = |k: f64| potential.fourier(&Vect::from_slice(&[k]));
    let y_bar = x1 - v1 * (t - t1);
    let big_n = 1.0 / eps;

    let (sn, sw) = crate::quad::gauss_legendre(48);
    let (qn, qw) = crate::quad::gauss_legendre(96);
    let (vn, vw) = crate::quad::gauss_legendre(160);
    let s_max = t1 / eps;
    let q_lim = 7.0;
    let v_lim = vc.abs() + 6.0 * wv.max(1.0);

    let total: Complex64 = sn
        .par_iter()
        .zip(&sw)
        .map(|(&us, &ws)| {
            let s1 = s_max / 2.0 * (us + 1.0);
            let tau1 = t1 - eps * s1;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&uxi, &wxi) in qn.iter().zip(&qw) {
                let xi = q_lim * uxi;
                for (&uk, &wk) in qn.iter().zip(&qw) {
                    let k = q_lim * uk;
                    let h = -k + eps * xi;
                    let pots = phi_hat(k) * phi_hat(h);
                    if pots.abs() < 1e-300 {
                        continue;
                    }
                    for (&uv, &wv2) in vn.iter().zip(&vw) {
                        let v2 = v_lim * uv;
                        let mut branch = Complex64::new(0.0, 0.0);
                        for sgn in 0..4u8 {
                            let s = if sgn & 1 == 0 { 1.0 } else { -1.0 };
                            let sp = if sgn & 2 == 0 { 1.0 } else { -1.0 };
                            let u1 = v1 - s * h / 2.0 - sp * k / 2.0;
                            let y1 = y_bar - (v1 - s * h / 2.0) * eps * s1 - u1 * tau1;
                            let u2 = v2 + s * h / 2.0 + sp * k / 2.0;
                            // free-position integral: the newborn datum
                            // factor against exp(-i xi x2), with
                            // y2 = x2 + b
                            let b = -(v2 + s * h / 2.0) * eps * s1 - u2 * tau1;
                            let x2_int = Complex64::new(0.0, xi * (b - xc)).exp()
                                * (-wx * wx * xi * xi / 2.0).exp();
                            let phase = Complex64::new(
                                0.0,
                                xi * y_bar - k * s1 * (v1 - v2 - s * h),
                            )
                            .exp();
                            branch += Complex64::new(s * sp * gx(y1) * gv(u1) * gv(u2), 0.0)
                                * x2_int
                                * phase;
                        }
                        acc += branch * (pots * wxi * wk * wv2 * q_lim * q_lim * v_lim);
                    }
                }
            }
            acc * (ws * s_max / 2.0)
        })
        .sum();
    total * (-(big_n - 1.0) * eps * wt * wt / (TAU * TAU))
}

/// Exact value of `\int dXi dK g(Xi, K)` for a single-component datum
/// and single-bump potential, where
///
/// `g = |prod_j phi^(k_j)| |f0_n^(-A' Xi, A' S K - A' T Xi)|`
///
/// is the eps-independent envelope of the term integrand: a positive
/// block-Gaussian integral evaluated in closed form.
pub fn g_integral(
    graph: &Graph,
    times: &[f64],
    s: &[f64],
    f0: &InitialDatum,
    potential: &PotentialSpec,
) -> f64 {
    let n = graph.order();
    assert_eq!(times.len(), n);
    assert_eq!(s.len(), n);
    assert_eq!(f0.components.len(), 1);
    if potential.is_zero() {
        return 0.0;
    }
    assert_eq!(potential.components.len(), 1);
    let d = f0.dim;
    let comp = f0.components[0];
    let pot = potential.components[0];
    // blocks 0..n are the xi_j, blocks n..2n the k_j
    let nb = 2 * n;
    let mut g = GaussianIntegrand::new(nb, d);
    for j in 0..n {
        let df = d as f64;
        g.mul_scalar(Complex64::new(
            pot.amplitude.abs() * TAU.powf(df / 2.0) * pot.width.powf(df),
            0.0,
        ));
        let mut e = vec![0.0; nb];
        e[n + j] = 1.0;
        g.mul_gaussian_sq(pot.width * pot.width / 2.0, &e, &Vect::zero());
    }
    for m in 1..=n {
        // (A' z)_m = -z_m + sum_{r: ell_r = m+1} z_r, applied to
        // z = Xi for the position slot and z = S K - T Xi for the
        // velocity slot; the slot magnitudes feed the component widths
        let mut pos = vec![0.0; nb];
        let mut vel = vec![0.0; nb];
        for r in 1..=n {
            let a_rm = -(if r == m { 1.0 } else { 0.0 })
                + if graph.label(r) == m + 1 { 1.0 } else { 0.0 };
            pos[r - 1] += a_rm;
            vel[n + r - 1] += s[r - 1] * a_rm;
            vel[r - 1] += -times[r - 1] * a_rm;
        }
        g.mul_scalar(Complex64::new(comp.weight.abs(), 0.0));
        g.mul_gaussian_sq(comp.x_width * comp.x_width / 2.0, &pos, &Vect::zero());
        g.mul_gaussian_sq(comp.v_width * comp.v_width / 2.0, &vel, &Vect::zero());
    }
    g.integrate().expect("positive Gaussian integrand is damped").re
}

/// Report of the uniform-integrability envelope check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformBoundReport {
    /// `(s, \int |g|)` rows with a common stretched time at every
    /// collision.
    pub rows: Vec<(f64, f64)>,
    /// Smallest per-order constant such that
    /// `\int |g| <= [C (N1 + N2)]^n prod (1 + s_j)^{-d}` on the rows.
    pub c_min: f64,
    /// Fitted decay exponent of `\int |g|` against `1 + s`.
    pub decay_slope: f64,
    /// The exponent is at least as negative as `-d` (small fit slack).
    pub envelope_ok: bool,
    /// For n = 1: `(\int |g| at s = 0, ||phi^||_L1 N2)`; the first may
    /// not exceed the second.
    pub n1_bound: Option<(f64, f64)>,
}

/// Samples `\int |g|` over a ladder of stretched times and verifies the
/// product-decay envelope with exponent d.
pub fn uniform_bound_check(
    graph: &Graph,
    times: &[f64],
    s_samples: &[f64],
    f0: &InitialDatum,
    potential: &PotentialSpec,
) -> UniformBoundReport {
    let n = graph.order();
    let d = f0.dim as f64;
    let rows: Vec<(f64, f64)> = s_samples
        .iter()
        .map(|&s| (s, g_integral(graph, times, &vec![s; n], f0, potential)))
        .collect();
    let (n1, n2) = f0.norms();
    let c_min = rows
        .iter()
        .map(|&(s, v)| (v * (1.0 + s).powf(d * n as f64)).powf(1.0 / n as f64) / (n1 + n2))
        .fold(0.0, f64::max);
    let tail: Vec<(f64, f64)> = rows.iter().copied().filter(|&(s, _)| s >= 1.0).collect();
    let decay_slope = if tail.len() >= 2 {
        let xs: Vec<f64> = tail.iter().map(|&(s, _)| (1.0 + s).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|&(_, v)| v.max(f64::MIN_POSITIVE).ln()).collect();
        ols_slope(&xs, &ys).0
    } else {
        f64::NAN
    };
    let envelope_ok = decay_slope <= -d + 0.1;
    let n1_bound = if n == 1 {
        let at_zero = g_integral(graph, times, &[0.0], f0, potential);
        Some((at_zero, potential.fourier_l1() * n2))
    } else {
        None
    };
    UniformBoundReport { rows, c_min, decay_slope, envelope_ok, n1_bound }
}

/// One row of the half-line delta-function check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaCheckRow {
    pub big_t: f64,
    pub value: f64,
    pub error: f64,
}

/// Quadrature of `\int sin(T a)/a g(a) da` over `|a| <= range` with
/// per-period panels: the half-line phase integral
/// `Re \int_0^T e^{-i s a} ds` acting as `pi delta(a)` in the limit.
/// The error column is against `pi g(0)`; the sign convention here is
/// the one with a positive delta mass.
pub fn mollified_delta_check(
    g: &(impl Fn(f64) -> f64 + Sync),
    g_at_zero: f64,
    big_ts: &[f64],
    range: f64,
) -> Vec<DeltaCheckRow> {
    use rayon::prelude::*;
    let (gl, glw) = crate::quad::gauss_legendre(8);
    big_ts
        .iter()
        .map(|&bt| {
            let period = TAU / bt;
            let panels = (range / period).ceil() as usize;
            // symmetric panels about 0 so that odd integrands cancel
            // exactly
            let value: f64 = (0..panels)
                .into_par_iter()
                .map(|p| {
                    let lo = range * p as f64 / panels as f64;
                    let hi = range * (p + 1) as f64 / panels as f64;
                    let mid = (lo + hi) / 2.0;
                    let rad = (hi - lo) / 2.0;
                    let mut acc = 0.0;
                    for (&u, &w) in gl.iter().zip(&glw) {
                        let a = mid + rad * u;
                        let kernel = (bt * a).sin() / a;
                        acc += w * rad * kernel * (g(a) + g(-a));
                    }
                    acc
                })
                .sum();
            DeltaCheckRow {
                big_t: bt,
                value,
                error: (value - std::f64::consts::PI * g_at_zero).abs(),
            }
        })
        .collect()
}

/// One row of the term-by-term convergence check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub value: f64,
    pub stderr: f64,
    pub imag: f64,
    pub gap: f64,
}

/// Report of the finite-eps to limit comparison for one history term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub limit: f64,
    pub limit_stderr: f64,
    /// Gaps decrease along the ladder within error bars.
    pub monotone: bool,
    /// Final gap within three combined standard errors.
    pub final_within: bool,
}

/// Compares the finite-eps evaluation of one history term against the
/// limiting evaluator on an eps-ladder: the two sides are independent
/// oracles for each other, pinning every constant of the rescaling.
#[allow(clippy::too_many_arguments)]
pub fn term_convergence_check(
    graph: &Graph,
    t: f64,
    times: &[f64],
    ladder: &[f64],
    x1: Vect,
    v1: Vect,
    f0: &InitialDatum,
    cs: &CrossSection,
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> ConvergenceReport {
    let limit = crate::series::eval_t_limit(
        graph,
        t,
        times,
        x1,
        v1,
        f0,
        cs,
        false,
        sigma_importance,
        seed ^ 0xABCD,
        budget,
    );
    let rows: Vec<ConvergenceRow> = ladder
        .iter()
        .map(|&eps| {
            let (re, im) = eval_t_eps_term(
                graph,
                t,
                times,
                eps,
                x1,
                v1,
                f0,
                &cs.potential,
                sigma_importance,
                seed,
                budget,
            );
            ConvergenceRow {
                eps,
                value: re.value,
                stderr: re.stderr,
                imag: im.value,
                gap: (re.value - limit.value).abs(),
            }
        })
        .collect();
    let mut monotone = true;
    for w in rows.windows(2) {
        let slack = 2.0 * (w[0].stderr + w[1].stderr) + 2.0 * limit.stderr;
        if w[1].gap > w[0].gap + slack {
            monotone = false;
        }
    }
    let last = rows.last().expect("ladder must be nonempty");
    let final_within =
        last.gap <= 3.0 * (last.stderr * last.stderr + limit.stderr * limit.stderr).sqrt();
    ConvergenceReport {
        rows,
        limit: limit.value,
        limit_stderr: limit.stderr,
        monotone,
        final_within,
    }
}
