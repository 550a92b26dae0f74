//! Low-order expansion terms and their eps-scaling probes.
//!
//! Each term is an operator chain (creations, pair interactions, free
//! flights applied to the factorized datum) whose inner integrals the
//! block-Gaussian engine evaluates exactly; only the one or two
//! interaction times are integrated numerically. A scaling probe
//! evaluates a term on a geometric eps-ladder and fits the power
//! `|value| ~ eps^slope`, exposing which contributions vanish, which
//! survive, and which need the sign cancellation between the two
//! half-kick branches to stay bounded.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mc::ols_slope;
use crate::oscillatory::chain::{Chain, Root};
use crate::quad::gauss_legendre;
use crate::spectral::{InitialDatum, PotentialSpec};
use crate::vec::Vect;

/// Which expansion term a probe evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    /// Single creation, pointwise root: bounded only through the sign
    /// cancellation between the two half-kick branches.
    I1,
    /// Single pair interaction between two weakly tested roots.
    I2,
    /// Pair interaction above a creation, weakly tested.
    I3,
    /// Creation then interaction of a disjoint pair, weakly tested.
    I4Case1,
    /// Creation then interaction reusing the creating root, weakly
    /// tested.
    I4Case2,
    /// Creation then interaction of the newborn with another root,
    /// weakly tested.
    I4Case3,
    /// Creation then recollision of the same pair, pointwise: the term
    /// that survives the limit.
    I4Recollision,
}

/// Whether the sum over half-kick signs is carried in full or a single
/// branch is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaMode {
    Retained,
    SingleBranch,
}

/// A term together with the block dimension it is evaluated in.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TermSelector {
    pub kind: TermKind,
    pub dim: usize,
}

impl TermSelector {
    pub fn new(kind: TermKind, dim: usize) -> Self {
        assert!((1..=crate::vec::MAX_DIM).contains(&dim));
        TermSelector { kind, dim }
    }

    /// Number of root particles the term acts on.
    pub fn roots(&self) -> usize {
        match self.kind {
            TermKind::I1 | TermKind::I4Recollision => 1,
            TermKind::I2 | TermKind::I3 | TermKind::I4Case2 | TermKind::I4Case3 => 2,
            TermKind::I4Case1 => 3,
        }
    }

    /// Default sign treatment: the terms whose size is probed branch by
    /// branch keep a single sign, the two that need or exhibit the
    /// cancellation keep the full sum.
    pub fn sigma_mode(&self) -> SigmaMode {
        match self.kind {
            TermKind::I1 | TermKind::I4Recollision => SigmaMode::Retained,
            _ => SigmaMode::SingleBranch,
        }
    }

    /// Whether the root states enter pointwise (as opposed to weakly
    /// tested against a Gaussian).
    pub fn pointwise(&self) -> bool {
        matches!(self.kind, TermKind::I1 | TermKind::I4Recollision)
    }

    /// The expected power of eps in `|value| ~ eps^slope`.
    pub fn expected_slope(&self) -> f64 {
        let d = self.dim as f64;
        match self.kind {
            TermKind::I1 => 0.5,
            TermKind::I2 => d - 0.5,
            TermKind::I3 | TermKind::I4Case1 | TermKind::I4Case2 | TermKind::I4Case3 => d - 1.0,
            TermKind::I4Recollision => 0.0,
        }
    }
}

impl std::str::FromStr for TermKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I1" => Ok(TermKind::I1),
            "I2" => Ok(TermKind::I2),
            "I3" => Ok(TermKind::I3),
            "I4_case1" => Ok(TermKind::I4Case1),
            "I4_case2" => Ok(TermKind::I4Case2),
            "I4_case3" => Ok(TermKind::I4Case3),
            "I4_recollision" => Ok(TermKind::I4Recollision),
            other => Err(format!("unknown term {other:?}")),
        }
    }
}

impl std::fmt::Display for TermKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TermKind::I1 => "I1",
            TermKind::I2 => "I2",
            TermKind::I3 => "I3",
            TermKind::I4Case1 => "I4_case1",
            TermKind::I4Case2 => "I4_case2",
            TermKind::I4Case3 => "I4_case3",
            TermKind::I4Recollision => "I4_recollision",
        };
        f.write_str(s)
    }
}

/// Quadrature resolution for the interaction-time integrals.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalGrid {
    /// Gauss-Legendre nodes per time dimension.
    pub time_nodes: usize,
    /// Nodes per unit-length panel of the stretched recollision time.
    pub s_panel_nodes: usize,
}

impl Default for EvalGrid {
    fn default() -> Self {
        EvalGrid { time_nodes: 16, s_panel_nodes: 10 }
    }
}

const S_PANEL_WIDTH: f64 = 2.0;

fn sigma_branches(mode: SigmaMode, nops: usize) -> Vec<Vec<i8>> {
    match mode {
        SigmaMode::SingleBranch => vec![vec![1; nops]],
        SigmaMode::Retained => {
            let mut out = vec![];
            for mask in 0..(1u32 << nops) {
                out.push((0..nops).map(|b| if mask >> b & 1 == 0 { 1 } else { -1 }).collect());
            }
            out
        }
    }
}

/// Evaluates one expansion term at observation time `t`. Pointwise
/// terms are evaluated at the root state `(x1, v1)`; weak terms ignore
/// it. The bulk amplification `N - j` with `N = eps^{-dim}` is
/// included for every term containing a creation.
pub fn eval_i_term(
    sel: &TermSelector,
    eps: f64,
    potential: &PotentialSpec,
    f0: &InitialDatum,
    t: f64,
    x1: Vect,
    v1: Vect,
    grid: &EvalGrid,
) -> Complex64 {
    eval_with_mode(sel, sel.sigma_mode(), eps, potential, f0, t, x1, v1, grid)
}

#[allow(clippy::too_many_arguments)]
pub fn eval_with_mode(
    sel: &TermSelector,
    mode: SigmaMode,
    eps: f64,
    potential: &PotentialSpec,
    f0: &InitialDatum,
    t: f64,
    x1: Vect,
    v1: Vect,
    grid: &EvalGrid,
) -> Complex64 {
    let roots: Vec<Root> = if sel.pointwise() {
        vec![Root::Fixed(x1, v1)]
    } else {
        vec![Root::Weak; sel.roots()]
    };
    let n_bulk = eps.powi(-(sel.dim as i32)) - sel.roots() as f64;
    let (nodes, weights) = gauss_legendre(grid.time_nodes);
    let half = t / 2.0;
    let to_time = |u: f64| half * (u + 1.0);

    let one_time = |build: &(dyn Fn(f64, &[i8]) -> Complex64 + Sync), nops: usize| -> Complex64 {
        let branches = sigma_branches(mode, nops);
        let vals: Vec<Complex64> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(&u, &w)| {
                let t1 = to_time(u);
                let mut acc = Complex64::new(0.0, 0.0);
                for br in &branches {
                    acc += build(t1, br);
                }
                acc * (w * half)
            })
            .collect();
        vals.into_iter().sum()
    };

    // triangle 0 < inner < outer < t, smooth in both times
    let two_times = |build: &(dyn Fn(f64, f64, &[i8]) -> Complex64 + Sync), nops: usize| -> Complex64 {
        let branches = sigma_branches(mode, nops);
        let vals: Vec<Complex64> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(&u, &w)| {
                let outer = to_time(u);
                let mut acc = Complex64::new(0.0, 0.0);
                for (&ui, &wi) in nodes.iter().zip(&weights) {
                    let inner = outer / 2.0 * (ui + 1.0);
                    for br in &branches {
                        acc += build(outer, inner, br) * (wi * outer / 2.0);
                    }
                }
                acc * (w * half)
            })
            .collect();
        vals.into_iter().sum()
    };

    // triangle with the inner time stretched to the recollision scale:
    // tau1 = t1 - eps s, s in (0, t1/eps), where the integrand
    // concentrates and oscillates
    let layer_times = |build: &(dyn Fn(f64, f64, &[i8]) -> Complex64 + Sync), nops: usize| -> Complex64 {
        let branches = sigma_branches(mode, nops);
        let (sn, sw) = gauss_legendre(grid.s_panel_nodes);
        let vals: Vec<Complex64> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(&u, &w)| {
                let t1 = to_time(u);
                let s_max = t1 / eps;
                let mut acc = Complex64::new(0.0, 0.0);
                let mut lo = 0.0;
                while lo < s_max {
                    let hi = (lo + S_PANEL_WIDTH).min(s_max);
                    let mid = (lo + hi) / 2.0;
                    let rad = (hi - lo) / 2.0;
                    for (&us, &ws) in sn.iter().zip(&sw) {
                        let s = mid + rad * us;
                        let tau1 = t1 - eps * s;
                        for br in &branches {
                            acc += build(t1, tau1, br) * (ws * rad * eps);
                        }
                    }
                    lo = hi;
                }
                acc * (w * half)
            })
            .collect();
        vals.into_iter().sum()
    };

    let mk_chain = |start: f64| Chain::new(sel.dim, eps, potential, start, &roots);

    match sel.kind {
        TermKind::I1 => {
            let f = |t1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(t1);
                c.c_op(0, br[0]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            one_time(&f, 1) * n_bulk
        }
        TermKind::I2 => {
            let f = |tau1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(tau1);
                c.t_op(0, 1, br[0]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            one_time(&f, 1)
        }
        TermKind::I3 => {
            // interaction of the roots above a creation from either root
            let f = |tau1: f64, t1: f64, br: &[i8]| {
                let mut acc = Complex64::new(0.0, 0.0);
                for anc in 0..2 {
                    let mut c = mk_chain(t);
                    c.advance_to(tau1);
                    c.t_op(0, 1, br[0]);
                    c.advance_to(t1);
                    c.c_op(anc, br[1]);
                    c.advance_to(0.0);
                    acc += c.close_and_integrate(f0).expect("damped by construction");
                }
                acc
            };
            two_times(&f, 2) * n_bulk
        }
        TermKind::I4Case1 => {
            // creation from root 3, then interaction of roots 1 and 2
            let f = |t1: f64, tau1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(t1);
                c.c_op(2, br[0]);
                c.advance_to(tau1);
                c.t_op(0, 1, br[1]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            two_times(&f, 2) * n_bulk
        }
        TermKind::I4Case2 => {
            // creation from root 1, then interaction of the roots
            let f = |t1: f64, tau1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(t1);
                c.c_op(0, br[0]);
                c.advance_to(tau1);
                c.t_op(0, 1, br[1]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            two_times(&f, 2) * n_bulk
        }
        TermKind::I4Case3 => {
            // creation from root 1, then interaction of the newborn
            // with root 2
            let f = |t1: f64, tau1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(t1);
                c.c_op(0, br[0]);
                c.advance_to(tau1);
                c.t_op(2, 1, br[1]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            two_times(&f, 2) * n_bulk
        }
        TermKind::I4Recollision => {
            // creation then recollision of the same pair: the inner
            // time lives on the eps-scale layer below the outer one
            let f = |t1: f64, tau1: f64, br: &[i8]| {
                let mut c = mk_chain(t);
                c.advance_to(t1);
                c.c_op(0, br[0]);
                c.advance_to(tau1);
                c.t_op(0, 1, br[1]);
                c.advance_to(0.0);
                c.close_and_integrate(f0).expect("damped by construction")
            };
            layer_times(&f, 2) * n_bulk
        }
    }
}

/// Result of fitting `log |value|` against `log eps` on a ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub term: TermKind,
    pub dim: usize,
    pub eps: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub expected_slope: f64,
}

/// Geometric eps-ladder with ratio `1 / sqrt(10)`.
pub fn eps_ladder(start: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count).map(|i| start * 10f64.powf(-(i as f64) / 2.0)).collect()
}

/// Evaluates a term over an eps-ladder and fits the scaling exponent.
#[allow(clippy::too_many_arguments)]
pub fn scaling_probe(
    sel: &TermSelector,
    potential: &PotentialSpec,
    f0: &InitialDatum,
    t: f64,
    x1: Vect,
    v1: Vect,
    ladder: &[f64],
    grid: &EvalGrid,
) -> ScalingProbe {
    assert!(ladder.len() >= 2, "a scaling fit needs at least two ladder points");
    let magnitude: Vec<f64> = ladder
        .iter()
        .map(|&eps| eval_i_term(sel, eps, potential, f0, t, x1, v1, grid).norm())
        .collect();
    let xs: Vec<f64> = ladder.iter().map(|&e| e.ln()).collect();
    let ys: Vec<f64> = magnitude.iter().map(|&m| m.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, slope_stderr) = ols_slope(&xs, &ys);
    ScalingProbe {
        term: sel.kind,
        dim: sel.dim,
        eps: ladder.to_vec(),
        magnitude,
        slope,
        slope_stderr,
        expected_slope: sel.expected_slope(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(dim: usize) -> (PotentialSpec, InitialDatum) {
        (PotentialSpec::gaussian(1.0, 1.0, dim), InitialDatum::standard(dim))
    }

    fn probe_slope(kind: TermKind, dim: usize, ladder: &[f64]) -> ScalingProbe {
        let (pot, f0) = setup(dim);
        let sel = TermSelector::new(kind, dim);
        scaling_probe(
            &sel,
            &pot,
            &f0,
            0.5,
            Vect::from_slice(&[0.3, -0.1, 0.2][..dim]),
            Vect::from_slice(&[-0.4, 0.2, 0.1][..dim]),
            ladder,
            &EvalGrid::default(),
        )
    }

    #[test]
    fn term_kind_names_round_trip() {
        for kind in [
            TermKind::I1,
            TermKind::I2,
            TermKind::I3,
            TermKind::I4Case1,
            TermKind::I4Case2,
            TermKind::I4Case3,
            TermKind::I4Recollision,
        ] {
            let name = kind.to_string();
            assert_eq!(name.parse::<TermKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<TermKind>().is_err());
    }

    #[test]
    fn ladder_has_sqrt_ten_ratio() {
        let l = eps_ladder(0.1, 4);
        assert_eq!(l.len(), 4);
        for w in l.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(-0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn creation_term_vanishes_like_sqrt_eps() {
        let p = probe_slope(TermKind::I1, 2, &eps_ladder(0.1, 4));
        assert!(
            (p.slope - 0.5).abs() < 0.15,
            "slope {} stderr {}",
            p.slope,
            p.slope_stderr
        );
    }

    #[test]
    fn creation_term_single_branch_diverges() {
        // without the sign sum the same term blows up like eps^{-1/2}:
        // the cancellation is what keeps the expansion bounded
        let (pot, f0) = setup(2);
        let sel = TermSelector::new(TermKind::I1, 2);
        let ladder = eps_ladder(0.1, 4);
        let mags: Vec<f64> = ladder
            .iter()
            .map(|&eps| {
                eval_with_mode(
                    &sel,
                    SigmaMode::SingleBranch,
                    eps,
                    &pot,
                    &f0,
                    0.5,
                    Vect::from_slice(&[0.3, -0.1]),
                    Vect::from_slice(&[-0.4, 0.2]),
                    &EvalGrid::default(),
                )
                .norm()
            })
            .collect();
        let xs: Vec<f64> = ladder.iter().map(|&e| e.ln()).collect();
        let ys: Vec<f64> = mags.iter().map(|&m| m.ln()).collect();
        let (slope, _) = ols_slope(&xs, &ys);
        assert!((slope + 0.5).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn pair_term_vanishes_like_d_minus_half() {
        let p = probe_slope(TermKind::I2, 2, &eps_ladder(0.1, 4));
        assert!((p.slope - 1.5).abs() < 0.15, "slope {}", p.slope);
    }

    #[test]
    fn ordered_double_terms_vanish_like_d_minus_one() {
        for kind in [TermKind::I3, TermKind::I4Case1, TermKind::I4Case2, TermKind::I4Case3] {
            let p = probe_slope(kind, 2, &eps_ladder(0.1, 4));
            assert!((p.slope - 1.0).abs() < 0.2, "{kind}: slope {}", p.slope);
        }
    }

    fn bimodal(dim: usize) -> InitialDatum {
        // a single Gaussian component has a (possibly drifting)
        // Maxwellian velocity marginal, which the limiting collision
        // mechanism leaves invariant; the surviving term is only
        // visible on off-equilibrium data like this velocity mixture
        use crate::spectral::DatumComponent;
        let mut up = Vect::zero();
        up.0[0] = 0.9;
        InitialDatum::new(
            vec![
                DatumComponent {
                    weight: 0.5,
                    x_center: Vect::zero(),
                    v_center: up,
                    x_width: 1.0,
                    v_width: 0.7,
                },
                DatumComponent {
                    weight: 0.5,
                    x_center: Vect::zero(),
                    v_center: -up,
                    x_width: 1.0,
                    v_width: 0.7,
                },
            ],
            dim,
        )
        .unwrap()
    }

    #[test]
    fn recollision_term_survives() {
        let dim = 2;
        let (pot, _) = setup(dim);
        let sel = TermSelector::new(TermKind::I4Recollision, dim);
        let p = scaling_probe(
            &sel,
            &pot,
            &bimodal(dim),
            0.5,
            Vect::from_slice(&[0.3, -0.1]),
            Vect::from_slice(&[-0.4, 0.2]),
            &eps_ladder(0.0316, 4),
            &EvalGrid::default(),
        );
        assert!(p.slope.abs() < 0.15, "slope {} mags {:?}", p.slope, p.magnitude);
        // and the values settle rather than oscillate in magnitude
        let last = p.magnitude.last().unwrap();
        assert!((p.magnitude[2] - last).abs() < 0.15 * last.abs());
    }

    #[test]
    fn time_quadrature_is_converged() {
        // doubling the node counts moves every term by less than the
        // slack the slope assertions rely on
        let (pot, f0) = setup(2);
        let x1 = Vect::from_slice(&[0.3, -0.1]);
        let v1 = Vect::from_slice(&[-0.4, 0.2]);
        let coarse = EvalGrid::default();
        let fine = EvalGrid { time_nodes: 32, s_panel_nodes: 16 };
        for kind in [TermKind::I1, TermKind::I2, TermKind::I3, TermKind::I4Case2, TermKind::I4Recollision] {
            let sel = TermSelector::new(kind, 2);
            let a = eval_i_term(&sel, 0.0316, &pot, &f0, 0.5, x1, v1, &coarse);
            let b = eval_i_term(&sel, 0.0316, &pot, &f0, 0.5, x1, v1, &fine);
            assert!(
                (a - b).norm() <= 2e-3 * b.norm().max(1e-12),
                "{kind}: {a} vs {b}"
            );
        }
    }
}
