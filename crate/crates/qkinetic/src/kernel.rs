//! The limiting collision kernel: Born-approximation cross section,
//! the polar reduction of the energy-shell delta function, and the
//! homogeneous Boltzmann collision operator built on both.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mc::{gauss_pdf, parallel_mc, sample_gauss_vec, sample_unit_sphere, sphere_area, McEstimate};
use crate::quad::{gauss_legendre, sphere_rule};
use crate::spectral::PotentialSpec;
use crate::vec::Vect;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("cross section undefined in dimension {0}: the energy-shell reduction needs d >= 2")]
    UnsupportedDimension(usize),
}

/// The collision kernel `B(omega, w)` of the limiting equation:
/// the Born approximation
///
/// `B(omega, w) = pi (2 pi)^{-d} |omega.w|^{d-2} |phi^((omega.w) omega)|^2`.
///
/// In d = 3 this is `|omega.w| |phi^|^2 / (8 pi^2)`; in d = 2 the
/// `|omega.w|` power drops out. d = 1 is unsupported: the reduction of
/// the energy shell to the sphere degenerates there.
#[derive(Clone, Debug)]
pub struct CrossSection {
    pub potential: PotentialSpec,
}

impl CrossSection {
    pub fn new(potential: PotentialSpec) -> Result<Self, KernelError> {
        if potential.dim < 2 {
            return Err(KernelError::UnsupportedDimension(potential.dim));
        }
        Ok(CrossSection { potential })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim
    }

    /// `B(omega, w)` for a unit vector `omega` and relative velocity `w`.
    pub fn eval(&self, omega: &Vect, w: &Vect) -> f64 {
        let d = self.dim();
        let c = omega.dot(w);
        let constant = std::f64::consts::PI / TAU.powi(d as i32);
        constant * c.abs().powi(d as i32 - 2) * self.potential.fourier(&(*omega * c)).powi(2)
    }

    /// Total cross section `lambda(w) = \int_{S^{d-1}} B(omega, w) domega`
    /// by sphere quadrature.
    pub fn total(&self, w: &Vect, resolution: usize) -> f64 {
        sphere_rule(self.dim(), resolution)
            .iter()
            .map(|(omega, wt)| wt * self.eval(omega, w))
            .sum()
    }
}

/// Elastic collision map: transfers the `omega` component of the
/// relative velocity between the pair. An involution that conserves
/// momentum and kinetic energy.
pub fn collision_map(v1: &Vect, v2: &Vect, omega: &Vect) -> (Vect, Vect) {
    let kick = *omega * omega.dot(&(*v1 - *v2));
    (*v1 - kick, *v2 + kick)
}

/// Exact polar reduction of the energy-shell integral:
///
/// `\int deta gamma(eta) delta(eta.(w - eta))
///    = (1/2) \int_{S^{d-1}} domega |omega.w|^{d-2} gamma((omega.w) omega)`,
///
/// evaluated by sphere quadrature. Needs d >= 2.
pub fn delta_reduce_exact(
    gamma: impl Fn(&Vect) -> f64,
    w: &Vect,
    d: usize,
    resolution: usize,
) -> f64 {
    assert!(d >= 2, "energy-shell reduction needs d >= 2");
    sphere_rule(d, resolution)
        .iter()
        .map(|(omega, wt)| {
            let c = omega.dot(w);
            0.5 * wt * c.abs().powi(d as i32 - 2) * gamma(&(*omega * c))
        })
        .sum()
}

/// Left side of the reduction with the delta replaced by a Gaussian
/// mollifier of width `mu`, integrated over eta by a radial
/// Gauss-Legendre rule crossed with a sphere rule.
pub fn delta_reduce_mollified(
    gamma: impl Fn(&Vect) -> f64,
    w: &Vect,
    d: usize,
    mu: f64,
    resolution: usize,
    rmax: f64,
) -> f64 {
    assert!(d >= 2);
    let (rs, rws) = gauss_legendre(4 * resolution);
    let sphere = sphere_rule(d, resolution);
    let norm = 1.0 / (mu * TAU.sqrt());
    let mut acc = 0.0;
    for (rn, rw) in rs.iter().zip(&rws) {
        let r = rmax / 2.0 * (rn + 1.0);
        let jac = rmax / 2.0 * r.powi(d as i32 - 1);
        for (omega, wt) in &sphere {
            let eta = *omega * r;
            let arg = eta.dot(&(*w - eta));
            acc += rw * jac * wt * gamma(&eta) * norm * (-arg * arg / (2.0 * mu * mu)).exp();
        }
    }
    acc
}

/// Mollification ladder for the reduction identity: returns
/// `(mu, mollified, exact)` rows for a decreasing sequence of widths.
pub fn delta_reduce_ladder(
    gamma: impl Fn(&Vect) -> f64 + Copy,
    w: &Vect,
    d: usize,
    mus: &[f64],
    resolution: usize,
    rmax: f64,
) -> Vec<(f64, f64, f64)> {
    let exact = delta_reduce_exact(gamma, w, d, resolution);
    mus.iter()
        .map(|&mu| (mu, delta_reduce_mollified(gamma, w, d, mu, resolution, rmax), exact))
        .collect()
}

/// Monte Carlo estimate of the limiting creation operator acting on a
/// symmetric (j+1)-particle function `f`:
///
/// `(C_{ell,j+1} f)(X_j, V_j) = \int dv_{j+1} \int domega B(omega, w)
///     [ f(X_j, x_ell; ..., v_ell', ..., v_{j+1}') - f(X_j, x_ell; V_j, v_{j+1}) ]`
///
/// with `w = v_ell - v_{j+1}` and the primed pair from `collision_map`.
/// The newborn particle sits at the ancestor's position `x_ell`
/// (`ell` is 1-based). `f` receives the j+1 positions and velocities.
pub fn limiting_collision_c(
    cs: &CrossSection,
    f: &(impl Fn(&[Vect], &[Vect]) -> f64 + Sync),
    ell: usize,
    xs: &[Vect],
    vs: &[Vect],
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> McEstimate {
    let j = xs.len();
    assert_eq!(vs.len(), j);
    assert!(ell >= 1 && ell <= j);
    let d = cs.dim();
    let area = sphere_area(d);
    let mut pos = xs.to_vec();
    pos.push(xs[ell - 1]);
    let [est] = parallel_mc::<1, _>(seed, budget, |rng: &mut ChaCha8Rng| {
        let v_new = sample_gauss_vec(d, sigma_importance, rng);
        let omega = sample_unit_sphere(d, rng);
        let b = cs.eval(&omega, &(vs[ell - 1] - v_new));
        let (vp, v_newp) = collision_map(&vs[ell - 1], &v_new, &omega);
        let mut gain_v = vs.to_vec();
        gain_v[ell - 1] = vp;
        gain_v.push(v_newp);
        let mut loss_v = vs.to_vec();
        loss_v.push(v_new);
        let val = area * b * (f(&pos, &gain_v) - f(&pos, &loss_v))
            / gauss_pdf(d, sigma_importance, &v_new);
        [val]
    });
    est
}

/// Monte Carlo estimate of the homogeneous collision operator
///
/// `Q(f, f)(v1) = \int dv2 \int domega B(omega, v1 - v2)
///     [ f(v1') f(v2') - f(v1) f(v2) ]`
///
/// with `(v1', v2') = collision_map(v1, v2, omega)`. The partner
/// velocity is drawn from an isotropic Gaussian of width
/// `sigma_importance`, the direction uniformly on the sphere.
pub fn boltzmann_q(
    cs: &CrossSection,
    f: &(impl Fn(&Vect) -> f64 + Sync),
    v1: &Vect,
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> McEstimate {
    let d = cs.dim();
    let area = sphere_area(d);
    let v1 = *v1;
    let [est] = parallel_mc::<1, _>(seed, budget, |rng: &mut ChaCha8Rng| {
        let v2 = sample_gauss_vec(d, sigma_importance, rng);
        let omega = sample_unit_sphere(d, rng);
        let (v1p, v2p) = collision_map(&v1, &v2, &omega);
        let b = cs.eval(&omega, &(v1 - v2));
        let gain_loss = f(&v1p) * f(&v2p) - f(&v1) * f(&v2);
        [area * b * gain_loss / gauss_pdf(d, sigma_importance, &v2)]
    });
    est
}

/// Monte Carlo estimate of the weak-form moment
/// `\int dv1 Q(f, f)(v1) test(v1)`; vanishes for collision invariants
/// (1, v, |v|^2).
pub fn boltzmann_q_moment(
    cs: &CrossSection,
    f: &(impl Fn(&Vect) -> f64 + Sync),
    test: &(impl Fn(&Vect) -> f64 + Sync),
    sigma_importance: f64,
    seed: u64,
    budget: u64,
) -> McEstimate {
    let d = cs.dim();
    let area = sphere_area(d);
    let [est] = parallel_mc::<1, _>(seed, budget, |rng: &mut ChaCha8Rng| {
        let v1 = sample_gauss_vec(d, sigma_importance, rng);
        let v2 = sample_gauss_vec(d, sigma_importance, rng);
        let omega = sample_unit_sphere(d, rng);
        let (v1p, v2p) = collision_map(&v1, &v2, &omega);
        let b = cs.eval(&omega, &(v1 - v2));
        let gain_loss = f(&v1p) * f(&v2p) - f(&v1) * f(&v2);
        let density = gauss_pdf(d, sigma_importance, &v1) * gauss_pdf(d, sigma_importance, &v2);
        [area * b * gain_loss * test(&v1) / density]
    });
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::chunk_rng;
    use rand::Rng;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn cross_section_gaussian_oracle_3d() {
        // unit-amplitude, unit-width Gaussian bump, omega.w = 1:
        // B = (2 pi)^3 e^{-1} / (8 pi^2) = pi / e
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let omega = Vect::from_slice(&[0.0, 0.0, 1.0]);
        let w = Vect::from_slice(&[3.0, -1.0, 1.0]);
        let b = cs.eval(&omega, &w);
        assert!((b - PI / std::f64::consts::E).abs() < 1e-12);
        // the d = 3 prefactor is 1/(8 pi^2)
        let phi_sq = cs.potential.fourier(&omega).powi(2);
        assert!((b - phi_sq / (8.0 * PI * PI)).abs() < 1e-12);
        assert!((1.0 / (8.0 * PI * PI) - 0.012665147955292222).abs() < 1e-18);
    }

    #[test]
    fn cross_section_vanishes_on_grazing_3d() {
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let omega = Vect::from_slice(&[1.0, 0.0, 0.0]);
        let w = Vect::from_slice(&[0.0, 2.0, 0.0]);
        assert_eq!(cs.eval(&omega, &w), 0.0);
        // in d = 2 the kernel stays positive at grazing incidence
        let cs2 = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 2)).unwrap();
        let o2 = Vect::from_slice(&[1.0, 0.0]);
        let w2 = Vect::from_slice(&[0.0, 2.0]);
        assert!(cs2.eval(&o2, &w2) > 0.1);
        assert!(CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 1)).is_err());
    }

    #[test]
    fn cross_section_symmetries() {
        let cs = CrossSection::new(PotentialSpec::gaussian(0.8, 1.2, 3)).unwrap();
        let mut rng = chunk_rng(9, 0);
        for _ in 0..50 {
            let omega = sample_unit_sphere(3, &mut rng);
            let w = sample_gauss_vec(3, 1.5, &mut rng);
            let b = cs.eval(&omega, &w);
            assert!(b >= 0.0);
            assert!((b - cs.eval(&-omega, &w)).abs() < 1e-13);
            assert!((b - cs.eval(&omega, &-w)).abs() < 1e-13);
            // unchanged under the collision map's relative velocity flip
            let wp = w - omega * (2.0 * omega.dot(&w));
            assert!((b - cs.eval(&omega, &wp)).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_reduce_constant_oracle() {
        // gamma = 1, |w| = 2, d = 3: (1/2) |w| \int |cos| domega = 2 pi
        let w = Vect::from_slice(&[0.0, 0.0, 2.0]);
        let v = delta_reduce_exact(|_| 1.0, &w, 3, 64);
        // |omega.w| has a kink on the equator, so sphere quadrature
        // converges only algebraically
        assert!((v - 2.0 * PI).abs() < 2e-3);
    }

    #[test]
    fn delta_reduce_mollified_converges_to_exact() {
        let gamma = |eta: &Vect| (-eta.norm_sq() / 2.0).exp();
        let w = Vect::from_slice(&[0.4, -0.3, 1.1]);
        let rows = delta_reduce_ladder(gamma, &w, 3, &[0.4, 0.2, 0.1, 0.05], 48, 7.0);
        let mut prev_err = f64::INFINITY;
        for (mu, lhs, exact) in &rows {
            let err = (lhs - exact).abs();
            assert!(err < prev_err * 1.05, "mu={mu}: err {err} vs {prev_err}");
            prev_err = err;
        }
        let (_, lhs, exact) = rows.last().unwrap();
        // the mollifier bias is first order in mu
        assert!((lhs - exact).abs() < 5e-3 * exact.abs());
    }

    #[test]
    fn delta_reduce_mollified_converges_2d() {
        let gamma = |eta: &Vect| (-eta.norm_sq() / 2.0).exp() * (1.0 + eta.0[0] * eta.0[0]);
        let w = Vect::from_slice(&[1.0, 0.5]);
        let rows = delta_reduce_ladder(gamma, &w, 2, &[0.1, 0.05, 0.02], 64, 9.0);
        let (_, lhs, exact) = rows.last().unwrap();
        assert!((lhs - exact).abs() < 5e-3 * exact.abs());
    }

    #[test]
    fn collision_map_is_elastic_involution() {
        let mut rng = chunk_rng(13, 0);
        for _ in 0..100 {
            let v1 = sample_gauss_vec(3, 1.0, &mut rng);
            let v2 = sample_gauss_vec(3, 1.0, &mut rng);
            let omega = sample_unit_sphere(3, &mut rng);
            let (a, b) = collision_map(&v1, &v2, &omega);
            let (a2, b2) = collision_map(&a, &b, &omega);
            assert!((a2 - v1).norm() < 1e-12 && (b2 - v2).norm() < 1e-12);
            assert!(((a + b) - (v1 + v2)).norm() < 1e-12);
            assert!((a.norm_sq() + b.norm_sq() - v1.norm_sq() - v2.norm_sq()).abs() < 1e-11);
        }
    }

    #[test]
    fn maxwellian_annihilates_q_pointwise() {
        // the integrand vanishes sample by sample, so the estimate is
        // exactly zero, not just statistically small
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let maxwellian = |v: &Vect| (-v.norm_sq() / 2.0).exp();
        let v1 = Vect::from_slice(&[0.7, -0.4, 0.2]);
        let est = boltzmann_q(&cs, &maxwellian, &v1, 1.3, 5, 20_000);
        assert!(est.value.abs() < 1e-13 && est.stderr < 1e-13);
        // the same holds for any drifting Maxwellian
        let drifting = |v: &Vect| (-(*v - Vect::from_slice(&[1.0, 0.5, 0.0])).norm_sq()).exp();
        let est = boltzmann_q(&cs, &drifting, &v1, 1.3, 5, 20_000);
        assert!(est.value.abs() < 1e-13 && est.stderr < 1e-13);
    }

    #[test]
    fn q_is_nonzero_off_equilibrium() {
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        // a symmetric bimodal state loses mass at the bump centers
        let c = Vect::from_slice(&[1.5, 0.0, 0.0]);
        let bimodal =
            move |v: &Vect| (-(*v - c).norm_sq()).exp() + (-(*v + c).norm_sq()).exp();
        let est = boltzmann_q(&cs, &bimodal, &c, 1.5, 7, 400_000);
        assert!(est.value < -3.0 * est.stderr, "value {} stderr {}", est.value, est.stderr);
    }

    #[test]
    fn q_conserves_collision_invariants() {
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let c = Vect::from_slice(&[0.8, 0.0, 0.0]);
        let f = move |v: &Vect| (-(*v - c).norm_sq()).exp() + 0.5 * (-(*v + c).norm_sq() / 0.6).exp();
        for test in [
            (|_v: &Vect| 1.0) as fn(&Vect) -> f64,
            |v: &Vect| v.0[0],
            |v: &Vect| v.norm_sq(),
        ] {
            let est = boltzmann_q_moment(&cs, &f, &test, 1.4, 11, 400_000);
            assert!(
                est.value.abs() < 5.0 * est.stderr + 1e-4,
                "moment {} +- {}",
                est.value,
                est.stderr
            );
        }
        // sanity: a non-invariant moment does not vanish
        let skew = |v: &Vect| v.0[0].powi(3);
        let est = boltzmann_q_moment(&cs, &f, &skew, 1.4, 11, 400_000);
        assert!(est.value.abs() > 3.0 * est.stderr, "skew {} +- {}", est.value, est.stderr);
    }

    #[test]
    fn creation_operator_zero_cases() {
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let xs = [Vect::from_slice(&[0.2, 0.0, -0.1])];
        let vs = [Vect::from_slice(&[0.5, -0.3, 0.0])];
        // velocity-independent f: gain equals loss sample by sample
        let flat = |x: &[Vect], _v: &[Vect]| (-x[0].norm_sq()).exp();
        let est = limiting_collision_c(&cs, &flat, 1, &xs, &vs, 1.2, 3, 10_000);
        assert_eq!(est.value, 0.0);
        // identical Maxwellians in the colliding pair: conserved pointwise
        let maxw = |x: &[Vect], v: &[Vect]| {
            (-x[0].norm_sq()).exp() * (-(v[0].norm_sq() + v[1].norm_sq()) / 2.0).exp()
        };
        let est = limiting_collision_c(&cs, &maxw, 1, &xs, &vs, 1.2, 3, 10_000);
        assert!(est.value.abs() < 1e-13);
    }

    #[test]
    fn creation_operator_matches_dense_quadrature_2d() {
        // off-equilibrium pair function in d = 2, j = 1: MC against a
        // tensor rule over the partner velocity and the circle
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 2)).unwrap();
        let c = Vect::from_slice(&[1.0, 0.0]);
        let hump = move |v: &Vect| (-(*v - c).norm_sq()).exp() + (-(*v + c).norm_sq()).exp();
        let f = move |x: &[Vect], v: &[Vect]| {
            (-(x[0].norm_sq() + x[1].norm_sq()) / 2.0).exp() * hump(&v[0]) * hump(&v[1])
        };
        let xs = [Vect::from_slice(&[0.3, -0.2])];
        let vs = [Vect::from_slice(&[0.9, 0.1])];
        let est = limiting_collision_c(&cs, &f, 1, &xs, &vs, 1.6, 17, 3_000_000);

        let (gn, gw) = gauss_legendre(80);
        let lim = 7.0;
        let n_omega = 512;
        let mut dense = 0.0;
        for (ua, wa) in gn.iter().zip(&gw) {
            for (ub, wb) in gn.iter().zip(&gw) {
                let v2 = Vect::from_slice(&[lim * ua, lim * ub]);
                let w = vs[0] - v2;
                let mut ang = 0.0;
                for k in 0..n_omega {
                    let th = TAU * (k as f64 + 0.5) / n_omega as f64;
                    let omega = Vect::from_slice(&[th.cos(), th.sin()]);
                    let (vp, v2p) = collision_map(&vs[0], &v2, &omega);
                    let gain = f(&[xs[0], xs[0]], &[vp, v2p]);
                    let loss = f(&[xs[0], xs[0]], &[vs[0], v2]);
                    ang += cs.eval(&omega, &w) * (gain - loss);
                }
                dense += wa * wb * lim * lim * ang * TAU / n_omega as f64;
            }
        }
        assert!(
            (est.value - dense).abs() < (3.0 * est.stderr).max(0.01 * dense.abs()),
            "mc {} +- {} vs dense {}",
            est.value,
            est.stderr,
            dense
        );
    }

    #[test]
    fn total_cross_section_positive_and_even() {
        let cs = CrossSection::new(PotentialSpec::gaussian(1.0, 1.0, 3)).unwrap();
        let w = Vect::from_slice(&[0.0, 1.0, 1.0]);
        let t = cs.total(&w, 32);
        assert!(t > 0.0);
        assert!((t - cs.total(&-w, 32)).abs() < 1e-10);
        let mut rng = chunk_rng(21, 0);
        // rotation invariance: depends on |w| only
        let r = sample_unit_sphere(3, &mut rng) * w.norm();
        // quadrature error of the kinked integrand dominates
        assert!((t - cs.total(&r, 48)).abs() < 5e-3 * t);
        let _ = rng.gen::<f64>();
    }
}
