//! Fourier conventions, test potentials, initial data families and the
//! norms N1, N2 entering the series bounds.
//!
//! The transform convention is fixed once and for all:
//! `f^(h) = \int f(x) e^{-i h.x} dx`, with every 2-pi factor living in the
//! inverse transform `f(x) = (2pi)^{-d} \int f^(h) e^{i h.x} dh`.
//! Potentials and data are finite Gaussian mixtures so that every
//! transform and norm has a closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec::Vect;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },
    #[error("quadrature cross-check failed for {what}: closed form {closed}, quadrature {quad}, tolerance {tol}")]
    QuadratureMismatch {
        what: &'static str,
        closed: f64,
        quad: f64,
        tol: f64,
    },
}

/// One radial Gaussian bump of an interaction potential:
/// `phi(x) = amplitude * exp(-|x|^2 / (2 width^2))`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PotentialComponent {
    pub amplitude: f64,
    pub width: f64,
}

/// A radial interaction potential with closed-form transform.
///
/// `phi^` is real, radial, bounded and absolutely integrable, as required
/// for the cross section and the series bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub components: Vec<PotentialComponent>,
    pub dim: usize,
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, width: f64, dim: usize) -> Self {
        assert!(width > 0.0 && (1..=3).contains(&dim));
        PotentialSpec {
            components: vec![PotentialComponent { amplitude, width }],
            dim,
        }
    }

    pub fn zero(dim: usize) -> Self {
        PotentialSpec {
            components: vec![],
            dim,
        }
    }

    /// `phi(x)` in physical space.
    pub fn eval(&self, x: &Vect) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (-x.norm_sq() / (2.0 * c.width * c.width)).exp())
            .sum()
    }

    /// `phi^(h)` under the convention above:
    /// each Gaussian bump transforms to
    /// `A (2 pi)^{d/2} w^d exp(-w^2 |h|^2 / 2)`.
    pub fn fourier(&self, h: &Vect) -> f64 {
        let d = self.dim as f64;
        self.components
            .iter()
            .map(|c| {
                c.amplitude
                    * TAU.powf(d / 2.0)
                    * c.width.powf(d)
                    * (-c.width * c.width * h.norm_sq() / 2.0).exp()
            })
            .sum()
    }

    /// `phi^` value at a scalar radius (radial symmetry).
    pub fn fourier_radial(&self, r: f64) -> f64 {
        self.fourier(&Vect::from_slice(&[r]))
    }

    /// `\int |phi^(h)| dh`, closed form for nonnegative amplitudes.
    pub fn fourier_l1(&self) -> f64 {
        let d = self.dim as f64;
        self.components
            .iter()
            .map(|c| c.amplitude.abs() * TAU.powf(d))
            .sum()
    }

    /// `sup_h |phi^(h)|` (attained at h = 0 for nonnegative amplitudes).
    pub fn fourier_sup(&self) -> f64 {
        self.fourier(&Vect::zero()).abs()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.amplitude == 0.0)
    }
}

/// One Gaussian product component of a one-particle Wigner datum:
/// `weight * G_{xw}(x - x0) * G_{vw}(v - v0)` with normalized factors
/// `G_w(z) = (2 pi w^2)^{-d/2} exp(-|z|^2/(2 w^2))`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DatumComponent {
    pub weight: f64,
    pub x_center: Vect,
    pub v_center: Vect,
    pub x_width: f64,
    pub v_width: f64,
}

/// A one-particle Wigner datum `f0(x, v)`: a finite mixture of Gaussian
/// products in position and velocity, normalized to a probability
/// density when the weights sum to one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialDatum {
    pub components: Vec<DatumComponent>,
    pub dim: usize,
}

impl InitialDatum {
    pub fn new(components: Vec<DatumComponent>, dim: usize) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::Invalid {
                what: "dimension",
                why: format!("{dim} not in 1..=3"),
            });
        }
        for c in &components {
            if c.weight < 0.0 || c.x_width <= 0.0 || c.v_width <= 0.0 {
                return Err(SpectralError::Invalid {
                    what: "datum component",
                    why: format!("{c:?}"),
                });
            }
        }
        Ok(InitialDatum { components, dim })
    }

    /// Centered unit-width Gaussian datum (the canonical test datum).
    pub fn standard(dim: usize) -> Self {
        InitialDatum {
            components: vec![DatumComponent {
                weight: 1.0,
                x_center: Vect::zero(),
                v_center: Vect::zero(),
                x_width: 1.0,
                v_width: 1.0,
            }],
            dim,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Pointwise value `f0(x, v) >= 0`.
    pub fn eval(&self, x: &Vect, v: &Vect) -> f64 {
        let d = self.dim as f64;
        self.components
            .iter()
            .map(|c| {
                let gx = (TAU * c.x_width * c.x_width).powf(-d / 2.0)
                    * (-(*x - c.x_center).norm_sq() / (2.0 * c.x_width * c.x_width)).exp();
                let gv = (TAU * c.v_width * c.v_width).powf(-d / 2.0)
                    * (-(*v - c.v_center).norm_sq() / (2.0 * c.v_width * c.v_width)).exp();
                c.weight * gx * gv
            })
            .sum()
    }

    /// Velocity marginal `\int f0(x, v) dx`, used by the spatially
    /// homogeneous oracles.
    pub fn velocity_density(&self, v: &Vect) -> f64 {
        let d = self.dim as f64;
        self.components
            .iter()
            .map(|c| {
                let gv = (TAU * c.v_width * c.v_width).powf(-d / 2.0)
                    * (-(*v - c.v_center).norm_sq() / (2.0 * c.v_width * c.v_width)).exp();
                c.weight * gv
            })
            .sum()
    }

    /// `f0^(xi, k)`: transform in both arguments. Equals 1 at the origin
    /// for a probability datum; a shift of the position center produces
    /// the phase `e^{-i xi.x0}`.
    pub fn fourier(&self, xi: &Vect, k: &Vect) -> Complex64 {
        self.components
            .iter()
            .map(|c| {
                let phase = -(xi.dot(&c.x_center) + k.dot(&c.v_center));
                let decay = (-(c.x_width * c.x_width * xi.norm_sq()
                    + c.v_width * c.v_width * k.norm_sq())
                    / 2.0)
                    .exp();
                c.weight * decay * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// The norms `N1 = ||f0^||_{L1}` and `N2 = \int dxi sup_k |f0^(xi,k)|`.
    ///
    /// Closed form per component; for a mixture this sums component norms,
    /// which is exact whenever the components share centers and is the
    /// triangle-inequality envelope otherwise.
    pub fn norms(&self) -> (f64, f64) {
        let d = self.dim as f64;
        let mut n1 = 0.0;
        let mut n2 = 0.0;
        for c in &self.components {
            n1 += c.weight * TAU.powf(d) / (c.x_width * c.v_width).powf(d);
            n2 += c.weight * TAU.powf(d / 2.0) / c.x_width.powf(d);
        }
        (n1, n2)
    }

    /// `norms` with a quadrature cross-check of the closed form
    /// (single-component data; the integrands are separable).
    pub fn norms_checked(&self, tol: f64) -> Result<(f64, f64), SpectralError> {
        let (n1, n2) = self.norms();
        if self.components.len() == 1 {
            let c = &self.components[0];
            let d = self.dim as i32;
            let line = |w: f64| {
                crate::quad::integrate_gl(
                    move |u: f64| (-w * w * u * u / 2.0).exp(),
                    -12.0 / w,
                    12.0 / w,
                    96,
                )
            };
            let q1 = c.weight * line(c.x_width).powi(d) * line(c.v_width).powi(d);
            let q2 = c.weight * line(c.x_width).powi(d);
            for (what, closed, quad) in [("N1", n1, q1), ("N2", n2, q2)] {
                if (closed - quad).abs() > tol * closed.abs().max(1e-300) {
                    return Err(SpectralError::QuadratureMismatch {
                        what,
                        closed,
                        quad,
                        tol,
                    });
                }
            }
        }
        Ok((n1, n2))
    }

    /// Transform of the factorized n-particle datum: the product of
    /// `fourier` over the n blocks.
    pub fn factorized_fourier(&self, xis: &[Vect], ks: &[Vect]) -> Complex64 {
        assert!(!xis.is_empty() && xis.len() == ks.len());
        xis.iter()
            .zip(ks)
            .map(|(xi, k)| self.fourier(xi, k))
            .product()
    }

    /// Datum scaled by `alpha` (norms scale linearly; no longer a
    /// probability density unless alpha = 1).
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.weight *= alpha;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive_simpson, integrate_gl};

    const PI: f64 = std::f64::consts::PI;

    // ---- quadrature oracles for the frozen expected values ----

    /// d-dimensional integral of the radial function r -> g(r).
    fn radial_integral(g: impl Fn(f64) -> f64 + Copy, d: usize, rmax: f64) -> f64 {
        match d {
            1 => adaptive_simpson(&|r: f64| g(r.abs()), -rmax, rmax, 1e-12),
            2 => 2.0 * PI * adaptive_simpson(&|r: f64| r * g(r), 0.0, rmax, 1e-12),
            3 => 4.0 * PI * adaptive_simpson(&|r: f64| r * r * g(r), 0.0, rmax, 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn potential_fourier_at_zero_matches_volume_quadrature() {
        // oracle: phi^(0) = \int phi dx, computed by radial quadrature
        let p = PotentialSpec::gaussian(1.0, 1.0, 3);
        let oracle = radial_integral(|r| (-r * r / 2.0).exp(), 3, 14.0);
        assert!((oracle - 15.749609945722419).abs() < 1e-9); // (2 pi)^{3/2}
        assert!((p.fourier(&Vect::zero()) - oracle).abs() < 1e-9);
    }

    #[test]
    fn potential_fourier_1d_oracle() {
        // oracle: \int e^{-x^2/2} e^{-i x} dx = sqrt(2 pi) e^{-1/2}, real part only
        let p = PotentialSpec::gaussian(1.0, 1.0, 1);
        let oracle =
            adaptive_simpson(&|x: f64| (-x * x / 2.0).exp() * x.cos(), -14.0, 14.0, 1e-12);
        assert!((oracle - 1.5203469010662808).abs() < 1e-10);
        assert!((p.fourier(&Vect::from_slice(&[1.0])) - oracle).abs() < 1e-10);
    }

    #[test]
    fn potential_fourier_is_radial() {
        let p = PotentialSpec::gaussian(0.7, 1.3, 3);
        let h = Vect::from_slice(&[0.3, -1.1, 0.5]);
        assert_eq!(p.fourier(&h), p.fourier(&-h));
        assert!((p.fourier(&h) - p.fourier_radial(h.norm())).abs() < 1e-13);
    }

    #[test]
    fn fourier_inversion_recovers_potential() {
        // inverse convention carries the (2 pi)^{-d}; sample grid, d = 1
        let p = PotentialSpec::gaussian(2.0, 0.8, 1);
        for &x in &[0.0, 0.3, 1.0, 2.5] {
            let inv = adaptive_simpson(
                &|h: f64| p.fourier(&Vect::from_slice(&[h])) * (h * x).cos(),
                -30.0,
                30.0,
                1e-12,
            ) / (2.0 * PI);
            assert!((inv - p.eval(&Vect::from_slice(&[x]))).abs() < 1e-9);
        }
    }

    #[test]
    fn datum_eval_center_and_far_field() {
        let f = InitialDatum::standard(2);
        let tau = 2.0 * PI;
        assert!((f.eval(&Vect::zero(), &Vect::zero()) - tau.powi(-2)).abs() < 1e-15);
        let far = Vect::from_slice(&[40.0, 0.0]);
        assert!(f.eval(&far, &Vect::zero()) < 1e-200);
        // mixture linearity: two equal half-weight copies = original
        let mut half = f.components[0];
        half.weight = 0.5;
        let mix = InitialDatum::new(vec![half, half], 2).unwrap();
        let (x, v) = (Vect::from_slice(&[0.4, -0.2]), Vect::from_slice(&[1.0, 0.3]));
        assert!((mix.eval(&x, &v) - f.eval(&x, &v)).abs() < 1e-16);
    }

    #[test]
    fn datum_fourier_normalization_and_gaussian_form() {
        let f = InitialDatum::standard(3);
        let one = f.fourier(&Vect::zero(), &Vect::zero());
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // oracle: 1-D quadrature of the centered Gaussian transform
        let xi = Vect::from_slice(&[0.7, -0.2, 0.4]);
        let k = Vect::from_slice(&[0.1, 0.5, -1.2]);
        let expected = (-(xi.norm_sq() + k.norm_sq()) / 2.0).exp();
        let got = f.fourier(&xi, &k);
        assert!((got.re - expected).abs() < 1e-15 && got.im.abs() < 1e-15);
        let quad_1d = adaptive_simpson(
            &|x: f64| (2.0 * PI).powf(-0.5) * (-x * x / 2.0).exp() * (0.7 * x).cos(),
            -14.0,
            14.0,
            1e-13,
        );
        assert!((quad_1d - (-0.49f64 / 2.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn datum_fourier_shift_theorem() {
        let mut comp = InitialDatum::standard(2).components[0];
        comp.x_center = Vect::from_slice(&[1.5, -0.5]);
        let shifted = InitialDatum::new(vec![comp], 2).unwrap();
        let centered = InitialDatum::standard(2);
        let xi = Vect::from_slice(&[0.4, 0.9]);
        let k = Vect::from_slice(&[-0.3, 0.2]);
        let phase = Complex64::from_polar(1.0, -xi.dot(&comp.x_center));
        let lhs = shifted.fourier(&xi, &k);
        let rhs = centered.fourier(&xi, &k) * phase;
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn norms_closed_form_and_quadrature() {
        let f3 = InitialDatum::standard(3);
        let (n1, _) = f3.norms_checked(1e-9).unwrap();
        // oracle: quadrature of \int\int e^{-(|xi|^2+|k|^2)/2}
        let line = integrate_gl(|u: f64| (-u * u / 2.0).exp(), -12.0, 12.0, 96);
        assert!((n1 - line.powi(6)).abs() < 1e-6);
        assert!((n1 - 248.05021344239853).abs() < 1e-9); // (2 pi)^3

        let f1 = InitialDatum::standard(1);
        let (_, n2) = f1.norms_checked(1e-9).unwrap();
        assert!((n2 - (2.0 * PI).sqrt()).abs() < 1e-12);
        // sup over k of |f0^(xi, k)| sits at k = 0 for the centered datum
        let xi = Vect::from_slice(&[0.8]);
        for &k in &[-1.0, -0.1, 0.1, 2.0] {
            assert!(
                f1.fourier(&xi, &Vect::from_slice(&[k])).norm()
                    <= f1.fourier(&xi, &Vect::zero()).norm() + 1e-15
            );
        }
    }

    #[test]
    fn norms_scale_linearly() {
        let f = InitialDatum::standard(2);
        let (n1, n2) = f.norms();
        let (m1, m2) = f.scaled(2.5).norms();
        assert!((m1 - 2.5 * n1).abs() < 1e-12 && (m2 - 2.5 * n2).abs() < 1e-12);
    }

    #[test]
    fn n2_integrand_dominates_fourier_slice() {
        // \int |f0^(xi, 0)| dxi <= N1 and matches the N2 integrand pointwise
        let f = InitialDatum::standard(1);
        let (n1, _) = f.norms();
        let slice = adaptive_simpson(
            &|xi: f64| f.fourier(&Vect::from_slice(&[xi]), &Vect::zero()).norm(),
            -14.0,
            14.0,
            1e-12,
        );
        assert!(slice <= n1 + 1e-9);
    }

    #[test]
    fn factorized_fourier_properties() {
        let f = InitialDatum::standard(3);
        let xi = Vect::from_slice(&[0.3, 0.1, -0.4]);
        let k = Vect::from_slice(&[1.0, 0.0, 0.2]);
        let z = Vect::zero();
        // base case n = 1
        assert_eq!(f.factorized_fourier(&[xi], &[k]), f.fourier(&xi, &k));
        // all blocks at zero -> 1
        let v = f.factorized_fourier(&[z, z, z], &[z, z, z]);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // n = 2 with one trivial block reduces to the other
        let w = f.factorized_fourier(&[xi, z], &[k, z]);
        assert!((w - f.fourier(&xi, &k)).norm() < 1e-15);
        // multiplicative under concatenation
        let a = f.factorized_fourier(&[xi], &[k]);
        let b = f.factorized_fourier(&[k], &[xi]);
        let ab = f.factorized_fourier(&[xi, k], &[k, xi]);
        assert!((ab - a * b).norm() < 1e-15);
    }
}
