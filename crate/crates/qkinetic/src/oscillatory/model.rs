//! The model oscillatory integral isolating the time-oscillation
//! mechanism of the recollision terms:
//!
//! `A_eps = \int dx dxi dy deta \int_0^{1/eps} ds
//!     exp(i xi.x - i s eta.y) chi(x, y, xi, eta)`
//!
//! for a separable Gaussian profile `chi`. Passing to the Fourier side
//! in `x` and `y` removes every oscillation: the `(x, xi)` pair
//! contributes a constant and the `(y, eta)` pair a closed-form
//! s-profile decaying like `s^{-d}`, so `A_eps` reduces to a smooth
//! one-dimensional integral and converges as eps -> 0 whenever the
//! model dimension is at least 2.

use crate::quad::adaptive_simpson;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Separable Gaussian profile
/// `chi(x,y,xi,eta) = amp g1(x) g2(y) g3(xi) g4(eta)` with
/// `g_i(u) = exp(-|u|^2 / (2 w_i^2))`, all factors centered, on blocks
/// of dimension `dim`.
#[derive(Clone, Copy, Debug)]
pub struct ModelChi {
    pub amp: f64,
    pub widths: [f64; 4],
    pub dim: usize,
}

impl ModelChi {
    pub fn standard(dim: usize) -> Self {
        ModelChi { amp: 1.0, widths: [1.0; 4], dim }
    }

    fn d(&self) -> f64 {
        self.dim as f64
    }

    /// `\int dx dxi g1(x) g3(xi) e^{i xi.x}`, constant in s:
    /// the x-integral gives the transform `g1^(xi)`, a Gaussian, and the
    /// remaining xi-integral is elementary.
    pub fn xi_constant(&self) -> f64 {
        let [w1, _, w3, _] = self.widths;
        let g1_hat = TAU.powf(self.d() / 2.0) * w1.powf(self.d());
        // \int g1^(xi) g3(xi) dxi
        g1_hat * (TAU / (w1 * w1 + 1.0 / (w3 * w3))).powf(self.d() / 2.0)
    }

    /// The Fourier-side s-profile
    /// `G(s) = \int deta g2^(s eta) g4(eta)`, decaying like `s^{-d}`.
    pub fn s_profile(&self, s: f64) -> f64 {
        let [_, w2, _, w4] = self.widths;
        let g2_hat = TAU.powf(self.d() / 2.0) * w2.powf(self.d());
        g2_hat * (TAU / (w2 * w2 * s * s + 1.0 / (w4 * w4))).powf(self.d() / 2.0)
    }

    /// `G(1/u) / u^2` in a form stable down to `u = 0`:
    /// `g2^ (2 pi)^{d/2} u^{d-2} (w2^2 + u^2 / w4^2)^{-d/2}`.
    fn s_tail_integrand(&self, u: f64) -> f64 {
        let [_, w2, _, w4] = self.widths;
        let g2_hat = TAU.powf(self.d() / 2.0) * w2.powf(self.d());
        g2_hat * TAU.powf(self.d() / 2.0) * u.powf(self.d() - 2.0)
            / (w2 * w2 + u * u / (w4 * w4)).powf(self.d() / 2.0)
    }

    fn g_sup() -> f64 {
        1.0
    }

    fn g_l1(&self, w: f64) -> f64 {
        (TAU * w * w).powf(self.d() / 2.0)
    }

    fn ghat_sup(&self, w: f64) -> f64 {
        TAU.powf(self.d() / 2.0) * w.powf(self.d())
    }

    fn ghat_l1(&self) -> f64 {
        // g^(k) = (2 pi)^{d/2} w^d exp(-w^2 k^2 / 2), so its L1 norm is
        // (2 pi)^d independently of the width
        TAU.powf(self.d())
    }
}

/// `A_eps` via the Fourier-side representation: no oscillatory
/// quadrature, just the s-integral of the closed-form profile.
pub fn model_a_eps(chi: &ModelChi, eps: f64) -> f64 {
    chi.amp * chi.xi_constant() * integrate_s(chi, 1.0 / eps)
}

/// The eps -> 0 limit of `model_a_eps`; finite only for `dim >= 2`.
pub fn model_a_limit(chi: &ModelChi) -> f64 {
    assert!(chi.dim >= 2, "the s-integral diverges logarithmically in dimension 1");
    chi.amp * chi.xi_constant() * integrate_s(chi, f64::INFINITY)
}

fn integrate_s(chi: &ModelChi, upper: f64) -> f64 {
    // split at s = 1; the tail maps to a bounded integrand under
    // s = 1/u, since G(s) ~ s^{-d}
    let head_end = upper.min(1.0);
    let head = adaptive_simpson(&|s: f64| chi.s_profile(s), 0.0, head_end, 1e-12);
    if upper <= 1.0 {
        return head;
    }
    let u_lo = if upper.is_finite() { 1.0 / upper } else { 0.0 };
    let tail = adaptive_simpson(&|u: f64| chi.s_tail_integrand(u), u_lo, 1.0, 1e-12);
    head + tail
}

/// The mixed-norm bound on `|A_eps|`, uniform in eps: splitting the
/// s-range at 1 and using the two Fourier-side representations,
///
/// `|A_eps| <= ||g3||_1 ||g4||_1 ||g1^||_inf ||g2^||_inf
///     + ||g1^||_1 ||g2^||_1 ||g3||_inf ||g4||_inf / (d - 1)`.
pub fn model_bound(chi: &ModelChi) -> f64 {
    assert!(chi.dim >= 2);
    let [w1, w2, w3, w4] = chi.widths;
    let norm1 = chi.g_l1(w3) * chi.g_l1(w4) * chi.ghat_sup(w1) * chi.ghat_sup(w2);
    let norm2 = chi.ghat_l1() * chi.ghat_l1() * ModelChi::g_sup() * ModelChi::g_sup();
    chi.amp.abs() * (norm1 + norm2 / (chi.d() - 1.0))
}

/// Samples `|C_xi G(s)| (1+s)^d` on an s-ladder; bounded iff the
/// s-integrand decays at least like `s^{-d}`.
pub fn s_decay_report(chi: &ModelChi, ss: &[f64]) -> Vec<(f64, f64)> {
    ss.iter()
        .map(|&s| (s, (chi.amp * chi.xi_constant() * chi.s_profile(s)).abs() * (1.0 + s).powf(chi.d())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    #[test]
    fn zero_profile_gives_zero() {
        let mut chi = ModelChi::standard(2);
        chi.amp = 0.0;
        assert_eq!(model_a_eps(&chi, 0.1), 0.0);
        assert_eq!(model_a_limit(&chi), 0.0);
    }

    #[test]
    fn xi_constant_matches_direct_double_quadrature() {
        // oracle: the oscillatory (x, xi) double integral at d = 1,
        // computed directly with a fine tensor rule
        let chi = ModelChi { amp: 1.0, widths: [1.0, 1.0, 0.8, 1.0], dim: 1 };
        let (xs, ws) = gauss_legendre(400);
        let half = 10.0;
        let mut re = 0.0;
        for (x, wx) in xs.iter().zip(&ws) {
            let xv = half * x;
            for (xi, wxi) in xs.iter().zip(&ws) {
                let xiv = half * xi;
                re += wx * wxi
                    * half
                    * half
                    * (-xv * xv / 2.0 - xiv * xiv / (2.0 * 0.8 * 0.8)).exp()
                    * (xiv * xv).cos();
            }
        }
        assert!((re - chi.xi_constant()).abs() < 1e-8 * re.abs(), "{re} vs {}", chi.xi_constant());
    }

    #[test]
    fn s_profile_matches_direct_eta_quadrature() {
        let chi = ModelChi { amp: 1.0, widths: [1.0, 1.2, 1.0, 0.7], dim: 1 };
        for &s in &[0.0, 0.5, 2.0, 10.0] {
            // G(s) = \int deta g2^(s eta) g4(eta) at d = 1
            let direct = crate::quad::adaptive_simpson(
                &|eta: f64| {
                    let g2hat = TAU.sqrt() * 1.2 * (-(1.2f64 * 1.2 * s * s * eta * eta) / 2.0).exp();
                    g2hat * (-eta * eta / (2.0 * 0.7 * 0.7)).exp()
                },
                -30.0,
                30.0,
                1e-12,
            );
            assert!((direct - chi.s_profile(s)).abs() < 1e-9 * direct.abs());
        }
    }

    #[test]
    fn a_eps_converges_to_limit() {
        for dim in [2, 3] {
            let chi = ModelChi::standard(dim);
            let limit = model_a_limit(&chi);
            let mut prev_gap = f64::INFINITY;
            for &eps in &[1e-1, 1e-2, 1e-3, 1e-4] {
                let gap = (model_a_eps(&chi, eps) - limit).abs();
                assert!(gap < prev_gap, "dim={dim} eps={eps}");
                prev_gap = gap;
            }
            assert!(prev_gap < 0.01 * limit.abs(), "dim={dim} gap={prev_gap}");
        }
    }

    #[test]
    fn bound_dominates_on_width_suite() {
        for dim in [2, 3] {
            for widths in [[1.0; 4], [0.5, 1.0, 2.0, 1.0], [1.5, 0.7, 1.0, 1.3]] {
                let chi = ModelChi { amp: 1.0, widths, dim };
                let bound = model_bound(&chi);
                for &eps in &[1e-1, 1e-2, 1e-3] {
                    let a = model_a_eps(&chi, eps).abs();
                    assert!(a <= bound, "dim={dim} widths={widths:?} eps={eps}: {a} > {bound}");
                }
            }
        }
    }

    #[test]
    fn s_integrand_decays_like_minus_d() {
        for dim in [2, 3] {
            let chi = ModelChi::standard(dim);
            let rows = s_decay_report(&chi, &[1.0, 2.0, 4.0, 8.0, 16.0, 64.0]);
            let cap = rows.iter().map(|&(_, v)| v).fold(0.0, f64::max);
            for (s, v) in rows {
                assert!(v <= cap * 1.0001 && v.is_finite(), "s={s}");
            }
            // and the exponent is sharp: multiplying by an extra (1+s)
            // makes the sampled quantity grow
            let grown: Vec<f64> = [4.0, 16.0, 64.0]
                .iter()
                .map(|&s| chi.s_profile(s).abs() * (1.0 + s).powf(chi.d() + 1.0))
                .collect();
            assert!(grown[2] > grown[0]);
        }
    }

    #[test]
    fn dimension_one_s_integral_diverges_logarithmically() {
        // the model explains why the limit needs d >= 2: the s-profile
        // decays only like 1/s in dimension 1
        let chi = ModelChi::standard(1);
        let a1 = model_a_eps(&chi, 1e-2);
        let a2 = model_a_eps(&chi, 1e-4);
        let a3 = model_a_eps(&chi, 1e-6);
        // equal increments per decade pair: log growth
        let d1 = a2 - a1;
        let d2 = a3 - a2;
        assert!(d1 > 0.1 && (d1 - d2).abs() < 0.02 * d1, "{d1} vs {d2}");
    }
}
