//! Exact integration of block-Gaussian integrands with complex
//! quadratic forms.
//!
//! The integrands handled here are `exp(-z^T M z / 2 + b.z + c)` where
//! `z` consists of `nb` blocks of dimension `d`, `M` is a complex
//! symmetric `nb x nb` matrix acting as a scalar on each block (so the
//! full matrix is `M (x) I_d`), `b` is one complex d-vector per block
//! and `c` a complex constant. As long as `Re M` is positive definite,
//!
//! `\int dz exp(...) = (2 pi)^{nb d / 2} det(M)^{-d/2}
//!     exp( (1/2) sum_axes b_ax^T M^{-1} b_ax + c )`,
//!
//! with the branch of `det^{-1/2}` fixed by sequential symmetric
//! elimination: every Schur pivot has positive real part, so taking
//! principal square roots pivot by pivot is continuous in the data.

use num_complex::Complex64;
use thiserror::Error;

use crate::vec::{Vect, MAX_DIM};

#[derive(Debug, Error)]
pub enum GaussError {
    #[error("quadratic form is not damped: pivot {index} has real part {re}")]
    NotDamped { index: usize, re: f64 },
}

/// Accumulator for a product of Gaussian magnitude factors and
/// oscillatory phase factors, all at most quadratic in the block
/// variables.
#[derive(Clone, Debug)]
pub struct GaussianIntegrand {
    pub nb: usize,
    pub dim: usize,
    /// Row-major nb x nb complex symmetric quadratic form.
    m: Vec<Complex64>,
    /// One complex d-vector of linear coefficients per block.
    b: Vec<[Complex64; MAX_DIM]>,
    c: Complex64,
    /// Multiplicative scalar prefactor collected along the way.
    pub prefactor: Complex64,
}

impl GaussianIntegrand {
    pub fn new(nb: usize, dim: usize) -> Self {
        GaussianIntegrand {
            nb,
            dim,
            m: vec![Complex64::new(0.0, 0.0); nb * nb],
            b: vec![[Complex64::new(0.0, 0.0); MAX_DIM]; nb],
            c: Complex64::new(0.0, 0.0),
            prefactor: Complex64::new(1.0, 0.0),
        }
    }

    /// Multiplies in the factor `exp(-a |e(z)|^2)` with the affine
    /// d-vector expression `e(z) = sum_s alpha[s] z_s + e0`.
    pub fn mul_gaussian_sq(&mut self, a: f64, alpha: &[f64], e0: &Vect) {
        assert_eq!(alpha.len(), self.nb);
        let two_a = Complex64::new(2.0 * a, 0.0);
        for r in 0..self.nb {
            if alpha[r] == 0.0 {
                continue;
            }
            for t in 0..self.nb {
                self.m[r * self.nb + t] += two_a * alpha[r] * alpha[t];
            }
            for ax in 0..self.dim {
                self.b[r][ax] -= two_a * alpha[r] * e0.0[ax];
            }
        }
        self.c -= a * e0.norm_sq();
    }

    /// Multiplies in the phase `exp(i cc A(z).B(z))` for two affine
    /// d-vector expressions `A = sum alpha[s] z_s + a0`,
    /// `B = sum beta[s] z_s + b0`.
    pub fn mul_phase_bilinear(
        &mut self,
        cc: f64,
        alpha: &[f64],
        a0: &Vect,
        beta: &[f64],
        b0: &Vect,
    ) {
        assert_eq!(alpha.len(), self.nb);
        assert_eq!(beta.len(), self.nb);
        let ic = Complex64::new(0.0, cc);
        for r in 0..self.nb {
            for t in 0..self.nb {
                // -z^T M z / 2 convention: phase contributes
                // i cc (alpha_r beta_t) z_r z_t, symmetrized
                let coef = alpha[r] * beta[t] + alpha[t] * beta[r];
                if coef != 0.0 {
                    self.m[r * self.nb + t] -= ic * coef;
                }
            }
            for ax in 0..self.dim {
                self.b[r][ax] += ic * (alpha[r] * b0.0[ax] + beta[r] * a0.0[ax]);
            }
        }
        self.c += ic * a0.dot(b0);
    }

    /// Multiplies in the linear phase `exp(i q . e(z))` for the affine
    /// expression `e(z) = sum alpha[s] z_s + e0`.
    pub fn mul_phase_linear(&mut self, alpha: &[f64], e0: &Vect, q: &Vect) {
        assert_eq!(alpha.len(), self.nb);
        let i = Complex64::new(0.0, 1.0);
        for r in 0..self.nb {
            if alpha[r] != 0.0 {
                for ax in 0..self.dim {
                    self.b[r][ax] += i * alpha[r] * q.0[ax];
                }
            }
        }
        self.c += i * q.dot(e0);
    }

    pub fn mul_scalar(&mut self, s: Complex64) {
        self.prefactor *= s;
    }

    /// Evaluates the exponent `-z^T M z/2 + b.z + c` at a concrete
    /// point (one `Vect` per block). Used by quadrature cross-checks.
    pub fn exponent_at(&self, z: &[Vect]) -> Complex64 {
        assert_eq!(z.len(), self.nb);
        let mut e = self.c;
        for r in 0..self.nb {
            for ax in 0..self.dim {
                e += self.b[r][ax] * z[r].0[ax];
            }
            for t in 0..self.nb {
                e -= 0.5 * self.m[r * self.nb + t] * z[r].dot(&z[t]);
            }
        }
        e
    }

    /// The exact integral over all blocks, including the prefactor.
    pub fn integrate(&self) -> Result<Complex64, GaussError> {
        let nb = self.nb;
        if nb == 0 {
            return Ok(self.prefactor * self.c.exp());
        }
        // absolute convergence needs Re M positive definite; phases only
        // touch the imaginary part, so this is exactly a damping check
        let mut re = vec![0.0; nb * nb];
        for i in 0..nb * nb {
            re[i] = self.m[i].re;
        }
        for k in 0..nb {
            let p = re[k * nb + k];
            if p <= 1e-14 {
                return Err(GaussError::NotDamped { index: k, re: p });
            }
            for r in k + 1..nb {
                let f = re[r * nb + k] / p;
                for t in k..nb {
                    re[r * nb + t] -= f * re[k * nb + t];
                }
            }
        }
        let mut m = self.m.clone();
        // symmetric elimination: accumulate prod pivot^{-1/2} with
        // principal roots; valid because Re(pivot) > 0 at every step
        // when Re M is positive definite
        let mut det_inv_sqrt = Complex64::new(1.0, 0.0);
        let mut work = m.clone();
        for k in 0..nb {
            let p = work[k * nb + k];
            if p.re <= 0.0 {
                return Err(GaussError::NotDamped { index: k, re: p.re });
            }
            det_inv_sqrt *= (1.0 / p).sqrt();
            for r in k + 1..nb {
                let f = work[r * nb + k] / p;
                for t in k..nb {
                    work[r * nb + t] = work[r * nb + t] - f * work[k * nb + t];
                }
            }
        }

        // solve M x = b per axis by Gaussian elimination with partial
        // pivoting (the same M for every axis)
        let mut quad = Complex64::new(0.0, 0.0);
        let mut rhs: Vec<[Complex64; MAX_DIM]> = self.b.clone();
        for k in 0..nb {
            let piv = (k..nb)
                .max_by(|&i, &j| m[i * nb + k].norm().total_cmp(&m[j * nb + k].norm()))
                .unwrap();
            if piv != k {
                for t in 0..nb {
                    m.swap(k * nb + t, piv * nb + t);
                }
                rhs.swap(k, piv);
            }
            let p = m[k * nb + k];
            for r in k + 1..nb {
                let f = m[r * nb + k] / p;
                for t in k..nb {
                    m[r * nb + t] = m[r * nb + t] - f * m[k * nb + t];
                }
                for ax in 0..self.dim {
                    rhs[r][ax] = rhs[r][ax] - f * rhs[k][ax];
                }
            }
        }
        let mut x: Vec<[Complex64; MAX_DIM]> = vec![[Complex64::new(0.0, 0.0); MAX_DIM]; nb];
        for k in (0..nb).rev() {
            for ax in 0..self.dim {
                let mut acc = rhs[k][ax];
                for t in k + 1..nb {
                    acc -= m[k * nb + t] * x[t][ax];
                }
                x[k][ax] = acc / m[k * nb + k];
            }
        }
        for r in 0..nb {
            for ax in 0..self.dim {
                quad += self.b[r][ax] * x[r][ax];
            }
        }

        let tau = 2.0 * std::f64::consts::PI;
        let scale = tau.powf(nb as f64 * self.dim as f64 / 2.0);
        Ok(self.prefactor * scale * det_inv_sqrt.powi(self.dim as i32) * (0.5 * quad + self.c).exp())
    }
}
