//! Symbolic assembly of operator-chain integrands.
//!
//! The low-order expansion terms are alternating products of free
//! flights, pair interactions and particle creations applied to a
//! factorized Gaussian datum. Every such product is a block-Gaussian
//! integral: particle positions and velocities stay affine in the
//! integration variables (momenta, injected states, weakly tested root
//! states), interactions contribute bilinear phases, and the datum and
//! the transformed potential contribute Gaussian damping. A `Chain`
//! tracks the affine states while operators are applied from the final
//! observation time downward, then emits the assembled
//! `GaussianIntegrand`.

use num_complex::Complex64;

use crate::oscillatory::gauss::GaussianIntegrand;
use crate::spectral::{InitialDatum, PotentialSpec};
use crate::vec::Vect;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Affine d-vector expression over the chain's integration symbols.
#[derive(Clone, Debug)]
pub struct Affine {
    pub coeffs: Vec<f64>,
    pub c0: Vect,
}

impl Affine {
    fn constant(v: Vect) -> Self {
        Affine { coeffs: vec![], c0: v }
    }

    fn symbol(idx: usize) -> Self {
        let mut coeffs = vec![0.0; idx + 1];
        coeffs[idx] = 1.0;
        Affine { coeffs, c0: Vect::zero() }
    }

    fn axpy(&mut self, f: f64, other: &Affine) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            self.coeffs[i] += f * c;
        }
        self.c0 += other.c0 * f;
    }

    fn minus(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    fn padded(&self, n: usize) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        v.resize(n, 0.0);
        v
    }
}

/// How a root particle enters the integrand.
#[derive(Clone, Copy, Debug)]
pub enum Root {
    /// Pointwise evaluation at a fixed phase-space point.
    Fixed(Vect, Vect),
    /// Weak testing: position and velocity become integration symbols
    /// damped by the fixed Gaussian test function
    /// `psi(x, v) = exp(-(|x|^2 + |v|^2)/2)`.
    Weak,
}

#[derive(Clone, Debug)]
struct PState {
    pos: Affine,
    vel: Affine,
}

#[derive(Clone, Debug)]
enum Factor {
    GaussSq { a: f64, alpha: Affine },
    Bilinear { c: f64, alpha: Affine, beta: Affine },
}

/// Builder for one operator-chain integrand at fixed interaction times.
///
/// Operators are applied outermost first, i.e. in decreasing time, with
/// `advance_to` providing the free flights in between. The chain must
/// be advanced to time zero and closed with `density` before
/// integration.
pub struct Chain {
    pub dim: usize,
    pub eps: f64,
    potential: PotentialSpec,
    particles: Vec<PState>,
    factors: Vec<Factor>,
    prefactor: Complex64,
    nsym: usize,
    now: f64,
}

impl Chain {
    /// Starts a chain at observation time `t` with the given root
    /// particles. The potential must be a single Gaussian bump so that
    /// its transform is itself Gaussian.
    pub fn new(dim: usize, eps: f64, potential: &PotentialSpec, t: f64, roots: &[Root]) -> Self {
        assert_eq!(potential.components.len(), 1, "chain needs a single-bump potential");
        assert_eq!(potential.dim, dim);
        let mut chain = Chain {
            dim,
            eps,
            potential: potential.clone(),
            particles: vec![],
            factors: vec![],
            prefactor: Complex64::new(1.0, 0.0),
            nsym: 0,
            now: t,
        };
        for root in roots {
            match *root {
                Root::Fixed(x, v) => chain.particles.push(PState {
                    pos: Affine::constant(x),
                    vel: Affine::constant(v),
                }),
                Root::Weak => {
                    let x = chain.fresh_symbol();
                    let v = chain.fresh_symbol();
                    chain.particles.push(PState { pos: x.clone(), vel: v.clone() });
                    chain.factors.push(Factor::GaussSq { a: 0.5, alpha: x });
                    chain.factors.push(Factor::GaussSq { a: 0.5, alpha: v });
                }
            }
        }
        chain
    }

    fn fresh_symbol(&mut self) -> Affine {
        let s = Affine::symbol(self.nsym);
        self.nsym += 1;
        s
    }

    pub fn particle_count(&self) -> usize {
        self.particles.len()
    }

    /// Free flight down to the absolute time `time`.
    pub fn advance_to(&mut self, time: f64) {
        assert!(time <= self.now + 1e-12, "chain runs backward in time");
        let dt = self.now - time;
        for p in &mut self.particles {
            let vel = p.vel.clone();
            p.pos.axpy(-dt, &vel);
        }
        self.now = time;
    }

    /// Multiplies in the transformed potential evaluated at the affine
    /// momentum `h`: a Gaussian bump transforms to
    /// `A (2 pi)^{d/2} w^d exp(-w^2 |h|^2 / 2)`.
    fn phi_hat_factor(&mut self, h: &Affine) {
        let comp = self.potential.components[0];
        let d = self.dim as f64;
        self.prefactor *= comp.amplitude * TAU.powf(d / 2.0) * comp.width.powf(d);
        self.factors.push(Factor::GaussSq {
            a: comp.width * comp.width / 2.0,
            alpha: h.clone(),
        });
    }

    /// Pair interaction between existing particles `r` and `s`
    /// (0-based) at the current time: draws a momentum symbol `h`,
    /// multiplies `sigma (-i) / sqrt(eps) (2 pi)^{-d} phi^(h)
    /// exp(i (h/eps).(pos_r - pos_s))` and applies the half-kicks
    /// `vel_r -= sigma h / 2`, `vel_s += sigma h / 2`.
    pub fn t_op(&mut self, r: usize, s: usize, sigma: i8) {
        assert!(r != s && r < self.particles.len() && s < self.particles.len());
        let h = self.fresh_symbol();
        self.phi_hat_factor(&h);
        let rel = self.particles[r].pos.minus(&self.particles[s].pos);
        self.factors.push(Factor::Bilinear {
            c: 1.0 / self.eps,
            alpha: h.clone(),
            beta: rel,
        });
        self.particles[r].vel.axpy(-(sigma as f64) / 2.0, &h);
        self.particles[s].vel.axpy(sigma as f64 / 2.0, &h);
        self.prefactor *= Complex64::new(0.0, -1.0) * (sigma as f64)
            / (self.eps.sqrt() * TAU.powi(self.dim as i32));
    }

    /// Particle creation from ancestor `r` (0-based) at the current
    /// time: draws symbols for the newborn position, velocity and the
    /// exchanged momentum `h`, multiplies `sigma (-i) / sqrt(eps)
    /// (2 pi)^{-d} phi^(h) exp(i (h/eps).(pos_r - x_new))` and applies
    /// the half-kicks to the pair. The bulk amplification factor
    /// (N - j) is left to the caller.
    pub fn c_op(&mut self, r: usize, sigma: i8) {
        assert!(r < self.particles.len());
        let x_new = self.fresh_symbol();
        let v_new = self.fresh_symbol();
        let h = self.fresh_symbol();
        self.phi_hat_factor(&h);
        let rel = self.particles[r].pos.minus(&Affine {
            coeffs: x_new.coeffs.clone(),
            c0: Vect::zero(),
        });
        self.factors.push(Factor::Bilinear {
            c: 1.0 / self.eps,
            alpha: h.clone(),
            beta: rel,
        });
        let mut newborn = PState { pos: x_new, vel: v_new };
        self.particles[r].vel.axpy(-(sigma as f64) / 2.0, &h);
        newborn.vel.axpy(sigma as f64 / 2.0, &h);
        self.particles.push(newborn);
        self.prefactor *= Complex64::new(0.0, -1.0) * (sigma as f64)
            / (self.eps.sqrt() * TAU.powi(self.dim as i32));
    }

    /// Multiplies an extra scalar (bulk factors, sign conventions).
    pub fn mul_scalar(&mut self, s: Complex64) {
        self.prefactor *= s;
    }

    /// Closes the chain at time zero with the factorized datum: one
    /// single-component Gaussian factor per particle.
    pub fn density(&mut self, f0: &InitialDatum) {
        assert!(self.now.abs() < 1e-12, "advance to time zero before closing");
        assert_eq!(f0.components.len(), 1, "chain needs a single-component datum");
        assert_eq!(f0.dim, self.dim);
        let c = f0.components[0];
        let d = self.dim as f64;
        let norm = c.weight
            * (TAU * c.x_width * c.x_width).powf(-d / 2.0)
            * (TAU * c.v_width * c.v_width).powf(-d / 2.0);
        for p in &self.particles {
            self.prefactor *= norm;
            let mut px = p.pos.clone();
            px.c0 -= c.x_center;
            let mut pv = p.vel.clone();
            pv.c0 -= c.v_center;
            self.factors.push(Factor::GaussSq {
                a: 1.0 / (2.0 * c.x_width * c.x_width),
                alpha: px,
            });
            self.factors.push(Factor::GaussSq {
                a: 1.0 / (2.0 * c.v_width * c.v_width),
                alpha: pv,
            });
        }
    }

    /// Assembles the accumulated factors into a `GaussianIntegrand`.
    pub fn finish(&self) -> GaussianIntegrand {
        let nb = self.nsym;
        let mut g = GaussianIntegrand::new(nb, self.dim);
        g.mul_scalar(self.prefactor);
        for f in &self.factors {
            match f {
                Factor::GaussSq { a, alpha } => {
                    g.mul_gaussian_sq(*a, &alpha.padded(nb), &alpha.c0);
                }
                Factor::Bilinear { c, alpha, beta } => {
                    g.mul_phase_bilinear(*c, &alpha.padded(nb), &alpha.c0, &beta.padded(nb), &beta.c0);
                }
            }
        }
        g
    }

    /// Closes the chain against a possibly multi-component factorized
    /// datum and integrates. The product over particles of component
    /// sums expands into one block-Gaussian integral per assignment of
    /// a component to each particle; the results are summed.
    pub fn close_and_integrate(
        &self,
        f0: &InitialDatum,
    ) -> Result<Complex64, crate::oscillatory::gauss::GaussError> {
        assert!(self.now.abs() < 1e-12, "advance to time zero before closing");
        assert_eq!(f0.dim, self.dim);
        let p = self.particles.len();
        let m = f0.components.len();
        let d = self.dim as f64;
        let nb = self.nsym;
        let mut total = Complex64::new(0.0, 0.0);
        let mut assign = vec![0usize; p];
        loop {
            let mut g = self.finish();
            for (part, &ci) in self.particles.iter().zip(&assign) {
                let c = f0.components[ci];
                let norm = c.weight
                    * (TAU * c.x_width * c.x_width).powf(-d / 2.0)
                    * (TAU * c.v_width * c.v_width).powf(-d / 2.0);
                g.mul_scalar(Complex64::new(norm, 0.0));
                let mut px = part.pos.clone();
                px.c0 -= c.x_center;
                let mut pv = part.vel.clone();
                pv.c0 -= c.v_center;
                g.mul_gaussian_sq(1.0 / (2.0 * c.x_width * c.x_width), &px.padded(nb), &px.c0);
                g.mul_gaussian_sq(1.0 / (2.0 * c.v_width * c.v_width), &pv.padded(nb), &pv.c0);
            }
            total += g.integrate()?;
            // advance the mixed-radix assignment counter
            let mut k = 0;
            while k < p {
                assign[k] += 1;
                if assign[k] < m {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == p {
                break;
            }
        }
        Ok(total)
    }
}
