//! Small fixed-capacity real vectors for phase-space points.
//!
//! The space dimension `d` is a runtime parameter in `1..=3`; a `Vect`
//! always carries three slots and keeps the unused ones at zero, so dot
//! products and sums never need to consult `d`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Maximum supported space dimension.
pub const MAX_DIM: usize = 3;

/// A point of R^d embedded in three slots (trailing slots zero).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vect(pub [f64; MAX_DIM]);

impl Vect {
    pub fn zero() -> Self {
        Vect([0.0; MAX_DIM])
    }

    /// Builds from a slice of length `<= MAX_DIM`; missing slots are zero.
    pub fn from_slice(s: &[f64]) -> Self {
        let mut a = [0.0; MAX_DIM];
        a[..s.len()].copy_from_slice(s);
        Vect(a)
    }

    pub fn dot(&self, other: &Vect) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Vect {
        Vect([self.0[0] * c, self.0[1] * c, self.0[2] * c])
    }

    /// Component view restricted to the first `d` slots.
    pub fn comps(&self, d: usize) -> &[f64] {
        &self.0[..d]
    }
}

impl Add for Vect {
    type Output = Vect;
    fn add(self, o: Vect) -> Vect {
        Vect([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vect {
    type Output = Vect;
    fn sub(self, o: Vect) -> Vect {
        Vect([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vect {
    type Output = Vect;
    fn neg(self) -> Vect {
        self.scale(-1.0)
    }
}

impl AddAssign for Vect {
    fn add_assign(&mut self, o: Vect) {
        *self = *self + o;
    }
}

impl SubAssign for Vect {
    fn sub_assign(&mut self, o: Vect) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vect {
    type Output = Vect;
    fn mul(self, c: f64) -> Vect {
        self.scale(c)
    }
}
