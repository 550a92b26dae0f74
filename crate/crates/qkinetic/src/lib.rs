//! Collision-history expansions for the weak-coupling quantum Boltzmann
//! limit.
//!
//! The crate evaluates both sides of the kinetic limit: finite-epsilon
//! hierarchy terms built from collision histories and oscillatory phase
//! integrals, and the limiting Boltzmann collision series with its
//! Fermi-Golden-Rule cross section. Scaling ladders in epsilon connect
//! the two and make the convergence and cancellation mechanisms
//! measurable.

pub mod config;
pub mod guide;
pub mod histories;
pub mod kernel;
pub mod mc;
pub mod oscillatory;
pub mod quad;
pub mod series;
pub mod spectral;
pub mod vec;
