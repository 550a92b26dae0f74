//! Oscillatory integrals of the finite-eps expansion: an exact
//! block-Gaussian integrator, symbolic operator chains, the low-order
//! remainder terms with their eps-scaling probes, and the model
//! integral isolating the time-oscillation mechanism.

pub mod chain;
pub mod gauss;
pub mod model;
pub mod teps;
pub mod terms;
