//! Run configuration and result records for the command-line driver:
//! everything a run needs to be reproduced, resolved to concrete
//! values and embedded verbatim in the emitted result.

use serde::{Deserialize, Serialize};

use crate::spectral::{DatumComponent, InitialDatum, PotentialSpec};
use crate::vec::Vect;

/// Fully resolved run configuration: no optional fields, so the copy
/// embedded in a result round-trips to exactly the values used.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub potential: PotentialSpec,
    pub datum: InitialDatum,
    pub seed: u64,
    pub mc_budget: u64,
    /// Observation time.
    pub t: f64,
    /// Root state for pointwise evaluations.
    pub x1: Vec<f64>,
    pub v1: Vec<f64>,
    /// Importance width for sampled velocities and momenta.
    pub sigma_importance: f64,
    /// Relative tolerance applied by checks that declare one.
    pub rel_tol: f64,
}

/// On-disk configuration: any field may be omitted and is resolved
/// against the dimension-dependent defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub dim: Option<usize>,
    pub potential: Option<PotentialSpec>,
    pub datum: Option<InitialDatum>,
    pub seed: Option<u64>,
    pub mc_budget: Option<u64>,
    pub t: Option<f64>,
    pub x1: Option<Vec<f64>>,
    pub v1: Option<Vec<f64>>,
    pub sigma_importance: Option<f64>,
    pub rel_tol: Option<f64>,
}

/// An off-equilibrium default datum: a symmetric two-bump velocity
/// mixture. Any single Gaussian bump is a drifting Maxwellian, an
/// exact equilibrium of the collision operator, and would make most
/// collision effects vanish identically.
pub fn bimodal_datum(dim: usize) -> InitialDatum {
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
    .expect("static datum is valid")
}

impl RunConfig {
    /// Defaults at a given dimension: unit Gaussian potential, bimodal
    /// datum, moderate budget.
    pub fn defaults(dim: usize) -> Self {
        RunConfig {
            dim,
            potential: PotentialSpec::gaussian(1.0, 1.0, dim),
            datum: bimodal_datum(dim),
            seed: 7,
            mc_budget: 400_000,
            t: 0.5,
            x1: vec![0.2; dim],
            v1: {
                let mut v = vec![0.3; dim];
                v[0] = 0.7;
                v
            },
            sigma_importance: 1.2,
            rel_tol: 0.02,
        }
    }

    pub fn resolve(partial: PartialConfig, dim_flag: Option<usize>) -> Result<Self, String> {
        let dim = dim_flag.or(partial.dim).unwrap_or(2);
        if !(1..=3).contains(&dim) {
            return Err(format!("dimension {dim} outside 1..=3"));
        }
        let base = RunConfig::defaults(dim);
        let cfg = RunConfig {
            dim,
            potential: partial.potential.unwrap_or(base.potential),
            datum: partial.datum.unwrap_or(base.datum),
            seed: partial.seed.unwrap_or(base.seed),
            mc_budget: partial.mc_budget.unwrap_or(base.mc_budget),
            t: partial.t.unwrap_or(base.t),
            x1: partial.x1.unwrap_or(base.x1),
            v1: partial.v1.unwrap_or(base.v1),
            sigma_importance: partial.sigma_importance.unwrap_or(base.sigma_importance),
            rel_tol: partial.rel_tol.unwrap_or(base.rel_tol),
        };
        if cfg.potential.dim != dim || cfg.datum.dim != dim {
            return Err(format!(
                "potential dim {} / datum dim {} disagree with run dim {}",
                cfg.potential.dim, cfg.datum.dim, dim
            ));
        }
        if cfg.x1.len() != dim || cfg.v1.len() != dim {
            return Err("root state length must equal the dimension".into());
        }
        if !(cfg.t > 0.0) || cfg.sigma_importance <= 0.0 || cfg.rel_tol <= 0.0 {
            return Err("t, sigma_importance and rel_tol must be positive".into());
        }
        Ok(cfg)
    }

    pub fn x1_vect(&self) -> Vect {
        Vect::from_slice(&self.x1)
    }

    pub fn v1_vect(&self) -> Vect {
        Vect::from_slice(&self.v1)
    }
}

/// Parses a ladder spec `start:count` (geometric, ratio 1/sqrt(10)) or
/// an explicit comma list `1e-1,3e-2,1e-2`.
pub fn parse_ladder(s: &str) -> Result<Vec<f64>, String> {
    if let Some((start, count)) = s.split_once(':') {
        let start: f64 = start.parse().map_err(|e| format!("ladder start: {e}"))?;
        let count: usize = count.parse().map_err(|e| format!("ladder count: {e}"))?;
        if !(start > 0.0) || count < 2 {
            return Err("ladder needs start > 0 and count >= 2".into());
        }
        Ok(crate::oscillatory::terms::eps_ladder(start, count))
    } else {
        let vals: Result<Vec<f64>, _> = s.split(',').map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| format!("ladder list: {e}"))?;
        if vals.len() < 2 || vals.iter().any(|&v| !(v > 0.0)) {
            return Err("ladder needs >= 2 positive points".into());
        }
        Ok(vals)
    }
}

/// Envelope written (as JSON) for every command invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord<R: Serialize> {
    pub command: String,
    pub config: RunConfig,
    pub results: R,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time: f64,
    /// Every declared tolerance met.
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub package: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { package: env!("CARGO_PKG_VERSION") }
    }
}
