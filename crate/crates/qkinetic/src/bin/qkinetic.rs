use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use qkinetic::config::{parse_ladder, RunConfig, RunRecord, Versions};
use qkinetic::histories::Graph;
use qkinetic::kernel::{delta_reduce_ladder, CrossSection};
use qkinetic::oscillatory::model::{model_a_eps, model_a_limit, model_bound, ModelChi};
use qkinetic::oscillatory::teps;
use qkinetic::oscillatory::terms::{
    eps_ladder, scaling_probe, EvalGrid, TermKind, TermSelector,
};
use qkinetic::series::{boltzmann_series, SeriesConfig};
use qkinetic::spectral::{InitialDatum, PotentialSpec};
use qkinetic::vec::Vect;

/// Collision-history diagnostics for the weak-coupling quantum
/// Boltzmann limit.
#[derive(Parser)]
#[command(name = "qkinetic", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; omitted fields resolve to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spatial dimension (overrides the config file).
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; `.csv` outputs get a JSON sibling and vice versa
    /// for ladder commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the full JSON record on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the collision kernel on a direction fan and its total.
    CrossSection {
        /// Relative velocity magnitude.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Sum the collision-history series at the configured root state.
    Solve {
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        /// Drop spatial dependence (velocity-density evolution).
        #[arg(long)]
        homogeneous: bool,
    },
    /// Fit the eps-scaling exponent of one expansion term.
    Probe {
        /// One of I1, I2, I3, I4_case1, I4_case2, I4_case3,
        /// I4_recollision.
        #[arg(long)]
        term: String,
        /// `start:count` geometric ladder or explicit comma list.
        #[arg(long, default_value = "1e-1:4")]
        ladder: String,
    },
    /// Compare a finite-eps history term against its limit.
    Converge {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value = "1e-1:3")]
        ladder: String,
    },
    /// Uniform integrability envelope and model-integral bound.
    BoundCheck {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0])]
        s_ladder: Vec<f64>,
    },
    /// Half-line delta concentration and the energy-shell reduction.
    DeltaCheck {
        #[arg(long, value_delimiter = ',', default_values_t = [250.0, 500.0, 1000.0])]
        big_t: Vec<f64>,
    },
    /// Fourier-side term evaluation against direct oscillatory
    /// quadrature (d = 1).
    OracleCompare {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("QKINETIC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("qkinetic: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, String> {
    let partial = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Default::default(),
    };
    let mut cfg = RunConfig::resolve(partial, common.dim)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn emit<R: Serialize>(
    common: &Common,
    command: &str,
    cfg: &RunConfig,
    results: R,
    passed: bool,
    started: Instant,
    csv: Option<String>,
) -> Result<bool, String> {
    let record = RunRecord {
        command: command.to_string(),
        config: cfg.clone(),
        results,
        seed: cfg.seed,
        versions: Versions::current(),
        wall_time: started.elapsed().as_secs_f64(),
        passed,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| e.to_string())?;
    if let Some(out) = &common.out {
        let (json_path, csv_path) = sibling_paths(out);
        std::fs::write(&json_path, &text)
            .map_err(|e| format!("{}: {e}", json_path.display()))?;
        if let Some(csv) = &csv {
            std::fs::write(&csv_path, csv)
                .map_err(|e| format!("{}: {e}", csv_path.display()))?;
        }
    }
    if common.json {
        println!("{text}");
    } else {
        println!("{command}: {}", if passed { "pass" } else { "FAIL" });
    }
    Ok(passed)
}

/// `x.csv` -> (`x.json`, `x.csv`); anything else -> (itself, stem.csv).
fn sibling_paths(out: &Path) -> (PathBuf, PathBuf) {
    if out.extension().is_some_and(|e| e == "csv") {
        (out.with_extension("json"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("csv"))
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let started = Instant::now();
    let common = &cli.common;
    match cli.command {
        Command::CrossSection { speed, resolution } => {
            let cfg = load_config(common)?;
            if cfg.dim < 2 {
                return Err("the collision kernel needs dimension >= 2".into());
            }
            let cs = CrossSection::new(cfg.potential.clone()).map_err(|e| e.to_string())?;
            let mut w = Vect::zero();
            w.0[0] = speed;
            let fan: Vec<serde_json::Value> = (0..=16)
                .map(|i| {
                    let theta = std::f64::consts::PI * i as f64 / 16.0;
                    let mut omega = Vect::zero();
                    omega.0[0] = theta.cos();
                    omega.0[1] = theta.sin();
                    json!({"cos_angle": theta.cos(), "value": cs.eval(&omega, &w)})
                })
                .collect();
            let total = cs.total(&w, resolution);
            let mut csv = String::from("cos_angle,value\n");
            for row in &fan {
                csv.push_str(&format!("{},{}\n", row["cos_angle"], row["value"]));
            }
            emit(
                common,
                "cross-section",
                &cfg,
                json!({"speed": speed, "fan": fan, "total": total, "resolution": resolution}),
                total.is_finite() && total >= 0.0,
                started,
                Some(csv),
            )
        }
        Command::Solve { n_max, homogeneous } => {
            let cfg = load_config(common)?;
            if cfg.dim < 2 {
                return Err("the limiting series needs dimension >= 2".into());
            }
            let cs = CrossSection::new(cfg.potential.clone()).map_err(|e| e.to_string())?;
            let series_cfg = SeriesConfig {
                t: cfg.t,
                n_max,
                mc_budget: cfg.mc_budget,
                seed: cfg.seed,
                homogeneous,
                sigma_importance: cfg.sigma_importance,
                allow_beyond_radius: true,
            };
            let result =
                boltzmann_series(cfg.x1_vect(), cfg.v1_vect(), &series_cfg, &cfg.datum, &cs);
            let free = if homogeneous {
                cfg.datum.velocity_density(&cfg.v1_vect())
            } else {
                cfg.datum.eval(&(cfg.x1_vect() - cfg.v1_vect() * cfg.t), &cfg.v1_vect())
            };
            let passed = if cfg.potential.is_zero() {
                (result.total - free).abs() <= cfg.rel_tol * free.abs().max(1e-300)
            } else {
                result.total.is_finite()
            };
            emit(
                common,
                "solve",
                &cfg,
                json!({"series": result, "free_flight": free, "homogeneous": homogeneous}),
                passed,
                started,
                None,
            )
        }
        Command::Probe { term, ladder } => {
            let cfg = load_config(common)?;
            let kind: TermKind = term.parse().map_err(|e: String| e)?;
            let ladder = parse_ladder(&ladder)?;
            let sel = TermSelector::new(kind, cfg.dim);
            let probe = scaling_probe(
                &sel,
                &cfg.potential,
                &cfg.datum,
                cfg.t,
                cfg.x1_vect(),
                cfg.v1_vect(),
                &ladder,
                &EvalGrid::default(),
            );
            let passed = (probe.slope - probe.expected_slope).abs() <= 0.2;
            let mut csv = String::from("eps,value,stderr\n");
            for (e, m) in probe.eps.iter().zip(&probe.magnitude) {
                // deterministic quadrature: no statistical error column
                csv.push_str(&format!("{e},{m},0.0\n"));
            }
            emit(common, "probe", &cfg, probe, passed, started, Some(csv))
        }
        Command::Converge { n, ladder } => {
            let cfg = load_config(common)?;
            if n != 1 {
                return Err("the convergence check is wired for n = 1".into());
            }
            if cfg.dim < 2 {
                return Err("the limiting side needs dimension >= 2".into());
            }
            let ladder = parse_ladder(&ladder)?;
            let cs = CrossSection::new(cfg.potential.clone()).map_err(|e| e.to_string())?;
            let graph = Graph::new(vec![1]).map_err(|e| e.to_string())?;
            let report = teps::term_convergence_check(
                &graph,
                cfg.t,
                &[0.44 * cfg.t],
                &ladder,
                cfg.x1_vect(),
                cfg.v1_vect(),
                &cfg.datum,
                &cs,
                cfg.sigma_importance,
                cfg.seed,
                cfg.mc_budget,
            );
            let passed = report.monotone && report.final_within;
            let mut csv = String::from("eps,value,stderr\n");
            for row in &report.rows {
                csv.push_str(&format!("{},{},{}\n", row.eps, row.value, row.stderr));
            }
            emit(common, "converge", &cfg, report, passed, started, Some(csv))
        }
        Command::BoundCheck { s_ladder } => {
            let cfg = load_config(common)?;
            let single = InitialDatum::standard(cfg.dim);
            let mut reports = Vec::new();
            let mut ok = true;
            for labels in [vec![1], vec![1, 2]] {
                let graph = Graph::new(labels.clone()).map_err(|e| e.to_string())?;
                let times: Vec<f64> =
                    (0..graph.order()).map(|j| cfg.t * 0.5 / (j + 1) as f64).collect();
                let report = teps::uniform_bound_check(
                    &graph,
                    &times,
                    &s_ladder,
                    &single,
                    &cfg.potential,
                );
                ok &= report.envelope_ok;
                if let Some((val, env)) = report.n1_bound {
                    ok &= val <= env;
                }
                reports.push(json!({"labels": labels, "report": report}));
            }
            let chi = ModelChi::standard(cfg.dim.max(2));
            let ladder = eps_ladder(1e-1, 4);
            let bound = model_bound(&chi);
            let limit = model_a_limit(&chi);
            let model: Vec<serde_json::Value> = ladder
                .iter()
                .map(|&e| {
                    let a = model_a_eps(&chi, e);
                    ok &= a.abs() <= bound;
                    json!({"eps": e, "a_eps": a})
                })
                .collect();
            let last = model_a_eps(&chi, *ladder.last().unwrap());
            ok &= (last - limit).abs() <= 0.01 * limit.abs();
            emit(
                common,
                "bound-check",
                &cfg,
                json!({"envelopes": reports, "model": model, "model_limit": limit,
                       "model_bound": bound}),
                ok,
                started,
                None,
            )
        }
        Command::DeltaCheck { big_t } => {
            let cfg = load_config(common)?;
            let gauss = |a: f64| (-a * a / 2.0f64).exp();
            let rows = teps::mollified_delta_check(&gauss, 1.0, &big_t, 8.0);
            let mut ok = rows
                .last()
                .is_some_and(|r| r.error <= 1e-3 * std::f64::consts::PI);
            let reduction = if cfg.dim >= 2 {
                let mut w = Vect::zero();
                w.0[0] = 1.0;
                let gamma = |eta: &Vect| (-eta.norm_sq() / 2.0).exp();
                let ladder = delta_reduce_ladder(
                    gamma,
                    &w,
                    cfg.dim,
                    &[0.2, 0.1, 0.05, 0.025],
                    48,
                    6.0,
                );
                // mollifier error is O(mu): Richardson-extrapolate the
                // two smallest widths against the sphere value
                let (m1, m2) = (ladder[ladder.len() - 2].1, ladder[ladder.len() - 1].1);
                let extrap = 2.0 * m2 - m1;
                let exact = ladder[0].2;
                ok &= (extrap - exact).abs() <= 0.01 * exact.abs();
                Some(json!({"ladder": ladder, "extrapolated": extrap, "exact": exact}))
            } else {
                None
            };
            emit(
                common,
                "delta-check",
                &cfg,
                json!({"dirichlet": rows, "reduction": reduction}),
                ok,
                started,
                None,
            )
        }
        Command::OracleCompare { eps } => {
            let mut cfg = load_config(&Common { dim: Some(1), ..clone_common(common) })?;
            cfg.datum = InitialDatum::standard(1);
            cfg.potential = PotentialSpec::gaussian(1.0, 1.0, 1);
            let t1 = 0.6 * cfg.t;
            let direct = teps::direct_quadrature_t_eps_1d(
                cfg.t,
                t1,
                eps,
                cfg.x1[0],
                cfg.v1[0],
                &cfg.datum,
                &cfg.potential,
            );
            let graph = Graph::new(vec![1]).map_err(|e| e.to_string())?;
            let (re, im) = teps::eval_t_eps_term(
                &graph,
                cfg.t,
                &[t1],
                eps,
                cfg.x1_vect(),
                cfg.v1_vect(),
                &cfg.datum,
                &cfg.potential,
                1.1,
                cfg.seed,
                cfg.mc_budget.max(1_000_000),
            );
            let scale = direct.norm().max(1e-12);
            let tol = cfg.rel_tol.max(0.02);
            let passed = (re.value - direct.re).abs() <= (3.0 * re.stderr).max(tol * scale)
                && (im.value - direct.im).abs() <= (3.0 * im.stderr).max(tol * scale);
            emit(
                common,
                "oracle-compare",
                &cfg,
                json!({"eps": eps, "direct_re": direct.re, "direct_im": direct.im,
                       "mc_re": re, "mc_im": im, "tolerance": tol}),
                passed,
                started,
                None,
            )
        }
    }
}

fn clone_common(c: &Common) -> Common {
    Common {
        config: c.config.clone(),
        dim: c.dim,
        seed: c.seed,
        out: c.out.clone(),
        json: c.json,
    }
}
