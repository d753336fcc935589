use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use qrbsde_core::pde::SCHEME_TOLERANCE;
use qrbsde_core::stopping::{dominating_supermartingale_gap, enumeration_oracle};
use qrbsde_core::verify::{
    cross_validate, one_over_n, property_suite, reflection_reports, stability_experiment,
    PropertyReport, ReportKind, SuiteSettings,
};
use qrbsde_core::{
    build_lattice, g_evaluate, optimal_stop, solve_obstacle_pde, solve_rbsde, Error as CoreError,
    LatticeStoppingTime, RecombiningLattice, RewardProcess,
};

use crate::config::{Experiment, Overrides, RunConfig, Validated};
use crate::CliError;

/// Perturbation sizes `1/n` used by the stability experiment.
pub const STABILITY_NS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug)]
pub struct Outcome {
    pub experiment: Experiment,
    pub reports: Vec<PropertyReport>,
    pub output_dir: PathBuf,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(PropertyReport::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Loads, validates and runs the configuration at `path`.
pub fn run(path: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let validated = RunConfig::load(path, overrides)?.validate()?;
    run_validated(&validated)
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

pub fn run_validated(v: &Validated) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let cfg = &v.config;
    let m = &v.model;
    let s = cfg.settings(v.tolerances.clone());
    let mut out = Artifacts::create(&cfg.output_dir)?;

    let reports = match cfg.experiment {
        Experiment::SolveRbsde => {
            let lat = lattice(v, &s)?;
            write_solution(&mut out, &lat, v)?;
            reflection_reports(m, &s)?
        }
        Experiment::SolvePde => solve_pde(&mut out, v, &s)?,
        Experiment::OptimalStop => optimal_stopping(&mut out, v, &s)?,
        Experiment::CrossValidate => {
            let grid = s.grid(m)?;
            let (report, pde) = cross_validate(
                m,
                &s.probe_points(m),
                s.n_steps,
                s.structure,
                &grid,
                s.tolerances.cross_validate,
            )?;
            if let Some(pde) = pde {
                out.write_with("pde.csv", |w| pde.write_csv(w))?;
            }
            vec![report]
        }
        Experiment::PropertySuite => {
            let lat = lattice(v, &s)?;
            write_solution(&mut out, &lat, v)?;
            property_suite(m, &s)?
        }
        Experiment::Stability => {
            let lat = lattice(v, &s)?;
            let base = m.parameter_set();
            let perturbations: Vec<_> = STABILITY_NS
                .iter()
                .map(|&n| (n, one_over_n(&base, n)))
                .collect();
            let outcome =
                stability_experiment(&lat, &base, &perturbations, s.tolerances.stability_exp)?;
            out.json("stability.json", &outcome)?;
            outcome.reports()
        }
    };

    out.json("reports.json", &reports)?;
    let mut artifacts = out.written.clone();
    artifacts.push("manifest.json".to_string());
    let manifest = json!({
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "experiment": cfg.experiment,
        "schema_version": cfg.schema_version,
        "versions": {
            "qrbsde": env!("CARGO_PKG_VERSION"),
            "qrbsde-core": qrbsde_core::VERSION,
        },
        "artifacts": artifacts,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    out.json("manifest.json", &manifest)?;

    Ok(Outcome {
        experiment: cfg.experiment,
        reports,
        output_dir: cfg.output_dir.clone(),
        artifacts,
    })
}

/// SHA-256 of the effective configuration, output directory excluded.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut value = serde_json::to_value(cfg).expect("configuration serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("output_dir");
    }
    let bytes = serde_json::to_vec(&value).expect("configuration serializes");
    hex::encode(Sha256::digest(bytes))
}

fn lattice(v: &Validated, s: &SuiteSettings) -> Result<RecombiningLattice, CliError> {
    Ok(build_lattice(&v.model, s.t0, s.x0, s.n_steps, s.structure)?)
}

fn write_solution(
    out: &mut Artifacts,
    lat: &RecombiningLattice,
    v: &Validated,
) -> Result<(), CliError> {
    let sol = solve_rbsde(lat, &v.model.parameter_set())?;
    out.write_with("solution.csv", |w| sol.write_csv(w))?;
    out.json("summary.json", &sol.summary())
}

fn solve_pde(
    out: &mut Artifacts,
    v: &Validated,
    s: &SuiteSettings,
) -> Result<Vec<PropertyReport>, CliError> {
    let m = &v.model;
    let grid = s.grid(m)?;
    let scheme = v.config.discretization.pde_scheme;
    let sol = solve_obstacle_pde(m, &grid, scheme)?;
    out.write_with("pde.csv", |w| sol.write_csv(w))?;
    out.json(
        "pde_summary.json",
        &json!({
            "scheme": scheme,
            "u0": sol.value_at(s.t0, s.x0),
            "max_abs_residual": sol.max_abs_residual,
            "residual_flagged": sol.residual_flagged,
            "monotonicity_margin": sol.monotonicity_margin,
            "obstacle_violation": sol.obstacle_violation(),
        }),
    )?;
    Ok(vec![
        PropertyReport::measured(
            "pde/residual",
            ReportKind::Convergence,
            sol.max_abs_residual,
            SCHEME_TOLERANCE,
        )
        .observe("monotonicity_margin", sol.monotonicity_margin),
        PropertyReport::measured(
            "pde/obstacle",
            ReportKind::Exact,
            sol.obstacle_violation(),
            s.tolerances.reflection,
        ),
    ])
}

fn optimal_stopping(
    out: &mut Artifacts,
    v: &Validated,
    s: &SuiteSettings,
) -> Result<Vec<PropertyReport>, CliError> {
    let lat = lattice(v, s)?;
    let g = &v.model.generator;
    let reward = RewardProcess::from_parameters(&lat, &v.model.parameter_set())?;
    let nu = LatticeStoppingTime::at_root(&lat);
    let opt = optimal_stop(&lat, g, &reward, &nu)?;
    let tol = s.tolerances.stopping;

    let at_star = g_evaluate(&lat, g, &opt.tau_star, &reward.at_stopping(&opt.tau_star))?;
    let dominance = dominating_supermartingale_gap(&lat, g, &reward, &opt.y)?;
    let mut reports = vec![
        PropertyReport::measured(
            "optimal-stopping/tau-star",
            ReportKind::Exact,
            (at_star[0][0] - opt.root_value()).abs(),
            tol,
        ),
        PropertyReport::measured(
            "optimal-stopping/dominance",
            ReportKind::Exact,
            dominance.max(0.0),
            tol,
        ),
    ];
    let enumeration_gap = match enumeration_oracle(&lat, g, &reward, &nu) {
        Ok(r) => {
            let metric = r.gap.max(r.tau_star_gap).max(r.max_excess.max(0.0));
            reports.push(
                PropertyReport::measured(
                    "optimal-stopping/enumeration",
                    ReportKind::Exact,
                    metric,
                    tol,
                )
                .observe("rules", r.rules as f64),
            );
            Some(r.gap)
        }
        Err(CoreError::EnumerationTooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let times = lat.times();
    let nodes: Vec<_> = opt
        .tau_star_nodes
        .iter()
        .map(|n| json!({"step": n.step, "index": n.index, "t": times[n.step], "x": lat.states(n.step)[n.index]}))
        .collect();
    out.json(
        "optimal_stop.json",
        &json!({
            "value": opt.root_value(),
            "tau_star_nodes": nodes,
            "enumeration_gap": enumeration_gap,
        }),
    )?;
    Ok(reports)
}
