use std::fs;
use std::path::{Path, PathBuf};

use homogenizer::dynamics::{evolve_composite_observed, interpolation_sweep, regimes_to_csv, Trajectory};
use homogenizer::witness::{find_crossing, memory_gap, GapCurve};
use homogenizer::{homogenize, CollisionPlan, DensityMatrix};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, Experiment};
use crate::error::{ConfigError, Context, RunError};

/// Files written by one run, in the order they were written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), ConfigError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

fn numerical(init: &str, eta: Option<f64>, step: Option<usize>) -> impl FnOnce(homogenizer::Error) -> RunError + '_ {
    move |source| RunError::Numerical { context: Context { init: init.to_string(), eta, step }, source }
}

/// Runs `config` on a pool of `jobs` worker threads. Output bytes do not
/// depend on `jobs`.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<Artifacts, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Invalid { field: "jobs".into(), reason: e.to_string() })?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| ConfigError::Io { path: dir.clone(), source })?;
    pool.install(|| match config.experiment {
        Experiment::Converge => converge(config),
        Experiment::GapCurve => gap_curve(config),
        Experiment::Crossing => crossing(config),
        Experiment::Regimes => regimes(config),
    })
}

struct Pair {
    markovian: Trajectory,
    composite: Trajectory,
}

fn one_trajectory(config: &ExperimentConfig, index: usize) -> Result<Pair, RunError> {
    let init = config.init.reservoir();
    let label = init.label();
    let n = config.n_steps;
    let schedule = config.eta.schedule(config.seed, n, index as u64);
    let etas = schedule.realize().map_err(numerical(&label, None, None))?;
    let plan = match init.product_state() {
        Some(_) => CollisionPlan::odd_targets(n, None),
        None => CollisionPlan::odd_targets(n, Some(init.n_qubits)),
    };
    let rho = config.system_state();

    let mut done = 0;
    let composite = evolve_composite_observed(&rho, &init, n, &schedule, &plan, |step, _| done = step)
        .map_err(|e| numerical(&label, etas.get(done).copied(), Some(done + 1))(e))?;
    let markovian = homogenize(&rho, &composite.target, n, &schedule).map_err(numerical(&label, None, None))?;
    Ok(Pair { markovian, composite })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-step median distance across trajectories.
pub fn median_distances(trajectories: &[&Trajectory]) -> Vec<f64> {
    let steps = trajectories.first().map_or(0, |t| t.steps.len());
    (0..steps)
        .map(|k| {
            let mut column: Vec<f64> = trajectories.iter().map(|t| t.steps[k].distance).collect();
            median(&mut column)
        })
        .collect()
}

fn converge(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let pairs = (0..config.n_trajectories)
        .into_par_iter()
        .map(|i| one_trajectory(config, i))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Artifacts::default();
    let dir = &config.out_dir;
    for (i, pair) in pairs.iter().enumerate() {
        out.write(dir, &format!("markovian_{i:03}.csv"), &pair.markovian.to_csv())?;
        out.write(dir, &format!("composite_{i:03}.csv"), &pair.composite.to_csv())?;
    }
    let markovian = median_distances(&pairs.iter().map(|p| &p.markovian).collect::<Vec<_>>());
    let composite = median_distances(&pairs.iter().map(|p| &p.composite).collect::<Vec<_>>());
    let final_gap = match (markovian.last(), composite.last()) {
        (Some(m), Some(c)) => (m - c).abs(),
        _ => 0.0,
    };
    let summary = json!({
        "experiment": "converge",
        "init": config.init.reservoir().label(),
        "seed": config.seed,
        "n_steps": config.n_steps,
        "n_trajectories": config.n_trajectories,
        "median_dist_markovian": markovian,
        "median_dist_composite": composite,
        "final_median_gap": final_gap,
    });
    out.write(dir, "summary.json", &pretty(&summary))?;
    Ok(out)
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

/// Gap curve for the configured init, sampled in parallel and kept in grid
/// order.
pub fn compute_curve(config: &ExperimentConfig) -> Result<GapCurve, RunError> {
    let init = config.init.reservoir();
    let label = init.label();
    let fiducial: DensityMatrix = config.fiducial_state();
    let grid = config.effective_grid();
    let samples = grid
        .par_iter()
        .map(|&eta| memory_gap(&init, eta, &fiducial).map_err(numerical(&label, Some(eta), None)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut curve = GapCurve { init, fiducial, samples, crossing: None };
    curve.crossing = find_crossing(&curve).map_err(numerical(&label, None, None))?;
    Ok(curve)
}

fn crossing_summary(curve: &GapCurve) -> serde_json::Value {
    json!({ "init": curve.init.label(), "eta_star": curve.crossing })
}

fn gap_curve(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let curve = compute_curve(config)?;
    let label = curve.init.label();
    let mut out = Artifacts::default();
    out.write(&config.out_dir, &format!("gap_curve_{label}.csv"), &curve.to_csv())?;
    out.write(&config.out_dir, &format!("gap_curve_{label}.json"), &pretty(&crossing_summary(&curve)))?;
    Ok(out)
}

fn crossing(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let curve = compute_curve(config)?;
    let mut summary = crossing_summary(&curve);
    summary["min_gap"] = json!(curve.min_gap());
    summary["grid_points"] = json!(curve.samples.len());
    let mut out = Artifacts::default();
    out.write(&config.out_dir, &format!("crossing_{}.json", curve.init.label()), &pretty(&summary))?;
    Ok(out)
}

fn regimes(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let init = config.init.reservoir();
    let label = init.label();
    let xi = match init.product_state() {
        Some(xi) => xi.clone(),
        None => homogenizer::build_reservoir(&init)
            .and_then(|r| r.marginal(&[0]))
            .map_err(numerical(&label, None, None))?,
    };
    let table = interpolation_sweep(&config.effective_grid(), config.n_steps, &config.system_state(), &xi)
        .map_err(numerical(&label, None, None))?;
    let csv = regimes_to_csv(&table).map_err(numerical(&label, None, None))?;
    let mut out = Artifacts::default();
    out.write(&config.out_dir, "regimes.csv", &csv)?;
    Ok(out)
}
