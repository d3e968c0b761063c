//! Seeded experiment runs, CSV traces, summaries and the manifest.
//!
//! Output layout inside `out_dir`:
//!
//! - `trace_<algorithm>_seed<seed>.csv`, one per run
//! - `summary_<algorithm>.csv`, statistics across repeats
//! - `logdist_<algorithm>.csv`, only with `plot_data = true`
//! - `manifest.json`, written last

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use hubo_core::acquisition::{BetaKind, BetaSchedule, MaximizerConfig};
use hubo_core::benchmarks::{initial_space, make_benchmark, BenchmarkFunction, InitialSpace};
use hubo_core::driver::{random_search, run, Algorithm, RunConfig, RunTrace};
use hubo_core::hypercubes::HdConfig;
use serde::Serialize;

use crate::config::{ExperimentSpec, RandomRegion};
use crate::error::{io_err, CliError, Result};

pub const TRACE_COLUMNS: [&str; 10] = [
    "t", "x", "y", "best_y", "r_t", "R_t", "log_dist", "side", "n_cubes", "wall_ms",
];
pub const SUMMARY_COLUMNS: [&str; 6] = [
    "t",
    "mean_best_y",
    "std_best_y",
    "stderr_best_y",
    "mean_log_dist",
    "stderr_log_dist",
];
pub const LOG_DISTANCE_COLUMNS: [&str; 3] = ["t", "mean_log_dist", "stderr_log_dist"];

fn num(v: f64) -> String {
    v.to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes one run as CSV. `wall_ms` stays empty unless `wall_time` is set,
/// so that reruns produce identical bytes.
pub fn write_trace_csv(path: &Path, trace: &RunTrace, wall_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        let x: Vec<String> = r.x.iter().map(|v| num(*v)).collect();
        let wall = if wall_time {
            format!("{:.3}", r.wall.as_secs_f64() * 1e3)
        } else {
            String::new()
        };
        w.write_record([
            r.t.to_string(),
            x.join(";"),
            num(r.y),
            num(r.best_y),
            opt(r.regret),
            opt(r.cumulative_regret),
            opt(r.log_dist),
            num(r.side),
            opt(r.n_cubes),
            wall,
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Mean, sample standard deviation (`n - 1` denominator, 0 for a single
/// value) and standard error `std / sqrt(n)`.
pub fn mean_std_stderr(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std, std / n.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub t: u64,
    /// Number of runs that reached iteration `t`.
    pub n: usize,
    pub mean_best_y: f64,
    pub std_best_y: f64,
    pub stderr_best_y: f64,
    pub mean_log_dist: Option<f64>,
    pub stderr_log_dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub rows: Vec<SummaryRow>,
}

/// Per-iteration statistics across runs, using the last record of each run
/// at every `t` (the initial design collapses to its final state at `t = 0`).
pub fn summarize(algorithm: Algorithm, traces: &[&RunTrace]) -> Summary {
    let mut by_t: BTreeMap<u64, (Vec<f64>, Vec<Option<f64>>)> = BTreeMap::new();
    for trace in traces {
        let mut last: BTreeMap<u64, (f64, Option<f64>)> = BTreeMap::new();
        for r in &trace.records {
            last.insert(r.t, (r.best_y, r.log_dist));
        }
        for (t, (best, ld)) in last {
            let e = by_t.entry(t).or_default();
            e.0.push(best);
            e.1.push(ld);
        }
    }
    let rows = by_t
        .into_iter()
        .map(|(t, (best, ld))| {
            let (mean_best_y, std_best_y, stderr_best_y) = mean_std_stderr(&best);
            let ld: Option<Vec<f64>> = ld.into_iter().collect();
            let (mean_log_dist, stderr_log_dist) = match ld {
                Some(v) => {
                    let (m, _, se) = mean_std_stderr(&v);
                    (Some(m), Some(se))
                }
                None => (None, None),
            };
            SummaryRow {
                t,
                n: best.len(),
                mean_best_y,
                std_best_y,
                stderr_best_y,
                mean_log_dist,
                stderr_log_dist,
            }
        })
        .collect();
    Summary { algorithm, rows }
}

pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in &summary.rows {
        w.write_record([
            r.t.to_string(),
            num(r.mean_best_y),
            num(r.std_best_y),
            num(r.stderr_best_y),
            opt(r.mean_log_dist),
            opt(r.stderr_log_dist),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `(t, mean log distance, standard error)` rows for plotting.
pub fn emit_log_distance(summary: &Summary, path: &Path) -> Result<()> {
    let mut rows = Vec::with_capacity(summary.rows.len());
    for r in &summary.rows {
        match (r.mean_log_dist, r.stderr_log_dist) {
            (Some(m), Some(se)) => rows.push([r.t.to_string(), num(m), num(se)]),
            _ => return Err(hubo_core::Error::MissingOptimum.into()),
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LOG_DISTANCE_COLUMNS)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunEntry {
    pub algorithm: String,
    pub repeat: u32,
    pub seed: u64,
    pub complete: bool,
    pub evaluations: usize,
    pub final_best_y: Option<f64>,
    pub initial_center: Vec<f64>,
    pub initial_side: f64,
    pub domain_side: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FailureEntry {
    pub algorithm: String,
    pub repeat: u32,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchmarkInfo {
    pub name: String,
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub optimum_value: f64,
    pub optimum_point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub benchmark: BenchmarkInfo,
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
    pub runs: Vec<RunEntry>,
    pub failures: Vec<FailureEntry>,
}

impl Manifest {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Run configuration for one repeat of a BO algorithm.
pub fn run_config(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    space: &InitialSpace,
    seed: u64,
) -> hubo_core::Result<RunConfig> {
    let expansion = space.expansion(spec.alpha)?;
    let hd = match algorithm {
        Algorithm::HdHubo => Some(HdConfig::new(spec.lambda, spec.n0, spec.l_h)?),
        _ => None,
    };
    let mut cfg = RunConfig::new(algorithm, expansion, hd, spec.horizon, seed)?;
    let kind = match algorithm {
        Algorithm::HdHubo => BetaKind::HdHubo { l_h: spec.l_h },
        _ => BetaKind::Hubo {
            initial_side: space.initial.side(),
            alpha: spec.alpha,
        },
    };
    cfg.beta = BetaSchedule::new(kind, spec.delta, spec.s1, spec.s2, spec.dim)?;
    cfg.maximizer = MaximizerConfig::new(spec.restarts, spec.max_evals, 0)?;
    cfg.kernel = spec.kernel;
    cfg.incumbent = spec.incumbent;
    cfg.n_init = spec.n_init;
    cfg.validate()?;
    Ok(cfg)
}

/// One repeat of one algorithm. Random search spends the same number of
/// evaluations as a BO run including its initial design.
pub fn run_single(
    spec: &ExperimentSpec,
    bench: &BenchmarkFunction,
    algorithm: Algorithm,
    seed: u64,
) -> hubo_core::Result<(InitialSpace, RunTrace)> {
    let space = initial_space(bench, spec.fraction, seed)?;
    let obj = bench.objective(spec.noise_std);
    let trace = match algorithm {
        Algorithm::Random => {
            let region = match spec.random_region {
                RandomRegion::Domain => space.domain.clone(),
                RandomRegion::Canonical => bench.domain(),
            };
            random_search(&obj, &region, spec.n_init as u64 + spec.horizon, seed)?
        }
        _ => run(&obj, &run_config(spec, algorithm, &space, seed)?)?,
    };
    Ok((space, trace))
}

pub fn trace_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("trace_{algorithm}_seed{seed}.csv")
}

struct Outcome {
    algorithm: Algorithm,
    repeat: u32,
    seed: u64,
    result: std::result::Result<(InitialSpace, RunTrace), String>,
}

fn worker_count(spec: &ExperimentSpec, jobs: usize) -> usize {
    let n = if spec.workers == 0 {
        thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        spec.workers
    };
    n.clamp(1, jobs.max(1))
}

/// Runs every (algorithm, repeat) pair on a worker pool, writes the per-run
/// traces as they finish and then the summaries and the manifest.
///
/// Failing runs are recorded in the manifest and do not stop the others.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    let bench = make_benchmark(&spec.benchmark, Some(spec.dim))?;
    run_experiment_with(spec, &bench)
}

/// As [`run_experiment`] with an explicit objective in place of the named
/// benchmark.
pub fn run_experiment_with(spec: &ExperimentSpec, bench: &BenchmarkFunction) -> Result<Manifest> {
    spec.validate()?;
    if bench.dim != spec.dim {
        return Err(hubo_core::Error::DimensionMismatch {
            expected: spec.dim,
            actual: bench.dim,
        }
        .into());
    }
    let out = &spec.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;

    let jobs: Vec<(Algorithm, u32)> = spec
        .algorithms
        .iter()
        .flat_map(|&a| (0..spec.repeats).map(move |r| (a, r)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Outcome)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let write_errors: Mutex<Vec<CliError>> = Mutex::new(Vec::new());

    thread::scope(|s| {
        for _ in 0..worker_count(spec, jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(algorithm, repeat)) = jobs.get(i) else {
                    break;
                };
                let seed = spec.run_seed(repeat);
                let result = run_single(spec, bench, algorithm, seed).map_err(|e| e.to_string());
                if let Ok((_, trace)) = &result {
                    let path = out.join(trace_file_name(algorithm, seed));
                    if let Err(e) = write_trace_csv(&path, trace, spec.wall_time) {
                        write_errors.lock().expect("no poisoned lock").push(e);
                    }
                }
                let outcome = Outcome {
                    algorithm,
                    repeat,
                    seed,
                    result,
                };
                results.lock().expect("no poisoned lock").push((i, outcome));
            });
        }
    });

    if let Some(e) = write_errors
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .next()
    {
        return Err(e);
    }
    let mut outcomes = results.into_inner().expect("no poisoned lock");
    outcomes.sort_by_key(|(i, _)| *i);

    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (_, o) in &outcomes {
        match &o.result {
            Ok((space, trace)) => {
                files.push(FileEntry {
                    path: trace_file_name(o.algorithm, o.seed),
                    kind: "trace",
                    algorithm: Some(o.algorithm.to_string()),
                    seed: Some(o.seed),
                });
                runs.push(RunEntry {
                    algorithm: o.algorithm.to_string(),
                    repeat: o.repeat,
                    seed: o.seed,
                    complete: trace.complete,
                    evaluations: trace.len(),
                    final_best_y: trace.final_best_y(),
                    initial_center: space.initial.center().to_vec(),
                    initial_side: space.initial.side(),
                    domain_side: space.domain.side(),
                });
                if let Some(reason) = &trace.failure {
                    failures.push(FailureEntry {
                        algorithm: o.algorithm.to_string(),
                        repeat: o.repeat,
                        seed: o.seed,
                        reason: reason.clone(),
                    });
                }
            }
            Err(reason) => failures.push(FailureEntry {
                algorithm: o.algorithm.to_string(),
                repeat: o.repeat,
                seed: o.seed,
                reason: reason.clone(),
            }),
        }
    }

    for &algorithm in &spec.algorithms {
        let traces: Vec<&RunTrace> = outcomes
            .iter()
            .filter(|(_, o)| o.algorithm == algorithm)
            .filter_map(|(_, o)| o.result.as_ref().ok().map(|(_, t)| t))
            .collect();
        let summary = summarize(algorithm, &traces);
        let name = format!("summary_{algorithm}.csv");
        write_summary_csv(&out.join(&name), &summary)?;
        files.push(FileEntry {
            path: name,
            kind: "summary",
            algorithm: Some(algorithm.to_string()),
            seed: None,
        });
        if spec.plot_data {
            let name = format!("logdist_{algorithm}.csv");
            emit_log_distance(&summary, &out.join(&name))?;
            files.push(FileEntry {
                path: name,
                kind: "log_distance",
                algorithm: Some(algorithm.to_string()),
                seed: None,
            });
        }
    }

    files.push(FileEntry {
        path: "manifest.json".to_string(),
        kind: "manifest",
        algorithm: None,
        seed: None,
    });
    let manifest = Manifest {
        config: spec.to_json(),
        benchmark: BenchmarkInfo {
            name: bench.name.clone(),
            dim: bench.dim,
            lower: bench.lower,
            upper: bench.upper,
            optimum_value: bench.optimum_value,
            optimum_point: bench.optimum_point.clone(),
        },
        warnings: spec.warnings(),
        files,
        runs,
        failures,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

/// Paths of all files listed in a manifest, resolved against `out_dir`.
pub fn manifest_paths(spec: &ExperimentSpec, manifest: &Manifest) -> Vec<PathBuf> {
    manifest
        .files
        .iter()
        .map(|f| spec.out_dir.join(&f.path))
        .collect()
}
