//! Flat `key = value` experiment configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment.
//! Command-line overrides use the same `key=value` form and are applied after
//! the file, so later assignments win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hubo_core::benchmarks::make_benchmark;
use hubo_core::driver::{Algorithm, Incumbent};
use hubo_core::gp::KernelFamily;
use serde_json::{json, Value};

use crate::error::{config_err, io_err, CliError, Result};

/// Every key an experiment config may set.
pub const KEYS: [&str; 25] = [
    "benchmark",
    "dim",
    "algorithms",
    "alpha",
    "lambda",
    "n0",
    "l_h",
    "delta",
    "fraction",
    "budget",
    "repeats",
    "seed",
    "out_dir",
    "noise_std",
    "restarts",
    "max_evals",
    "n_init",
    "s1",
    "s2",
    "kernel",
    "incumbent",
    "wall_time",
    "plot_data",
    "workers",
    "random_region",
];

/// Raw assignments, last one wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments {
    values: BTreeMap<String, String>,
}

impl Assignments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line).map_err(|reason| CliError::Syntax {
                path: origin.to_string(),
                line: i + 1,
                reason,
            })?;
        }
        Ok(())
    }

    pub fn parse_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.parse_text(&text, &path.display().to_string())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        self.assign(assignment).map_err(|reason| CliError::Syntax {
            path: "--set".to_string(),
            line: 0,
            reason,
        })
    }

    fn assign(&mut self, line: &str) -> std::result::Result<(), String> {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("expected `key = value`, got `{line}`"))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("unknown key `{key}`"));
        }
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| config_err(key, format!("`{v}`: {e}"))),
        }
    }

    fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None | Some("") | Some("auto") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(key, format!("`{v}`: {e}"))),
        }
    }
}

/// Evaluation budget `T` excluding the initial design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    /// `30 d`, the low-dimensional protocol.
    ThirtyD,
    /// `10 d`, the high-dimensional protocol.
    TenD,
    Explicit(u64),
}

impl BudgetRule {
    pub fn resolve(self, dim: usize) -> u64 {
        match self {
            BudgetRule::ThirtyD => 30 * dim as u64,
            BudgetRule::TenD => 10 * dim as u64,
            BudgetRule::Explicit(t) => t,
        }
    }
}

impl FromStr for BudgetRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "30d" => Ok(BudgetRule::ThirtyD),
            "10d" => Ok(BudgetRule::TenD),
            other => other
                .parse()
                .map(BudgetRule::Explicit)
                .map_err(|_| "expected `30d`, `10d` or a positive integer".to_string()),
        }
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetRule::ThirtyD => f.write_str("30d"),
            BudgetRule::TenD => f.write_str("10d"),
            BudgetRule::Explicit(t) => write!(f, "{t}"),
        }
    }
}

/// Region searched by the `random` baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomRegion {
    /// The translation domain `C_initial` of the same seed.
    Domain,
    /// The benchmark's canonical domain.
    Canonical,
}

impl FromStr for RandomRegion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "domain" => Ok(RandomRegion::Domain),
            "canonical" => Ok(RandomRegion::Canonical),
            _ => Err("expected `domain` or `canonical`".to_string()),
        }
    }
}

impl RandomRegion {
    fn name(self) -> &'static str {
        match self {
            RandomRegion::Domain => "domain",
            RandomRegion::Canonical => "canonical",
        }
    }
}

fn kernel_from_str(s: &str) -> Result<KernelFamily> {
    match s.trim().to_ascii_lowercase().as_str() {
        "se" | "squared_exponential" => Ok(KernelFamily::SquaredExponential),
        "matern52" => Ok(KernelFamily::Matern52),
        other => Err(config_err("kernel", format!("unknown kernel `{other}`"))),
    }
}

fn kernel_name(k: KernelFamily) -> &'static str {
    match k {
        KernelFamily::SquaredExponential => "se",
        KernelFamily::Matern52 => "matern52",
    }
}

/// A fully resolved experiment: every default is materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub benchmark: String,
    pub dim: usize,
    pub algorithms: Vec<Algorithm>,
    pub alpha: f64,
    pub lambda: f64,
    pub n0: u64,
    /// Hypercube side; defaults to 10% of the initial-space side.
    pub l_h: f64,
    pub delta: f64,
    /// Side of `X_0` as a fraction of the canonical side.
    pub fraction: f64,
    pub budget: BudgetRule,
    /// `T` after applying the budget rule.
    pub horizon: u64,
    pub repeats: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub noise_std: f64,
    pub restarts: usize,
    pub max_evals: usize,
    pub n_init: usize,
    pub s1: f64,
    pub s2: f64,
    pub kernel: KernelFamily,
    pub incumbent: Incumbent,
    pub random_region: RandomRegion,
    /// Record per-iteration wall time in the trace CSVs.
    pub wall_time: bool,
    /// Also write log-distance plot data per algorithm.
    pub plot_data: bool,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl ExperimentSpec {
    pub fn from_assignments(a: &Assignments) -> Result<Self> {
        let benchmark = a
            .get("benchmark")
            .ok_or_else(|| config_err("benchmark", "missing"))?
            .trim()
            .to_ascii_lowercase();
        let dim_hint: Option<usize> = a.parse_opt("dim")?;
        let bench = make_benchmark(&benchmark, dim_hint).map_err(|e| match e {
            hubo_core::Error::UnknownBenchmark(_) => config_err("benchmark", e.to_string()),
            _ => config_err("dim", e.to_string()),
        })?;
        let dim = bench.dim;

        let algorithms = match a.get("algorithms") {
            None => vec![Algorithm::Hubo],
            Some(list) => list
                .split(',')
                .map(|s| {
                    s.parse::<Algorithm>()
                        .map_err(|e| config_err("algorithms", e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let fraction = a.parse_or("fraction", 0.2)?;
        let initial_side = fraction * (bench.upper - bench.lower);
        let budget: BudgetRule = a.parse_or("budget", BudgetRule::ThirtyD)?;
        let kernel = match a.get("kernel") {
            None => KernelFamily::SquaredExponential,
            Some(k) => kernel_from_str(k)?,
        };
        let incumbent = match a.get("incumbent") {
            None => Incumbent::default(),
            Some(v) => v
                .parse()
                .map_err(|e: hubo_core::Error| config_err("incumbent", e.to_string()))?,
        };

        let spec = Self {
            benchmark: bench.name.clone(),
            dim,
            algorithms,
            alpha: a.parse_or("alpha", -1.0)?,
            lambda: a.parse_or("lambda", 1.0)?,
            n0: a.parse_or("n0", 1)?,
            l_h: a.parse_opt("l_h")?.unwrap_or(0.1 * initial_side),
            delta: a.parse_or("delta", 0.1)?,
            fraction,
            budget,
            horizon: budget.resolve(dim),
            repeats: a.parse_or("repeats", 15)?,
            seed: a.parse_or("seed", 0)?,
            out_dir: a.parse_or("out_dir", PathBuf::from("results"))?,
            noise_std: a.parse_or("noise_std", 0.0)?,
            restarts: a.parse_or("restarts", 20)?,
            max_evals: a.parse_or("max_evals", 1000)?,
            n_init: a.parse_opt("n_init")?.unwrap_or((dim + 1).max(3)),
            s1: a.parse_or("s1", 1.0)?,
            s2: a.parse_or("s2", 1.0)?,
            kernel,
            incumbent,
            random_region: a.parse_or("random_region", RandomRegion::Domain)?,
            wall_time: a.parse_or("wall_time", false)?,
            plot_data: a.parse_or("plot_data", false)?,
            workers: a.parse_or("workers", 0)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a config file and then the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut a = Assignments::new();
        if let Some(p) = path {
            a.parse_file(p)?;
        }
        for o in overrides {
            a.set(o)?;
        }
        Self::from_assignments(&a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(config_err(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        for (i, alg) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(alg) {
                return Err(config_err("algorithms", format!("`{alg}` listed twice")));
            }
        }
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(config_err(field, reason))
            }
        };
        check(
            (-1.0..0.0).contains(&self.alpha),
            "alpha",
            "must lie in [-1, 0)",
        )?;
        check(
            self.lambda >= 0.0 && self.lambda.is_finite(),
            "lambda",
            "must be nonnegative",
        )?;
        check(self.n0 >= 1, "n0", "must be at least 1")?;
        check(
            self.l_h > 0.0 && self.l_h.is_finite(),
            "l_h",
            "must be positive",
        )?;
        check(
            self.delta > 0.0 && self.delta < 1.0,
            "delta",
            "must lie in (0, 1)",
        )?;
        check(
            self.fraction > 0.0 && self.fraction <= 1.0,
            "fraction",
            "must lie in (0, 1]",
        )?;
        check(self.horizon >= 1, "budget", "must be at least 1")?;
        check(self.repeats >= 1, "repeats", "must be at least 1")?;
        check(
            self.noise_std >= 0.0 && self.noise_std.is_finite(),
            "noise_std",
            "must be nonnegative",
        )?;
        check(self.restarts >= 1, "restarts", "must be at least 1")?;
        check(
            self.max_evals >= self.restarts,
            "max_evals",
            "must be at least `restarts`",
        )?;
        check(self.n_init >= 2, "n_init", "must be at least 2")?;
        check(
            self.s1 > 0.0 && self.s1.is_finite(),
            "s1",
            "must be positive",
        )?;
        check(
            self.s2 > 0.0 && self.s2.is_finite(),
            "s2",
            "must be positive",
        )?;
        check(
            self.seed.checked_add(u64::from(self.repeats) - 1).is_some(),
            "seed",
            "seed + repeats overflows",
        )
    }

    /// Seed of repeat `r`.
    pub fn run_seed(&self, r: u32) -> u64 {
        self.seed + u64::from(r)
    }

    /// Warnings about settings outside the regime covered by the theory.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let threshold = self.dim as f64 * (self.alpha + 1.0);
        if self.algorithms.contains(&Algorithm::HdHubo) && self.lambda <= threshold {
            w.push(format!(
                "lambda = {} does not exceed d (alpha + 1) = {threshold}; the hypercube set need not approach the optimum",
                self.lambda
            ));
        }
        w
    }

    /// Canonical `key = value` lines with every default written out.
    pub fn to_assignments(&self) -> Vec<(&'static str, String)> {
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        vec![
            ("benchmark", self.benchmark.clone()),
            ("dim", self.dim.to_string()),
            ("algorithms", algs.join(",")),
            ("alpha", self.alpha.to_string()),
            ("lambda", self.lambda.to_string()),
            ("n0", self.n0.to_string()),
            ("l_h", self.l_h.to_string()),
            ("delta", self.delta.to_string()),
            ("fraction", self.fraction.to_string()),
            ("budget", self.budget.to_string()),
            ("repeats", self.repeats.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("noise_std", self.noise_std.to_string()),
            ("restarts", self.restarts.to_string()),
            ("max_evals", self.max_evals.to_string()),
            ("n_init", self.n_init.to_string()),
            ("s1", self.s1.to_string()),
            ("s2", self.s2.to_string()),
            ("kernel", kernel_name(self.kernel).to_string()),
            ("incumbent", self.incumbent.name().to_string()),
            ("random_region", self.random_region.name().to_string()),
            ("wall_time", self.wall_time.to_string()),
            ("plot_data", self.plot_data.to_string()),
            ("workers", self.workers.to_string()),
        ]
    }

    pub fn to_json(&self) -> Value {
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        json!({
            "benchmark": self.benchmark,
            "dim": self.dim,
            "algorithms": algs,
            "alpha": self.alpha,
            "lambda": self.lambda,
            "n0": self.n0,
            "l_h": self.l_h,
            "delta": self.delta,
            "fraction": self.fraction,
            "budget": self.budget.to_string(),
            "horizon": self.horizon,
            "repeats": self.repeats,
            "seed": self.seed,
            "out_dir": self.out_dir.display().to_string(),
            "noise_std": self.noise_std,
            "restarts": self.restarts,
            "max_evals": self.max_evals,
            "n_init": self.n_init,
            "s1": self.s1,
            "s2": self.s2,
            "kernel": kernel_name(self.kernel),
            "incumbent": self.incumbent.name(),
            "random_region": self.random_region.name(),
            "wall_time": self.wall_time,
            "plot_data": self.plot_data,
            "workers": self.workers,
        })
    }
}
