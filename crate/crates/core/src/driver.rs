//! Outer optimisation loops and regret accounting.
//!
//! Three search-space strategies share one loop: the expanding box
//! ([`Algorithm::Hubo`]), the hypercube-restricted expanding box
//! ([`Algorithm::HdHubo`]) and a fixed-centre box whose volume doubles every
//! `3d` iterations ([`Algorithm::Vol2`]).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};

use crate::acquisition::{
    maximize_over_box, maximize_over_cubes, BetaKind, BetaSchedule, MaximizerConfig, Ucb,
};
use crate::error::{check_dim, invalid, Error, Result};
use crate::gp::{fit_mle, Dataset, FitConfig, GpModel, KernelFamily, Posterior};
use crate::hypercubes::{sample_cubes, uniform_point, HdConfig};
use crate::rng::{derive_seed, label, stream, StreamRng};
use crate::space::{ExpandingSpace, ExpansionConfig, SearchBox};

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A black-box function to maximise. Observation noise is added by the
/// driver; `eval` itself must be deterministic.
#[derive(Clone)]
pub struct Objective {
    eval: ObjectiveFn,
    dim: usize,
    pub noise_std: f64,
    pub optimum_value: Option<f64>,
    pub optimum_point: Option<Vec<f64>>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim)
            .field("noise_std", &self.noise_std)
            .field("optimum_value", &self.optimum_value)
            .field("optimum_point", &self.optimum_point)
            .finish_non_exhaustive()
    }
}

impl Objective {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        assert!(dim > 0, "objective dimension must be positive");
        Self {
            eval: Arc::new(eval),
            dim,
            noise_std: 0.0,
            optimum_value: None,
            optimum_point: None,
        }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_optimum(mut self, value: f64, point: Option<Vec<f64>>) -> Self {
        self.optimum_value = Some(value);
        self.optimum_point = point;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Noiseless `f(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Hubo,
    HdHubo,
    Vol2,
    Random,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hubo => "hubo",
            Algorithm::HdHubo => "hdhubo",
            Algorithm::Vol2 => "vol2",
            Algorithm::Random => "random",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hubo" => Ok(Algorithm::Hubo),
            "hdhubo" | "hd-hubo" => Ok(Algorithm::HdHubo),
            "vol2" => Ok(Algorithm::Vol2),
            "random" => Ok(Algorithm::Random),
            other => Err(invalid("algorithm", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Which point the search box follows between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Incumbent {
    /// The observation with the largest noisy `y`.
    #[default]
    BestObserved,
    /// The observed point with the largest posterior mean under the most
    /// recently fitted model.
    PosteriorMean,
}

impl Incumbent {
    pub fn name(self) -> &'static str {
        match self {
            Incumbent::BestObserved => "observed",
            Incumbent::PosteriorMean => "posterior_mean",
        }
    }
}

impl FromStr for Incumbent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "observed" => Ok(Incumbent::BestObserved),
            "posterior_mean" => Ok(Incumbent::PosteriorMean),
            other => Err(invalid(
                "incumbent",
                format!("unknown incumbent rule `{other}`"),
            )),
        }
    }
}

/// Everything one optimisation run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub expansion: ExpansionConfig,
    pub hd: Option<HdConfig>,
    pub beta: BetaSchedule,
    pub maximizer: MaximizerConfig,
    pub kernel: KernelFamily,
    pub incumbent: Incumbent,
    pub budget: u64,
    pub n_init: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults: `max(3, d + 1)` initial points, `delta = 0.1`, `s1 = s2 = 1`,
    /// 20 restarts and 1000 acquisition evaluations, squared-exponential kernel.
    pub fn new(
        algorithm: Algorithm,
        expansion: ExpansionConfig,
        hd: Option<HdConfig>,
        budget: u64,
        seed: u64,
    ) -> Result<Self> {
        let d = expansion.dim();
        let beta = match (algorithm, &hd) {
            (Algorithm::HdHubo, Some(h)) => BetaSchedule::hd_hubo(h.l_h, d)?,
            _ => BetaSchedule::hubo(expansion.initial_side(), expansion.alpha(), d)?,
        };
        let cfg = Self {
            algorithm,
            expansion,
            hd,
            beta,
            maximizer: MaximizerConfig::default(),
            kernel: KernelFamily::SquaredExponential,
            incumbent: Incumbent::default(),
            budget,
            n_init: (d + 1).max(3),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 {
            return Err(invalid("n_init", "must be at least 2"));
        }
        match (self.algorithm, self.hd.is_some()) {
            (Algorithm::HdHubo, false) => return Err(invalid("hd", "required by hdhubo")),
            (Algorithm::Hubo | Algorithm::Vol2, true) => {
                return Err(invalid("hd", "only valid for hdhubo"));
            }
            (Algorithm::Random, _) => {
                return Err(invalid("algorithm", "random search has no run config"))
            }
            _ => {}
        }
        match (self.algorithm, self.beta.kind) {
            (Algorithm::HdHubo, BetaKind::HdHubo { .. })
            | (Algorithm::Hubo | Algorithm::Vol2, BetaKind::Hubo { .. }) => {}
            _ => return Err(invalid("beta", "schedule does not match the algorithm")),
        }
        check_dim(self.expansion.dim(), self.beta.dim)
    }
}

/// One evaluation of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Iteration index; the initial design is recorded at `t = 0`.
    pub t: u64,
    pub x: Vec<f64>,
    pub y: f64,
    /// Running maximum of the observed `y`.
    pub best_y: f64,
    /// `f(x*) - f(x_t)`, for `t >= 1` when the optimum is known.
    pub regret: Option<f64>,
    pub cumulative_regret: Option<f64>,
    /// `log10(f(x*) - f+)` with `f+` the best noiseless value so far.
    pub log_dist: Option<f64>,
    pub side: f64,
    pub n_cubes: Option<u64>,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// False when the run stopped early; `failure` then holds the reason.
    pub complete: bool,
    pub failure: Option<String>,
}

impl RunTrace {
    fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            seed,
            records: Vec::new(),
            complete: true,
            failure: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_best_y(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_y)
    }

    fn abort(&mut self, reason: impl Into<String>) {
        self.complete = false;
        self.failure = Some(reason.into());
    }

    /// Trace equality ignoring wall-clock times.
    pub fn same_outcome(&self, other: &RunTrace) -> bool {
        let strip = |t: &RunTrace| -> Vec<TraceRecord> {
            t.records
                .iter()
                .cloned()
                .map(|mut r| {
                    r.wall = Duration::ZERO;
                    r
                })
                .collect()
        };
        self.algorithm == other.algorithm
            && self.complete == other.complete
            && strip(self) == strip(other)
    }
}

/// Draws noisy observations and keeps the incumbent.
struct Observer<'a> {
    obj: &'a Objective,
    noise: StreamRng,
    best: Option<(f64, Vec<f64>)>,
}

impl<'a> Observer<'a> {
    fn new(obj: &'a Objective, seed: u64) -> Self {
        Self {
            obj,
            noise: stream(seed, label::NOISE),
            best: None,
        }
    }

    /// `y = f(x) + eps`; `None` when `f(x)` is not finite.
    fn observe(&mut self, x: &[f64]) -> Option<f64> {
        let f = self.obj.eval(x);
        if !f.is_finite() {
            return None;
        }
        let y = if self.obj.noise_std > 0.0 {
            let eps: f64 = StandardNormal.sample(&mut self.noise);
            f + self.obj.noise_std * eps
        } else {
            f
        };
        if self.best.as_ref().is_none_or(|(b, _)| y > *b) {
            self.best = Some((y, x.to_vec()));
        }
        Some(y)
    }

    fn best_y(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0)
    }

    fn best_x(&self) -> &[f64] {
        &self
            .best
            .as_ref()
            .expect("incumbent after initial design")
            .1
    }
}

/// Side of the doubling baseline after `t` iterations: the volume doubles
/// every `3d` iterations.
pub fn vol2_side(t: u64, initial_side: f64, dim: usize) -> f64 {
    let doublings = t / (3 * dim as u64);
    initial_side * 2f64.powf(doublings as f64 / dim as f64)
}

fn run_loop(obj: &Objective, cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    check_dim(cfg.expansion.dim(), obj.dim())?;
    let mut trace = RunTrace::new(cfg.algorithm, cfg.seed);
    let mut observer = Observer::new(obj, cfg.seed);
    let mut design_rng = stream(cfg.seed, label::INITIAL_DESIGN);
    let mut cube_rng = stream(cfg.seed, label::CUBES);
    let maximizer_seed = derive_seed(cfg.seed, label::MAXIMIZER);
    let x0 = cfg.expansion.initial().clone();
    let mut data = Dataset::new(obj.dim());

    for _ in 0..cfg.n_init {
        let start = Instant::now();
        let x = uniform_point(&x0, &mut design_rng);
        let Some(y) = observer.observe(&x) else {
            trace.abort("objective returned a non-finite value");
            return Ok(trace);
        };
        data.push(x.clone(), y)?;
        trace.records.push(TraceRecord {
            t: 0,
            x,
            y,
            best_y: observer.best_y(),
            regret: None,
            cumulative_regret: None,
            log_dist: None,
            side: x0.side(),
            n_cubes: None,
            wall: start.elapsed(),
        });
    }

    let mut space = ExpandingSpace::new(cfg.expansion.clone());
    let mut last_model: Option<GpModel> = None;
    for t in 1..=cfg.budget {
        let start = Instant::now();
        let bx = match cfg.algorithm {
            Algorithm::Vol2 => SearchBox::new(
                x0.center().to_vec(),
                0.5 * vol2_side(t, x0.side(), obj.dim()),
            )?,
            _ => {
                let target = match cfg.incumbent {
                    Incumbent::BestObserved => Ok(observer.best_x().to_vec()),
                    Incumbent::PosteriorMean => {
                        let fit_cfg = FitConfig::new(x0.side()).with_family(cfg.kernel);
                        last_model
                            .map_or_else(|| fit_mle(&data, &fit_cfg), Ok)
                            .and_then(|m| posterior_mean_incumbent(m, &data))
                    }
                };
                match target {
                    Ok(x) => space.advance(&x)?.clone(),
                    Err(e) => {
                        trace.abort(format!("iteration {t}: {e}"));
                        break;
                    }
                }
            }
        };
        let fit_cfg = FitConfig::new(bx.side()).with_family(cfg.kernel);
        let step = fit_mle(&data, &fit_cfg).and_then(|model| {
            last_model = Some(model);
            let beta = match cfg.algorithm {
                Algorithm::HdHubo => cfg.beta.beta(t),
                _ => cfg.beta.beta_with_side(t, bx.side()),
            };
            let acq = Ucb::new(Posterior::new(model, &data)?, beta)?;
            let mcfg = cfg.maximizer.with_seed(derive_seed(maximizer_seed, t));
            match (cfg.algorithm, &cfg.hd) {
                (Algorithm::HdHubo, Some(hd)) => {
                    let set = sample_cubes(&bx, t, hd, &mut cube_rng);
                    let (x, _) = maximize_over_cubes(&acq, &set, &mcfg)?;
                    Ok((x, Some(set.len() as u64)))
                }
                _ => Ok((maximize_over_box(&acq, &bx, &mcfg)?.0, None)),
            }
        });
        let (x, n_cubes) = match step {
            Ok(v) => v,
            Err(e) => {
                trace.abort(format!("iteration {t}: {e}"));
                break;
            }
        };
        let Some(y) = observer.observe(&x) else {
            trace.abort(format!(
                "iteration {t}: objective returned a non-finite value"
            ));
            break;
        };
        data.push(x.clone(), y)?;
        trace.records.push(TraceRecord {
            t,
            x,
            y,
            best_y: observer.best_y(),
            regret: None,
            cumulative_regret: None,
            log_dist: None,
            side: bx.side(),
            n_cubes,
            wall: start.elapsed(),
        });
    }

    if obj.optimum_value.is_some() {
        compute_regret(&mut trace, obj)?;
    }
    Ok(trace)
}

fn posterior_mean_incumbent(model: GpModel, data: &Dataset) -> Result<Vec<f64>> {
    let post = Posterior::new(model, data)?;
    let mut best: Option<(f64, usize)> = None;
    for (i, x) in data.points().iter().enumerate() {
        let (mean, _) = post.predict(x)?;
        if best.is_none_or(|(b, _)| mean > b) {
            best = Some((mean, i));
        }
    }
    let (_, i) = best.ok_or_else(|| invalid("data", "no observations"))?;
    Ok(data.points()[i].clone())
}

fn expect_algorithm(cfg: &RunConfig, algorithm: Algorithm) -> Result<()> {
    if cfg.algorithm == algorithm {
        Ok(())
    } else {
        Err(invalid(
            "algorithm",
            format!("expected {algorithm}, got {}", cfg.algorithm),
        ))
    }
}

/// Expanding-box optimisation.
pub fn run_hubo(obj: &Objective, cfg: &RunConfig) -> Result<RunTrace> {
    expect_algorithm(cfg, Algorithm::Hubo)?;
    run_loop(obj, cfg)
}

/// Expanding box restricted to random hypercubes.
pub fn run_hdhubo(obj: &Objective, cfg: &RunConfig) -> Result<RunTrace> {
    expect_algorithm(cfg, Algorithm::HdHubo)?;
    run_loop(obj, cfg)
}

/// Fixed-centre box whose volume doubles every `3d` iterations.
pub fn run_vol2(obj: &Objective, cfg: &RunConfig) -> Result<RunTrace> {
    expect_algorithm(cfg, Algorithm::Vol2)?;
    run_loop(obj, cfg)
}

/// Dispatches on `cfg.algorithm`.
pub fn run(obj: &Objective, cfg: &RunConfig) -> Result<RunTrace> {
    run_loop(obj, cfg)
}

/// `T` uniform evaluations inside `bx`, recorded at `t = 1..=T`.
pub fn random_search(obj: &Objective, bx: &SearchBox, budget: u64, seed: u64) -> Result<RunTrace> {
    check_dim(bx.dim(), obj.dim())?;
    let mut trace = RunTrace::new(Algorithm::Random, seed);
    let mut observer = Observer::new(obj, seed);
    let mut rng = stream(seed, label::RANDOM_SEARCH);
    for t in 1..=budget {
        let start = Instant::now();
        let x = uniform_point(bx, &mut rng);
        let Some(y) = observer.observe(&x) else {
            trace.abort(format!(
                "iteration {t}: objective returned a non-finite value"
            ));
            break;
        };
        trace.records.push(TraceRecord {
            t,
            x,
            y,
            best_y: observer.best_y(),
            regret: None,
            cumulative_regret: None,
            log_dist: None,
            side: bx.side(),
            n_cubes: None,
            wall: start.elapsed(),
        });
    }
    if obj.optimum_value.is_some() {
        compute_regret(&mut trace, obj)?;
    }
    Ok(trace)
}

pub const LOG_DIST_FLOOR: f64 = -12.0;

/// `log10(gap)`, floored at -12 once the gap drops to 1e-12.
pub fn log_distance(gap: f64) -> f64 {
    if gap <= 1e-12 {
        LOG_DIST_FLOOR
    } else {
        gap.log10()
    }
}

/// Fills instantaneous and cumulative regret (iterations `t >= 1`) and the
/// log distance to the optimum (every record) from noiseless re-evaluations.
pub fn compute_regret(trace: &mut RunTrace, obj: &Objective) -> Result<()> {
    let opt = obj.optimum_value.ok_or(Error::MissingOptimum)?;
    let mut cumulative = 0.0;
    let mut best_f = f64::NEG_INFINITY;
    for rec in &mut trace.records {
        let f = obj.eval(&rec.x);
        best_f = best_f.max(f);
        rec.log_dist = Some(log_distance(opt - best_f));
        if rec.t >= 1 {
            let r = opt - f;
            cumulative += r;
            rec.regret = Some(r);
            rec.cumulative_regret = Some(cumulative);
        }
    }
    Ok(())
}

/// Average regret `R_t / t` for every iteration with regret filled.
pub fn sublinearity_diagnostic(trace: &RunTrace) -> Vec<(u64, f64)> {
    trace
        .records
        .iter()
        .filter(|r| r.t >= 1)
        .filter_map(|r| r.cumulative_regret.map(|c| (r.t, c / r.t as f64)))
        .collect()
}
