//! GP-UCB acquisition, its exploration schedules, and multi-start
//! derivative-free maximisation over a box or a hypercube set.

use std::f64::consts::PI;

use rand::SeedableRng;

use crate::error::{invalid, Error, Result};
use crate::gp::{Dataset, GpModel, Posterior};
use crate::hypercubes::HypercubeSet;
use crate::rng::{derive_seed, StreamRng};
use crate::series::{self, SeriesParams};
use crate::space::SearchBox;

/// Which exploration schedule to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaKind {
    /// Schedule for the expanding box; depends on the side of `X_t`.
    Hubo { initial_side: f64, alpha: f64 },
    /// Schedule for the hypercube-restricted space; depends on `l_h`.
    HdHubo { l_h: f64 },
}

/// Parameters of the confidence multiplier `beta_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub kind: BetaKind,
    pub delta: f64,
    pub s1: f64,
    pub s2: f64,
    pub dim: usize,
}

impl BetaSchedule {
    pub fn new(kind: BetaKind, delta: f64, s1: f64, s2: f64, dim: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(s1 > 0.0 && s2 > 0.0) {
            return Err(invalid("s1/s2", "must be positive"));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        match kind {
            BetaKind::Hubo {
                initial_side,
                alpha,
            } => {
                if !(initial_side > 0.0) {
                    return Err(invalid("initial_side", "must be positive"));
                }
                series::check_alpha(alpha)?;
            }
            BetaKind::HdHubo { l_h } => {
                if !(l_h > 0.0) {
                    return Err(invalid("l_h", "must be positive"));
                }
            }
        }
        Ok(Self {
            kind,
            delta,
            s1,
            s2,
            dim,
        })
    }

    pub fn hubo(initial_side: f64, alpha: f64, dim: usize) -> Result<Self> {
        Self::new(
            BetaKind::Hubo {
                initial_side,
                alpha,
            },
            0.1,
            1.0,
            1.0,
            dim,
        )
    }

    pub fn hd_hubo(l_h: f64, dim: usize) -> Result<Self> {
        Self::new(BetaKind::HdHubo { l_h }, 0.1, 1.0, 1.0, dim)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        Self::new(self.kind, self.delta, self.s1, self.s2, self.dim)
    }

    /// `beta_t`, clamped below at zero.
    pub fn beta(&self, t: u64) -> f64 {
        match self.kind {
            BetaKind::Hubo {
                initial_side,
                alpha,
            } => {
                let sum = series::partial_sum(SeriesParams { alpha, n: t.max(1) });
                self.hubo_formula(t, initial_side * (1.0 + sum))
            }
            BetaKind::HdHubo { l_h } => {
                let d = self.dim as f64;
                let t = t as f64;
                let v = 2.0 * (PI * PI * t * t / self.delta).ln()
                    + 2.0
                        * d
                        * (2.0
                            * self.s2
                            * l_h
                            * d
                            * (6.0 * d * self.s1 / self.delta).ln().sqrt()
                            * t
                            * t)
                            .ln();
                clamp_beta(v)
            }
        }
    }

    /// The box schedule with `side` in place of `(b - a)(1 + sum j^alpha)`.
    pub fn beta_with_side(&self, t: u64, side: f64) -> f64 {
        self.hubo_formula(t, side)
    }

    fn hubo_formula(&self, t: u64, side: f64) -> f64 {
        let d = self.dim as f64;
        let t = t as f64;
        let pi_t = PI * PI * t * t / 6.0;
        let v = 2.0 * (4.0 * pi_t / self.delta).ln()
            + 4.0
                * d
                * (d * t * self.s2 * side * (4.0 * d * self.s1 / self.delta).ln().sqrt()).ln();
        clamp_beta(v)
    }
}

fn clamp_beta(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.max(0.0)
    }
}

/// Budget of the multi-start acquisition search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub seed: u64,
    /// Smallest pattern step, relative to the width of the searched region.
    pub step_tolerance: f64,
}

impl MaximizerConfig {
    pub fn new(restarts: usize, max_evals: usize, seed: u64) -> Result<Self> {
        if restarts == 0 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        if max_evals < restarts {
            return Err(invalid(
                "max_evals",
                "must be at least the number of restarts",
            ));
        }
        Ok(Self {
            restarts,
            max_evals,
            seed,
            step_tolerance: 1e-6,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_evals: 1000,
            seed: 0,
            step_tolerance: 1e-6,
        }
    }
}

/// `u(x) = mu(x) + sqrt(beta) sigma(x)` over a conditioned model.
#[derive(Debug, Clone)]
pub struct Ucb<'a> {
    posterior: Posterior<'a>,
    sqrt_beta: f64,
}

impl<'a> Ucb<'a> {
    pub fn new(posterior: Posterior<'a>, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(invalid("beta", "must be nonnegative"));
        }
        Ok(Self {
            posterior,
            sqrt_beta: beta.sqrt(),
        })
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let (mean, var) = self.posterior.predict(x)?;
        Ok(mean + self.sqrt_beta * var.max(0.0).sqrt())
    }

    pub fn dim(&self) -> usize {
        self.posterior.dim()
    }
}

/// One-shot `ucb` evaluation.
pub fn ucb(model: &GpModel, data: &Dataset, beta: f64, x: &[f64]) -> Result<f64> {
    Ucb::new(Posterior::new(*model, data)?, beta)?.value(x)
}

#[derive(Debug, Clone)]
struct Candidate {
    x: Vec<f64>,
    value: f64,
}

impl Candidate {
    /// Larger value wins; equal values go to the lexicographically smaller point.
    fn beats(&self, other: &Candidate) -> bool {
        self.value > other.value
            || (self.value == other.value
                && self.x.partial_cmp(&other.x) == Some(std::cmp::Ordering::Less))
    }
}

/// Coordinate-wise pattern search from `start`, clamped to `[lo, hi]`.
fn pattern_search(
    acq: &Ucb,
    lo: &[f64],
    hi: &[f64],
    start: Candidate,
    budget: usize,
    tol: f64,
) -> Result<Candidate> {
    let d = lo.len();
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let mut steps: Vec<f64> = widths.iter().map(|w| 0.25 * w).collect();
    let mut cur = start;
    let mut used = 0usize;
    let active = |steps: &[f64], k: usize| widths[k] > 0.0 && steps[k] >= tol * widths[k];
    while used < budget && (0..d).any(|k| active(&steps, k)) {
        let mut improved = false;
        for k in 0..d {
            if !active(&steps, k) {
                continue;
            }
            for dir in [1.0, -1.0] {
                let v = (cur.x[k] + dir * steps[k]).clamp(lo[k], hi[k]);
                if v == cur.x[k] {
                    continue;
                }
                if used >= budget {
                    return Ok(cur);
                }
                let mut x = cur.x.clone();
                x[k] = v;
                let value = acq.value(&x)?;
                used += 1;
                if value > cur.value {
                    cur = Candidate { x, value };
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok(cur)
}

/// Multi-start maximisation inside the rectangle `[lo, hi]`.
fn maximize_in_bounds(
    acq: &Ucb,
    lo: &[f64],
    hi: &[f64],
    restarts: usize,
    max_evals: usize,
    seed: u64,
    tol: f64,
) -> Result<Candidate> {
    use rand::Rng;
    let mut rng = StreamRng::seed_from_u64(seed);
    let restarts = restarts.clamp(1, max_evals.max(1));
    let mut starts = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let x: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| (l + rng.random::<f64>() * (h - l)).min(h))
            .collect();
        let value = acq.value(&x)?;
        starts.push(Candidate { x, value });
    }
    let remaining = max_evals.saturating_sub(restarts);
    let per = remaining / restarts;
    let extra = remaining % restarts;
    let mut best: Option<Candidate> = None;
    for (i, start) in starts.into_iter().enumerate() {
        let budget = per + usize::from(i < extra);
        let refined = pattern_search(acq, lo, hi, start, budget, tol)?;
        if best.as_ref().is_none_or(|b| refined.beats(b)) {
            best = Some(refined);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Maximises the acquisition over a box: uniform random starts, each refined
/// by a projected pattern search, within `cfg.max_evals` evaluations in total.
pub fn maximize_over_box(
    acq: &Ucb,
    bx: &SearchBox,
    cfg: &MaximizerConfig,
) -> Result<(Vec<f64>, f64)> {
    crate::error::check_dim(acq.dim(), bx.dim())?;
    let best = maximize_in_bounds(
        acq,
        &bx.lower_corner(),
        &bx.upper_corner(),
        cfg.restarts,
        cfg.max_evals,
        cfg.seed,
        cfg.step_tolerance,
    )?;
    Ok((best.x, best.value))
}

/// Maximises the acquisition over every clipped cube of `set` with an equal
/// share of the budget (at least 10 evaluations and one restart per cube) and
/// returns the best point across cubes. Ties go to the lower cube index.
pub fn maximize_over_cubes(
    acq: &Ucb,
    set: &HypercubeSet,
    cfg: &MaximizerConfig,
) -> Result<(Vec<f64>, f64)> {
    crate::error::check_dim(acq.dim(), set.dim())?;
    let n = set.len().max(1);
    let evals = (cfg.max_evals / n).max(10);
    let restarts = (cfg.restarts / n).clamp(1, evals);
    let mut best: Option<Candidate> = None;
    for i in 0..set.len() {
        let Some((lo, hi)) = set.clipped_bounds(i) else {
            continue;
        };
        let seed = derive_seed(cfg.seed, i as u64);
        let cand = maximize_in_bounds(acq, &lo, &hi, restarts, evals, seed, cfg.step_tolerance)?;
        if best.as_ref().is_none_or(|b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    let best = best.ok_or(Error::EmptyHypercubeSet)?;
    Ok((best.x, best.value))
}
