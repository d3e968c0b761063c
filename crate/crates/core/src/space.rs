//! Expanding search-space geometry.
//!
//! Each iteration grows the current hypercube by `((b - a)/2) t^alpha` on
//! every face and then moves its centre to the point of `C_initial` closest to
//! the incumbent. After `t` iterations the side is `(b - a)(1 + sum j^alpha)`.

use crate::error::{check_dim, invalid, Result};
use crate::series::{self, check_alpha, PartialSumCache, SeriesParams};

/// Axis-aligned hypercube given by its centre and half side length.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    center: Vec<f64>,
    half_side: f64,
}

impl SearchBox {
    pub fn new(center: Vec<f64>, half_side: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("center", "dimension must be positive"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", "coordinates must be finite"));
        }
        if !(half_side > 0.0 && half_side.is_finite()) {
            return Err(invalid("half_side", "must be positive and finite"));
        }
        Ok(Self { center, half_side })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn from_interval(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid("interval", format!("[{lo}, {hi}] is empty")));
        }
        Self::new(vec![0.5 * (lo + hi); dim], 0.5 * (hi - lo))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_side(&self) -> f64 {
        self.half_side
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_side
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.center[i] - self.half_side
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.center[i] + self.half_side
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lower(i)).collect()
    }

    pub fn upper_corner(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.upper(i)).collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower(i) && v <= self.upper(i)))
    }

    /// Whether `other` lies inside `self` (boundary inclusive).
    pub fn contains_box(&self, other: &SearchBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| other.lower(i) >= self.lower(i) && other.upper(i) <= self.upper(i))
    }

    /// Componentwise clamp of `x` into the box, i.e. its Euclidean projection.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(self.lower(i), self.upper(i)))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }
}

/// Initial space `X_0`, translation domain `C_initial` and expansion rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    initial: SearchBox,
    domain: SearchBox,
    alpha: f64,
}

impl ExpansionConfig {
    pub fn new(initial: SearchBox, domain: SearchBox, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_dim(initial.dim(), domain.dim())?;
        if !domain.contains_box(&initial) {
            return Err(invalid(
                "c_initial",
                "must contain the initial search space",
            ));
        }
        Ok(Self {
            initial,
            domain,
            alpha,
        })
    }

    /// `X_0 = [a, b]^dim` and `C_initial = [c_min, c_max]^dim`.
    pub fn from_intervals(
        a: f64,
        b: f64,
        c_min: f64,
        c_max: f64,
        alpha: f64,
        dim: usize,
    ) -> Result<Self> {
        if !(c_max > c_min) {
            return Err(invalid("c_max", "must exceed c_min"));
        }
        Self::new(
            SearchBox::from_interval(a, b, dim)?,
            SearchBox::from_interval(c_min, c_max, dim)?,
            alpha,
        )
    }

    pub fn initial(&self) -> &SearchBox {
        &self.initial
    }

    /// The translation domain `C_initial`.
    pub fn domain(&self) -> &SearchBox {
        &self.domain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    /// Side length `b - a` of the initial space.
    pub fn initial_side(&self) -> f64 {
        self.initial.side()
    }
}

/// `X_{t-1} -> X'_t`: grow every face by `((b - a)/2) t^alpha`.
pub fn expand(bx: &SearchBox, t: u64, cfg: &ExpansionConfig) -> SearchBox {
    debug_assert!(t >= 1);
    SearchBox {
        center: bx.center.clone(),
        half_side: bx.half_side + 0.5 * cfg.initial_side() * series::term(t, cfg.alpha),
    }
}

/// `X'_t -> X_t`: recentre at the point of `C_initial` closest to `best_x`.
pub fn translate(bx: &SearchBox, best_x: &[f64], cfg: &ExpansionConfig) -> Result<SearchBox> {
    check_dim(bx.dim(), best_x.len())?;
    Ok(SearchBox {
        center: cfg.domain.clamp(best_x),
        half_side: bx.half_side,
    })
}

/// `(b - a)(1 + sum_{j=1}^t j^alpha)`.
pub fn side_length_closed_form(t: u64, cfg: &ExpansionConfig) -> f64 {
    if t == 0 {
        return cfg.initial_side();
    }
    let sum = series::partial_sum(SeriesParams {
        alpha: cfg.alpha,
        n: t,
    });
    cfg.initial_side() * (1.0 + sum)
}

/// Natural log of `Vol(X_t)`.
pub fn log_volume(t: u64, cfg: &ExpansionConfig) -> f64 {
    cfg.dim() as f64 * side_length_closed_form(t, cfg).ln()
}

/// `Vol(X_t) = side_t^d`; saturates to infinity beyond the f64 range.
pub fn volume(t: u64, cfg: &ExpansionConfig) -> f64 {
    let side = side_length_closed_form(t, cfg);
    let log_v = cfg.dim() as f64 * side.ln();
    if log_v < f64::MAX.ln() {
        side.powi(cfg.dim() as i32)
    } else {
        log_v.exp()
    }
}

/// The region `C_T` containing every `X_t` for `1 <= t <= T`.
pub fn envelope(horizon: u64, cfg: &ExpansionConfig) -> SearchBox {
    SearchBox {
        center: cfg.domain.center.clone(),
        half_side: cfg.domain.half_side + 0.5 * side_length_closed_form(horizon, cfg),
    }
}

/// Outcome of the reachability computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reachability {
    /// Smallest iteration from which every admissible `X_t` covers the target.
    Reached(u64),
    /// No horizon up to [`REACHABILITY_LIMIT`] suffices.
    ExceedsLimit,
}

pub const REACHABILITY_LIMIT: u64 = 1_000_000_000;

/// Smallest `T_0 >= 1` such that the box of side `side_T0`, wherever its
/// centre sits inside `C_initial`, contains the target box
/// `prod_i [target_lo_i, target_hi_i]`.
///
/// Per dimension this is `(c_min - c_max)/2 + side/2 >= b_g - c_0` together with
/// the mirrored condition `(c_min - c_max)/2 + side/2 >= c_0 - a_g`. Those
/// conditions also hold for every later iteration since the side only grows.
pub fn reachability_horizon(
    target_lo: &[f64],
    target_hi: &[f64],
    cfg: &ExpansionConfig,
) -> Result<Reachability> {
    check_dim(cfg.dim(), target_lo.len())?;
    check_dim(cfg.dim(), target_hi.len())?;
    let dom = &cfg.domain;
    let mut need = f64::NEG_INFINITY;
    for i in 0..cfg.dim() {
        if !(target_hi[i] >= target_lo[i]) {
            return Err(invalid("target", "upper bound below lower bound"));
        }
        let c0 = dom.center[i];
        // widen the target so that it contains c_0
        let a_g = target_lo[i].min(c0);
        let b_g = target_hi[i].max(c0);
        need = need.max((b_g - c0).max(c0 - a_g));
    }
    // required half side of X_t
    let required = need + dom.half_side;
    let satisfied = |sum: f64| 0.5 * cfg.initial_side() * (1.0 + sum) >= required;

    let ceiling = series::partial_sum_upper_bound(SeriesParams {
        alpha: cfg.alpha,
        n: REACHABILITY_LIMIT,
    })?;
    if !satisfied(ceiling) {
        return Ok(Reachability::ExceedsLimit);
    }
    let mut cache = PartialSumCache::new(cfg.alpha);
    while cache.n() < REACHABILITY_LIMIT {
        if satisfied(cache.advance()) {
            return Ok(Reachability::Reached(cache.n()));
        }
    }
    Ok(Reachability::ExceedsLimit)
}

/// Convenience form of [`reachability_horizon`] for the cube `[a_g, b_g]^d`.
pub fn reachability_horizon_cube(
    a_g: f64,
    b_g: f64,
    cfg: &ExpansionConfig,
) -> Result<Reachability> {
    let d = cfg.dim();
    reachability_horizon(&vec![a_g; d], &vec![b_g; d], cfg)
}

/// The evolving search space of one optimisation run. Keeps the partial sum
/// cached so each step costs O(d).
#[derive(Debug, Clone)]
pub struct ExpandingSpace {
    cfg: ExpansionConfig,
    current: SearchBox,
    sums: PartialSumCache,
}

impl ExpandingSpace {
    pub fn new(cfg: ExpansionConfig) -> Self {
        let current = cfg.initial.clone();
        let sums = PartialSumCache::new(cfg.alpha);
        Self { cfg, current, sums }
    }

    pub fn config(&self) -> &ExpansionConfig {
        &self.cfg
    }

    /// Iteration index of the current box (0 before the first step).
    pub fn t(&self) -> u64 {
        self.sums.n()
    }

    pub fn current(&self) -> &SearchBox {
        &self.current
    }

    /// Partial sum `sum_{j=1}^t j^alpha` of the current iteration.
    pub fn partial_sum(&self) -> f64 {
        self.sums.sum()
    }

    /// Expands and translates towards `best_x`, returning `X_t`.
    pub fn advance(&mut self, best_x: &[f64]) -> Result<&SearchBox> {
        check_dim(self.cfg.dim(), best_x.len())?;
        let sum = self.sums.advance();
        self.current = SearchBox {
            center: self.cfg.domain.clamp(best_x),
            half_side: 0.5 * self.cfg.initial_side() * (1.0 + sum),
        };
        Ok(&self.current)
    }
}
