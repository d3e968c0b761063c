//! Numerical checks of the series bounds, the expansion geometry, the
//! reachability horizon and the hypercube distance bound.
//!
//! Every check yields a pass/fail flag plus a margin (positive when the
//! property holds with room to spare). Failures are report content, not
//! errors.

use std::fmt;
use std::path::{Path, PathBuf};

use hubo_core::hypercubes::{nearest_distance_bound, sample_cubes, HdConfig};
use hubo_core::rng::{derive_seed, stream};
use hubo_core::series::{
    gamma_root, p_series_bound, partial_sum_lower_bound, partial_sum_upper_bound, PartialSumCache,
    SeriesParams,
};
use hubo_core::space::{
    envelope, expand, reachability_horizon_cube, side_length_closed_form, translate,
    ExpansionConfig, Reachability, SearchBox,
};
use rand::Rng;

use crate::error::{config_err, io_err, Result};

const SWEEP_ALPHAS: [f64; 4] = [-1.0, -0.9, -0.5, -0.1];
const DIAGNOSTIC_LABEL: u64 = 0xD1A6;

/// Tunable parameters of the diagnostics run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub alpha: f64,
    pub lambda: f64,
    pub dim: usize,
    pub delta: f64,
    /// Seeds per horizon in the distance Monte-Carlo.
    pub seeds: u64,
    pub horizons: Vec<u64>,
    /// Hypercube side as a fraction of the initial side.
    pub l_h_fraction: f64,
    /// Distance of the reachability target from the initial centre, in
    /// initial-space sides.
    pub target_sides: f64,
    pub seed: u64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            alpha: -1.0,
            lambda: 1.0,
            dim: 2,
            delta: 0.2,
            seeds: 200,
            horizons: vec![50, 100, 400],
            l_h_fraction: 0.1,
            target_sides: 5.0,
            seed: 0,
        }
    }
}

impl DiagnosticsSpec {
    /// Applies `key=value` overrides.
    pub fn with_overrides(mut self, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config_err("--set", format!("expected `key=value`, got `{o}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |e: &dyn fmt::Display| config_err(k, format!("`{v}`: {e}"));
            match k {
                "alpha" => self.alpha = v.parse().map_err(|e| bad(&e))?,
                "lambda" => self.lambda = v.parse().map_err(|e| bad(&e))?,
                "dim" => self.dim = v.parse().map_err(|e| bad(&e))?,
                "delta" => self.delta = v.parse().map_err(|e| bad(&e))?,
                "seeds" => self.seeds = v.parse().map_err(|e| bad(&e))?,
                "l_h_fraction" => self.l_h_fraction = v.parse().map_err(|e| bad(&e))?,
                "target_sides" => self.target_sides = v.parse().map_err(|e| bad(&e))?,
                "seed" => self.seed = v.parse().map_err(|e| bad(&e))?,
                "horizons" => {
                    self.horizons = v
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| bad(&e))?
                }
                _ => return Err(config_err(k, "unknown diagnostics key")),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        hubo_core::series::check_alpha(self.alpha)
            .map_err(|e| config_err("alpha", e.to_string()))?;
        if !(self.lambda >= 0.0) {
            return Err(config_err("lambda", "must be nonnegative"));
        }
        if self.dim == 0 || self.dim > 12 {
            return Err(config_err("dim", "must lie in 1..=12"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_err("delta", "must lie in (0, 1)"));
        }
        if self.seeds == 0 {
            return Err(config_err("seeds", "must be positive"));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(config_err(
                "horizons",
                "must be a nonempty list of positive integers",
            ));
        }
        if !(self.l_h_fraction > 0.0) {
            return Err(config_err("l_h_fraction", "must be positive"));
        }
        if !(self.target_sides >= 0.0 && self.target_sides.is_finite()) {
            return Err(config_err("target_sides", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            margin,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {:<34} margin={:<12.4e} {}",
            self.name, self.margin, self.detail
        )
    }
}

/// `p_n` strictly between the lower and upper bounds for `2 <= n <= n_max`.
pub fn series_sandwich(n_max: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for alpha in SWEEP_ALPHAS {
        let mut cache = PartialSumCache::new(alpha);
        cache.advance();
        let (mut low_margin, mut up_margin) = (f64::INFINITY, f64::INFINITY);
        let (mut low_bad, mut up_bad) = (0u64, 0u64);
        for n in 2..=n_max {
            let s = cache.advance();
            let p = SeriesParams { alpha, n };
            let lo = partial_sum_lower_bound(p).expect("alpha in range");
            let hi = partial_sum_upper_bound(p).expect("alpha in range");
            low_margin = low_margin.min((s - lo) / s);
            up_margin = up_margin.min((hi - s) / s);
            low_bad += u64::from(lo >= s);
            up_bad += u64::from(hi <= s);
        }
        out.push(Check::new(
            format!("partial_sum_lower_bound[a={alpha}]"),
            low_bad == 0,
            low_margin,
            format!("{low_bad} violations for n in [2, {n_max}]"),
        ));
        out.push(Check::new(
            format!("partial_sum_upper_bound[a={alpha}]"),
            up_bad == 0,
            up_margin,
            format!("{up_bad} violations for n in [2, {n_max}]"),
        ));
    }
    out
}

/// Every finite `p`-series partial sum up to `n_max` stays below `1/(p-1) + 1`.
pub fn p_series(n_max: u64) -> Vec<Check> {
    [1.5, 2.0, 3.0]
        .into_iter()
        .map(|p| {
            let bound = p_series_bound(p).expect("p > 1");
            let mut s = 0.0;
            let mut bad = 0u64;
            for k in 1..=n_max {
                s += (k as f64).powf(-p);
                bad += u64::from(s >= bound);
            }
            Check::new(
                format!("p_series_bound[p={p}]"),
                bad == 0,
                bound - s,
                format!("{bad} violations for n <= {n_max}"),
            )
        })
        .collect()
}

/// `Gamma(d/2 + 1)^(1/d) < sqrt(d + 2)` for `d <= d_max`.
pub fn gamma_bound(d_max: u32) -> Check {
    let mut margin = f64::INFINITY;
    let mut bad = 0;
    for d in 1..=d_max {
        let g = gamma_root(d).expect("d >= 1");
        let gap = f64::from(d + 2).sqrt() - g;
        margin = margin.min(gap);
        bad += u32::from(gap <= 0.0);
    }
    Check::new(
        "gamma_root_bound",
        bad == 0,
        margin,
        format!("{bad} violations for d <= {d_max}"),
    )
}

/// Iterated expansion against the closed-form side length.
pub fn side_length(t_max: u64, alphas: &[f64]) -> Vec<Check> {
    alphas
        .iter()
        .map(|&alpha| {
            let cfg = ExpansionConfig::from_intervals(0.0, 1.0, 0.0, 1.0, alpha, 1)
                .expect("valid config");
            let mut bx = cfg.initial().clone();
            let mut worst: f64 = 0.0;
            for t in 1..=t_max {
                bx = expand(&bx, t, &cfg);
                let closed = side_length_closed_form(t, &cfg);
                worst = worst.max((bx.side() - closed).abs() / closed);
            }
            Check::new(
                format!("side_length_closed_form[a={alpha}]"),
                worst <= 1e-12,
                1e-12 - worst,
                format!("max relative error {worst:.3e} for t <= {t_max}"),
            )
        })
        .collect()
}

fn contains_within_rounding(outer: &SearchBox, inner: &SearchBox) -> f64 {
    (0..outer.dim())
        .map(|i| (inner.lower(i) - outer.lower(i)).min(outer.upper(i) - inner.upper(i)))
        .fold(f64::INFINITY, f64::min)
}

/// Seeded expand/translate trajectories never leave the envelope `C_T`.
pub fn envelope_containment(spec: &DiagnosticsSpec, trajectories: u64, horizon: u64) -> Check {
    let d = spec.dim;
    let cfg =
        ExpansionConfig::from_intervals(0.0, 1.0, -4.5, 5.5, spec.alpha, d).expect("valid config");
    let env = envelope(horizon, &cfg);
    let tol = 1e-12 * env.side();
    let mut margin = f64::INFINITY;
    let mut bad = 0;
    for k in 0..trajectories {
        let mut rng = stream(derive_seed(spec.seed, DIAGNOSTIC_LABEL), k);
        let mut bx = cfg.initial().clone();
        for t in 1..=horizon {
            let target: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
            bx = translate(&expand(&bx, t, &cfg), &target, &cfg).expect("dimension matches");
            let slack = contains_within_rounding(&env, &bx);
            margin = margin.min(slack);
            bad += u32::from(slack < -tol);
        }
    }
    Check::new(
        "envelope_containment",
        bad == 0,
        margin,
        format!("{bad} violations over {trajectories} trajectories, T = {horizon}"),
    )
}

fn corners(bx: &SearchBox) -> Vec<Vec<f64>> {
    let d = bx.dim();
    (0..1u64 << d)
        .map(|mask| {
            (0..d)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        bx.upper(i)
                    } else {
                        bx.lower(i)
                    }
                })
                .collect()
        })
        .collect()
}

/// Places `X_T` with its centre at every corner of `C_initial` and measures
/// how far the target cube sits inside it (negative when it sticks out).
pub fn worst_corner_slack(cfg: &ExpansionConfig, t: u64, a_g: f64, b_g: f64) -> f64 {
    let half = 0.5 * side_length_closed_form(t, cfg);
    corners(cfg.domain())
        .into_iter()
        .map(|c| {
            c.iter()
                .map(|&ci| (a_g - (ci - half)).min((ci + half) - b_g))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Computes the reachability horizon for a target cube `target_sides` sides
/// away from the initial centre and simulates adversarial centres there.
pub fn reachability(spec: &DiagnosticsSpec) -> Check {
    let cfg = ExpansionConfig::from_intervals(0.0, 1.0, -4.5, 5.5, spec.alpha, spec.dim)
        .expect("valid config");
    let a_g = 0.5 + spec.target_sides - 0.5;
    let b_g = a_g + 1.0;
    match reachability_horizon_cube(a_g, b_g, &cfg) {
        Ok(Reachability::Reached(t0)) => {
            let at = worst_corner_slack(&cfg, t0, a_g, b_g);
            let before = if t0 > 1 {
                worst_corner_slack(&cfg, t0 - 1, a_g, b_g)
            } else {
                f64::NEG_INFINITY
            };
            Check::new(
                "reachability_simulation",
                at >= 0.0 && before < 0.0,
                at,
                format!("target [{a_g}, {b_g}]^{} contained from T0 = {t0}; worst slack before T0 {before:.3e}", spec.dim),
            )
        }
        Ok(Reachability::ExceedsLimit) => Check::new(
            "reachability_simulation",
            false,
            f64::NEG_INFINITY,
            format!(
                "target [{a_g}, {b_g}]^{} needs more than 1e9 iterations",
                spec.dim
            ),
        ),
        Err(e) => Check::new(
            "reachability_simulation",
            false,
            f64::NEG_INFINITY,
            e.to_string(),
        ),
    }
}

/// Distances from a fixed target to the nearest point of `H_t` for one
/// horizon, across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSample {
    pub t: u64,
    pub bound: f64,
    pub violation_rate: f64,
    pub median: f64,
}

/// Fixed target used by the distance Monte-Carlo: inside `X_0 = [0, 1]^d`,
/// away from its centre.
pub fn distance_target(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| if i % 2 == 0 { 0.3 } else { 0.7 })
        .collect()
}

pub fn nearest_distance_samples(spec: &DiagnosticsSpec) -> hubo_core::Result<Vec<DistanceSample>> {
    let d = spec.dim;
    let cfg = ExpansionConfig::from_intervals(0.0, 1.0, 0.0, 1.0, spec.alpha, d)?;
    let hd = HdConfig::new(spec.lambda, 1, spec.l_h_fraction * cfg.initial_side())?;
    let x_star = distance_target(d);
    spec.horizons
        .iter()
        .map(|&t| {
            let parent = SearchBox::new(
                cfg.initial().center().to_vec(),
                0.5 * side_length_closed_form(t, &cfg),
            )?;
            let bound = nearest_distance_bound(
                cfg.initial_side(),
                d,
                spec.alpha,
                spec.lambda,
                spec.delta,
                t,
            )?;
            let mut dists = Vec::with_capacity(spec.seeds as usize);
            for s in 0..spec.seeds {
                let mut rng = stream(derive_seed(spec.seed, t), s);
                let set = sample_cubes(&parent, t, &hd, &mut rng);
                dists.push(set.nearest(&x_star)?.1);
            }
            let violations = dists.iter().filter(|&&x| x >= bound).count();
            dists.sort_by(f64::total_cmp);
            let m = dists.len();
            let median = if m % 2 == 1 {
                dists[m / 2]
            } else {
                0.5 * (dists[m / 2 - 1] + dists[m / 2])
            };
            Ok(DistanceSample {
                t,
                bound,
                violation_rate: violations as f64 / spec.seeds as f64,
                median,
            })
        })
        .collect()
}

pub fn distance_checks(spec: &DiagnosticsSpec) -> Vec<Check> {
    let samples = match nearest_distance_samples(spec) {
        Ok(s) => s,
        Err(e) => {
            return vec![Check::new(
                "nearest_distance",
                false,
                f64::NEG_INFINITY,
                e.to_string(),
            )]
        }
    };
    let mut out: Vec<Check> = samples
        .iter()
        .map(|s| {
            Check::new(
                format!("nearest_distance_bound[t={}]", s.t),
                s.violation_rate <= spec.delta,
                spec.delta - s.violation_rate,
                format!(
                    "violation rate {:.3} over {} seeds, bound {:.4}, median distance {:.4}",
                    s.violation_rate, spec.seeds, s.bound, s.median
                ),
            )
        })
        .collect();
    let drops: Vec<f64> = samples
        .windows(2)
        .map(|w| w[0].median - w[1].median)
        .collect();
    let worst = drops.iter().copied().fold(f64::INFINITY, f64::min);
    let medians: Vec<String> = samples.iter().map(|s| format!("{:.4}", s.median)).collect();
    let regime = if spec.lambda > spec.dim as f64 * (spec.alpha + 1.0) {
        "convergent regime"
    } else {
        "lambda <= d (alpha + 1)"
    };
    out.push(Check::new(
        "nearest_distance_decreasing",
        drops.iter().all(|&x| x > 0.0),
        if drops.is_empty() { 0.0 } else { worst },
        format!("medians [{}] ({regime})", medians.join(", ")),
    ));
    out
}

/// All checks, in report order.
pub fn run_all(spec: &DiagnosticsSpec) -> Vec<Check> {
    let mut out = series_sandwich(100_000);
    out.extend(p_series(1_000_000));
    out.push(gamma_bound(200));
    let mut alphas = vec![-1.0, -0.5];
    if !alphas.contains(&spec.alpha) {
        alphas.push(spec.alpha);
    }
    out.extend(side_length(10_000, &alphas));
    out.push(envelope_containment(spec, 100, 50));
    out.push(reachability(spec));
    out.extend(distance_checks(spec));
    out
}

/// Runs every check and writes `diagnostics.csv` into `out_dir`.
pub fn diagnostics(spec: &DiagnosticsSpec, out_dir: &Path) -> Result<(PathBuf, Vec<Check>)> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let checks = run_all(spec);
    let path = out_dir.join("diagnostics.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["check", "status", "margin", "detail"])?;
    for c in &checks {
        w.write_record([
            c.name.as_str(),
            if c.passed { "pass" } else { "fail" },
            &c.margin.to_string(),
            c.detail.as_str(),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok((path, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_checks_pass_at_small_scale() {
        assert!(series_sandwich(2_000).iter().all(|c| c.passed));
        assert!(p_series(10_000).iter().all(|c| c.passed));
        assert!(gamma_bound(200).passed);
        assert!(side_length(500, &[-1.0, -0.5]).iter().all(|c| c.passed));
    }

    #[test]
    fn reachability_default_is_contained() {
        let spec = DiagnosticsSpec {
            target_sides: 2.0,
            ..DiagnosticsSpec::default()
        };
        let c = reachability(&spec);
        assert!(c.passed, "{c}");
        assert!(c.margin >= 0.0);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let spec = DiagnosticsSpec {
            target_sides: 100.0,
            ..DiagnosticsSpec::default()
        };
        assert!(!reachability(&spec).passed);
    }

    #[test]
    fn zero_lambda_flags_non_decreasing_distances() {
        let spec = DiagnosticsSpec {
            alpha: -0.5,
            lambda: 0.0,
            seeds: 100,
            ..DiagnosticsSpec::default()
        };
        let checks = distance_checks(&spec);
        let trend = checks
            .iter()
            .find(|c| c.name == "nearest_distance_decreasing")
            .unwrap();
        assert!(!trend.passed, "{trend}");
    }

    #[test]
    fn overrides_and_validation() {
        let spec = DiagnosticsSpec::default()
            .with_overrides(&["alpha=-0.5".into(), "horizons=10, 20".into()])
            .unwrap();
        assert_eq!(spec.alpha, -0.5);
        assert_eq!(spec.horizons, vec![10, 20]);
        assert!(DiagnosticsSpec::default()
            .with_overrides(&["alpha=0".into()])
            .is_err());
        assert!(DiagnosticsSpec::default()
            .with_overrides(&["colour=red".into()])
            .is_err());
    }
}
