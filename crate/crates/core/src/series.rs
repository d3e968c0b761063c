//! Hyperharmonic partial sums, their closed-form bounds, and the gamma-function
//! helpers used by the search-space geometry and diagnostics.

use crate::error::{invalid, Result};

/// Exponent and term count of the partial sum `sum_{j=1}^n j^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub alpha: f64,
    pub n: u64,
}

impl SeriesParams {
    pub fn new(alpha: f64, n: u64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        Ok(Self { alpha, n })
    }
}

/// Validates the expansion-rate regime `-1 <= alpha < 0`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if (-1.0..0.0).contains(&alpha) {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} is outside [-1, 0)")))
    }
}

/// Single term `j^alpha`, exact for the harmonic case.
#[inline]
pub fn term(j: u64, alpha: f64) -> f64 {
    if alpha == -1.0 {
        1.0 / j as f64
    } else {
        (j as f64).powf(alpha)
    }
}

/// `sum_{j=1}^n j^alpha` by direct left-to-right summation.
pub fn partial_sum(p: SeriesParams) -> f64 {
    (1..=p.n).map(|j| term(j, p.alpha)).sum()
}

/// Lower bound of the partial sum: `((n+1)^(a+1) - 1)/(a+1)`, or `ln(n+1)` when `a = -1`.
pub fn partial_sum_lower_bound(p: SeriesParams) -> Result<f64> {
    check_alpha(p.alpha)?;
    let n = p.n as f64;
    Ok(if p.alpha == -1.0 {
        (n + 1.0).ln()
    } else {
        let e = p.alpha + 1.0;
        ((n + 1.0).powf(e) - 1.0) / e
    })
}

/// Upper bound of the partial sum: `1 + (n^(a+1) - 1)/(a+1)`, or `1 + ln(n)` when `a = -1`.
pub fn partial_sum_upper_bound(p: SeriesParams) -> Result<f64> {
    check_alpha(p.alpha)?;
    let n = p.n as f64;
    Ok(if p.alpha == -1.0 {
        1.0 + n.ln()
    } else {
        let e = p.alpha + 1.0;
        1.0 + (n.powf(e) - 1.0) / e
    })
}

/// `1/(p-1) + 1`, an upper bound on every partial sum of `sum k^-p` for `p > 1`.
pub fn p_series_bound(p_exponent: f64) -> Result<f64> {
    if !(p_exponent > 1.0) || !p_exponent.is_finite() {
        return Err(invalid("p_exponent", format!("{p_exponent} must exceed 1")));
    }
    Ok(1.0 / (p_exponent - 1.0) + 1.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `Gamma(d/2 + 1)^(1/d)`.
pub fn gamma_root(d: u32) -> Result<f64> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    let d = f64::from(d);
    Ok((ln_gamma(d / 2.0 + 1.0) / d).exp())
}

/// The shrinking factor `M_t` that governs the distance between the optimum
/// and the nearest point of the hypercube search space.
pub fn distance_decay(alpha: f64, lambda: f64, d: u32, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t >= 1.0) {
        return Err(invalid("t", "must be at least 1"));
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    let decay = t.powf(-lambda / f64::from(d));
    Ok(if alpha == -1.0 {
        (2.0 + t.ln()) * decay
    } else {
        2.0 / (alpha + 1.0) * decay
    })
}

/// Incrementally maintained partial sum, one term per call to [`advance`](Self::advance).
#[derive(Debug, Clone, Copy)]
pub struct PartialSumCache {
    alpha: f64,
    n: u64,
    sum: f64,
}

impl PartialSumCache {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            n: 0,
            sum: 0.0,
        }
    }

    /// Adds the next term and returns the updated sum.
    pub fn advance(&mut self) -> f64 {
        self.n += 1;
        self.sum += term(self.n, self.alpha);
        self.sum
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(alpha: f64, n: u64) -> SeriesParams {
        SeriesParams::new(alpha, n).unwrap()
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(partial_sum(sp(-1.0, 1)), 1.0);
        assert_eq!(partial_sum(sp(0.0, 5)), 5.0);
        assert_relative_eq!(partial_sum(sp(-1.0, 3)), 11.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn series_params_validation() {
        assert!(SeriesParams::new(-0.5, 0).is_err());
        assert!(SeriesParams::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_relative_eq!(
            partial_sum_lower_bound(sp(-1.0, 10)).unwrap(),
            2.397_895_272_798_371,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            partial_sum_lower_bound(sp(-0.5, 3)).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        let lb = partial_sum_lower_bound(sp(-1.0, 1)).unwrap();
        assert_relative_eq!(lb, std::f64::consts::LN_2, epsilon = 1e-15);
        assert!(lb < partial_sum(sp(-1.0, 1)));
    }

    #[test]
    fn upper_bound_examples() {
        assert_relative_eq!(
            partial_sum_upper_bound(sp(-1.0, 10)).unwrap(),
            3.302_585_092_994_046,
            epsilon = 1e-12
        );
        assert_eq!(partial_sum_upper_bound(sp(-1.0, 1)).unwrap(), 1.0);
        assert_relative_eq!(
            partial_sum_upper_bound(sp(-0.5, 4)).unwrap(),
            3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn bounds_reject_alpha_outside_regime() {
        for alpha in [-1.5, 0.0, 0.3] {
            assert!(partial_sum_lower_bound(sp(alpha, 4)).is_err());
            assert!(partial_sum_upper_bound(sp(alpha, 4)).is_err());
            assert!(distance_decay(alpha, 1.0, 2, 5.0).is_err());
        }
    }

    #[test]
    fn p_series_examples() {
        assert_eq!(p_series_bound(2.0).unwrap(), 2.0);
        assert_relative_eq!(p_series_bound(1.5).unwrap(), 3.0);
        assert!(p_series_bound(1.0).is_err());
        assert!(p_series_bound(0.5).is_err());
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        let s: f64 = (1..=10_000u64).map(|k| 1.0 / (k * k) as f64).sum();
        assert!(s < zeta2 && zeta2 < 2.0);
        let s32: f64 = (1..=100_000u64).map(|k| (k as f64).powf(-1.5)).sum();
        assert!(s32 < 2.62 && 2.61 < 3.0);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..60u32 {
            fact *= f64::from(n);
            let exact = fact.ln();
            assert_relative_eq!(ln_gamma(f64::from(n) + 1.0), exact, max_relative = 1e-13);
        }
        // Gamma(1/2) = sqrt(pi), Gamma(3/2) = sqrt(pi)/2
        assert_relative_eq!(
            ln_gamma(0.5),
            0.5 * std::f64::consts::PI.ln(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            ln_gamma(1.5).exp(),
            std::f64::consts::PI.sqrt() / 2.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gamma_root_examples() {
        assert_relative_eq!(gamma_root(2).unwrap(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(
            gamma_root(4).unwrap(),
            2f64.powf(0.25),
            max_relative = 1e-13
        );
        let g6 = gamma_root(6).unwrap();
        assert_relative_eq!(g6, 6f64.powf(1.0 / 6.0), max_relative = 1e-13);
        assert!(g6 < 8f64.sqrt());
        assert!(gamma_root(0).is_err());
    }

    #[test]
    fn gamma_root_below_sqrt_d_plus_two() {
        for d in 1..=200u32 {
            assert!(gamma_root(d).unwrap() < f64::from(d + 2).sqrt(), "d = {d}");
        }
    }

    #[test]
    fn distance_decay_examples() {
        assert_relative_eq!(distance_decay(-1.0, 1.0, 1, 1.0).unwrap(), 2.0);
        assert_relative_eq!(
            distance_decay(-0.5, 0.0, 3, 100.0).unwrap(),
            4.0,
            epsilon = 1e-14
        );
        let e = std::f64::consts::E;
        assert_relative_eq!(
            distance_decay(-1.0, 2.0, 2, e).unwrap(),
            3.0 / e,
            epsilon = 1e-14
        );
    }

    #[test]
    fn distance_decay_eventually_decreasing() {
        // lambda > d(alpha + 1) in every triple
        for &(alpha, lambda, d) in &[
            (-1.0, 0.5, 2u32),
            (-0.5, 2.0, 3),
            (-0.9, 1.0, 5),
            (-1.0, 1.0, 10),
        ] {
            let mut prev = f64::INFINITY;
            let mut decreasing_from = None;
            for t in (1..=200_000u64).step_by(997) {
                let m = distance_decay(alpha, lambda, d, t as f64).unwrap();
                if m < prev {
                    decreasing_from.get_or_insert(t);
                } else {
                    decreasing_from = None;
                }
                prev = m;
            }
            assert!(decreasing_from.is_some(), "({alpha}, {lambda}, {d})");
        }
    }

    #[test]
    fn cache_tracks_direct_sum() {
        let mut cache = PartialSumCache::new(-0.7);
        for n in 1..=500 {
            let s = cache.advance();
            assert_relative_eq!(s, partial_sum(sp(-0.7, n)), max_relative = 1e-13);
        }
        assert_eq!(cache.n(), 500);
    }
}
