//! Restricted search space for high dimensions: `N_t` small cubes of side
//! `l_h` with centres drawn uniformly from `X_t`, intersected with `X_t`.

use rand::Rng;

use crate::error::{check_dim, invalid, Result};
use crate::series;
use crate::space::SearchBox;

/// Parameters of the hypercube schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdConfig {
    pub lambda: f64,
    pub n0: u64,
    pub l_h: f64,
}

impl HdConfig {
    pub fn new(lambda: f64, n0: u64, l_h: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "must be nonnegative and finite"));
        }
        if n0 == 0 {
            return Err(invalid("n0", "must be at least 1"));
        }
        if !(l_h > 0.0 && l_h.is_finite()) {
            return Err(invalid("l_h", "must be positive and finite"));
        }
        Ok(Self { lambda, n0, l_h })
    }

    /// Whether `lambda > d (alpha + 1)`, the regime in which the nearest
    /// point of the cube set converges to the optimum.
    pub fn in_convergent_regime(&self, dim: usize, alpha: f64) -> bool {
        self.lambda > dim as f64 * (alpha + 1.0)
    }
}

/// `N_t = n0 * ceil(t^lambda)`, rounding instead of taking the ceiling when
/// `t^lambda` is within 1e-9 of an integer.
pub fn num_cubes(t: u64, cfg: &HdConfig) -> u64 {
    debug_assert!(t >= 1);
    let p = (t as f64).powf(cfg.lambda);
    let r = p.round();
    let c = if (p - r).abs() <= 1e-9 { r } else { p.ceil() };
    cfg.n0 * c as u64
}

/// The cubes `H(z_i, l_h)` for one iteration, clipped to their parent `X_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeSet {
    centers: Vec<Vec<f64>>,
    l_h: f64,
    parent: SearchBox,
}

impl HypercubeSet {
    pub fn new(centers: Vec<Vec<f64>>, l_h: f64, parent: SearchBox) -> Result<Self> {
        if !(l_h > 0.0) {
            return Err(invalid("l_h", "must be positive"));
        }
        for c in &centers {
            check_dim(parent.dim(), c.len())?;
            if !parent.contains(c)? {
                return Err(invalid(
                    "centers",
                    "every centre must lie inside the parent box",
                ));
            }
        }
        Ok(Self {
            centers,
            l_h,
            parent,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn l_h(&self) -> f64 {
        self.l_h
    }

    pub fn parent(&self) -> &SearchBox {
        &self.parent
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.parent.dim()
    }

    /// Bounds of cube `i` intersected with the parent, or `None` when empty.
    pub fn clipped_bounds(&self, i: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let h = 0.5 * self.l_h;
        let z = &self.centers[i];
        let mut lo = Vec::with_capacity(z.len());
        let mut hi = Vec::with_capacity(z.len());
        for (k, &zk) in z.iter().enumerate() {
            let l = (zk - h).max(self.parent.lower(k));
            let u = (zk + h).min(self.parent.upper(k));
            if l > u {
                return None;
            }
            lo.push(l);
            hi.push(u);
        }
        Some((lo, hi))
    }

    /// Membership in `(union_i H(z_i, l_h)) ∩ X_t`.
    pub fn membership(&self, x: &[f64]) -> Result<bool> {
        if !self.parent.contains(x)? {
            return Ok(false);
        }
        // same face arithmetic as `clipped_bounds`, so clamped points stay members
        let h = 0.5 * self.l_h;
        Ok(self.centers.iter().any(|z| {
            z.iter()
                .zip(x)
                .all(|(&zk, &xk)| zk - h <= xk && xk <= zk + h)
        }))
    }

    /// Closest point of the set to `x_star` and its Euclidean distance; ties
    /// go to the lowest cube index.
    pub fn nearest(&self, x_star: &[f64]) -> Result<(Vec<f64>, f64)> {
        check_dim(self.dim(), x_star.len())?;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..self.len() {
            let Some((lo, hi)) = self.clipped_bounds(i) else {
                continue;
            };
            let p: Vec<f64> = x_star
                .iter()
                .enumerate()
                .map(|(k, &v)| v.clamp(lo[k], hi[k]))
                .collect();
            let dist = crate::gp::sq_dist(&p, x_star).sqrt();
            if best.as_ref().is_none_or(|(_, d)| dist < *d) {
                best = Some((p, dist));
            }
        }
        best.ok_or(crate::error::Error::EmptyHypercubeSet)
    }
}

/// Draws `N_t` centres i.i.d. uniform in `parent`.
pub fn sample_cubes<R: Rng + ?Sized>(
    parent: &SearchBox,
    t: u64,
    cfg: &HdConfig,
    rng: &mut R,
) -> HypercubeSet {
    let n = num_cubes(t, cfg) as usize;
    let centers = (0..n).map(|_| uniform_point(parent, rng)).collect();
    HypercubeSet {
        centers,
        l_h: cfg.l_h,
        parent: parent.clone(),
    }
}

/// Distance that the nearest point of `H_t` to a fixed target exceeds with
/// probability at most `delta`:
/// `(2 (b - a) / sqrt(pi)) Gamma(d/2 + 1)^(1/d) ln(1/delta)^(1/d) M_t`.
pub fn nearest_distance_bound(
    initial_side: f64,
    dim: usize,
    alpha: f64,
    lambda: f64,
    delta: f64,
    t: u64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if !(initial_side > 0.0 && initial_side.is_finite()) {
        return Err(invalid("initial_side", "must be positive and finite"));
    }
    let d = u32::try_from(dim).map_err(|_| invalid("dim", "too large"))?;
    let mt = series::distance_decay(alpha, lambda, d, t as f64)?;
    let g = series::gamma_root(d)?;
    let tail = (1.0 / delta).ln().powf(1.0 / f64::from(d));
    Ok(2.0 * initial_side / std::f64::consts::PI.sqrt() * g * tail * mt)
}

/// One point uniform in `bx`.
pub fn uniform_point<R: Rng + ?Sized>(bx: &SearchBox, rng: &mut R) -> Vec<f64> {
    (0..bx.dim())
        .map(|i| (bx.lower(i) + rng.random::<f64>() * bx.side()).min(bx.upper(i)))
        .collect()
}
