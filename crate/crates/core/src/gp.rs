//! Gaussian-process regression: kernels, exact posterior prediction, the log
//! marginal likelihood and a derivative-free maximum-likelihood fit.
//!
//! All covariance solves go through a Cholesky factor of `K + noise*I`.
//! Noiseless models get a diagonal floor of `1e-10 * signal_variance`; when
//! the factorization fails that jitter is escalated by powers of ten.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{check_dim, invalid, Error, Result};

const JITTER_BASE: f64 = 1e-10;
const MAX_JITTER_ESCALATIONS: u32 = 6;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    SquaredExponential,
    /// Matérn with smoothness 5/2.
    Matern52,
}

/// Isotropic stationary covariance function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub signal_variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(invalid("lengthscale", "must be positive and finite"));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(invalid("signal_variance", "must be positive and finite"));
        }
        Ok(Self {
            family,
            lengthscale,
            signal_variance,
        })
    }

    pub fn squared_exponential(lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(
            KernelFamily::SquaredExponential,
            lengthscale,
            signal_variance,
        )
    }

    pub fn matern52(lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern52, lengthscale, signal_variance)
    }

    /// `k(x, x2)`.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        check_dim(x.len(), x2.len())?;
        Ok(self.eval_sq_dist(sq_dist(x, x2)))
    }

    /// Kernel value as a function of the squared Euclidean distance.
    #[inline]
    pub fn eval_sq_dist(&self, r2: f64) -> f64 {
        self.signal_variance * correlation(self.family, self.lengthscale, r2)
    }
}

/// Unit-variance correlation `k(r)/signal_variance`.
#[inline]
fn correlation(family: KernelFamily, lengthscale: f64, r2: f64) -> f64 {
    match family {
        KernelFamily::SquaredExponential => (-0.5 * r2 / (lengthscale * lengthscale)).exp(),
        KernelFamily::Matern52 => {
            let s = 5f64.sqrt() * r2.sqrt() / lengthscale;
            (1.0 + s + s * s / 3.0) * (-s).exp()
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Observations `{(x_i, y_i)}` in a fixed input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dataset dimension must be positive");
        Self {
            dim,
            points: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_parts(dim: usize, points: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if points.len() != targets.len() {
            return Err(invalid("targets", "length differs from points"));
        }
        let mut data = Self::new(dim);
        for (x, y) in points.into_iter().zip(targets) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x", "coordinates must be finite"));
        }
        if !y.is_finite() {
            return Err(invalid("y", "target must be finite"));
        }
        self.points.push(x);
        self.targets.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Index of the largest target; ties go to the earliest observation.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &y) in self.targets.iter().enumerate() {
            if best.is_none_or(|b| y > self.targets[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Kernel, observation-noise variance and constant prior mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpModel {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    pub prior_mean: f64,
}

impl GpModel {
    pub fn new(kernel: KernelSpec, noise_variance: f64, prior_mean: f64) -> Result<Self> {
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(invalid("noise_variance", "must be nonnegative and finite"));
        }
        if !prior_mean.is_finite() {
            return Err(invalid("prior_mean", "must be finite"));
        }
        Ok(Self {
            kernel,
            noise_variance,
            prior_mean,
        })
    }
}

fn gram(kernel: &KernelSpec, points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.signal_variance;
        for j in 0..i {
            let v = kernel.eval_sq_dist(sq_dist(&points[i], &points[j]));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Diagonal jitters to try in turn: none for noisy models (the floor for
/// noiseless ones), then the floor times increasing powers of ten.
fn jitter_schedule(noise_variance: f64, signal_variance: f64) -> impl Iterator<Item = f64> {
    let floor = JITTER_BASE * signal_variance;
    let first = if noise_variance > 0.0 { 0.0 } else { floor };
    std::iter::successors(Some(first), move |&j| {
        Some(if j == 0.0 { floor } else { 10.0 * j })
    })
    .take(MAX_JITTER_ESCALATIONS as usize + 1)
}

/// Cholesky factor of `gram + (noise + jitter) I` with jitter escalation.
fn factorize(
    gram: &DMatrix<f64>,
    noise_variance: f64,
    signal_variance: f64,
) -> Result<Cholesky<f64, Dyn>> {
    for jitter in jitter_schedule(noise_variance, signal_variance) {
        let mut m = gram.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok(chol);
        }
    }
    Err(Error::Factorization {
        escalations: MAX_JITTER_ESCALATIONS,
    })
}

/// A model conditioned on a dataset, ready for repeated prediction.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    model: GpModel,
    data: &'a Dataset,
    factor: Option<Cholesky<f64, Dyn>>,
    /// `(K + noise I)^-1 (y - m)`
    weights: DVector<f64>,
}

impl<'a> Posterior<'a> {
    pub fn new(model: GpModel, data: &'a Dataset) -> Result<Self> {
        if data.is_empty() {
            return Ok(Self {
                model,
                data,
                factor: None,
                weights: DVector::zeros(0),
            });
        }
        let k = gram(&model.kernel, data.points());
        let factor = factorize(&k, model.noise_variance, model.kernel.signal_variance)?;
        let residuals = DVector::from_iterator(
            data.len(),
            data.targets().iter().map(|y| y - model.prior_mean),
        );
        let weights = factor.solve(&residuals);
        Ok(Self {
            model,
            data,
            factor: Some(factor),
            weights,
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Predictive mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.data.dim(), x.len())?;
        let prior_var = self.model.kernel.signal_variance;
        let Some(factor) = &self.factor else {
            return Ok((self.model.prior_mean, prior_var));
        };
        let kx = DVector::from_iterator(
            self.data.len(),
            self.data
                .points()
                .iter()
                .map(|p| self.model.kernel.eval_sq_dist(sq_dist(p, x))),
        );
        let mean = self.model.prior_mean + kx.dot(&self.weights);
        let v = factor
            .l_dirty()
            .solve_lower_triangular(&kx)
            .ok_or(Error::Factorization { escalations: 0 })?;
        let var = (prior_var - v.norm_squared()).max(0.0);
        Ok((mean, var))
    }
}

/// Exact predictive `(mean, variance)` of `model` conditioned on `data` at `x`.
pub fn posterior(model: &GpModel, data: &Dataset, x: &[f64]) -> Result<(f64, f64)> {
    Posterior::new(*model, data)?.predict(x)
}

/// Gaussian log marginal likelihood of the prior-mean-centred targets.
pub fn log_marginal_likelihood(model: &GpModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid(
            "data",
            "log marginal likelihood needs at least one observation",
        ));
    }
    let k = gram(&model.kernel, data.points());
    let factor = factorize(&k, model.noise_variance, model.kernel.signal_variance)?;
    let r = DVector::from_iterator(
        data.len(),
        data.targets().iter().map(|y| y - model.prior_mean),
    );
    let w = factor.solve(&r);
    let log_det: f64 = 2.0
        * factor
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>();
    Ok(-0.5 * r.dot(&w) - 0.5 * log_det - 0.5 * data.len() as f64 * LN_2PI)
}

/// Settings of the maximum-likelihood hyperparameter search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub family: KernelFamily,
    /// Side length of the current search space; scales the lengthscale range.
    pub side_length: f64,
    pub grid_points: usize,
    pub sweeps: usize,
    /// Signal variance used when the targets carry no variance at all.
    pub variance_floor: f64,
}

impl FitConfig {
    pub fn new(side_length: f64) -> Self {
        Self {
            family: KernelFamily::SquaredExponential,
            side_length,
            grid_points: 8,
            sweeps: 20,
            variance_floor: 1e-12,
        }
    }

    pub fn with_family(mut self, family: KernelFamily) -> Self {
        self.family = family;
        self
    }
}

/// Log-space search ranges of (lengthscale, signal variance, noise variance).
#[derive(Debug, Clone, Copy)]
struct HyperBounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl HyperBounds {
    fn new(side_length: f64, var_y: f64) -> Self {
        Self {
            lo: [
                (1e-2 * side_length).ln(),
                (1e-3 * var_y).ln(),
                (1e-6 * var_y).ln(),
            ],
            hi: [(10.0 * side_length).ln(), (1e3 * var_y).ln(), var_y.ln()],
        }
    }

    fn grid_value(&self, axis: usize, i: usize, points: usize) -> f64 {
        if points == 1 {
            return 0.5 * (self.lo[axis] + self.hi[axis]);
        }
        let frac = i as f64 / (points - 1) as f64;
        self.lo[axis] + frac * (self.hi[axis] - self.lo[axis])
    }
}

/// Eigendecomposition of a unit-variance correlation matrix; makes the
/// likelihood O(n) in the two variance parameters for a fixed lengthscale.
struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Squared projections of the residuals onto the eigenvectors.
    projections: Vec<f64>,
}

impl Spectrum {
    fn new(
        family: KernelFamily,
        lengthscale: f64,
        sq_dists: &DMatrix<f64>,
        residuals: &DVector<f64>,
    ) -> Self {
        let corr = sq_dists.map(|r2| correlation(family, lengthscale, r2));
        let eig = SymmetricEigen::new(corr);
        let proj = eig.eigenvectors.tr_mul(residuals);
        Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            projections: proj.iter().map(|p| p * p).collect(),
        }
    }

    fn log_likelihood(&self, signal_variance: f64, noise_variance: f64) -> f64 {
        for jitter in jitter_schedule(noise_variance, signal_variance) {
            let shift = noise_variance + jitter;
            if self
                .eigenvalues
                .iter()
                .all(|&l| signal_variance * l + shift > 0.0)
            {
                let mut quad = 0.0;
                let mut log_det = 0.0;
                for (&l, &p) in self.eigenvalues.iter().zip(&self.projections) {
                    let e = signal_variance * l + shift;
                    quad += p / e;
                    log_det += e.ln();
                }
                return -0.5 * quad - 0.5 * log_det - 0.5 * self.eigenvalues.len() as f64 * LN_2PI;
            }
        }
        f64::NEG_INFINITY
    }
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Maximum-likelihood fit of (lengthscale, signal variance, noise variance).
///
/// A log-uniform grid is scanned in lexicographic order (the first of tied
/// maxima wins), then refined by coordinate-wise pattern search in log space.
/// The prior mean is the sample mean of the targets.
pub fn fit_mle(data: &Dataset, cfg: &FitConfig) -> Result<GpModel> {
    if data.len() < 2 {
        return Err(invalid(
            "data",
            "maximum-likelihood fit needs at least two observations",
        ));
    }
    if !(cfg.side_length > 0.0 && cfg.side_length.is_finite()) {
        return Err(invalid("side_length", "must be positive and finite"));
    }
    if cfg.grid_points == 0 {
        return Err(invalid("grid_points", "must be at least 1"));
    }
    let (mean, var_y) = mean_and_variance(data.targets());
    if !(var_y > cfg.variance_floor) {
        let kernel = KernelSpec::new(cfg.family, cfg.side_length, cfg.variance_floor)?;
        return GpModel::new(kernel, cfg.variance_floor * 1e-6, mean);
    }

    let n = data.len();
    let pts = data.points();
    let mut sq_dists = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = sq_dist(&pts[i], &pts[j]);
            sq_dists[(i, j)] = v;
            sq_dists[(j, i)] = v;
        }
    }
    let residuals = DVector::from_iterator(n, data.targets().iter().map(|y| y - mean));
    let bounds = HyperBounds::new(cfg.side_length, var_y);
    let spectrum = |log_ls: f64| Spectrum::new(cfg.family, log_ls.exp(), &sq_dists, &residuals);

    let g = cfg.grid_points;
    let mut best = [0.0; 3];
    let mut best_lml = f64::NEG_INFINITY;
    let mut best_spec = None;
    for i in 0..g {
        let log_ls = bounds.grid_value(0, i, g);
        let spec = spectrum(log_ls);
        let mut improved = false;
        for j in 0..g {
            let log_sf = bounds.grid_value(1, j, g);
            for k in 0..g {
                let log_sn = bounds.grid_value(2, k, g);
                let lml = spec.log_likelihood(log_sf.exp(), log_sn.exp());
                if lml > best_lml {
                    best_lml = lml;
                    best = [log_ls, log_sf, log_sn];
                    improved = true;
                }
            }
        }
        if improved {
            best_spec = Some(spec);
        }
    }
    let mut current_spec = best_spec.ok_or(Error::Factorization {
        escalations: MAX_JITTER_ESCALATIONS,
    })?;

    let mut steps: [f64; 3] =
        std::array::from_fn(|a| (bounds.hi[a] - bounds.lo[a]) / (g.max(2) - 1) as f64);
    for _ in 0..cfg.sweeps {
        for axis in 0..3 {
            let mut moved = false;
            for dir in [1.0, -1.0] {
                let cand = (best[axis] + dir * steps[axis]).clamp(bounds.lo[axis], bounds.hi[axis]);
                if cand == best[axis] {
                    continue;
                }
                let mut params = best;
                params[axis] = cand;
                let (lml, spec) = if axis == 0 {
                    let spec = spectrum(cand);
                    (
                        spec.log_likelihood(params[1].exp(), params[2].exp()),
                        Some(spec),
                    )
                } else {
                    (
                        current_spec.log_likelihood(params[1].exp(), params[2].exp()),
                        None,
                    )
                };
                if lml > best_lml {
                    best_lml = lml;
                    best = params;
                    if let Some(spec) = spec {
                        current_spec = spec;
                    }
                    moved = true;
                    break;
                }
            }
            if !moved {
                steps[axis] *= 0.5;
            }
        }
        if steps.iter().all(|s| *s < 1e-4) {
            break;
        }
    }

    let kernel = KernelSpec::new(cfg.family, best[0].exp(), best[1].exp())?;
    GpModel::new(kernel, best[2].exp(), mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn se(ls: f64, sf: f64) -> KernelSpec {
        KernelSpec::squared_exponential(ls, sf).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k = se(1.0, 1.0);
        assert_eq!(k.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_relative_eq!(
            k.eval(&[0.0], &[1.0]).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        let m = KernelSpec::matern52(0.7, 2.0).unwrap();
        assert_eq!(m.eval(&[1.0], &[1.0]).unwrap(), 2.0);
        assert!(m.eval(&[0.0], &[70.0]).unwrap() < 1e-10);
        assert!(k.eval(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn matern_closed_form() {
        let m = KernelSpec::matern52(2.0, 1.5).unwrap();
        let r: f64 = 1.3;
        let s = 5f64.sqrt() * r / 2.0;
        let expected = 1.5 * (1.0 + s + 5.0 * r * r / (3.0 * 4.0)) * (-s).exp();
        assert_relative_eq!(m.eval(&[0.0], &[r]).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn matern_decays_monotonically() {
        let m = KernelSpec::matern52(1.0, 1.0).unwrap();
        let mut prev = m.eval_sq_dist(0.0);
        for i in 1..200 {
            let r = i as f64 * 0.5;
            let v = m.eval_sq_dist(r * r);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn kernel_rejects_bad_parameters() {
        assert!(KernelSpec::squared_exponential(0.0, 1.0).is_err());
        assert!(KernelSpec::squared_exponential(1.0, -1.0).is_err());
        assert!(GpModel::new(se(1.0, 1.0), -0.1, 0.0).is_err());
    }

    #[test]
    fn dataset_validation() {
        let mut d = Dataset::new(2);
        assert!(d.push(vec![1.0], 0.0).is_err());
        assert!(d.push(vec![1.0, f64::NAN], 0.0).is_err());
        d.push(vec![1.0, 2.0], 3.0).unwrap();
        d.push(vec![0.0, 2.0], 3.0).unwrap();
        d.push(vec![0.5, 2.0], 1.0).unwrap();
        assert_eq!(d.argmax(), Some(0));
        assert!(Dataset::from_parts(1, vec![vec![0.0]], vec![]).is_err());
    }

    #[test]
    fn empty_data_recovers_prior() {
        let model = GpModel::new(se(0.5, 2.5), 0.1, -1.0).unwrap();
        let data = Dataset::new(3);
        let (m, v) = posterior(&model, &data, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(m, -1.0);
        assert_eq!(v, 2.5);
    }

    #[test]
    fn noiseless_interpolation() {
        let model = GpModel::new(se(1.0, 1.0), 0.0, 0.0).unwrap();
        let data = Dataset::from_parts(2, vec![vec![0.2, 0.4]], vec![1.7]).unwrap();
        let (m, v) = posterior(&model, &data, &[0.2, 0.4]).unwrap();
        assert!((m - 1.7).abs() <= 1e-6 * 2.7);
        assert!(v.abs() <= 1e-8);
    }

    #[test]
    fn two_point_posterior_matches_direct_solve() {
        // K + s I = [[a, c], [c, a]] with a = 1 + 0.01 and c = exp(-0.5 * 0.25)
        let model = GpModel::new(se(1.0, 1.0), 0.01, 0.5).unwrap();
        let data = Dataset::from_parts(1, vec![vec![0.0], vec![0.5]], vec![1.0, 2.0]).unwrap();
        let x = 0.3;
        let a = 1.01;
        let c = (-0.125f64).exp();
        let det = a * a - c * c;
        let inv = [[a / det, -c / det], [-c / det, a / det]];
        let r = [0.5, 1.5];
        let k = [(-0.5 * 0.09f64).exp(), (-0.5 * 0.04f64).exp()];
        let w = [
            inv[0][0] * r[0] + inv[0][1] * r[1],
            inv[1][0] * r[0] + inv[1][1] * r[1],
        ];
        let mean = 0.5 + k[0] * w[0] + k[1] * w[1];
        let kinvk = k[0] * (inv[0][0] * k[0] + inv[0][1] * k[1])
            + k[1] * (inv[1][0] * k[0] + inv[1][1] * k[1]);
        let (m, v) = posterior(&model, &data, &[x]).unwrap();
        assert_relative_eq!(m, mean, max_relative = 1e-12);
        assert_relative_eq!(v, 1.0 - kinvk, max_relative = 1e-10);
    }

    #[test]
    fn lml_scalar_case() {
        let model = GpModel::new(se(1.0, 2.0), 0.5, 1.0).unwrap();
        let data = Dataset::from_parts(1, vec![vec![0.0]], vec![3.0]).unwrap();
        let c = 2.5;
        let v: f64 = 2.0;
        let expected = -v * v / (2.0 * c) - 0.5 * c.ln() - 0.5 * LN_2PI;
        assert_relative_eq!(
            log_marginal_likelihood(&model, &data).unwrap(),
            expected,
            max_relative = 1e-13
        );
    }

    #[test]
    fn lml_two_point_matches_dense() {
        let model = GpModel::new(se(0.8, 1.5), 0.2, 0.0).unwrap();
        let data = Dataset::from_parts(1, vec![vec![0.0], vec![1.0]], vec![0.7, -0.4]).unwrap();
        let a = 1.5 + 0.2;
        let c = 1.5 * (-0.5 / 0.64f64).exp();
        let det = a * a - c * c;
        let (y0, y1) = (0.7, -0.4);
        let quad = (a * y0 * y0 - 2.0 * c * y0 * y1 + a * y1 * y1) / det;
        let expected = -0.5 * quad - 0.5 * det.ln() - LN_2PI;
        assert_relative_eq!(
            log_marginal_likelihood(&model, &data).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lml_zero_residuals() {
        let model = GpModel::new(se(0.8, 1.5), 0.2, 4.0).unwrap();
        let data = Dataset::from_parts(1, vec![vec![0.0], vec![1.0]], vec![4.0, 4.0]).unwrap();
        let a = 1.5 + 0.2;
        let c = 1.5 * (-0.5 / 0.64f64).exp();
        let expected = -0.5 * (a * a - c * c).ln() - LN_2PI;
        assert_relative_eq!(
            log_marginal_likelihood(&model, &data).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn adding_observation_never_increases_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = rng.random_range(1..4);
            let model = GpModel::new(se(rng.random_range(0.2..2.0), 1.3), 0.05, 0.0).unwrap();
            let mut data = Dataset::new(d);
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut prev = posterior(&model, &data, &q).unwrap().1;
            for _ in 0..10 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                data.push(x, rng.random_range(-1.0..1.0)).unwrap();
                let v = posterior(&model, &data, &q).unwrap().1;
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn fit_degenerate_targets() {
        let data = Dataset::from_parts(1, vec![vec![0.0], vec![1.0]], vec![2.0, 2.0]).unwrap();
        let cfg = FitConfig::new(1.0);
        let model = fit_mle(&data, &cfg).unwrap();
        assert_eq!(model.kernel.signal_variance, cfg.variance_floor);
        assert_eq!(model.prior_mean, 2.0);
    }

    #[test]
    fn fit_requires_two_points() {
        let data = Dataset::from_parts(1, vec![vec![0.0]], vec![2.0]).unwrap();
        assert!(fit_mle(&data, &FitConfig::new(1.0)).is_err());
    }

    #[test]
    fn fit_dominates_grid_and_default() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..15)
            .map(|_| vec![rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)])
            .collect();
        let ys: Vec<f64> = pts
            .iter()
            .map(|p| (3.0 * p[0]).sin() + p[1] * p[1])
            .collect();
        let data = Dataset::from_parts(2, pts, ys).unwrap();
        let cfg = FitConfig::new(2.0);
        let fitted = fit_mle(&data, &cfg).unwrap();
        let best = log_marginal_likelihood(&fitted, &data).unwrap();
        let (mean, var) = mean_and_variance(data.targets());
        let bounds = HyperBounds::new(2.0, var);
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    let kernel = se(
                        bounds.grid_value(0, i, 8).exp(),
                        bounds.grid_value(1, j, 8).exp(),
                    );
                    let m = GpModel::new(kernel, bounds.grid_value(2, k, 8).exp(), mean).unwrap();
                    let lml = log_marginal_likelihood(&m, &data).unwrap();
                    assert!(
                        best >= lml - 1e-8 * lml.abs().max(1.0),
                        "grid ({i},{j},{k})"
                    );
                }
            }
        }
        let default = GpModel::new(se(1.0, 1.0), 1e-2, mean).unwrap();
        assert!(best >= log_marginal_likelihood(&default, &data).unwrap());
    }

    #[test]
    fn spectral_and_cholesky_likelihoods_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (6.0 * p[0]).cos()).collect();
        let data = Dataset::from_parts(1, pts.clone(), ys.clone()).unwrap();
        let n = pts.len();
        let d2 = DMatrix::from_fn(n, n, |i, j| sq_dist(&pts[i], &pts[j]));
        let r = DVector::from_iterator(n, ys.iter().map(|y| y - 0.25));
        for family in [KernelFamily::SquaredExponential, KernelFamily::Matern52] {
            let spec = Spectrum::new(family, 0.3, &d2, &r);
            let m = GpModel::new(KernelSpec::new(family, 0.3, 1.7).unwrap(), 0.03, 0.25).unwrap();
            assert_relative_eq!(
                spec.log_likelihood(1.7, 0.03),
                log_marginal_likelihood(&m, &data).unwrap(),
                max_relative = 1e-9
            );
        }
    }
}
