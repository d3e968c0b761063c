//! Synthetic test functions with known optima, in maximisation form.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use rand::Rng;

use crate::driver::Objective;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::space::{ExpansionConfig, SearchBox};

const INITIAL_SPACE_LABEL: u64 = 0x6;

pub const BENCHMARK_NAMES: [&str; 5] = ["beale", "hartmann3", "hartmann6", "ackley", "levy"];

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Dimension, canonical bounds, argmin and the minimisation form of a benchmark.
type Canonical = (usize, f64, f64, Vec<f64>, fn(&[f64]) -> f64);

#[derive(Clone)]
pub struct BenchmarkFunction {
    pub name: String,
    pub dim: usize,
    /// Canonical domain `[lower, upper]^dim`.
    pub lower: f64,
    pub upper: f64,
    pub optimum_value: f64,
    pub optimum_point: Vec<f64>,
    eval: EvalFn,
}

impl std::fmt::Debug for BenchmarkFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("optimum_value", &self.optimum_value)
            .finish_non_exhaustive()
    }
}

impl BenchmarkFunction {
    /// A user-supplied function on the cube `[lower, upper]^dim`, already in
    /// maximisation form.
    pub fn custom(
        name: &str,
        dim: usize,
        (lower, upper): (f64, f64),
        optimum: (f64, Vec<f64>),
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if !(upper > lower) {
            return Err(invalid("domain", "upper bound must exceed lower bound"));
        }
        crate::error::check_dim(dim, optimum.1.len())?;
        Ok(Self {
            name: name.to_string(),
            dim,
            lower,
            upper,
            optimum_value: optimum.0,
            optimum_point: optimum.1,
            eval: Arc::new(eval),
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn domain(&self) -> SearchBox {
        SearchBox::from_interval(self.lower, self.upper, self.dim).expect("valid canonical domain")
    }

    pub fn objective(&self, noise_std: f64) -> Objective {
        let f = Arc::clone(&self.eval);
        Objective::new(self.dim, move |x| f(x))
            .with_noise(noise_std)
            .with_optimum(self.optimum_value, Some(self.optimum_point.clone()))
    }
}

pub fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (1.5 - a + a * b).powi(2) + (2.25 - a + a * b * b).powi(2) + (2.625 - a + a * b.powi(3)).powi(2)
}

const H3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const H3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const H3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const H6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const H6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            H3_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

pub fn hartmann3(x: &[f64]) -> f64 {
    hartmann(x, &H3_A, &H3_P)
}

pub fn hartmann6(x: &[f64]) -> f64 {
    hartmann(x, &H6_A, &H6_P)
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let n = w.len();
    let head = (PI * w[0]).sin().powi(2);
    let mid: f64 = w[..n - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let last = w[n - 1];
    let tail = (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2));
    head + mid + tail
}

/// Minimisers of the Hartmann functions, refined to full double precision.
pub const HARTMANN3_ARGMIN: [f64; 3] = [
    0.114_588_883_055_146_5,
    0.555_648_892_426_640_6,
    0.852_546_986_110_605_5,
];
pub const HARTMANN6_ARGMIN: [f64; 6] = [
    0.201_689_511_635_302_7,
    0.150_010_689_95,
    0.476_873_974_01,
    0.275_332_431_84,
    0.311_651_613_280_605_5,
    0.657_300_534_26,
];

fn fixed_dim(name: &str, dim: Option<usize>, required: usize) -> Result<usize> {
    match dim {
        Some(d) if d != required => Err(invalid(
            "dim",
            format!("{name} is {required}-dimensional, got {d}"),
        )),
        _ => Ok(required),
    }
}

/// Builds a named benchmark, negated for maximisation.
pub fn make_benchmark(name: &str, dim: Option<usize>) -> Result<BenchmarkFunction> {
    let lname = name.trim().to_ascii_lowercase();
    let (dim, lower, upper, point, min_fn): Canonical = match lname.as_str() {
        "beale" => (fixed_dim(name, dim, 2)?, -4.5, 4.5, vec![3.0, 0.5], beale),
        "hartmann3" => (
            fixed_dim(name, dim, 3)?,
            0.0,
            1.0,
            HARTMANN3_ARGMIN.to_vec(),
            hartmann3,
        ),
        "hartmann6" => (
            fixed_dim(name, dim, 6)?,
            0.0,
            1.0,
            HARTMANN6_ARGMIN.to_vec(),
            hartmann6,
        ),
        "ackley" | "levy" => {
            let d = dim.ok_or_else(|| Error::MissingDimension(name.to_string()))?;
            if d == 0 {
                return Err(invalid("dim", "must be positive"));
            }
            if lname == "ackley" {
                (d, -32.768, 32.768, vec![0.0; d], ackley)
            } else {
                (d, -10.0, 10.0, vec![1.0; d], levy)
            }
        }
        _ => return Err(Error::UnknownBenchmark(name.to_string())),
    };
    // `+ 0.0` turns the negated zero optima into +0
    let optimum_value = -min_fn(&point) + 0.0;
    Ok(BenchmarkFunction {
        name: lname,
        dim,
        lower,
        upper,
        optimum_value,
        optimum_point: point,
        eval: Arc::new(move |x: &[f64]| -min_fn(x)),
    })
}

/// Initial search space and translation domain for a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpace {
    pub initial: SearchBox,
    pub domain: SearchBox,
}

impl InitialSpace {
    pub fn expansion(&self, alpha: f64) -> Result<ExpansionConfig> {
        ExpansionConfig::new(self.initial.clone(), self.domain.clone(), alpha)
    }
}

/// `X_0` covers `fraction` of the canonical side with its centre placed
/// uniformly such that it stays inside the canonical domain; `C_initial` is
/// concentric with ten times the side.
pub fn initial_space(bench: &BenchmarkFunction, fraction: f64, seed: u64) -> Result<InitialSpace> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid("fraction", "must lie in (0, 1]"));
    }
    let side = fraction * (bench.upper - bench.lower);
    let lo = bench.lower + 0.5 * side;
    let hi = bench.upper - 0.5 * side;
    let mut rng = stream(seed, INITIAL_SPACE_LABEL);
    let center: Vec<f64> = (0..bench.dim)
        .map(|_| {
            if hi > lo {
                (lo + rng.random::<f64>() * (hi - lo)).min(hi)
            } else {
                0.5 * (bench.lower + bench.upper)
            }
        })
        .collect();
    let initial = SearchBox::new(center.clone(), 0.5 * side)?;
    let domain = SearchBox::new(center, 5.0 * side)?;
    Ok(InitialSpace { initial, domain })
}
