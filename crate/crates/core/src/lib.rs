//! Bayesian optimisation when the search space is unknown.
//!
//! The search box grows by a hyperharmonic schedule and follows the
//! incumbent inside a bounded translation domain. A high-dimensional variant
//! restricts acquisition maximisation to a growing set of random hypercubes.
//!
//! ```
//! use hubo_core::prelude::*;
//!
//! let bench = make_benchmark("beale", None).unwrap();
//! let space = initial_space(&bench, 0.2, 7).unwrap();
//! let cfg = RunConfig::new(Algorithm::Hubo, space.expansion(-1.0).unwrap(), None, 3, 7).unwrap();
//! let trace = run_hubo(&bench.objective(0.0), &cfg).unwrap();
//! assert_eq!(trace.len(), cfg.n_init + 3);
//! ```

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod benchmarks;
pub mod driver;
pub mod error;
pub mod gp;
pub mod hypercubes;
pub mod rng;
pub mod series;
pub mod space;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::acquisition::{
        maximize_over_box, maximize_over_cubes, ucb, BetaKind, BetaSchedule, MaximizerConfig, Ucb,
    };
    pub use crate::benchmarks::{initial_space, make_benchmark, BenchmarkFunction, InitialSpace};
    pub use crate::driver::{
        compute_regret, random_search, run, run_hdhubo, run_hubo, run_vol2,
        sublinearity_diagnostic, Algorithm, Incumbent, Objective, RunConfig, RunTrace, TraceRecord,
    };
    pub use crate::error::{Error, Result};
    pub use crate::gp::{
        fit_mle, posterior, Dataset, FitConfig, GpModel, KernelFamily, KernelSpec, Posterior,
    };
    pub use crate::hypercubes::{
        nearest_distance_bound, num_cubes, sample_cubes, HdConfig, HypercubeSet,
    };
    pub use crate::space::{ExpandingSpace, ExpansionConfig, SearchBox};
}
