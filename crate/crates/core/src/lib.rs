//! Numerical laboratory for measurable dynamics on the interval and the circle.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: spaces, metrics, the map catalog, orbits and the Denjoy construction.
//! - [`measure`]: empirical (sample-cloud) probability measures and mass estimators.
//! - [`expansivity`]: Bowen-ball decay, local entropy slopes and expansivity verdicts.
//! - [`structure`]: stable classes, recurrence, Lyapunov probes, scrambled pairs and
//!   wandering intervals.
//! - [`entropy`]: topological entropy from greedy separated sets.
//!
//! Everything that touches phase-space coordinates is generic over a [`Scalar`]
//! (`f32` or `f64`); statistics (masses, slopes, standard errors) are always `f64`.
//! The aliases at the bottom of this file fix the coordinate type to `f64`, which is
//! what the experiment runner uses.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod expansivity;
pub mod measure;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod structure;

pub use dynamics::{
    denjoy::DenjoyModel,
    distance, evaluate, orbit, rotation_number_estimate,
    space::{Metric, Space},
    system::{Family, SystemSpec},
    Orbit,
};

pub use entropy::{separated_set_size, topological_entropy_estimate, EntropyEstimate};
pub use error::{Error, Result};
pub use expansivity::{
    ball_decay_curve, bowen_ball_contains, expansivity_constant_search, expansivity_report,
    local_entropy_estimate, xm_fraction, BallDecayCurve, CenterMode, ExpansivityParams,
    ExpansivityReport, LocalEntropyEstimate, Verdict,
};
pub use measure::{
    bowen_ball_mass, pushforward_discrepancy, sample_measure, set_mass, Discrepancy,
    EmpiricalMeasure, Interval, MassEstimate, Sampler,
};
pub use scalar::Scalar;
pub use structure::{
    greedy_scrambled_set, lyapunov_violation_density, recurrence_fraction, scrambled_pair_stats,
    stable_class_mass, stable_classes, wandering_interval_verdict, ScrambledStats,
    StableClassEstimate, StableClassProbe, WanderingStatus, WanderingVerdict,
};

/// Library version, echoed into experiment bundles.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type System = SystemSpec<f64>;
pub type Denjoy = DenjoyModel<f64>;
pub type Measure = EmpiricalMeasure<f64>;
pub type DecayCurve = BallDecayCurve<f64>;
pub type Report = ExpansivityReport<f64>;
pub type Scrambled = ScrambledStats<f64>;
pub type Wandering = WanderingVerdict<f64>;
