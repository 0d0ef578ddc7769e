//! Dynamic kernel density estimation backed by locality-sensitive hashing.
//!
//! [`DynamicKde`] is built once over `n` points, supports replacing any point
//! in time sublinear in `n`, and answers `(1 ± eps)`-approximate density
//! queries `f*(q) = (1/n) sum_i f(|x_i - q|)` by importance sampling over
//! hash-recovered points. [`RobustEnsemble`] takes the median over independent
//! structures for answers that hold simultaneously over a bounded query
//! domain. The [`harness`] module holds the exact oracle and the statistical
//! checks used by the test suites and the `verify` command.

pub mod config;
pub mod error;
pub mod harness;
pub mod kde;
pub mod kernel;
pub mod lsh;
pub mod points;
pub mod rng;
pub mod robust;
pub mod schedule;
pub mod snapshot;
pub mod stats;

pub use config::KdeConfig;
pub use error::{KdeError, Result};
pub use kde::{DynamicKde, EstimatorReport};
pub use kernel::{weight_level_of, KernelKind, KernelSpec};
pub use lsh::{CollisionModel, LshParams, LshTable};
pub use points::PointSet;
pub use robust::{ensemble_size, member_seed, RobustEnsemble};
pub use schedule::LevelSchedule;
