// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Solvers for the dynamic travelling salesman problem.
//!
//! - [`instance`]: cities, distances, tours and event schedules.
//! - [`graddesc`]: continuous steepest descent with restarts.
//! - [`aco`]: the Ant System baseline.
//! - [`localsearch`]: steepest 2-opt tour improvement.
//! - [`hybrid`]: Ant System with local search and descent-driven
//!   reinforcement of the best tour.
//! - [`bench`]: seeded batches, comparisons and CSV output.

pub mod aco;
pub mod bench;
pub mod error;
pub mod graddesc;
pub mod hybrid;
pub mod instance;
pub mod localsearch;
pub mod rng;
mod solver;

pub use aco::{AcoParams, PheromoneMatrix, RunResult};
pub use error::{Error, Result};
pub use hybrid::{GradientTermState, HybridParams};
pub use instance::{City, CityId, DynamicEvent, EventKind, EventSchedule, Instance, Tour};
pub use solver::IterationView;
