//! PRB demand forecasting and intent-weighted partitioning of a shared
//! resource-block pool between an LTE and an NR network.
//!
//! The pipeline runs `ingest` (decoded control logs to demand series),
//! `synthgen` (surrogate NR demand), `forecast` (one-step predictors with
//! walk-forward model selection), `allocate` (the two convex partitioning
//! objectives and their exact solver) and `control` (a replayable simulation
//! of the RIC control loop).

pub mod allocate;
pub mod control;
pub mod error;
pub mod forecast;
pub mod ingest;
pub mod series;
pub mod synthgen;

pub use error::{Error, Result};
pub use series::PrbSeries;
