//! Surrogate learning-to-rank models for published rankings, with item-wise
//! goodness of fit and local attribute explanations.
//!
//! The usual flow: [`dataset`] turns a published ranking into one query per
//! year, [`rankers`] fits surrogate scoring functions, [`metrics`] compares
//! their proxy rankings with the published ones, [`explain`] attributes
//! scores to attributes and [`agreement`] compares the two explainers.
//! [`pipeline`] runs all of it over an on-disk [`store`].

pub mod agreement;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod pipeline;
pub mod rankers;
pub mod store;
pub mod synthetic;

pub use error::{Error, Result};
