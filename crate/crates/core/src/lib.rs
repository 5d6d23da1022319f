//! Operational calculus of measurement-outcome sequences.
//!
//! Sequences of timed measurement outcomes are combined in series and in
//! parallel, valued by classical (probability) and quantum (amplitude)
//! predictive models, checked for causal closure and repeatability, and
//! turned into actual and potential property ascriptions.

pub mod cli;
pub mod closure;
pub mod experiment;
pub mod linalg;
pub mod models;
pub mod outcome;
pub mod property;
pub mod scenarios;
pub mod sequence;
