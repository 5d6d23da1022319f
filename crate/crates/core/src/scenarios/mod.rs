//! Built-in worked scenarios, each an experiment file plus named checks.

mod double_slit;
mod entangled;
mod sg;
mod zeno;

use serde::Serialize;
use thiserror::Error;

use crate::closure::ClosureError;
use crate::experiment::{Diagnostics, Experiment, ExperimentFile};
use crate::models::ModelError;
use crate::property::AttributionError;

pub use double_slit::{double_slit, fringe_table, which_way, FringeRow, WhichWay};
pub use entangled::entangled_pair;
pub use sg::{closure_counterexample, sg_chain, sg_coarse};
pub use zeno::{zeno_arrow, zeno_report, ZenoReport, ZenoTick};

/// Scenarios that [`run_scenario`] accepts.
pub const SCENARIOS: &[&str] = &["sg_chain", "sg_coarse", "double_slit", "entangled_pair", "zeno_arrow"];

/// Every shipped fixture, scenarios first.
pub const FIXTURES: &[&str] = &[
    "sg_chain",
    "sg_coarse",
    "double_slit",
    "entangled_pair",
    "zeno_arrow",
    "closure_counterexample",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{name}` (known: {known})", name = .0, known = FIXTURES.join(", "))]
    Unknown(String),
    #[error("built-in file does not resolve:\n{0}")]
    Invalid(#[from] Diagnostics),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
}

/// Experiment file of a built-in fixture.
pub fn fixture(name: &str) -> Result<ExperimentFile, ScenarioError> {
    Ok(match name {
        "sg_chain" => sg_chain(),
        "sg_coarse" => sg_coarse(),
        "double_slit" => double_slit(),
        "entangled_pair" => entangled_pair(),
        "zeno_arrow" => zeno_arrow(),
        "closure_counterexample" => closure_counterexample(),
        other => return Err(ScenarioError::Unknown(other.to_string())),
    })
}

pub fn load(name: &str) -> Result<Experiment, ScenarioError> {
    Ok(Experiment::from_file(fixture(name)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|computed - expected| <= tolerance`.
    Equal,
    /// `computed > expected`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub computed: f64,
    pub expected: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub tolerance: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub(crate) struct Checks {
    pub(crate) tolerance: f64,
    pub(crate) items: Vec<Check>,
}

impl Checks {
    pub(crate) fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            items: Vec::new(),
        }
    }

    pub(crate) fn equal(&mut self, check: impl Into<String>, computed: f64, expected: f64) {
        self.items.push(Check {
            check: check.into(),
            computed,
            expected,
            comparison: Comparison::Equal,
            pass: (computed - expected).abs() <= self.tolerance,
        });
    }

    pub(crate) fn above(&mut self, check: impl Into<String>, computed: f64, bound: f64) {
        self.items.push(Check {
            check: check.into(),
            computed,
            expected: bound,
            comparison: Comparison::Above,
            pass: computed > bound,
        });
    }

    pub(crate) fn holds(&mut self, check: impl Into<String>, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.items.push(Check {
            check: check.into(),
            computed: v,
            expected: 1.0,
            comparison: Comparison::Equal,
            pass: ok,
        });
    }

    pub(crate) fn report(self, scenario: &str) -> ScenarioReport {
        ScenarioReport {
            scenario: scenario.to_string(),
            tolerance: self.tolerance,
            pass: self.items.iter().all(|c| c.pass),
            checks: self.items,
        }
    }
}

/// Evaluates every check of a scenario; `tolerance` bounds the equality checks.
pub fn run_scenario(name: &str, tolerance: f64) -> Result<ScenarioReport, ScenarioError> {
    if !SCENARIOS.contains(&name) {
        return Err(ScenarioError::Unknown(name.to_string()));
    }
    let e = load(name)?;
    let mut checks = Checks::new(tolerance);
    match name {
        "sg_chain" => sg::chain_checks(&e, &mut checks)?,
        "sg_coarse" => sg::coarse_checks(&e, &mut checks)?,
        "double_slit" => double_slit::checks(&e, &mut checks)?,
        "entangled_pair" => entangled::checks(&e, &mut checks)?,
        _ => zeno::checks(&e, &mut checks)?,
    }
    Ok(checks.report(name))
}
