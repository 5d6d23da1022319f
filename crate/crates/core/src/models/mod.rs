//! Predictive models that value sequences: classical (probabilities from
//! stochastic transitions) and quantum (complex amplitudes from a
//! finite-dimensional Hilbert-space representation), plus two-part composites.

mod checks;
mod classical;
mod composite;
mod quantum;

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::outcome::{Measurement, Outcome, OutcomeError};
use crate::sequence::{validate, Rule, Sequence, SequenceError, Tick, Violation};

pub use checks::{
    amplitude_sum_check, interference_prediction, refinement_sum, series_product_check, trivial_insertion_check,
};
pub use classical::ClassicalModel;
pub use composite::CompositeModel;
pub use quantum::QuantumModel;

/// Default tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Default tolerance for quantities accumulated over products and sums.
pub const ACCUMULATED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("sequence is not queryable: {}", render_violations(.0))]
    InvalidSequence(Vec<Violation>),
    #[error("sequence needs at least two records, has {0}")]
    TooShort(usize),
    #[error("no basis bound for measurement label `{0}`")]
    UnboundMeasurement(String),
    #[error("dimension mismatch: model has {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{what} is not unitary (deviation {deviation:.3e})")]
    Unitarity { what: String, deviation: f64 },
    #[error("basis `{label}` is not orthonormal (deviation {deviation:.3e})")]
    Orthonormality { label: String, deviation: f64 },
    #[error("transition at tick {tick} is not column-stochastic (deviation {deviation:.3e})")]
    Stochasticity { tick: Tick, deviation: f64 },
    #[error("tick {tick} is not strictly inside ({first}, {last})")]
    BoundaryTick { tick: Tick, first: Tick, last: Tick },
    #[error("tick {0} already carries a record")]
    OccupiedTick(Tick),
    #[error("composite has joint interactions; amplitudes do not factorize")]
    Interacting,
    #[error("label `{0}` cannot be resolved to a pair of subsystem labels")]
    UnresolvedJointLabel(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Common surface of the classical and quantum models.
pub trait PredictiveModel {
    /// Transformation applied to the system before a preparation.
    type Interaction;

    fn dimension(&self) -> usize;

    /// Probability of the outcomes after the anchor, conditional on the anchor.
    fn probability(&self, s: &Sequence) -> Result<f64, ModelError>;

    /// Worst case, over states compatible with having obtained `o` at `start`,
    /// of the probability of obtaining `o` again at `start + delta`.
    fn repetition_probability(&self, m: &Measurement, o: &Outcome, start: Tick, delta: Tick)
        -> Result<f64, ModelError>;

    /// Same model with identity evolution between every pair of ticks.
    fn without_dynamics(&self) -> Self
    where
        Self: Sized;

    /// Outcome distribution of `probe` at `probe_tick`, given that `prep`
    /// yielded `prep_outcome` at `prep_tick`, starting from the model's
    /// fiducial input transformed by `prior`. `None` when the preparation
    /// cannot succeed from that input.
    fn probe_distribution(
        &self,
        prior: Option<&Self::Interaction>,
        prep: &Measurement,
        prep_outcome: &Outcome,
        prep_tick: Tick,
        probe: &Measurement,
        probe_tick: Tick,
    ) -> Result<Option<Vec<f64>>, ModelError>;

    fn random_interaction<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Interaction;
}

/// A complex sequence amplitude. Serializes as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude(Complex64::new(0.0, 0.0));

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Born rule.
    pub fn probability(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn phase(self) -> f64 {
        self.0.arg()
    }

    pub fn distance(self, other: Amplitude) -> f64 {
        (self.0 - other.0).norm()
    }
}

impl Add for Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 + rhs.0)
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: Amplitude) -> Amplitude {
        Amplitude(self.0 * rhs.0)
    }
}

impl std::iter::Sum for Amplitude {
    fn sum<I: Iterator<Item = Amplitude>>(iter: I) -> Self {
        iter.fold(Amplitude::ZERO, Add::add)
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

impl Serialize for Amplitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(serializer)
    }
}

/// Rejects sequences a model cannot value. Classical models accept a
/// non-atomic final outcome; quantum ones do not.
pub(crate) fn check_queryable(s: &Sequence, allow_coarse_final: bool, dim: usize) -> Result<(), ModelError> {
    if s.len() < 2 {
        return Err(ModelError::TooShort(s.len()));
    }
    let violations: Vec<_> = validate(s)
        .into_iter()
        .filter(|v| !(allow_coarse_final && v.rule == Rule::FinalNotAtomic))
        .collect();
    if !violations.is_empty() {
        return Err(ModelError::InvalidSequence(violations));
    }
    let found = s.records()[0].measurement().context_size();
    if found != dim {
        return Err(ModelError::DimensionMismatch { expected: dim, found });
    }
    Ok(())
}
