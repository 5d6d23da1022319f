//! Repeatability, refinement and causal-closure checks on exact model
//! probabilities.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{c, identity, kron, total_variation, CMatrix, CVector};
use crate::models::{ModelError, PredictiveModel, QuantumModel, ACCUMULATED_TOL};
use crate::outcome::{Measurement, Outcome, OutcomeError};
use crate::sequence::{Sequence, SequenceRecord, Tick};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosureError {
    #[error("outcome {fine} is not contained in {coarse}")]
    Subset { fine: Outcome, coarse: Outcome },
    #[error("outcome {0} is not atomic")]
    NotAtomic(Outcome),
    #[error("ancilla dimension must be at least 1")]
    EmptyAncilla,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

impl From<crate::sequence::SequenceError> for ClosureError {
    fn from(e: crate::sequence::SequenceError) -> Self {
        ClosureError::Model(e.into())
    }
}

/// Minimum over the outcomes of `m` of the probability that the outcome
/// recurs after `delta_ticks` of the model's own evolution.
pub fn check_repeatability<M: PredictiveModel>(
    model: &M,
    m: &Measurement,
    delta_ticks: Tick,
) -> Result<f64, ClosureError> {
    let mut worst = f64::INFINITY;
    for o in m.outcomes() {
        worst = worst.min(model.repetition_probability(m, o, 0, delta_ticks)?);
    }
    Ok(worst)
}

/// `|P(fine, coarse, fine) - P(fine, fine)| <= tolerance` under identity
/// evolution, with `coarse` recorded by the measurement of `label` that
/// groups it into one block.
pub fn check_refinement_condition<M: PredictiveModel>(
    model: &M,
    label: &str,
    coarse: &Outcome,
    fine: &Outcome,
    tolerance: f64,
) -> Result<bool, ClosureError> {
    if !fine.is_subset(coarse) {
        return Err(ClosureError::Subset {
            fine: fine.clone(),
            coarse: coarse.clone(),
        });
    }
    if !fine.is_atomic() {
        return Err(ClosureError::NotAtomic(fine.clone()));
    }
    let d = model.dimension();
    let still = model.without_dynamics();
    let atomic = Arc::new(Measurement::atomic(label, d)?);
    let grouped = Arc::new(Measurement::with_block(label, d, coarse)?);
    let through = Sequence::new(vec![
        SequenceRecord::new(0, atomic.clone(), fine.clone())?,
        SequenceRecord::new(1, grouped, coarse.clone())?,
        SequenceRecord::new(2, atomic.clone(), fine.clone())?,
    ]);
    let direct = Sequence::new(vec![
        SequenceRecord::new(0, atomic.clone(), fine.clone())?,
        SequenceRecord::new(1, atomic, fine.clone())?,
    ]);
    let lhs = still.probability(&through)?;
    let rhs = still.probability(&direct)?;
    Ok((lhs - rhs).abs() <= tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preparation {
    pub measurement: String,
    pub outcome: Outcome,
    pub tick: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub prior: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub preparation: Preparation,
    pub probe: String,
    pub probe_tick: Tick,
    pub max_deviation: f64,
    /// Sorted by descending distance, ties by prior id.
    pub witnesses: Vec<Witness>,
    pub seed: Option<u64>,
    /// Priors under which the preparation cannot succeed.
    pub skipped: Vec<String>,
}

impl ClosureReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

/// Where the preparation and probe sit in time.
#[derive(Debug, Clone)]
pub struct ClosureSetup {
    pub prep: Arc<Measurement>,
    pub prep_outcome: Outcome,
    pub prep_tick: Tick,
    pub probe: Arc<Measurement>,
    pub probe_tick: Tick,
}

impl ClosureSetup {
    pub fn new(prep: Arc<Measurement>, prep_outcome: Outcome, probe: Arc<Measurement>) -> Self {
        Self {
            prep,
            prep_outcome,
            prep_tick: 0,
            probe,
            probe_tick: 1,
        }
    }

    pub fn at(mut self, prep_tick: Tick, probe_tick: Tick) -> Self {
        self.prep_tick = prep_tick;
        self.probe_tick = probe_tick;
        self
    }
}

/// Probe statistics after the preparation, for each named prior, compared
/// with those obtained from the untouched fiducial input (or, if the
/// preparation cannot succeed from it, from the first prior that allows it).
pub fn check_closure<M: PredictiveModel>(
    model: &M,
    setup: &ClosureSetup,
    priors: &[(String, M::Interaction)],
) -> Result<ClosureReport, ClosureError> {
    let run = |prior: Option<&M::Interaction>| {
        model.probe_distribution(
            prior,
            &setup.prep,
            &setup.prep_outcome,
            setup.prep_tick,
            &setup.probe,
            setup.probe_tick,
        )
    };
    let mut reference = run(None)?;
    let mut witnesses = Vec::new();
    let mut skipped = Vec::new();
    for (id, prior) in priors {
        match run(Some(prior))? {
            None => skipped.push(id.clone()),
            Some(dist) => {
                let base = reference.get_or_insert_with(|| dist.clone());
                witnesses.push(Witness {
                    prior: id.clone(),
                    distance: total_variation(base, &dist),
                });
            }
        }
    }
    witnesses.sort_by(|a, b| b.distance.total_cmp(&a.distance).then_with(|| a.prior.cmp(&b.prior)));
    Ok(ClosureReport {
        preparation: Preparation {
            measurement: setup.prep.label().to_string(),
            outcome: setup.prep_outcome.clone(),
            tick: setup.prep_tick,
        },
        probe: setup.probe.label().to_string(),
        probe_tick: setup.probe_tick,
        max_deviation: witnesses.first().map_or(0.0, |w| w.distance),
        witnesses,
        seed: None,
        skipped,
    })
}

/// `count` priors drawn from the model's random interaction family.
pub fn random_priors<M: PredictiveModel>(model: &M, count: usize, seed: u64) -> Vec<(String, M::Interaction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| (format!("random-{k}"), model.random_interaction(&mut rng)))
        .collect()
}

/// [`check_closure`] over `count` seeded random priors.
pub fn check_closure_random<M: PredictiveModel>(
    model: &M,
    setup: &ClosureSetup,
    count: usize,
    seed: u64,
) -> Result<ClosureReport, ClosureError> {
    let priors = random_priors(model, count, seed);
    let mut report = check_closure(model, setup, &priors)?;
    report.seed = Some(seed);
    Ok(report)
}

/// Transformation inserted between the preparation and the probe.
#[derive(Debug, Clone, PartialEq)]
pub enum InsertedInteraction {
    /// Acts on the system alone.
    System(CMatrix),
    /// Acts jointly on system and an ancilla of `ancilla_dim` levels; joint
    /// index is `system * ancilla_dim + ancilla`.
    Coupled { ancilla_dim: usize, unitary: CMatrix },
}

impl InsertedInteraction {
    /// Applies `u^k` to the system when the ancilla is in level `k`.
    pub fn controlled(u: &CMatrix, ancilla_dim: usize) -> Self {
        let d = u.nrows();
        let dim = d * ancilla_dim;
        let mut joint = CMatrix::zeros(dim, dim);
        let mut power = identity(d);
        for k in 0..ancilla_dim {
            for i in 0..d {
                for j in 0..d {
                    joint[(i * ancilla_dim + k, j * ancilla_dim + k)] = power[(i, j)];
                }
            }
            power = u * power;
        }
        InsertedInteraction::Coupled {
            ancilla_dim,
            unitary: joint,
        }
    }

    fn ancilla_dim(&self) -> usize {
        match self {
            InsertedInteraction::System(_) => 1,
            InsertedInteraction::Coupled { ancilla_dim, .. } => *ancilla_dim,
        }
    }
}

/// Whether a measurement pair keeps closure when `interaction` is inserted
/// between them. The system is extended by the interaction's ancilla (in a
/// uniform superposition); priors are seeded Haar unitaries on the extended
/// space, the preparation filters the system alone, and the probe reads the
/// system alone.
pub fn forbidden_interaction_demo(
    model: &QuantumModel,
    prep: (&Measurement, &Outcome),
    probe: &Measurement,
    interaction: &InsertedInteraction,
    count: usize,
    seed: u64,
) -> Result<ClosureReport, ClosureError> {
    let d = model.dim();
    let da = interaction.ancilla_dim();
    if da == 0 {
        return Err(ClosureError::EmptyAncilla);
    }
    let lift = |m: &CMatrix| kron(m, &identity(da));
    let inserted = match interaction {
        InsertedInteraction::System(u) => lift(u),
        InsertedInteraction::Coupled { unitary, .. } => unitary.clone(),
    };
    let amp = c(1.0 / (da as f64).sqrt(), 0.0);
    let fiducial = CVector::from_fn(d * da, |i, _| model.fiducial()[i / da] * amp);
    let mut extended = QuantumModel::with_tolerance(d * da, ACCUMULATED_TOL)
        .with_fiducial(fiducial)?
        .with_evolution(0, inserted)?;
    for label in [prep.0.label(), probe.label()] {
        extended = extended.with_basis(label, lift(model.basis(label)?))?;
    }
    let lift_measurement = |m: &Measurement| -> Result<Measurement, OutcomeError> {
        let blocks = m
            .outcomes()
            .iter()
            .map(|o| {
                Outcome::new(o.members().iter().flat_map(|&j| (0..da).map(move |k| j * da + k))).expect("nonempty")
            })
            .collect();
        Measurement::new(m.label(), d * da, blocks)
    };
    let prep_m = lift_measurement(prep.0)?;
    let prep_o = prep_m
        .outcomes()
        .iter()
        .find(|o| o.contains(prep.1.min() * da))
        .cloned()
        .expect("lifted preparation outcome");
    let setup = ClosureSetup::new(Arc::new(prep_m), prep_o, Arc::new(lift_measurement(probe)?));
    let mut report = check_closure_random(&extended, &setup, count, seed)?;
    report.preparation.outcome = prep.1.clone();
    Ok(report)
}
