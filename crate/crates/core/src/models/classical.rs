use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{check_queryable, ModelError, PredictiveModel, IDENTITY_TOL};
use crate::linalg::{random_stochastic, stochasticity_deviation};
use crate::outcome::{Measurement, Outcome};
use crate::sequence::{Sequence, Tick};

/// Markov model over atomic outcomes. `transition(t)[(j, i)]` is the
/// probability of atom `j` at `t + 1` given atom `i` at `t`; intervals
/// without an entry are the identity. Non-atomic outcomes are valued by
/// summing over their atomic refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModel {
    dim: usize,
    transitions: BTreeMap<Tick, DMatrix<f64>>,
    tolerance: f64,
}

impl ClassicalModel {
    pub fn new(dim: usize) -> Self {
        Self::with_tolerance(dim, IDENTITY_TOL)
    }

    pub fn with_tolerance(dim: usize, tolerance: f64) -> Self {
        Self {
            dim,
            transitions: BTreeMap::new(),
            tolerance,
        }
    }

    pub fn with_transition(mut self, tick: Tick, matrix: DMatrix<f64>) -> Result<Self, ModelError> {
        if matrix.nrows() != self.dim || matrix.ncols() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = stochasticity_deviation(&matrix);
        if deviation > self.tolerance {
            return Err(ModelError::Stochasticity { tick, deviation });
        }
        self.transitions.insert(tick, matrix);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transitions(&self) -> &BTreeMap<Tick, DMatrix<f64>> {
        &self.transitions
    }

    /// Product of transitions over `[from, to)`.
    pub fn propagator(&self, from: Tick, to: Tick) -> DMatrix<f64> {
        let mut t = DMatrix::identity(self.dim, self.dim);
        if from < to {
            for step in self.transitions.range(from..to).map(|(_, m)| m) {
                t = step * t;
            }
        }
        t
    }

    fn evolve(&self, p: DVector<f64>, from: Tick, to: Tick) -> DVector<f64> {
        if from >= to {
            return p;
        }
        self.transitions.range(from..to).fold(p, |p, (_, t)| t * p)
    }

    fn mask(p: &mut DVector<f64>, o: &Outcome) {
        for (i, x) in p.iter_mut().enumerate() {
            if !o.contains(i) {
                *x = 0.0;
            }
        }
    }

    fn check_context(&self, m: &Measurement) -> Result<(), ModelError> {
        if m.context_size() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: m.context_size(),
            });
        }
        Ok(())
    }
}

impl PredictiveModel for ClassicalModel {
    type Interaction = DMatrix<f64>;

    fn dimension(&self) -> usize {
        self.dim
    }

    fn probability(&self, s: &Sequence) -> Result<f64, ModelError> {
        check_queryable(s, true, self.dim)?;
        let records = s.records();
        let a = records[0].outcome().atom_id().expect("validated anchor is atomic");
        let mut p = DVector::zeros(self.dim);
        p[a] = 1.0;
        let mut now = records[0].time();
        for r in &records[1..] {
            self.check_context(r.measurement())?;
            p = self.evolve(p, now, r.time());
            now = r.time();
            Self::mask(&mut p, r.outcome());
        }
        Ok(p.sum())
    }

    /// Minimum over atoms `a` of `o` of the mass that stays inside `o`.
    fn repetition_probability(
        &self,
        m: &Measurement,
        o: &Outcome,
        start: Tick,
        delta: Tick,
    ) -> Result<f64, ModelError> {
        self.check_context(m)?;
        let t = self.propagator(start, start + delta);
        Ok(o.members()
            .iter()
            .map(|&a| o.members().iter().map(|&j| t[(j, a)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min))
    }

    fn without_dynamics(&self) -> Self {
        Self {
            transitions: BTreeMap::new(),
            ..self.clone()
        }
    }

    /// Fiducial input is the uniform distribution over atoms.
    fn probe_distribution(
        &self,
        prior: Option<&DMatrix<f64>>,
        prep: &Measurement,
        prep_outcome: &Outcome,
        prep_tick: Tick,
        probe: &Measurement,
        probe_tick: Tick,
    ) -> Result<Option<Vec<f64>>, ModelError> {
        self.check_context(prep)?;
        self.check_context(probe)?;
        let uniform = DVector::from_element(self.dim, 1.0 / self.dim as f64);
        let mut p = match prior {
            Some(s) => s * uniform,
            None => uniform,
        };
        Self::mask(&mut p, prep_outcome);
        let weight = p.sum();
        if weight < 1e-12 {
            return Ok(None);
        }
        let p = self.evolve(p / weight, prep_tick, probe_tick);
        Ok(Some(
            probe
                .outcomes()
                .iter()
                .map(|o| o.members().iter().map(|&j| p[j]).sum())
                .collect(),
        ))
    }

    fn random_interaction<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        random_stochastic(rng, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::make_measurement;
    use crate::sequence::SequenceRecord;
    use std::sync::Arc;

    fn rec(t: Tick, m: &Arc<Measurement>, o: &[usize]) -> SequenceRecord {
        SequenceRecord::new(t, m.clone(), Outcome::new(o.iter().copied()).unwrap()).unwrap()
    }

    fn model() -> ClassicalModel {
        ClassicalModel::new(3)
            .with_transition(
                0,
                DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.3, 0.6, 0.2, 0.2, 0.3, 0.8]),
            )
            .unwrap()
            .with_transition(
                1,
                DMatrix::from_row_slice(3, 3, &[0.2, 0.0, 0.5, 0.7, 0.9, 0.1, 0.1, 0.1, 0.4]),
            )
            .unwrap()
    }

    #[test]
    fn coarse_outcome_is_sum_of_refinements() {
        let q = model();
        let x = Arc::new(Measurement::atomic("X", 3).unwrap());
        let c01 = Arc::new(make_measurement("X", 3, &[vec![0, 1], vec![2]]).unwrap());
        let path = |m: usize| Sequence::new(vec![rec(0, &x, &[0]), rec(1, &x, &[m]), rec(2, &x, &[2])]);
        let coarse = Sequence::new(vec![rec(0, &x, &[0]), rec(1, &c01, &[0, 1]), rec(2, &x, &[2])]);
        let pc = q.probability(&path(0)).unwrap();
        let pd = q.probability(&path(1)).unwrap();
        // By hand: T0[0][0] T1[2][0] + T0[1][0] T1[2][1] = 0.5*0.1 + 0.3*0.1
        assert!((pc - 0.05).abs() < 1e-15);
        assert!((pd - 0.03).abs() < 1e-15);
        assert!((q.probability(&coarse).unwrap() - (pc + pd)).abs() < 1e-15);
    }

    #[test]
    fn stochasticity_is_enforced() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.6, 0.5]);
        assert!(matches!(
            ClassicalModel::new(2).with_transition(3, bad),
            Err(ModelError::Stochasticity { tick: 3, .. })
        ));
    }

    #[test]
    fn identity_transition_repeats() {
        let q = ClassicalModel::new(3);
        let m = Measurement::atomic("X", 3).unwrap();
        for o in m.outcomes() {
            assert_eq!(q.repetition_probability(&m, o, 0, 4).unwrap(), 1.0);
        }
        let q = model();
        assert_eq!(q.repetition_probability(&m, &Outcome::atom(0), 0, 0).unwrap(), 1.0);
        assert!((q.repetition_probability(&m, &Outcome::atom(0), 0, 1).unwrap() - 0.5).abs() < 1e-15);
    }
}
