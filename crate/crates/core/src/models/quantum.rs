use std::collections::BTreeMap;

use rand::Rng;

use super::{check_queryable, Amplitude, ModelError, PredictiveModel, IDENTITY_TOL};
use crate::linalg::{c, haar_unitary, identity, unitarity_deviation, CMatrix, CVector, ZERO};
use crate::outcome::{Measurement, Outcome};
use crate::sequence::{Sequence, Tick};

/// Hilbert-space model: an orthonormal basis per observable label and a
/// unitary per unit tick interval `[t, t + 1)`. Intervals without an entry
/// evolve by the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    dim: usize,
    bases: BTreeMap<String, CMatrix>,
    evolutions: BTreeMap<Tick, CMatrix>,
    fiducial: CVector,
    tolerance: f64,
}

impl QuantumModel {
    pub fn new(dim: usize) -> Self {
        Self::with_tolerance(dim, IDENTITY_TOL)
    }

    /// Model whose basis and unitary checks use `tolerance`.
    pub fn with_tolerance(dim: usize, tolerance: f64) -> Self {
        let amp = c(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            dim,
            bases: BTreeMap::new(),
            evolutions: BTreeMap::new(),
            fiducial: CVector::from_element(dim, amp),
            tolerance,
        }
    }

    /// Binds `label` to the basis whose columns are the atomic outcome states.
    pub fn with_basis(mut self, label: impl Into<String>, basis: CMatrix) -> Result<Self, ModelError> {
        let label = label.into();
        self.check_shape(&basis)?;
        let deviation = unitarity_deviation(&basis);
        if deviation > self.tolerance {
            return Err(ModelError::Orthonormality { label, deviation });
        }
        self.bases.insert(label, basis);
        Ok(self)
    }

    /// Sets the unitary applied over `[tick, tick + 1)`.
    pub fn with_evolution(mut self, tick: Tick, unitary: CMatrix) -> Result<Self, ModelError> {
        self.check_shape(&unitary)?;
        let deviation = unitarity_deviation(&unitary);
        if deviation > self.tolerance {
            return Err(ModelError::Unitarity {
                what: format!("evolution at tick {tick}"),
                deviation,
            });
        }
        self.evolutions.insert(tick, unitary);
        Ok(self)
    }

    /// Input state used by closure checks before any prior interaction.
    pub fn with_fiducial(mut self, state: CVector) -> Result<Self, ModelError> {
        if state.len() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: state.len(),
            });
        }
        let n = state.norm();
        self.fiducial = state / c(n, 0.0);
        Ok(self)
    }

    fn check_shape(&self, m: &CMatrix) -> Result<(), ModelError> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: if m.nrows() != self.dim { m.nrows() } else { m.ncols() },
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &BTreeMap<String, CMatrix> {
        &self.bases
    }

    pub fn evolutions(&self) -> &BTreeMap<Tick, CMatrix> {
        &self.evolutions
    }

    pub fn fiducial(&self) -> &CVector {
        &self.fiducial
    }

    pub fn basis(&self, label: &str) -> Result<&CMatrix, ModelError> {
        self.bases
            .get(label)
            .ok_or_else(|| ModelError::UnboundMeasurement(label.to_string()))
    }

    fn basis_for(&self, m: &Measurement) -> Result<&CMatrix, ModelError> {
        if m.context_size() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: m.context_size(),
            });
        }
        self.basis(m.label())
    }

    /// Product of the interval unitaries over `[from, to)`, later ticks on the left.
    pub fn propagator(&self, from: Tick, to: Tick) -> CMatrix {
        let mut u = identity(self.dim);
        if from < to {
            for step in self.evolutions.range(from..to).map(|(_, m)| m) {
                u = step * u;
            }
        }
        u
    }

    fn evolve(&self, state: CVector, from: Tick, to: Tick) -> CVector {
        if from >= to {
            return state;
        }
        self.evolutions.range(from..to).fold(state, |psi, (_, u)| u * psi)
    }

    /// Projects `state` onto the span of the basis columns listed in `o`.
    fn project(basis: &CMatrix, o: &Outcome, state: &CVector) -> CVector {
        let mut out = CVector::from_element(state.len(), ZERO);
        for &j in o.members() {
            let b = basis.column(j);
            out += b * b.dotc(state);
        }
        out
    }

    /// `⟨final| U_n Π_{n-1} ... Π_1 U_1 |anchor⟩`.
    pub fn amplitude(&self, s: &Sequence) -> Result<Amplitude, ModelError> {
        check_queryable(s, false, self.dim)?;
        let records = s.records();
        let anchor = &records[0];
        let basis = self.basis_for(anchor.measurement())?;
        let a = anchor.outcome().atom_id().expect("validated anchor is atomic");
        let mut psi: CVector = basis.column(a).into_owned();
        let mut now = anchor.time();
        let last = records.len() - 1;
        for (k, r) in records.iter().enumerate().skip(1) {
            let basis = self.basis_for(r.measurement())?;
            psi = self.evolve(psi, now, r.time());
            now = r.time();
            if k == last {
                let f = r.outcome().atom_id().expect("validated final is atomic");
                return Ok(Amplitude(basis.column(f).dotc(&psi)));
            }
            psi = Self::project(basis, r.outcome(), &psi);
        }
        unreachable!("queryable sequences have a final record")
    }

    pub fn probe_state(
        &self,
        state: CVector,
        prep: &Measurement,
        prep_outcome: &Outcome,
        prep_tick: Tick,
        probe: &Measurement,
        probe_tick: Tick,
    ) -> Result<Option<Vec<f64>>, ModelError> {
        let prep_basis = self.basis_for(prep)?;
        let probe_basis = self.basis_for(probe)?;
        let filtered = Self::project(prep_basis, prep_outcome, &state);
        let weight = filtered.norm_squared();
        if weight < 1e-12 {
            return Ok(None);
        }
        let psi = self.evolve(filtered / c(weight.sqrt(), 0.0), prep_tick, probe_tick);
        Ok(Some(
            probe
                .outcomes()
                .iter()
                .map(|o| {
                    o.members()
                        .iter()
                        .map(|&j| probe_basis.column(j).dotc(&psi).norm_sqr())
                        .sum()
                })
                .collect(),
        ))
    }
}

impl PredictiveModel for QuantumModel {
    type Interaction = CMatrix;

    fn dimension(&self) -> usize {
        self.dim
    }

    fn probability(&self, s: &Sequence) -> Result<f64, ModelError> {
        Ok(self.amplitude(s)?.probability())
    }

    /// Smallest eigenvalue of `W† W` with `W = B_o† U B_o`: the worst case
    /// over every unit vector in the range of the outcome's projector. With no
    /// evolution in between, the projector is idempotent and this is exactly 1.
    fn repetition_probability(
        &self,
        m: &Measurement,
        o: &Outcome,
        start: Tick,
        delta: Tick,
    ) -> Result<f64, ModelError> {
        let basis = self.basis_for(m)?;
        if delta <= 0 || self.evolutions.range(start..start + delta).next().is_none() {
            return Ok(1.0);
        }
        let cols: Vec<usize> = o.members().iter().copied().collect();
        let b = basis.select_columns(&cols);
        let u = self.propagator(start, start + delta);
        let w = b.adjoint() * u * &b;
        let gram = w.adjoint() * w;
        let eig = gram.symmetric_eigenvalues();
        Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn without_dynamics(&self) -> Self {
        Self {
            evolutions: BTreeMap::new(),
            ..self.clone()
        }
    }

    fn probe_distribution(
        &self,
        prior: Option<&CMatrix>,
        prep: &Measurement,
        prep_outcome: &Outcome,
        prep_tick: Tick,
        probe: &Measurement,
        probe_tick: Tick,
    ) -> Result<Option<Vec<f64>>, ModelError> {
        let state = match prior {
            Some(v) => {
                self.check_shape(v)?;
                v * &self.fiducial
            }
            None => self.fiducial.clone(),
        };
        self.probe_state(state, prep, prep_outcome, prep_tick, probe, probe_tick)
    }

    fn random_interaction<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        haar_unitary(rng, self.dim)
    }
}
