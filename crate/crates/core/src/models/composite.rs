use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{check_queryable, Amplitude, ModelError, QuantumModel};
use crate::linalg::{identity, kron, CMatrix, ZERO};
use crate::outcome::{Measurement, Outcome};
use crate::sequence::{Sequence, SequenceRecord, Tick};

/// Two distinguishable subsystems A and B. Joint atomic outcome `(i_A, i_B)`
/// is flattened row-major to `i_A * d_B + i_B`.
///
/// Joint observable labels are either a label bound in both parts (tensor
/// product of the two bases) or `"la*lb"` for A's `la` with B's `lb`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeModel {
    a: QuantumModel,
    b: QuantumModel,
    joint_evolutions: BTreeMap<Tick, CMatrix>,
    joint: QuantumModel,
}

impl CompositeModel {
    pub fn new(a: QuantumModel, b: QuantumModel) -> Result<Self, ModelError> {
        Self::interacting(a, b, BTreeMap::new())
    }

    /// Joint unitaries replace the product evolution on their ticks.
    pub fn interacting(
        a: QuantumModel,
        b: QuantumModel,
        joint_evolutions: BTreeMap<Tick, CMatrix>,
    ) -> Result<Self, ModelError> {
        let dim = a.dim() * b.dim();
        let mut joint = QuantumModel::new(dim);
        for (la, ba) in a.bases() {
            for (lb, bb) in b.bases() {
                joint = joint.with_basis(format!("{la}*{lb}"), kron(ba, bb))?;
                if la == lb {
                    joint = joint.with_basis(la.clone(), kron(ba, bb))?;
                }
            }
        }
        let ticks: BTreeSet<Tick> = a
            .evolutions()
            .keys()
            .chain(b.evolutions().keys())
            .chain(joint_evolutions.keys())
            .copied()
            .collect();
        for t in ticks {
            let u = match joint_evolutions.get(&t) {
                Some(u) => u.clone(),
                None => {
                    let ua = a.evolutions().get(&t).cloned().unwrap_or_else(|| identity(a.dim()));
                    let ub = b.evolutions().get(&t).cloned().unwrap_or_else(|| identity(b.dim()));
                    kron(&ua, &ub)
                }
            };
            joint = joint.with_evolution(t, u)?;
        }
        Ok(Self {
            a,
            b,
            joint_evolutions,
            joint,
        })
    }

    pub fn part_a(&self) -> &QuantumModel {
        &self.a
    }

    pub fn part_b(&self) -> &QuantumModel {
        &self.b
    }

    pub fn joint_evolutions(&self) -> &BTreeMap<Tick, CMatrix> {
        &self.joint_evolutions
    }

    pub fn is_interacting(&self) -> bool {
        !self.joint_evolutions.is_empty()
    }

    /// The `d_A * d_B`-dimensional model everything is evaluated on.
    pub fn joint_model(&self) -> &QuantumModel {
        &self.joint
    }

    pub fn pair(&self, joint_index: usize) -> (usize, usize) {
        (joint_index / self.b.dim(), joint_index % self.b.dim())
    }

    pub fn flat(&self, i_a: usize, i_b: usize) -> usize {
        i_a * self.b.dim() + i_b
    }

    fn split_label(&self, label: &str) -> Result<(String, String), ModelError> {
        let (la, lb) = match label.split_once('*') {
            Some((la, lb)) => (la.to_string(), lb.to_string()),
            None => (label.to_string(), label.to_string()),
        };
        if self.a.bases().contains_key(&la) && self.b.bases().contains_key(&lb) {
            Ok((la, lb))
        } else {
            Err(ModelError::UnresolvedJointLabel(label.to_string()))
        }
    }

    /// Amplitude on the joint Hilbert-space model.
    pub fn amplitude(&self, s: &Sequence) -> Result<Amplitude, ModelError> {
        self.joint.amplitude(s)
    }

    /// Amplitude assembled from subsystem amplitudes alone: the sum over
    /// every atomic joint path through the intermediate outcomes of
    /// `z_A(path_A) * z_B(path_B)`. Only valid without joint interactions.
    pub fn factorized_amplitude(&self, s: &Sequence) -> Result<Amplitude, ModelError> {
        if self.is_interacting() {
            return Err(ModelError::Interacting);
        }
        check_queryable(s, false, self.joint.dim())?;
        let records = s.records();
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            let (la, lb) = self.split_label(r.measurement().label())?;
            let ma = Arc::new(Measurement::atomic(la, self.a.dim())?);
            let mb = Arc::new(Measurement::atomic(lb, self.b.dim())?);
            labels.push((ma, mb));
        }
        let choices: Vec<Vec<usize>> = records
            .iter()
            .map(|r| r.outcome().members().iter().copied().collect())
            .collect();
        let mut total = Amplitude::ZERO;
        let mut path = vec![0usize; records.len()];
        loop {
            let mut ra = Vec::with_capacity(records.len());
            let mut rb = Vec::with_capacity(records.len());
            for (k, r) in records.iter().enumerate() {
                let (ia, ib) = self.pair(choices[k][path[k]]);
                ra.push(SequenceRecord::new(r.time(), labels[k].0.clone(), Outcome::atom(ia))?);
                rb.push(SequenceRecord::new(r.time(), labels[k].1.clone(), Outcome::atom(ib))?);
            }
            let za = self.a.amplitude(&Sequence::new(ra))?;
            let zb = self.b.amplitude(&Sequence::new(rb))?;
            total = total + za * zb;
            // odometer over the choice lists
            let mut k = 0;
            loop {
                if k == path.len() {
                    return Ok(total);
                }
                path[k] += 1;
                if path[k] < choices[k].len() {
                    break;
                }
                path[k] = 0;
                k += 1;
            }
        }
    }

    /// `d_A x d_B` matrix whose `(i, j)` entry is the amplitude of the branch
    /// through joint atom `(i, j)` at `position` when that atom belongs to the
    /// recorded outcome, and zero otherwise.
    pub fn branch_matrix(&self, s: &Sequence, position: usize) -> Result<CMatrix, ModelError> {
        let mut m = CMatrix::from_element(self.a.dim(), self.b.dim(), ZERO);
        let branches = s.refine_at(position).ok_or_else(|| {
            ModelError::Sequence(crate::sequence::SequenceError::ShapeMismatch(format!(
                "no record at position {position}"
            )))
        })?;
        for branch in branches {
            let atom = branch.records()[position]
                .outcome()
                .atom_id()
                .expect("refinements are atomic");
            let (i, j) = self.pair(atom);
            m[(i, j)] = self.joint.amplitude(&branch)?.value();
        }
        Ok(m)
    }
}
