//! Outcome spaces, measurements as labeled partitions, and coarse-graining.
//!
//! Every measurement acts on a finite context `{0..d-1}` of atomic outcomes.
//! An [`Outcome`] is a nonempty block of atomic indices; it is atomic iff it
//! is a singleton. A [`Measurement`] is a partition of the context into such
//! blocks, stored in canonical order (blocks sorted by their smallest member)
//! so that structural equality coincides with partition equality.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an atomic outcome within a measurement context.
pub type AtomicOutcomeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutcomeError {
    #[error("context size must be at least 1")]
    EmptyContext,
    #[error("measurement `{label}` has no blocks")]
    NoBlocks { label: String },
    #[error("measurement `{label}` has an empty block at position {index}")]
    EmptyBlock { label: String, index: usize },
    #[error("measurement `{label}` is not a partition of 0..{context_size}: {reason}")]
    Partition {
        label: String,
        context_size: usize,
        reason: String,
    },
    #[error("outcome {outcome} does not live in a context of size {context_size}")]
    OutOfContext { outcome: Outcome, context_size: usize },
    #[error("context mismatch: {left} vs {right}")]
    ContextMismatch { left: usize, right: usize },
    #[error("coarse-graining source `{label}` is not fully atomic")]
    SourceNotAtomic { label: String },
}

/// A nonempty set of atomic outcome indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AtomicOutcomeId>", into = "Vec<AtomicOutcomeId>")]
pub struct Outcome {
    members: BTreeSet<AtomicOutcomeId>,
}

impl Outcome {
    pub fn new<I: IntoIterator<Item = AtomicOutcomeId>>(members: I) -> Option<Self> {
        let members: BTreeSet<_> = members.into_iter().collect();
        if members.is_empty() {
            None
        } else {
            Some(Self { members })
        }
    }

    pub fn atom(id: AtomicOutcomeId) -> Self {
        Self {
            members: BTreeSet::from([id]),
        }
    }

    /// The whole context `{0..d-1}`; the single outcome of a trivial measurement.
    pub fn full(context_size: usize) -> Option<Self> {
        Self::new(0..context_size)
    }

    pub fn members(&self) -> &BTreeSet<AtomicOutcomeId> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_atomic(&self) -> bool {
        self.members.len() == 1
    }

    /// The single member of an atomic outcome.
    pub fn atom_id(&self) -> Option<AtomicOutcomeId> {
        if self.is_atomic() {
            self.members.first().copied()
        } else {
            None
        }
    }

    pub fn min(&self) -> AtomicOutcomeId {
        *self.members.first().expect("outcomes are nonempty")
    }

    pub fn max(&self) -> AtomicOutcomeId {
        *self.members.last().expect("outcomes are nonempty")
    }

    pub fn contains(&self, id: AtomicOutcomeId) -> bool {
        self.members.contains(&id)
    }

    pub fn is_subset(&self, other: &Outcome) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn is_disjoint(&self, other: &Outcome) -> bool {
        self.members.is_disjoint(&other.members)
    }

    pub fn union(&self, other: &Outcome) -> Outcome {
        Outcome {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &Outcome) -> Option<Outcome> {
        Outcome::new(self.members.intersection(&other.members).copied())
    }

    pub fn difference(&self, other: &Outcome) -> Option<Outcome> {
        Outcome::new(self.members.difference(&other.members).copied())
    }

    /// Atomic refinements `{a}` for each member `a`, in ascending order.
    pub fn atoms(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.members.iter().map(|&a| Outcome::atom(a))
    }

    pub fn fits_context(&self, context_size: usize) -> bool {
        self.max() < context_size
    }

    /// Ordering used for refinements and ascription output: size first, then
    /// lexicographic on the sorted members.
    pub fn refinement_order(&self, other: &Outcome) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members.iter().cmp(other.members.iter()))
    }
}

impl TryFrom<Vec<AtomicOutcomeId>> for Outcome {
    type Error = String;

    fn try_from(value: Vec<AtomicOutcomeId>) -> Result<Self, Self::Error> {
        let n = value.len();
        let outcome = Outcome::new(value).ok_or_else(|| "outcome must be nonempty".to_string())?;
        if outcome.len() != n {
            return Err("outcome lists a member twice".into());
        }
        Ok(outcome)
    }
}

impl From<Outcome> for Vec<AtomicOutcomeId> {
    fn from(value: Outcome) -> Self {
        value.members.into_iter().collect()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

pub fn is_atomic(o: &Outcome) -> bool {
    o.is_atomic()
}

/// All nonempty strict subsets of `o` (plus `o` itself when `include_improper`),
/// ordered by size and then lexicographically.
pub fn refinements(o: &Outcome, include_improper: bool) -> Vec<Outcome> {
    let members: Vec<_> = o.members.iter().copied().collect();
    let n = members.len();
    assert!(n < usize::BITS as usize, "outcome too large to enumerate");
    let full: usize = (1 << n) - 1;
    let mut out: Vec<Outcome> = (1..=full)
        .filter(|&mask| include_improper || mask != full)
        .map(|mask| Outcome::new((0..n).filter(|i| mask >> i & 1 == 1).map(|i| members[i])).expect("mask is nonzero"))
        .collect();
    out.sort_by(Outcome::refinement_order);
    out
}

/// A labeled partition of the context `{0..d-1}` into outcomes.
///
/// The label names the observable; measurements sharing a label are
/// coarse-grainings of one another and share a basis in the quantum model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Measurement {
    label: String,
    context_size: usize,
    outcomes: Vec<Outcome>,
}

impl Measurement {
    pub fn new(label: impl Into<String>, context_size: usize, blocks: Vec<Outcome>) -> Result<Self, OutcomeError> {
        let label = label.into();
        if context_size == 0 {
            return Err(OutcomeError::EmptyContext);
        }
        if blocks.is_empty() {
            return Err(OutcomeError::NoBlocks { label });
        }
        let mut seen = vec![false; context_size];
        for block in &blocks {
            for &a in block.members() {
                if a >= context_size {
                    return Err(OutcomeError::Partition {
                        label,
                        context_size,
                        reason: format!("atom {a} is outside the context"),
                    });
                }
                if seen[a] {
                    return Err(OutcomeError::Partition {
                        label,
                        context_size,
                        reason: format!("atom {a} appears in more than one block"),
                    });
                }
                seen[a] = true;
            }
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(OutcomeError::Partition {
                label,
                context_size,
                reason: format!("atom {gap} is not covered"),
            });
        }
        let mut outcomes = blocks;
        outcomes.sort_by_key(Outcome::min);
        let m = Self {
            label,
            context_size,
            outcomes,
        };
        debug_assert!(m.is_partition());
        Ok(m)
    }

    /// Every atom in its own block.
    pub fn atomic(label: impl Into<String>, context_size: usize) -> Result<Self, OutcomeError> {
        Self::new(label, context_size, (0..context_size).map(Outcome::atom).collect())
    }

    /// A measurement with the single outcome `{0..d-1}`.
    pub fn trivial(label: impl Into<String>, context_size: usize) -> Result<Self, OutcomeError> {
        let full = Outcome::full(context_size).ok_or(OutcomeError::EmptyContext)?;
        Self::new(label, context_size, vec![full])
    }

    /// `block` as one outcome, every other atom on its own.
    pub fn with_block(label: impl Into<String>, context_size: usize, block: &Outcome) -> Result<Self, OutcomeError> {
        if !block.fits_context(context_size) {
            return Err(OutcomeError::OutOfContext {
                outcome: block.clone(),
                context_size,
            });
        }
        let mut blocks = vec![block.clone()];
        blocks.extend((0..context_size).filter(|a| !block.contains(*a)).map(Outcome::atom));
        Self::new(label, context_size, blocks)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn context_size(&self) -> usize {
        self.context_size
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn is_atomic(&self) -> bool {
        self.outcomes.iter().all(Outcome::is_atomic)
    }

    pub fn contains(&self, o: &Outcome) -> bool {
        self.outcomes.contains(o)
    }

    /// The block containing atom `a`.
    pub fn block_of(&self, a: AtomicOutcomeId) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.contains(a))
    }

    /// Replace `block` by its atomic refinements.
    pub fn split_block(&self, block: &Outcome) -> Option<Measurement> {
        if !self.contains(block) {
            return None;
        }
        let blocks = self
            .outcomes
            .iter()
            .flat_map(|o| {
                if o == block {
                    o.atoms().collect::<Vec<_>>()
                } else {
                    vec![o.clone()]
                }
            })
            .collect();
        Measurement::new(self.label.clone(), self.context_size, blocks).ok()
    }

    /// Partition containing `merged` as a block, with the remaining atoms split
    /// by the common refinement of `self` and `other`. Symmetric in its two
    /// measurement arguments.
    pub fn merge_with(&self, other: &Measurement, merged: &Outcome) -> Result<Measurement, OutcomeError> {
        if self.context_size != other.context_size {
            return Err(OutcomeError::ContextMismatch {
                left: self.context_size,
                right: other.context_size,
            });
        }
        if !merged.fits_context(self.context_size) {
            return Err(OutcomeError::OutOfContext {
                outcome: merged.clone(),
                context_size: self.context_size,
            });
        }
        let mut blocks = vec![merged.clone()];
        for a in &self.outcomes {
            for b in &other.outcomes {
                if let Some(cell) = a.intersection(b).and_then(|c| c.difference(merged)) {
                    blocks.push(cell);
                }
            }
        }
        Measurement::new(self.label.clone(), self.context_size, blocks)
    }

    fn is_partition(&self) -> bool {
        let total: usize = self.outcomes.iter().map(Outcome::len).sum();
        let union: BTreeSet<_> = self.outcomes.iter().flat_map(|o| o.members().iter().copied()).collect();
        total == self.context_size && union.len() == self.context_size
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.label)?;
        for (i, o) in self.outcomes.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "]")
    }
}

/// Builds a measurement from raw blocks of atomic ids.
pub fn make_measurement(
    label: &str,
    context_size: usize,
    blocks: &[Vec<AtomicOutcomeId>],
) -> Result<Measurement, OutcomeError> {
    if context_size == 0 {
        return Err(OutcomeError::EmptyContext);
    }
    if blocks.is_empty() {
        return Err(OutcomeError::NoBlocks { label: label.into() });
    }
    let outcomes = blocks
        .iter()
        .enumerate()
        .map(|(index, b)| {
            let o = Outcome::new(b.iter().copied()).ok_or_else(|| OutcomeError::EmptyBlock {
                label: label.into(),
                index,
            })?;
            if o.len() != b.len() {
                return Err(OutcomeError::Partition {
                    label: label.into(),
                    context_size,
                    reason: format!("block {index} lists an atom twice"),
                });
            }
            Ok(o)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Measurement::new(label, context_size, outcomes)
}

/// A map from a fully atomic measurement onto a coarser one over the same
/// context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseGraining {
    source: Measurement,
    target: Measurement,
    /// `map[i]` is the index of the target outcome containing source outcome `i`.
    map: Vec<usize>,
}

impl CoarseGraining {
    pub fn new(source: Measurement, target: Measurement) -> Result<Self, OutcomeError> {
        if !source.is_atomic() {
            return Err(OutcomeError::SourceNotAtomic {
                label: source.label.clone(),
            });
        }
        if source.context_size != target.context_size {
            return Err(OutcomeError::ContextMismatch {
                left: source.context_size,
                right: target.context_size,
            });
        }
        let map = source
            .outcomes
            .iter()
            .map(|o| {
                target
                    .outcomes
                    .iter()
                    .position(|t| o.is_subset(t))
                    .expect("target is a partition of the same context")
            })
            .collect();
        Ok(Self { source, target, map })
    }

    pub fn source(&self) -> &Measurement {
        &self.source
    }

    pub fn target(&self) -> &Measurement {
        &self.target
    }

    /// Target outcome containing source outcome `index`.
    pub fn image(&self, index: usize) -> Option<&Outcome> {
        self.map.get(index).map(|&t| &self.target.outcomes[t])
    }

    /// Source outcomes mapped into target outcome `index`, unioned.
    pub fn preimage(&self, index: usize) -> Option<Outcome> {
        let members = self
            .map
            .iter()
            .zip(&self.source.outcomes)
            .filter(|(&t, _)| t == index)
            .flat_map(|(_, o)| o.members().iter().copied());
        Outcome::new(members)
    }

    /// Atomic refinements of every target outcome, in source order.
    pub fn refine_target(&self) -> Vec<Outcome> {
        let mut atoms: Vec<Outcome> = self
            .target
            .outcomes
            .iter()
            .flat_map(|o| o.atoms().collect::<Vec<_>>())
            .collect();
        atoms.sort_by_key(Outcome::min);
        atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(m: &[usize]) -> Outcome {
        Outcome::new(m.iter().copied()).unwrap()
    }

    #[test]
    fn stern_gerlach_atomic_pair() {
        let m = make_measurement("SG", 2, &[vec![0], vec![1]]).unwrap();
        assert!(m.is_atomic());
        assert_eq!(m.outcomes(), &[o(&[0]), o(&[1])]);
    }

    #[test]
    fn coarse_single_outcome() {
        let m = make_measurement("coarse", 2, &[vec![0, 1]]).unwrap();
        assert!(!m.is_atomic());
        assert_eq!(m.outcomes(), &[o(&[0, 1])]);
    }

    #[test]
    fn overlap_is_rejected() {
        let err = make_measurement("bad", 2, &[vec![0], vec![0, 1]]).unwrap_err();
        assert!(matches!(err, OutcomeError::Partition { .. }));
    }

    #[test]
    fn gap_and_range_are_rejected() {
        assert!(matches!(
            make_measurement("gap", 3, &[vec![0], vec![1]]),
            Err(OutcomeError::Partition { .. })
        ));
        assert!(matches!(
            make_measurement("range", 2, &[vec![0], vec![1, 2]]),
            Err(OutcomeError::Partition { .. })
        ));
        assert!(matches!(
            make_measurement("empty", 2, &[vec![0, 1], vec![]]),
            Err(OutcomeError::EmptyBlock { index: 1, .. })
        ));
        assert!(matches!(
            make_measurement("none", 2, &[]),
            Err(OutcomeError::NoBlocks { .. })
        ));
        assert!(matches!(
            make_measurement("zero", 0, &[vec![0]]),
            Err(OutcomeError::EmptyContext)
        ));
    }

    #[test]
    fn atomicity() {
        assert!(is_atomic(&o(&[0])));
        assert!(!is_atomic(&o(&[0, 1])));
        assert!(!is_atomic(&o(&[0, 1, 2])));
    }

    #[test]
    fn refinement_examples() {
        assert_eq!(refinements(&o(&[0, 1]), false), vec![o(&[0]), o(&[1])]);
        assert!(refinements(&o(&[0]), false).is_empty());
        assert_eq!(
            refinements(&o(&[0, 1, 2]), false),
            vec![o(&[0]), o(&[1]), o(&[2]), o(&[0, 1]), o(&[0, 2]), o(&[1, 2])]
        );
        assert_eq!(refinements(&o(&[3, 5]), true), vec![o(&[3]), o(&[5]), o(&[3, 5])]);
    }

    #[test]
    fn refinement_count_matches_power_set() {
        for n in 1..=6 {
            let outcome = o(&(0..n).collect::<Vec<_>>());
            assert_eq!(refinements(&outcome, false).len(), (1 << n) - 2);
        }
    }

    #[test]
    fn canonical_block_order_gives_structural_equality() {
        let a = make_measurement("M", 3, &[vec![2], vec![0, 1]]).unwrap();
        let b = make_measurement("M", 3, &[vec![1, 0], vec![2]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_and_merge() {
        let coarse = make_measurement("M", 4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let split = coarse.split_block(&o(&[0, 1])).unwrap();
        assert_eq!(split.outcomes(), &[o(&[0]), o(&[1]), o(&[2, 3])]);
        let merged = split.merge_with(&split, &o(&[0, 1])).unwrap();
        assert_eq!(merged, coarse);
    }

    #[test]
    fn merge_is_symmetric() {
        let a = make_measurement("M", 4, &[vec![0], vec![1], vec![2, 3]]).unwrap();
        let b = make_measurement("M", 4, &[vec![0], vec![1, 2], vec![3]]).unwrap();
        let u = o(&[0]);
        assert_eq!(a.merge_with(&b, &u).unwrap(), b.merge_with(&a, &u).unwrap());
    }

    #[test]
    fn coarse_graining_refines_back_to_source() {
        let source = Measurement::atomic("M", 5).unwrap();
        let target = make_measurement("M", 5, &[vec![0, 3], vec![1], vec![2, 4]]).unwrap();
        let cg = CoarseGraining::new(source.clone(), target).unwrap();
        assert_eq!(cg.refine_target(), source.outcomes());
        assert_eq!(cg.image(3), Some(&o(&[0, 3])));
        assert_eq!(cg.preimage(2), Some(o(&[2, 4])));
    }

    #[test]
    fn coarse_graining_needs_atomic_source() {
        let source = make_measurement("M", 2, &[vec![0, 1]]).unwrap();
        let target = source.clone();
        assert!(matches!(
            CoarseGraining::new(source, target),
            Err(OutcomeError::SourceNotAtomic { .. })
        ));
    }

    #[test]
    fn serde_round_trip_rejects_duplicates() {
        let x: Outcome = serde_json::from_str("[2,0]").unwrap();
        assert_eq!(x, o(&[0, 2]));
        assert!(serde_json::from_str::<Outcome>("[1,1]").is_err());
        assert!(serde_json::from_str::<Outcome>("[]").is_err());
    }
}
