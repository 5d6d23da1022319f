//! Timed outcome records and the series (`·`) and parallel (`∨`) combinations.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::outcome::{Measurement, Outcome, OutcomeError};

/// Ordinal time of a measurement.
pub type Tick = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("outcome {outcome} is not a block of measurement {measurement}")]
    ForeignOutcome { outcome: Outcome, measurement: String },
    #[error("join mismatch: {0}")]
    JoinMismatch(String),
    #[error("join record at tick {tick} has non-atomic outcome {outcome}")]
    NonAtomicJoin { tick: Tick, outcome: Outcome },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("outcomes {left} and {right} overlap at position {position}")]
    Overlap {
        position: usize,
        left: Outcome,
        right: Outcome,
    },
    #[error("position {position} is a boundary of a sequence of length {len}")]
    BoundaryPosition { position: usize, len: usize },
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

/// One measurement and the outcome it yielded at `time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    time: Tick,
    measurement: Arc<Measurement>,
    outcome: Outcome,
}

impl SequenceRecord {
    pub fn new(time: Tick, measurement: Arc<Measurement>, outcome: Outcome) -> Result<Self, SequenceError> {
        if !measurement.contains(&outcome) {
            return Err(SequenceError::ForeignOutcome {
                outcome,
                measurement: measurement.to_string(),
            });
        }
        Ok(Self {
            time,
            measurement,
            outcome,
        })
    }

    pub fn time(&self) -> Tick {
        self.time
    }

    pub fn measurement(&self) -> &Arc<Measurement> {
        &self.measurement
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    pub fn is_atomic(&self) -> bool {
        self.outcome.is_atomic()
    }
}

impl fmt::Display for SequenceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}", self.measurement.label(), self.outcome, self.time)
    }
}

/// Rule broken by a sequence, as reported by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Empty,
    TimesNotIncreasing,
    AnchorNotAtomic,
    /// Advisory: a non-atomic final is fine for attribution but not for
    /// probability queries.
    FinalNotAtomic,
    ContextMismatch,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Empty => "empty",
            Rule::TimesNotIncreasing => "times-not-increasing",
            Rule::AnchorNotAtomic => "anchor-not-atomic",
            Rule::FinalNotAtomic => "final-not-atomic",
            Rule::ContextMismatch => "context-mismatch",
        }
    }

    /// Rules that still permit property attribution.
    pub fn is_structural(self) -> bool {
        matches!(self, Rule::Empty | Rule::TimesNotIncreasing | Rule::ContextMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.rule.as_str(), self.index)
    }
}

/// A time-ordered list of outcome records from a single run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sequence {
    records: Vec<SequenceRecord>,
}

impl Sequence {
    pub fn new(records: Vec<SequenceRecord>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[SequenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&SequenceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&SequenceRecord> {
        self.records.last()
    }

    pub fn context_size(&self) -> Option<usize> {
        self.first().map(|r| r.measurement.context_size())
    }

    /// Can be handed to a predictive model: at least two records, no
    /// violations of any rule.
    pub fn is_queryable(&self) -> bool {
        self.len() >= 2 && validate(self).is_empty()
    }

    /// Copy with the record at `position` replaced.
    pub fn with_record(&self, position: usize, record: SequenceRecord) -> Sequence {
        let mut records = self.records.clone();
        records[position] = record;
        Sequence { records }
    }

    /// Copy with `record` inserted in time order. The caller is responsible
    /// for the tick being free.
    pub fn with_inserted(&self, record: SequenceRecord) -> Sequence {
        let mut records = self.records.clone();
        let at = records.partition_point(|r| r.time < record.time);
        records.insert(at, record);
        Sequence { records }
    }

    /// One sequence per atomic refinement of the outcome at `position`, each
    /// recorded under the measurement with that block split into atoms.
    pub fn refine_at(&self, position: usize) -> Option<Vec<Sequence>> {
        let record = self.records.get(position)?;
        let split = Arc::new(record.measurement.split_block(&record.outcome)?);
        Some(
            record
                .outcome
                .atoms()
                .map(|atom| {
                    let r = SequenceRecord {
                        time: record.time,
                        measurement: split.clone(),
                        outcome: atom,
                    };
                    self.with_record(position, r)
                })
                .collect(),
        )
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

/// Every rule the sequence breaks, each tagged with the record index.
pub fn validate(s: &Sequence) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(first) = s.first() else {
        out.push(Violation {
            index: 0,
            rule: Rule::Empty,
        });
        return out;
    };
    if !first.is_atomic() {
        out.push(Violation {
            index: 0,
            rule: Rule::AnchorNotAtomic,
        });
    }
    let d = first.measurement.context_size();
    for (i, pair) in s.records.windows(2).enumerate() {
        if pair[1].time <= pair[0].time {
            out.push(Violation {
                index: i + 1,
                rule: Rule::TimesNotIncreasing,
            });
        }
    }
    for (i, r) in s.records.iter().enumerate().skip(1) {
        if r.measurement.context_size() != d {
            out.push(Violation {
                index: i,
                rule: Rule::ContextMismatch,
            });
        }
    }
    let last = s.len() - 1;
    if last > 0 && !s.records[last].is_atomic() {
        out.push(Violation {
            index: last,
            rule: Rule::FinalNotAtomic,
        });
    }
    out
}

/// Series combination `a · b`: `b` starts where `a` ends, on an atomic record.
pub fn series(a: &Sequence, b: &Sequence) -> Result<Sequence, SequenceError> {
    let (Some(join_a), Some(join_b)) = (a.last(), b.first()) else {
        return Err(SequenceError::JoinMismatch("cannot join an empty sequence".into()));
    };
    if join_a != join_b {
        return Err(SequenceError::JoinMismatch(format!("{join_a} vs {join_b}")));
    }
    if !join_a.is_atomic() {
        return Err(SequenceError::NonAtomicJoin {
            tick: join_a.time,
            outcome: join_a.outcome.clone(),
        });
    }
    let mut records = a.records.clone();
    records.extend(b.records[1..].iter().cloned());
    Ok(Sequence { records })
}

/// Parallel combination `c ∨ d` of two sequences that differ only in the
/// outcome at one intermediate position, where those outcomes are disjoint.
pub fn parallel(c: &Sequence, d: &Sequence) -> Result<Sequence, SequenceError> {
    if c.len() != d.len() {
        return Err(SequenceError::ShapeMismatch(format!(
            "lengths {} and {} differ",
            c.len(),
            d.len()
        )));
    }
    if let Some(i) = c.records.iter().zip(&d.records).position(|(x, y)| x.time != y.time) {
        return Err(SequenceError::ShapeMismatch(format!("ticks differ at position {i}")));
    }
    let differing: Vec<usize> = (0..c.len()).filter(|&i| c.records[i] != d.records[i]).collect();
    let position = match differing.as_slice() {
        [] => {
            // Identical sequences: every slot overlaps itself.
            let i = c.len().saturating_sub(1).min(1);
            let r = c
                .records
                .get(i)
                .ok_or_else(|| SequenceError::ShapeMismatch("empty sequences".into()))?;
            return Err(SequenceError::Overlap {
                position: i,
                left: r.outcome.clone(),
                right: r.outcome.clone(),
            });
        }
        [i] => *i,
        many => {
            return Err(SequenceError::ShapeMismatch(format!(
                "sequences differ at {} positions {:?}",
                many.len(),
                many
            )))
        }
    };
    if position == 0 || position + 1 == c.len() {
        return Err(SequenceError::BoundaryPosition { position, len: c.len() });
    }
    let (rc, rd) = (&c.records[position], &d.records[position]);
    if rc.measurement.label() != rd.measurement.label() {
        return Err(SequenceError::ShapeMismatch(format!(
            "position {position} records different observables `{}` and `{}`",
            rc.measurement.label(),
            rd.measurement.label()
        )));
    }
    if !rc.outcome.is_disjoint(&rd.outcome) {
        return Err(SequenceError::Overlap {
            position,
            left: rc.outcome.clone(),
            right: rd.outcome.clone(),
        });
    }
    let merged = rc.outcome.union(&rd.outcome);
    let measurement = Arc::new(rc.measurement.merge_with(&rd.measurement, &merged)?);
    let record = SequenceRecord {
        time: rc.time,
        measurement,
        outcome: merged,
    };
    Ok(c.with_record(position, record))
}

/// Left fold of [`parallel`] over `seqs`.
pub fn parallel_all(seqs: &[Sequence]) -> Result<Sequence, SequenceError> {
    let (head, tail) = seqs
        .split_first()
        .ok_or_else(|| SequenceError::ShapeMismatch("no sequences to combine".into()))?;
    tail.iter().try_fold(head.clone(), |acc, s| parallel(&acc, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::make_measurement;

    fn atomic(label: &str, d: usize) -> Arc<Measurement> {
        Arc::new(Measurement::atomic(label, d).unwrap())
    }

    fn rec(t: Tick, m: &Arc<Measurement>, o: &[usize]) -> SequenceRecord {
        SequenceRecord::new(t, m.clone(), Outcome::new(o.iter().copied()).unwrap()).unwrap()
    }

    #[test]
    fn foreign_outcome_is_rejected() {
        let m = atomic("Z", 2);
        let err = SequenceRecord::new(0, m, Outcome::new([0, 1]).unwrap()).unwrap_err();
        assert!(matches!(err, SequenceError::ForeignOutcome { .. }));
    }

    #[test]
    fn series_concatenates_on_shared_record() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let a = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[1])]);
        let b = Sequence::new(vec![rec(2, &m, &[1]), rec(3, &n, &[0])]);
        let c = series(&a, &b).unwrap();
        assert_eq!(
            c,
            Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[1]), rec(3, &n, &[0])])
        );
    }

    #[test]
    fn series_with_single_record_tail_is_identity() {
        let (l, m) = (atomic("L", 2), atomic("M", 2));
        let a = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[1])]);
        let b = Sequence::new(vec![rec(2, &m, &[1])]);
        assert_eq!(series(&a, &b).unwrap(), a);
    }

    #[test]
    fn series_rejects_non_atomic_join() {
        let l = atomic("L", 2);
        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        let n = atomic("N", 2);
        let a = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &coarse, &[0, 1])]);
        let b = Sequence::new(vec![rec(2, &coarse, &[0, 1]), rec(3, &n, &[0])]);
        assert!(matches!(
            series(&a, &b),
            Err(SequenceError::NonAtomicJoin { tick: 2, .. })
        ));
    }

    #[test]
    fn series_rejects_mismatched_join() {
        let (l, m) = (atomic("L", 2), atomic("M", 2));
        let a = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[1])]);
        let b = Sequence::new(vec![rec(2, &m, &[0]), rec(3, &l, &[0])]);
        assert!(matches!(series(&a, &b), Err(SequenceError::JoinMismatch(_))));
        assert!(matches!(
            series(&a, &Sequence::default()),
            Err(SequenceError::JoinMismatch(_))
        ));
    }

    #[test]
    fn parallel_merges_intermediate_outcomes() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let c = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        let d = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[1]), rec(3, &n, &[0])]);
        let e = parallel(&c, &d).unwrap();
        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        assert_eq!(
            e,
            Sequence::new(vec![rec(1, &l, &[0]), rec(2, &coarse, &[0, 1]), rec(3, &n, &[0])])
        );
    }

    #[test]
    fn parallel_rejects_overlap() {
        let (l, n) = (atomic("L", 2), atomic("N", 2));
        let m = atomic("M", 2);
        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        let c = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        let d = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &coarse, &[0, 1]), rec(3, &n, &[0])]);
        assert!(matches!(
            parallel(&c, &d),
            Err(SequenceError::Overlap { position: 1, .. })
        ));
        assert!(matches!(parallel(&c, &c), Err(SequenceError::Overlap { .. })));
    }

    #[test]
    fn parallel_rejects_differing_anchor() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let c = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        let d = Sequence::new(vec![rec(1, &l, &[1]), rec(2, &m, &[1]), rec(3, &n, &[0])]);
        assert!(matches!(parallel(&c, &d), Err(SequenceError::ShapeMismatch(_))));
    }

    #[test]
    fn parallel_rejects_boundary_position() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let c = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        let d = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[1])]);
        assert!(matches!(
            parallel(&c, &d),
            Err(SequenceError::BoundaryPosition { position: 2, len: 3 })
        ));
    }

    #[test]
    fn parallel_rejects_different_lengths_and_ticks() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let c = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        let d = Sequence::new(vec![rec(1, &l, &[0]), rec(3, &n, &[0])]);
        assert!(matches!(parallel(&c, &d), Err(SequenceError::ShapeMismatch(_))));
        let e = Sequence::new(vec![rec(1, &l, &[0]), rec(4, &m, &[1]), rec(5, &n, &[0])]);
        assert!(matches!(parallel(&c, &e), Err(SequenceError::ShapeMismatch(_))));
    }

    #[test]
    fn validate_examples() {
        let (l, m, n) = (atomic("L", 2), atomic("M", 2), atomic("N", 2));
        let ok = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0]), rec(3, &n, &[0])]);
        assert!(validate(&ok).is_empty());
        assert!(ok.is_queryable());

        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        let bad_anchor = Sequence::new(vec![rec(1, &coarse, &[0, 1]), rec(2, &n, &[0])]);
        assert_eq!(
            validate(&bad_anchor),
            vec![Violation {
                index: 0,
                rule: Rule::AnchorNotAtomic
            }]
        );
        assert_eq!(validate(&bad_anchor)[0].to_string(), "anchor-not-atomic@0");

        let backwards = Sequence::new(vec![rec(2, &l, &[0]), rec(1, &m, &[0])]);
        assert_eq!(
            validate(&backwards),
            vec![Violation {
                index: 1,
                rule: Rule::TimesNotIncreasing
            }]
        );
        assert_eq!(validate(&Sequence::default())[0].rule, Rule::Empty);
    }

    #[test]
    fn validate_flags_non_atomic_final_and_context_mismatch() {
        let l = atomic("L", 2);
        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        let s = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &coarse, &[0, 1])]);
        assert_eq!(validate(&s)[0].rule, Rule::FinalNotAtomic);
        let big = atomic("B", 3);
        let s = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &big, &[2])]);
        assert_eq!(validate(&s)[0].rule, Rule::ContextMismatch);
    }

    #[test]
    fn refine_then_parallel_round_trips() {
        let (l, n) = (atomic("L", 4), atomic("N", 4));
        let m = Arc::new(make_measurement("M", 4, &[vec![0, 2, 3], vec![1]]).unwrap());
        let s = Sequence::new(vec![rec(1, &l, &[0]), rec(2, &m, &[0, 2, 3]), rec(3, &n, &[1])]);
        let parts = s.refine_at(1).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parallel_all(&parts).unwrap(), s);
    }
}
