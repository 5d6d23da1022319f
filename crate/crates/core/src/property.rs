//! Property attribution: actual and potential ICP and evolutive
//! ascriptions emitted at the instants adjacent to each outcome record.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::outcome::{refinements, Outcome};
use crate::sequence::{validate, Sequence, SequenceRecord, Tick, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributionError {
    #[error("measurement `{0}` has no property type")]
    UnlabeledMeasurement(String),
    #[error("sequence is malformed: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    InvalidSequence(Vec<Violation>),
    #[error("elapsed interval must be at least one tick, got {0}")]
    ZeroInterval(Tick),
    #[error("context of size {context_size} does not split into parts of size {d_b}")]
    JointContext { context_size: usize, d_b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Classical,
    Quantum,
}

/// Instant immediately before (`minus`) or after (`plus`) a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTag {
    pub tick: Tick,
    pub side: Side,
}

impl TimeTag {
    pub fn plus(tick: Tick) -> Self {
        Self { tick, side: Side::Plus }
    }

    pub fn minus(tick: Tick) -> Self {
        Self {
            tick,
            side: Side::Minus,
        }
    }
}

impl fmt::Display for TimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Minus => "-",
            Side::Plus => "+",
        };
        write!(f, "{}{s}", self.tick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Actual,
    Potential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "ICP")]
    Icp,
    #[serde(rename = "evolutive")]
    Evolutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    ExtendedSimple,
    ExtendedComplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum PropertyValue {
    Outcome(Outcome),
    /// Some single atom of the outcome, not known which.
    ExistentialWithin(Outcome),
    Unvalued,
    /// Finite-difference rate of change per tick.
    Rate(f64),
    /// Joint configurations `(i_A, i_B)`.
    Configurations(Vec<(usize, usize)>),
}

impl PropertyValue {
    pub fn is_atomic(&self) -> bool {
        match self {
            PropertyValue::Outcome(o) => o.is_atomic(),
            PropertyValue::Configurations(c) => c.len() == 1,
            _ => false,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Outcome(o) => write!(f, "{o}"),
            PropertyValue::ExistentialWithin(o) => write!(f, "some atom in {o}"),
            PropertyValue::Unvalued => write!(f, "present, unvalued"),
            PropertyValue::Rate(v) => write!(f, "{v}"),
            PropertyValue::Configurations(c) => {
                let parts: Vec<_> = c.iter().map(|(a, b)| format!("({a},{b})")).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyAscription {
    pub subject: String,
    pub time_tag: TimeTag,
    pub property_type: String,
    pub value: PropertyValue,
    pub modality: Modality,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<Extension>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialPolicy {
    #[default]
    AllSubsets,
    AtomicOnly,
}

impl PotentialPolicy {
    fn potentials(self, o: &Outcome) -> Vec<Outcome> {
        match self {
            PotentialPolicy::AllSubsets => refinements(o, false),
            PotentialPolicy::AtomicOnly if o.is_atomic() => Vec::new(),
            PotentialPolicy::AtomicOnly => o.atoms().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionInput {
    pub regime: Regime,
    pub subject: String,
    pub sequence: Sequence,
    /// Measurement label to the ICP type it measures.
    pub kinds: BTreeMap<String, String>,
    /// Classical only.
    pub registrative: bool,
    /// Classical only.
    pub passive: bool,
    pub potentials: PotentialPolicy,
}

impl AttributionInput {
    pub fn new(regime: Regime, subject: impl Into<String>, sequence: Sequence) -> Self {
        Self {
            regime,
            subject: subject.into(),
            sequence,
            kinds: BTreeMap::new(),
            registrative: true,
            passive: true,
            potentials: PotentialPolicy::AllSubsets,
        }
    }

    pub fn with_kind(mut self, label: impl Into<String>, icp: impl Into<String>) -> Self {
        self.kinds.insert(label.into(), icp.into());
        self
    }

    pub fn with_flags(mut self, registrative: bool, passive: bool) -> Self {
        self.registrative = registrative;
        self.passive = passive;
        self
    }

    pub fn with_potentials(mut self, policy: PotentialPolicy) -> Self {
        self.potentials = policy;
        self
    }

    fn icp_of(&self, r: &SequenceRecord) -> Result<&str, AttributionError> {
        let label = r.measurement().label();
        self.kinds
            .get(label)
            .map(String::as_str)
            .ok_or_else(|| AttributionError::UnlabeledMeasurement(label.to_string()))
    }

    fn check(&self) -> Result<(), AttributionError> {
        let violations: Vec<_> = validate(&self.sequence)
            .into_iter()
            .filter(|v| v.rule.is_structural())
            .collect();
        if !violations.is_empty() {
            return Err(AttributionError::InvalidSequence(violations));
        }
        for r in self.sequence.records() {
            self.icp_of(r)?;
        }
        Ok(())
    }

    fn ascription(
        &self,
        tag: TimeTag,
        icp: &str,
        value: PropertyValue,
        modality: Modality,
        kind: Kind,
    ) -> PropertyAscription {
        PropertyAscription {
            subject: self.subject.clone(),
            time_tag: tag,
            property_type: icp.to_string(),
            value,
            modality,
            kind,
            extension: None,
        }
    }
}

/// Ascriptions for every record of the input's sequence, ordered by time
/// tag, then kind (ICP first), then modality (actual first); potentials keep
/// refinement order.
pub fn attribute(input: &AttributionInput) -> Result<Vec<PropertyAscription>, AttributionError> {
    input.check()?;
    let records = input.sequence.records();
    let mut out = Vec::new();
    for (k, r) in records.iter().enumerate() {
        let icp = input.icp_of(r)?;
        match input.regime {
            Regime::Quantum => quantum_record(input, r, icp, &mut out),
            Regime::Classical => {
                let prev = k.checked_sub(1).map(|p| &records[p]);
                classical_record(input, prev, r, icp, &mut out)?
            }
        }
    }
    sort(&mut out);
    Ok(out)
}

fn quantum_record(input: &AttributionInput, r: &SequenceRecord, icp: &str, out: &mut Vec<PropertyAscription>) {
    let tag = TimeTag::plus(r.time());
    let o = r.outcome();
    let mut actual = input.ascription(tag, icp, PropertyValue::Outcome(o.clone()), Modality::Actual, Kind::Icp);
    if o.is_atomic() {
        out.push(actual);
        return;
    }
    actual.extension = Some(Extension::ExtendedSimple);
    out.push(actual);
    for p in input.potentials.potentials(o) {
        out.push(input.ascription(tag, icp, PropertyValue::Outcome(p), Modality::Potential, Kind::Icp));
    }
    out.push(input.ascription(tag, icp, PropertyValue::Unvalued, Modality::Actual, Kind::Evolutive));
}

fn classical_record(
    input: &AttributionInput,
    prev: Option<&SequenceRecord>,
    r: &SequenceRecord,
    icp: &str,
    out: &mut Vec<PropertyAscription>,
) -> Result<(), AttributionError> {
    let o = r.outcome();
    let value = if o.is_atomic() {
        PropertyValue::Outcome(o.clone())
    } else {
        PropertyValue::ExistentialWithin(o.clone())
    };
    out.push(input.ascription(TimeTag::plus(r.time()), icp, value.clone(), Modality::Actual, Kind::Icp));
    if input.registrative {
        out.push(input.ascription(TimeTag::minus(r.time()), icp, value, Modality::Actual, Kind::Icp));
    }
    if !input.passive {
        return Ok(());
    }
    let rate = match prev {
        Some(p)
            if input.registrative
                && o.is_atomic()
                && p.outcome().is_atomic()
                && input.icp_of(p)? == icp
                && r.time() - p.time() == 1 =>
        {
            let (x0, x1) = (p.outcome().min() as f64, o.min() as f64);
            PropertyValue::Rate(x1 - x0)
        }
        _ => PropertyValue::Unvalued,
    };
    out.push(input.ascription(TimeTag::plus(r.time()), icp, rate, Modality::Actual, Kind::Evolutive));
    Ok(())
}

fn sort(out: &mut [PropertyAscription]) {
    out.sort_by_key(|a| (a.time_tag, a.kind, a.modality));
}

/// Attribution on a two-part system whose joint atom `i_A * d_b + i_B`
/// stands for the configuration `(i_A, i_B)`. Non-atomic joint outcomes
/// yield the whole configuration set actually, tagged extended complex, and
/// each nonempty strict subset potentially.
pub fn attribute_composite(input: &AttributionInput, d_b: usize) -> Result<Vec<PropertyAscription>, AttributionError> {
    input.check()?;
    let mut out = Vec::new();
    for r in input.sequence.records() {
        let icp = input.icp_of(r)?;
        let d = r.measurement().context_size();
        let pairs = |o: &Outcome| -> Result<Vec<(usize, usize)>, AttributionError> {
            if d_b == 0 || d % d_b != 0 {
                return Err(AttributionError::JointContext { context_size: d, d_b });
            }
            Ok(o.members().iter().map(|&a| (a / d_b, a % d_b)).collect())
        };
        let tag = TimeTag::plus(r.time());
        let o = r.outcome();
        let mut actual = input.ascription(
            tag,
            icp,
            PropertyValue::Configurations(pairs(o)?),
            Modality::Actual,
            Kind::Icp,
        );
        if !o.is_atomic() {
            actual.extension = Some(Extension::ExtendedComplex);
        }
        out.push(actual);
        if o.is_atomic() {
            continue;
        }
        for p in input.potentials.potentials(o) {
            out.push(input.ascription(
                tag,
                icp,
                PropertyValue::Configurations(pairs(&p)?),
                Modality::Potential,
                Kind::Icp,
            ));
        }
    }
    sort(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveSpeed {
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedInterpretation {
    ActualSpeed,
    EffectiveSpeed,
}

/// `(x1 - x0) / dt`, read as an actual speed classically and as a mere
/// effective speed in the quantum regime.
pub fn effective_speed(
    x0: usize,
    x1: usize,
    dt_ticks: Tick,
    regime: Regime,
) -> Result<(EffectiveSpeed, SpeedInterpretation), AttributionError> {
    if dt_ticks < 1 {
        return Err(AttributionError::ZeroInterval(dt_ticks));
    }
    let value = (x1 as f64 - x0 as f64) / dt_ticks as f64;
    let interpretation = match regime {
        Regime::Classical => SpeedInterpretation::ActualSpeed,
        Regime::Quantum => SpeedInterpretation::EffectiveSpeed,
    };
    Ok((EffectiveSpeed { value }, interpretation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    DeterministicPossible,
    Indeterministic,
}

/// Classical sequences containing a pair of atomic passive registrative
/// measurements of one ICP at adjacent ticks leave deterministic prediction
/// open; everything else, and every quantum sequence, does not.
pub fn determinism_verdict(input: &AttributionInput) -> Verdict {
    if input.regime == Regime::Quantum || !(input.registrative && input.passive) {
        return Verdict::Indeterministic;
    }
    let icp = |r: &SequenceRecord| input.kinds.get(r.measurement().label());
    let paired = input.sequence.records().windows(2).any(|w| {
        w[0].is_atomic()
            && w[1].is_atomic()
            && w[1].time() - w[0].time() == 1
            && icp(&w[0]).is_some()
            && icp(&w[0]) == icp(&w[1])
    });
    if paired {
        Verdict::DeterministicPossible
    } else {
        Verdict::Indeterministic
    }
}

/// True when no time tag carries both an atomic ICP value and an evolutive
/// ascription for the same subject.
pub fn exclusivity_holds(ascriptions: &[PropertyAscription]) -> bool {
    let mut atomic: BTreeMap<(&str, TimeTag, &str), bool> = BTreeMap::new();
    let mut evolutive: BTreeMap<(&str, TimeTag, &str), bool> = BTreeMap::new();
    for a in ascriptions {
        let key = (a.subject.as_str(), a.time_tag, a.property_type.as_str());
        match a.kind {
            Kind::Icp if a.modality == Modality::Actual && a.value.is_atomic() => {
                atomic.insert(key, true);
            }
            Kind::Evolutive => {
                evolutive.insert(key, true);
            }
            _ => {}
        }
    }
    atomic.keys().all(|k| !evolutive.contains_key(k))
}
