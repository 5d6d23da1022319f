//! Versioned JSON experiment files: declaration types, resolution into
//! models and sequences, and positioned diagnostics.

mod generator;
mod locate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generator::{generate, parse_call, Call, GeneratorError, GENERATORS};
pub use locate::locate;

use crate::closure::ClosureSetup;
use crate::linalg::{c, CMatrix};
use crate::models::{ClassicalModel, CompositeModel, ModelError, QuantumModel, ACCUMULATED_TOL};
use crate::outcome::{Measurement, Outcome, OutcomeError};
use crate::property::{AttributionInput, PotentialPolicy, Regime};
use crate::sequence::{validate, Rule, Sequence, SequenceError, SequenceRecord, Tick};

pub const FORMAT_VERSION: u32 = 1;

/// A complex matrix, row-major, each entry `[re, im]`.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

/// A matrix given either by a generator expression or explicitly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexRows>,
}

impl MatrixSource {
    pub fn generator(text: impl Into<String>) -> Self {
        Self {
            generator: Some(text.into()),
            matrix: None,
        }
    }

    pub fn matrix(m: &CMatrix) -> Self {
        Self {
            generator: None,
            matrix: Some(
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect(),
            ),
        }
    }
}

/// Unitary applied over `[tick, tick + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub tick: Tick,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexRows>,
}

impl EvolutionSpec {
    pub fn generator(tick: Tick, text: impl Into<String>) -> Self {
        Self {
            tick,
            generator: Some(text.into()),
            matrix: None,
        }
    }

    fn source(&self) -> MatrixSource {
        MatrixSource {
            generator: self.generator.clone(),
            matrix: self.matrix.clone(),
        }
    }
}

/// Column-stochastic transition over `[tick, tick + 1)`, row-major:
/// `matrix[j][i]` is the probability of atom `j` given atom `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub tick: Tick,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    /// Basis label for quantum models.
    pub observable: String,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub name: String,
    pub dimension: usize,
    pub bases: BTreeMap<String, MatrixSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evolutions: Vec<EvolutionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    pub parts: Vec<PartSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joint_evolutions: Vec<EvolutionSpec>,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionSpec {
    pub regime: Regime,
    pub subject: String,
    /// Measurement observable to ICP type.
    pub kinds: BTreeMap<String, String>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub registrative: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub passive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationSpec {
    pub measurement: String,
    pub outcome: Vec<usize>,
    pub tick: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub measurement: String,
    pub tick: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexRows>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// Closure check with explicit quantum priors and/or seeded random ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSpec {
    pub preparation: PreparationSpec,
    pub probe: ProbeSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub priors: Vec<PriorSpec>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub random_priors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Largest acceptable deviation, or the smallest required one when
    /// `expect_violation` is set.
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSpec {
    pub tick: Tick,
    pub measurement: String,
    pub outcome: Vec<usize>,
}

/// The on-disk experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bases: BTreeMap<String, MatrixSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evolutions: Vec<EvolutionSpec>,
    /// Present (possibly empty) when the file declares a classical model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<TransitionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeSpec>,
    pub measurements: BTreeMap<String, MeasurementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<AttributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureSpec>,
    pub sequences: BTreeMap<String, Vec<RecordSpec>>,
}

impl ExperimentFile {
    pub fn new(name: impl Into<String>, dimension: usize) -> Self {
        Self {
            version: FORMAT_VERSION,
            name: name.into(),
            description: None,
            dimension,
            bases: BTreeMap::new(),
            evolutions: Vec::new(),
            transitions: None,
            composite: None,
            measurements: BTreeMap::new(),
            attribution: None,
            closure: None,
            sequences: BTreeMap::new(),
        }
    }

    pub fn with_basis(mut self, label: &str, source: MatrixSource) -> Self {
        self.bases.insert(label.to_string(), source);
        self
    }

    pub fn with_measurement(mut self, name: &str, observable: &str, blocks: &[&[usize]]) -> Self {
        self.measurements.insert(
            name.to_string(),
            MeasurementSpec {
                observable: observable.to_string(),
                blocks: blocks.iter().map(|b| b.to_vec()).collect(),
            },
        );
        self
    }

    /// Records as `(tick, measurement, outcome)`.
    pub fn with_sequence(mut self, name: &str, records: &[(Tick, &str, &[usize])]) -> Self {
        self.sequences.insert(
            name.to_string(),
            records
                .iter()
                .map(|(tick, m, o)| RecordSpec {
                    tick: *tick,
                    measurement: m.to_string(),
                    outcome: o.to_vec(),
                })
                .collect(),
        );
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("experiment files serialize");
        s.push('\n');
        s
    }
}

/// A problem found in an experiment file, with its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: String,
    pub message: String,
    /// JSON pointer to the offending value.
    pub path: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: [{}] {} (at {})",
            self.line, self.column, self.rule, self.message, self.path
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn rules(&self) -> Vec<&str> {
        self.0.iter().map(|d| d.rule.as_str()).collect()
    }
}

struct Issue {
    rule: &'static str,
    message: String,
    path: String,
}

fn issue(rule: &'static str, path: impl Into<String>, message: impl fmt::Display) -> Issue {
    Issue {
        rule,
        message: message.to_string(),
        path: path.into(),
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn model_rule(e: &ModelError) -> &'static str {
    match e {
        ModelError::Unitarity { .. } => "unitarity",
        ModelError::Orthonormality { .. } => "orthonormality",
        ModelError::Stochasticity { .. } => "stochasticity",
        ModelError::DimensionMismatch { .. } => "dimension",
        _ => "model",
    }
}

/// A parsed file with every cross-reference resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub file: ExperimentFile,
    pub quantum: Option<QuantumModel>,
    pub composite: Option<CompositeModel>,
    pub classical: Option<ClassicalModel>,
    pub measurements: BTreeMap<String, Arc<Measurement>>,
    pub sequences: BTreeMap<String, Sequence>,
}

/// Parses and resolves `text`.
pub fn parse_experiment(text: &str) -> Result<Experiment, Diagnostics> {
    let file: ExperimentFile = serde_json::from_str(text).map_err(|e| {
        let rule = match e.classify() {
            serde_json::error::Category::Data => "schema",
            _ => "syntax",
        };
        Diagnostics(vec![Diagnostic {
            rule: rule.to_string(),
            message: e.to_string(),
            path: String::new(),
            line: e.line(),
            column: e.column(),
        }])
    })?;
    resolve(file, text)
}

impl Experiment {
    /// Resolves an in-memory file; diagnostic positions refer to its
    /// pretty-printed form.
    pub fn from_file(file: ExperimentFile) -> Result<Self, Diagnostics> {
        let text = file.to_json();
        resolve(file, &text)
    }

    pub fn sequence(&self, name: &str) -> Option<&Sequence> {
        self.sequences.get(name)
    }

    /// Attribution input for a sequence, if the file declares attribution.
    pub fn attribution_input(&self, sequence: &str, potentials: PotentialPolicy) -> Option<AttributionInput> {
        let spec = self.file.attribution.as_ref()?;
        let seq = self.sequences.get(sequence)?.clone();
        let mut input = AttributionInput::new(spec.regime, spec.subject.clone(), seq)
            .with_flags(spec.registrative, spec.passive)
            .with_potentials(potentials);
        input.kinds = spec.kinds.clone();
        Some(input)
    }

    /// Second-part dimension when the file declares a composite.
    pub fn part_b_dimension(&self) -> Option<usize> {
        self.composite.as_ref().map(|c| c.part_b().dim())
    }

    pub fn closure_setup(&self) -> Option<ClosureSetup> {
        let spec = self.file.closure.as_ref()?;
        let prep = self.measurements.get(&spec.preparation.measurement)?.clone();
        let probe = self.measurements.get(&spec.probe.measurement)?.clone();
        let outcome = Outcome::new(spec.preparation.outcome.iter().copied())?;
        Some(ClosureSetup::new(prep, outcome, probe).at(spec.preparation.tick, spec.probe.tick))
    }

    /// Explicit closure priors, evaluated against the quantum model.
    pub fn closure_priors(&self) -> Vec<(String, CMatrix)> {
        let (Some(spec), Some(q)) = (self.file.closure.as_ref(), self.quantum.as_ref()) else {
            return Vec::new();
        };
        spec.priors
            .iter()
            .filter_map(|p| {
                let src = MatrixSource {
                    generator: p.generator.clone(),
                    matrix: p.matrix.clone(),
                };
                build_matrix(&src, q.dim(), "").ok().map(|m| (p.id.clone(), m))
            })
            .collect()
    }
}

fn build_matrix(src: &MatrixSource, dim: usize, path: &str) -> Result<CMatrix, Issue> {
    match (&src.generator, &src.matrix) {
        (Some(g), None) => generate(g, dim).map_err(|e| match e {
            GeneratorError::Unknown(name) => issue(
                "unknown-generator",
                format!("{path}/generator"),
                format!("unknown generator `{name}` (known: {})", GENERATORS.join(", ")),
            ),
            GeneratorError::Dimension {
                generator,
                expected,
                found,
            } => issue(
                "dimension",
                format!("{path}/generator"),
                format!("`{generator}` is {found}-dimensional, expected {expected}"),
            ),
            GeneratorError::Syntax(m) | GeneratorError::Arguments(m) => {
                issue("generator-arguments", format!("{path}/generator"), m)
            }
        }),
        (None, Some(rows)) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(issue(
                    "dimension",
                    format!("{path}/matrix"),
                    format!("matrix must be {dim}x{dim}"),
                ));
            }
            Ok(CMatrix::from_fn(dim, dim, |i, j| c(rows[i][j][0], rows[i][j][1])))
        }
        _ => Err(issue("schema", path, "give exactly one of `generator` or `matrix`")),
    }
}

fn build_quantum(
    dim: usize,
    bases: &BTreeMap<String, MatrixSource>,
    evolutions: &[EvolutionSpec],
    prefix: &str,
    issues: &mut Vec<Issue>,
) -> QuantumModel {
    let mut q = QuantumModel::with_tolerance(dim, ACCUMULATED_TOL);
    for (label, src) in bases {
        let path = format!("{prefix}/bases/{}", escape(label));
        match build_matrix(src, dim, &path) {
            Ok(m) => match q.clone().with_basis(label.clone(), m) {
                Ok(next) => q = next,
                Err(e) => issues.push(issue(model_rule(&e), path, e)),
            },
            Err(i) => issues.push(i),
        }
    }
    let mut seen = BTreeMap::new();
    for (k, ev) in evolutions.iter().enumerate() {
        let path = format!("{prefix}/evolutions/{k}");
        if seen.insert(ev.tick, k).is_some() {
            issues.push(issue(
                "duplicate-tick",
                format!("{path}/tick"),
                format!("tick {} already has an evolution", ev.tick),
            ));
            continue;
        }
        match build_matrix(&ev.source(), dim, &path) {
            Ok(m) => match q.clone().with_evolution(ev.tick, m) {
                Ok(next) => q = next,
                Err(e) => issues.push(issue(model_rule(&e), path, e)),
            },
            Err(i) => issues.push(i),
        }
    }
    q
}

fn resolve(file: ExperimentFile, text: &str) -> Result<Experiment, Diagnostics> {
    let mut issues = Vec::new();
    let d = file.dimension;
    if file.version != FORMAT_VERSION {
        issues.push(issue(
            "version",
            "/version",
            format!("unsupported version {} (expected {FORMAT_VERSION})", file.version),
        ));
    }
    if d == 0 {
        issues.push(issue("dimension", "/dimension", "dimension must be at least 1"));
    }
    if !issues.is_empty() {
        return Err(finish(issues, text));
    }

    let mut quantum = None;
    let mut composite = None;
    if let Some(spec) = &file.composite {
        if !file.bases.is_empty() || !file.evolutions.is_empty() {
            issues.push(issue(
                "composite",
                "/composite",
                "a composite file declares bases and evolutions per part",
            ));
        }
        if spec.parts.len() != 2 {
            issues.push(issue(
                "composite",
                "/composite/parts",
                format!("expected 2 parts, got {}", spec.parts.len()),
            ));
        } else {
            let product = spec.parts[0].dimension * spec.parts[1].dimension;
            if product != d {
                issues.push(issue(
                    "dimension",
                    "/dimension",
                    format!("composite parts span {product} dimensions, file declares {d}"),
                ));
            } else {
                let before = issues.len();
                let parts: Vec<_> = spec
                    .parts
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        build_quantum(
                            p.dimension,
                            &p.bases,
                            &p.evolutions,
                            &format!("/composite/parts/{k}"),
                            &mut issues,
                        )
                    })
                    .collect();
                let mut joint = BTreeMap::new();
                for (k, ev) in spec.joint_evolutions.iter().enumerate() {
                    let path = format!("/composite/joint_evolutions/{k}");
                    if joint.contains_key(&ev.tick) {
                        issues.push(issue(
                            "duplicate-tick",
                            format!("{path}/tick"),
                            format!("tick {} already has a joint evolution", ev.tick),
                        ));
                        continue;
                    }
                    match build_matrix(&ev.source(), d, &path) {
                        Ok(m) => {
                            joint.insert(ev.tick, m);
                        }
                        Err(i) => issues.push(i),
                    }
                }
                if issues.len() == before {
                    let mut it = parts.into_iter();
                    let (a, b) = (it.next().expect("two parts"), it.next().expect("two parts"));
                    match CompositeModel::interacting(a, b, joint) {
                        Ok(cm) => {
                            quantum = Some(cm.joint_model().clone());
                            composite = Some(cm);
                        }
                        Err(e) => issues.push(issue(model_rule(&e), "/composite/joint_evolutions", e)),
                    }
                }
            }
        }
    } else if !file.bases.is_empty() {
        quantum = Some(build_quantum(d, &file.bases, &file.evolutions, "", &mut issues));
    } else if !file.evolutions.is_empty() {
        issues.push(issue(
            "cross-ref",
            "/evolutions",
            "evolutions need a quantum model; declare `bases`",
        ));
    }

    let classical = file.transitions.as_ref().map(|ts| {
        let mut cl = ClassicalModel::with_tolerance(d, ACCUMULATED_TOL);
        let mut seen = BTreeMap::new();
        for (k, t) in ts.iter().enumerate() {
            let path = format!("/transitions/{k}");
            if seen.insert(t.tick, k).is_some() {
                issues.push(issue(
                    "duplicate-tick",
                    format!("{path}/tick"),
                    format!("tick {} already has a transition", t.tick),
                ));
                continue;
            }
            if t.matrix.len() != d || t.matrix.iter().any(|r| r.len() != d) {
                issues.push(issue(
                    "dimension",
                    format!("{path}/matrix"),
                    format!("matrix must be {d}x{d}"),
                ));
                continue;
            }
            let m = DMatrix::from_fn(d, d, |j, i| t.matrix[j][i]);
            match cl.clone().with_transition(t.tick, m) {
                Ok(next) => cl = next,
                Err(e) => issues.push(issue(model_rule(&e), path, e)),
            }
        }
        cl
    });

    let mut measurements = BTreeMap::new();
    for (name, spec) in &file.measurements {
        let path = format!("/measurements/{}", escape(name));
        if let Some(q) = &quantum {
            if q.basis(&spec.observable).is_err() {
                issues.push(issue(
                    "cross-ref",
                    format!("{path}/observable"),
                    format!("observable `{}` has no basis", spec.observable),
                ));
                continue;
            }
        }
        match crate::outcome::make_measurement(&spec.observable, d, &spec.blocks) {
            Ok(m) => {
                measurements.insert(name.clone(), Arc::new(m));
            }
            Err(e) => {
                let (rule, at) = match &e {
                    OutcomeError::EmptyBlock { index, .. } => ("partition", format!("{path}/blocks/{index}")),
                    _ => ("partition", format!("{path}/blocks")),
                };
                issues.push(issue(rule, at, e));
            }
        }
    }

    let mut sequences = BTreeMap::new();
    for (name, records) in &file.sequences {
        let path = format!("/sequences/{}", escape(name));
        let mut built = Vec::with_capacity(records.len());
        let mut ok = true;
        for (k, r) in records.iter().enumerate() {
            let rpath = format!("{path}/{k}");
            let Some(m) = measurements.get(&r.measurement) else {
                if !file.measurements.contains_key(&r.measurement) {
                    issues.push(issue(
                        "cross-ref",
                        format!("{rpath}/measurement"),
                        format!("unknown measurement `{}`", r.measurement),
                    ));
                }
                ok = false;
                continue;
            };
            let Some(o) = Outcome::new(r.outcome.iter().copied()) else {
                issues.push(issue(
                    "outcome",
                    format!("{rpath}/outcome"),
                    "outcome must be a nonempty set without repeats",
                ));
                ok = false;
                continue;
            };
            match SequenceRecord::new(r.tick, m.clone(), o) {
                Ok(rec) => built.push(rec),
                Err(e @ SequenceError::ForeignOutcome { .. }) => {
                    issues.push(issue("outcome", format!("{rpath}/outcome"), e));
                    ok = false;
                }
                Err(e) => {
                    issues.push(issue("sequence", rpath, e));
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        let s = Sequence::new(built);
        for v in validate(&s) {
            if v.rule.is_structural() {
                let at = if v.rule == Rule::Empty {
                    path.clone()
                } else {
                    format!("{path}/{}", v.index)
                };
                issues.push(issue("sequence", at, format!("violates {}", v.rule.as_str())));
            }
        }
        sequences.insert(name.clone(), s);
    }

    if let Some(spec) = &file.attribution {
        for label in spec.kinds.keys() {
            if !file.measurements.values().any(|m| &m.observable == label) {
                issues.push(issue(
                    "cross-ref",
                    format!("/attribution/kinds/{}", escape(label)),
                    format!("no measurement observes `{label}`"),
                ));
            }
        }
    }
    if let Some(spec) = &file.closure {
        for (what, m) in [
            ("preparation", &spec.preparation.measurement),
            ("probe", &spec.probe.measurement),
        ] {
            if !file.measurements.contains_key(m) {
                issues.push(issue(
                    "cross-ref",
                    format!("/closure/{what}/measurement"),
                    format!("unknown measurement `{m}`"),
                ));
            }
        }
        match (
            Outcome::new(spec.preparation.outcome.iter().copied()),
            measurements.get(&spec.preparation.measurement),
        ) {
            (Some(o), Some(m)) if !m.contains(&o) => {
                issues.push(issue(
                    "outcome",
                    "/closure/preparation/outcome",
                    format!("{o} is not an outcome of `{}`", spec.preparation.measurement),
                ));
            }
            (None, _) => issues.push(issue(
                "outcome",
                "/closure/preparation/outcome",
                "outcome must be a nonempty set without repeats",
            )),
            _ => {}
        }
        if !spec.priors.is_empty() && quantum.is_none() {
            issues.push(issue(
                "cross-ref",
                "/closure/priors",
                "explicit priors need a quantum model",
            ));
        }
        for (k, p) in spec.priors.iter().enumerate() {
            let src = MatrixSource {
                generator: p.generator.clone(),
                matrix: p.matrix.clone(),
            };
            let path = format!("/closure/priors/{k}");
            match build_matrix(&src, d, &path) {
                Ok(m) => {
                    let dev = crate::linalg::unitarity_deviation(&m);
                    if dev > ACCUMULATED_TOL {
                        issues.push(issue(
                            "unitarity",
                            path,
                            format!("prior `{}` is not unitary (deviation {dev:.3e})", p.id),
                        ));
                    }
                }
                Err(i) => issues.push(i),
            }
        }
    }

    if issues.is_empty() {
        Ok(Experiment {
            file,
            quantum,
            composite,
            classical,
            measurements,
            sequences,
        })
    } else {
        Err(finish(issues, text))
    }
}

fn finish(issues: Vec<Issue>, text: &str) -> Diagnostics {
    Diagnostics(
        issues
            .into_iter()
            .map(|i| {
                let (line, column) = locate(text, &i.path);
                Diagnostic {
                    rule: i.rule.to_string(),
                    message: i.message,
                    path: i.path,
                    line,
                    column,
                }
            })
            .collect(),
    )
}
