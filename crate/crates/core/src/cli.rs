//! Command-line front end: argument parsing, dispatch and report output.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::closure::{
    check_closure, check_refinement_condition, check_repeatability, random_priors, ClosureError, ClosureReport,
};
use crate::experiment::{parse_experiment, Diagnostic, Diagnostics, Experiment};
use crate::models::{refinement_sum, trivial_insertion_check, ModelError, PredictiveModel, IDENTITY_TOL};
use crate::property::{attribute, attribute_composite, AttributionError, PotentialPolicy, PropertyAscription};
use crate::scenarios::{self, Check, Checks, ScenarioError, ScenarioReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "opseq",
    version,
    about = "Evaluate, attribute and check measurement-outcome sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Tolerance for equality checks.
    #[arg(long, global = true, default_value_t = IDENTITY_TOL)]
    pub tolerance: f64,
    /// Seed for random closure priors; overrides the file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Which refinements of a non-atomic outcome become potential ascriptions.
    #[arg(long, global = true, value_enum, default_value_t = Potentials::AllSubsets)]
    pub potentials: Potentials,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability and amplitude of a sequence (all sequences if none is named).
    Eval {
        /// Experiment file or built-in fixture name.
        file: String,
        sequence: Option<String>,
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
    },
    /// Property ascriptions for a sequence.
    Attribute { file: String, sequence: String },
    /// Repeatability, refinement, trivial-insertion and closure checks.
    Check {
        #[arg(required = true)]
        files: Vec<String>,
    },
    /// Runs a built-in scenario (all of them if none is named).
    Scenario {
        name: Option<String>,
        /// Writes the scenario's experiment file instead (`-` for stdout).
        #[arg(long, value_name = "PATH", requires = "name")]
        export: Option<PathBuf>,
    },
    /// Classical and quantum valuations of every sequence side by side.
    Compare { file: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Potentials {
    AllSubsets,
    AtomicOnly,
}

impl From<Potentials> for PotentialPolicy {
    fn from(p: Potentials) -> Self {
        match p {
            Potentials::AllSubsets => PotentialPolicy::AllSubsets,
            Potentials::AtomicOnly => PotentialPolicy::AtomicOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Quantum,
    Classical,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{source_name}: invalid experiment file\n{diagnostics}")]
    Invalid {
        source_name: String,
        diagnostics: Diagnostics,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<&'a str>,
    #[serde(skip_serializing_if = "<[Diagnostic]>::is_empty")]
    diagnostics: &'a [Diagnostic],
}

/// Reads an experiment from `arg`, which is a path or, failing that, the
/// name of a built-in fixture.
pub fn load_experiment(arg: &str) -> Result<Experiment, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{arg}: {e}")))?;
        return parse_experiment(&text).map_err(|diagnostics| CliError::Invalid {
            source_name: arg.to_string(),
            diagnostics,
        });
    }
    if scenarios::FIXTURES.contains(&arg) {
        return Ok(scenarios::load(arg)?);
    }
    Err(CliError::Input(format!(
        "{arg}: no such file or built-in fixture (fixtures: {})",
        scenarios::FIXTURES.join(", ")
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub probability: f64,
    /// `[re, im]`; absent for classical models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<[f64; 2]>,
}

pub fn evaluate(e: &Experiment, sequence: &str, model: Option<ModelChoice>) -> Result<EvalRecord, CliError> {
    let s = e
        .sequence(sequence)
        .ok_or_else(|| CliError::Input(format!("unknown sequence `{sequence}`")))?;
    let choice = model.unwrap_or(if e.quantum.is_some() {
        ModelChoice::Quantum
    } else {
        ModelChoice::Classical
    });
    match choice {
        ModelChoice::Quantum => {
            let q = e
                .quantum
                .as_ref()
                .ok_or_else(|| CliError::Input("file declares no quantum model".into()))?;
            let z = q.amplitude(s)?;
            Ok(EvalRecord {
                probability: z.probability(),
                amplitude: Some([z.value().re, z.value().im]),
            })
        }
        ModelChoice::Classical => {
            let c = e
                .classical
                .as_ref()
                .ok_or_else(|| CliError::Input("file declares no classical model".into()))?;
            Ok(EvalRecord {
                probability: c.probability(s)?,
                amplitude: None,
            })
        }
    }
}

pub fn attribution(
    e: &Experiment,
    sequence: &str,
    policy: PotentialPolicy,
) -> Result<Vec<PropertyAscription>, CliError> {
    if e.sequence(sequence).is_none() {
        return Err(CliError::Input(format!("unknown sequence `{sequence}`")));
    }
    let input = e
        .attribution_input(sequence, policy)
        .ok_or_else(|| CliError::Input("file has no `attribution` section".into()))?;
    Ok(match e.part_b_dimension() {
        Some(d_b) => attribute_composite(&input, d_b)?,
        None => attribute(&input)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub sequence: String,
    pub model: ModelChoice,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureOutcome {
    pub model: ModelChoice,
    pub threshold: f64,
    pub expect_violation: bool,
    pub pass: bool,
    pub report: ClosureReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub file: String,
    pub tolerance: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Sequences a model cannot evaluate, left out of the insertion checks.
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureOutcome>,
}

fn structural_checks<M: PredictiveModel>(
    model: &M,
    tag: ModelChoice,
    e: &Experiment,
    checks: &mut Checks,
    skipped: &mut Vec<Skipped>,
) -> Result<(), CliError> {
    let prefix = match tag {
        ModelChoice::Quantum => "quantum",
        ModelChoice::Classical => "classical",
    };
    let tol = checks.tolerance;
    for (name, m) in &e.measurements {
        checks.equal(
            format!("{prefix} repeatability of {name}"),
            check_repeatability(model, m, 0)?,
            1.0,
        );
        for block in m.outcomes().iter().filter(|b| !b.is_atomic()) {
            for atom in block.atoms() {
                let ok = check_refinement_condition(model, m.label(), block, &atom, tol)?;
                checks.holds(format!("{prefix} refinement {atom} within {block} of {name}"), ok);
            }
        }
    }
    for (name, s) in &e.sequences {
        if let Err(err) = model.probability(s) {
            skipped.push(Skipped {
                sequence: name.clone(),
                model: tag,
                reason: err.to_string(),
            });
            continue;
        }
        let (first, last) = (s.records()[0].time(), s.records()[s.len() - 1].time());
        for tick in (first + 1..last).filter(|t| s.records().iter().all(|r| r.time() != *t)) {
            let (before, after) = trivial_insertion_check(model, s, tick)?;
            checks.equal(format!("{prefix} trivial insertion in {name} at {tick}"), after, before);
        }
    }
    Ok(())
}

/// Runs every structural check on each model of `e`, and the closure check
/// if the file declares one.
pub fn check_experiment(
    e: &Experiment,
    file: &str,
    tolerance: f64,
    seed: Option<u64>,
) -> Result<CheckReport, CliError> {
    let mut checks = Checks::new(tolerance);
    let mut skipped = Vec::new();
    if let Some(q) = &e.quantum {
        structural_checks(q, ModelChoice::Quantum, e, &mut checks, &mut skipped)?;
    }
    if let Some(c) = &e.classical {
        structural_checks(c, ModelChoice::Classical, e, &mut checks, &mut skipped)?;
    }
    let closure = match (e.file.closure.as_ref(), e.closure_setup()) {
        (Some(spec), Some(setup)) => {
            let seed = seed.or(spec.seed).unwrap_or(0);
            let (model, report) = if let Some(q) = &e.quantum {
                let mut priors = e.closure_priors();
                priors.extend(random_priors(q, spec.random_priors, seed));
                let mut r = check_closure(q, &setup, &priors)?;
                r.seed = (spec.random_priors > 0).then_some(seed);
                (ModelChoice::Quantum, r)
            } else {
                let c = e.classical.as_ref().expect("a resolved file has a model");
                let mut r = check_closure(c, &setup, &random_priors(c, spec.random_priors, seed))?;
                r.seed = Some(seed);
                (ModelChoice::Classical, r)
            };
            let pass = if spec.expect_violation {
                report.max_deviation > spec.threshold
            } else {
                report.max_deviation <= spec.threshold
            };
            Some(ClosureOutcome {
                model,
                threshold: spec.threshold,
                expect_violation: spec.expect_violation,
                pass,
                report,
            })
        }
        _ => None,
    };
    let pass = checks.items.iter().all(|c| c.pass) && closure.as_ref().is_none_or(|c| c.pass);
    Ok(CheckReport {
        file: file.to_string(),
        tolerance,
        pass,
        checks: checks.items,
        skipped,
        closure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalSource {
    /// The file's own transition matrices.
    Transitions,
    /// The quantum model with interior non-atomic outcomes split into
    /// atoms and the branch probabilities added.
    RefinementSum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub sequence: String,
    pub classical: Option<f64>,
    pub quantum: Option<f64>,
    /// `quantum - classical` when both exist.
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub file: String,
    pub classical_source: ClassicalSource,
    pub rows: Vec<CompareRow>,
}

pub fn compare(e: &Experiment, file: &str) -> Result<CompareReport, CliError> {
    let source = if e.classical.is_some() {
        ClassicalSource::Transitions
    } else {
        ClassicalSource::RefinementSum
    };
    let rows = e
        .sequences
        .iter()
        .map(|(name, s)| {
            let quantum = e.quantum.as_ref().and_then(|q| q.probability(s).ok());
            let classical = match &e.classical {
                Some(c) => c.probability(s).ok(),
                None => e.quantum.as_ref().and_then(|q| refinement_sum(q, s).ok()),
            };
            let difference = quantum.zip(classical).map(|(q, c)| q - c);
            CompareRow {
                sequence: name.clone(),
                classical,
                quantum,
                difference,
            }
        })
        .collect();
    Ok(CompareReport {
        file: file.to_string(),
        classical_source: source,
        rows,
    })
}

fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    );
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

fn num(v: f64) -> String {
    format!("{v:.12}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), num)
}

fn pass_mark(pass: bool) -> String {
    if pass { "pass" } else { "FAIL" }.to_string()
}

fn check_rows(checks: &[Check]) -> Vec<Vec<String>> {
    checks
        .iter()
        .map(|c| vec![c.check.clone(), num(c.computed), num(c.expected), pass_mark(c.pass)])
        .collect()
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

struct Output {
    text: String,
    code: i32,
}

fn ok(text: String) -> Output {
    Output { text, code: EXIT_OK }
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let table = cli.format == Format::Table;
    match &cli.command {
        Command::Eval { file, sequence, model } => {
            let e = load_experiment(file)?;
            match sequence {
                Some(name) => {
                    let r = evaluate(&e, name, *model)?;
                    Ok(ok(if table {
                        render_table(
                            &["sequence", "probability", "amplitude"],
                            &[vec![name.clone(), num(r.probability), amplitude_cell(&r)]],
                        )
                    } else {
                        json(&r)
                    }))
                }
                None => {
                    let mut all = std::collections::BTreeMap::new();
                    for name in e.sequences.keys() {
                        all.insert(name.clone(), evaluate(&e, name, *model)?);
                    }
                    Ok(ok(if table {
                        let rows: Vec<_> = all
                            .iter()
                            .map(|(n, r)| vec![n.clone(), num(r.probability), amplitude_cell(r)])
                            .collect();
                        render_table(&["sequence", "probability", "amplitude"], &rows)
                    } else {
                        json(&all)
                    }))
                }
            }
        }
        Command::Attribute { file, sequence } => {
            let e = load_experiment(file)?;
            let out = attribution(&e, sequence, cli.potentials.into())?;
            Ok(ok(if table {
                let rows: Vec<_> = out
                    .iter()
                    .map(|a| {
                        vec![
                            a.time_tag.to_string(),
                            a.subject.clone(),
                            a.property_type.clone(),
                            a.value.to_string(),
                            serde_label(&a.modality),
                            serde_label(&a.kind),
                            a.extension.map_or_else(|| "-".into(), |x| serde_label(&x)),
                        ]
                    })
                    .collect();
                render_table(
                    &["time", "subject", "type", "value", "modality", "kind", "extension"],
                    &rows,
                )
            } else {
                json(&out)
            }))
        }
        Command::Check { files } => {
            let mut reports = Vec::new();
            for file in files {
                let e = load_experiment(file)?;
                reports.push(check_experiment(&e, file, cli.tolerance, cli.seed)?);
            }
            let pass = reports.iter().all(|r| r.pass);
            let text = if table {
                let mut text = String::new();
                for r in &reports {
                    let mut rows = check_rows(&r.checks);
                    if let Some(c) = &r.closure {
                        let bound = if c.expect_violation { ">" } else { "<=" };
                        rows.push(vec![
                            format!(
                                "closure of {} ({} priors)",
                                c.report.preparation.measurement,
                                c.report.witnesses.len()
                            ),
                            num(c.report.max_deviation),
                            format!("{bound} {}", c.threshold),
                            pass_mark(c.pass),
                        ]);
                    }
                    for s in &r.skipped {
                        rows.push(vec![
                            format!("skipped {}: {}", s.sequence, s.reason),
                            "-".into(),
                            "-".into(),
                            "-".into(),
                        ]);
                    }
                    text += &format!("{}: {}\n", r.file, pass_mark(r.pass));
                    text += &render_table(&["check", "computed", "expected", "result"], &rows);
                }
                text
            } else if reports.len() == 1 {
                json(&reports[0])
            } else {
                json(&reports)
            };
            Ok(Output {
                text,
                code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
            })
        }
        Command::Scenario { name, export } => {
            if let (Some(name), Some(path)) = (name, export) {
                let text = scenarios::fixture(name)?.to_json();
                if path.as_os_str() == "-" {
                    return Ok(ok(text));
                }
                std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                return Ok(ok(String::new()));
            }
            let names: Vec<&str> = match name {
                Some(n) => vec![n.as_str()],
                None => scenarios::SCENARIOS.to_vec(),
            };
            let reports = names
                .iter()
                .map(|n| scenarios::run_scenario(n, cli.tolerance))
                .collect::<Result<Vec<ScenarioReport>, _>>()?;
            let pass = reports.iter().all(|r| r.pass);
            let text = if table {
                reports
                    .iter()
                    .map(|r| {
                        format!("{}: {}\n", r.scenario, pass_mark(r.pass))
                            + &render_table(&["check", "computed", "expected", "result"], &check_rows(&r.checks))
                    })
                    .collect()
            } else if reports.len() == 1 {
                json(&reports[0])
            } else {
                json(&reports)
            };
            Ok(Output {
                text,
                code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
            })
        }
        Command::Compare { file } => {
            let e = load_experiment(file)?;
            let r = compare(&e, file)?;
            Ok(ok(if table {
                let rows: Vec<_> = r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            row.sequence.clone(),
                            opt(row.classical),
                            opt(row.quantum),
                            opt(row.difference),
                        ]
                    })
                    .collect();
                let source = match r.classical_source {
                    ClassicalSource::Transitions => "classical",
                    ClassicalSource::RefinementSum => "classical (refinement sum)",
                };
                render_table(&["sequence", source, "quantum", "difference"], &rows)
            } else {
                json(&r)
            }))
        }
    }
}

fn serde_label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        _ => "?".into(),
    }
}

fn amplitude_cell(r: &EvalRecord) -> String {
    r.amplitude
        .map_or_else(|| "-".into(), |[re, im]| format!("[{}, {}]", num(re), num(im)))
}

fn report_error(err: &CliError, format: Format, stderr: &mut dyn Write) {
    let (source, diagnostics) = match err {
        CliError::Invalid {
            source_name,
            diagnostics,
        } => (Some(source_name.as_str()), diagnostics.0.as_slice()),
        _ => (None, &[][..]),
    };
    let text = match format {
        Format::Json => json(&ErrorRecord {
            error: match err {
                CliError::Invalid { .. } => "invalid experiment file".to_string(),
                other => other.to_string(),
            },
            source,
            diagnostics,
        }),
        Format::Table => format!("error: {err}\n"),
    };
    let _ = stderr.write_all(text.as_bytes());
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(out) => match stdout.write_all(out.text.as_bytes()) {
            Ok(()) => out.code,
            Err(e) => {
                report_error(&CliError::Io(e), cli.format, stderr);
                EXIT_INPUT
            }
        },
        Err(err) => {
            report_error(&err, cli.format, stderr);
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("opseq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_fixture() {
        let (code, out, _) = run_args(&["eval", "sg_chain", "seq1"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(v["amplitude"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn unknown_command_is_usage_error() {
        let (code, out, err) = run_args(&["frobnicate"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(out.is_empty());
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("scenario"));
    }

    #[test]
    fn counterexample_check_passes_by_violating() {
        let (code, out, _) = run_args(&["check", "closure_counterexample"]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["closure"]["report"]["max_deviation"].as_f64().unwrap() > 0.01);
    }

    #[test]
    fn missing_input() {
        let (code, _, err) = run_args(&["eval", "/nonexistent/file.json", "x"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("no such file"));
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["a", "bb"], &[vec!["xxx".into(), "y".into()]]);
        assert_eq!(t, "a    bb\n---  --\nxxx  y\n");
    }
}
