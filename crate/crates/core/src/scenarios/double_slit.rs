use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use super::{Checks, ScenarioError};
use crate::experiment::{generate, AttributionSpec, EvolutionSpec, Experiment, ExperimentFile, MatrixSource};
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::models::{interference_prediction, CompositeModel, ModelError, PredictiveModel, QuantumModel};
use crate::outcome::{Measurement, Outcome};
use crate::property::Regime;
use crate::sequence::{Sequence, SequenceRecord};

fn with_phase(phase: &str) -> ExperimentFile {
    let mut f = ExperimentFile::new("double_slit", 2)
        .with_basis("source", MatrixSource::generator("qft(2)"))
        .with_basis("path", MatrixSource::generator("identity"))
        .with_basis("screen", MatrixSource::generator("qft(2)"))
        .with_measurement("source", "source", &[&[0], &[1]])
        .with_measurement("slit", "path", &[&[0], &[1]])
        .with_measurement("both_slits", "path", &[&[0, 1]])
        .with_measurement("screen", "screen", &[&[0], &[1]])
        .with_sequence("C", &[(0, "source", &[0]), (2, "slit", &[0]), (4, "screen", &[0])])
        .with_sequence("D", &[(0, "source", &[0]), (2, "slit", &[1]), (4, "screen", &[0])])
        .with_sequence(
            "E",
            &[(0, "source", &[0]), (2, "both_slits", &[0, 1]), (4, "screen", &[0])],
        );
    f.description = Some("Two-path interferometer; the phase on path 1 is applied just after the slits.".into());
    f.evolutions.push(EvolutionSpec::generator(2, phase));
    f.attribution = Some(AttributionSpec {
        regime: Regime::Quantum,
        subject: "particle".into(),
        kinds: [
            ("source", "source-mode"),
            ("path", "position"),
            ("screen", "screen-position"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect(),
        registrative: true,
        passive: true,
    });
    f
}

/// Slits with the destructive phase difference `pi`.
pub fn double_slit() -> ExperimentFile {
    with_phase("phase(0, pi)")
}

fn at_phase(phase: f64) -> Result<Experiment, ScenarioError> {
    Ok(Experiment::from_file(with_phase(&format!("phase(0, {phase:?})")))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeRow {
    pub phase: f64,
    /// `P(E)` from the model.
    pub probability: f64,
    /// `2 p (1 + cos phase)` with `p = P(C)`.
    pub predicted: f64,
}

/// Bright-spot probability with both slits open, per phase difference.
pub fn fringe_table(phases: &[f64]) -> Result<Vec<FringeRow>, ScenarioError> {
    phases
        .iter()
        .map(|&phase| {
            let e = at_phase(phase)?;
            let q = e.quantum.as_ref().expect("quantum file");
            let p = q.probability(e.sequence("C").expect("C"))?;
            Ok(FringeRow {
                phase,
                probability: q.probability(e.sequence("E").expect("E"))?,
                predicted: 2.0 * p * (1.0 + phase.cos()),
            })
        })
        .collect()
}

/// Interference with and without a detector that records the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhichWay {
    pub phase: f64,
    pub p_c: f64,
    pub p_d: f64,
    pub unmarked: f64,
    pub marked: f64,
    pub unmarked_cross_term: f64,
    pub marked_cross_term: f64,
}

/// The path qubit flips a detector qubit between the slits and the phase;
/// the screen probability is summed over the detector readings.
pub fn which_way(phase: f64) -> Result<WhichWay, ScenarioError> {
    let e = at_phase(phase)?;
    let q = e.quantum.as_ref().expect("quantum file");
    let p = |name: &str| q.probability(e.sequence(name).expect("built-in sequence"));
    let (p_c, p_d, unmarked) = (p("C")?, p("D")?, p("E")?);

    let gen = |g: &str, d: usize| generate(g, d).expect("built-in generator");
    let path = QuantumModel::new(2)
        .with_basis("source", gen("qft(2)", 2))?
        .with_basis("screen", gen("qft(2)", 2))?
        .with_evolution(2, gen(&format!("phase(0, {phase:?})"), 2))?;
    let detector = QuantumModel::new(2).with_basis("D", gen("identity", 2))?;
    let mut cnot = CMatrix::from_element(4, 4, ZERO);
    for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(to, from)] = ONE;
    }
    let cm = CompositeModel::interacting(path, detector, BTreeMap::from([(1, cnot)]))?;
    let anchor_m = Arc::new(Measurement::atomic("source*D", 4).map_err(ModelError::from)?);
    let screen_m = Arc::new(Measurement::atomic("screen*D", 4).map_err(ModelError::from)?);
    let mut marked = 0.0;
    for k in 0..2 {
        let s = Sequence::new(vec![
            SequenceRecord::new(0, anchor_m.clone(), Outcome::atom(cm.flat(0, 0))).map_err(ModelError::from)?,
            SequenceRecord::new(4, screen_m.clone(), Outcome::atom(cm.flat(0, k))).map_err(ModelError::from)?,
        ]);
        marked += cm.amplitude(&s)?.probability();
    }
    Ok(WhichWay {
        phase,
        p_c,
        p_d,
        unmarked,
        marked,
        unmarked_cross_term: unmarked - p_c - p_d,
        marked_cross_term: marked - p_c - p_d,
    })
}

/// `k pi / 8` for `k = 0..=16`.
pub fn fringe_phases() -> Vec<f64> {
    (0..=16).map(|k| k as f64 * PI / 8.0).collect()
}

pub(super) fn checks(e: &Experiment, checks: &mut Checks) -> Result<(), ScenarioError> {
    let q = e.quantum.as_ref().expect("quantum file");
    let seq = |n: &str| e.sequence(n).expect("built-in sequence");
    let (zc, zd, ze) = (q.amplitude(seq("C"))?, q.amplitude(seq("D"))?, q.amplitude(seq("E"))?);
    checks.equal("P(C)", zc.probability(), 0.25);
    checks.equal("P(D)", zd.probability(), 0.25);
    checks.equal("|z(E) - z(C) - z(D)|", ze.distance(zc + zd), 0.0);
    checks.equal("P(E) at phase pi", ze.probability(), 0.0);
    checks.equal(
        "interference formula at phase pi",
        interference_prediction(zc.probability(), zd.probability(), zc.phase(), zd.phase()),
        ze.probability(),
    );
    let table = fringe_table(&fringe_phases())?;
    for row in &table {
        checks.equal(format!("fringe at {:.4}", row.phase), row.probability, row.predicted);
    }
    let first_half: Vec<_> = table.iter().filter(|r| r.phase <= PI).collect();
    checks.holds(
        "fringe non-increasing on [0, pi]",
        first_half
            .windows(2)
            .all(|w| w[1].probability <= w[0].probability + checks.tolerance),
    );
    let mut worst = 0.0f64;
    for phase in fringe_phases() {
        worst = worst.max(which_way(phase)?.marked_cross_term.abs());
    }
    checks.equal("largest which-way cross term", worst, 0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fringe_examples() {
        let rows = fringe_table(&[0.0, PI / 2.0, PI]).unwrap();
        assert!((rows[0].probability - 1.0).abs() < 1e-12);
        assert!((rows[1].probability - 0.5).abs() < 1e-12);
        assert!(rows[2].probability.abs() < 1e-12);
    }

    #[test]
    fn detector_kills_interference() {
        let w = which_way(0.0).unwrap();
        assert!((w.unmarked_cross_term - 0.5).abs() < 1e-12);
        assert!(w.marked_cross_term.abs() < 1e-12);
    }
}
