use std::f64::consts::PI;

use super::{Checks, ScenarioError};
use crate::experiment::{
    AttributionSpec, ClosureSpec, Experiment, ExperimentFile, MatrixSource, PreparationSpec, PriorSpec, ProbeSpec,
};
use crate::models::{interference_prediction, series_product_check, PredictiveModel, QuantumModel};
use crate::property::Regime;
use crate::sequence::{parallel, Sequence};

/// Orientations of the `Z`, `T` and `U` bases.
const ANGLES: [f64; 3] = [0.0, PI / 2.0, 2.0 * PI / 3.0];

/// Three Stern-Gerlach orientations in one plane, measured in a chain.
pub fn sg_chain() -> ExperimentFile {
    let mut f = ExperimentFile::new("sg_chain", 2)
        .with_basis("Z", MatrixSource::generator("sg(0, 0)"))
        .with_basis("T", MatrixSource::generator("sg(pi/2, 0)"))
        .with_basis("U", MatrixSource::generator("sg(2*pi/3, 0)"))
        .with_measurement("Z", "Z", &[&[0], &[1]])
        .with_measurement("T", "T", &[&[0], &[1]])
        .with_measurement("U", "U", &[&[0], &[1]])
        .with_sequence("seq1", &[(0, "Z", &[0]), (2, "T", &[0])]);
    f.description = Some("Spin-1/2 chain through orientations 0, pi/2 and 2pi/3 in the xz-plane.".into());
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                f = f.with_sequence(
                    &format!("chain_{a}{b}{c}"),
                    &[(0, "Z", &[a]), (2, "T", &[b]), (4, "U", &[c])],
                );
            }
        }
    }
    f.attribution = Some(AttributionSpec {
        regime: Regime::Quantum,
        subject: "atom".into(),
        kinds: [("Z", "spin-z"), ("T", "spin-x"), ("U", "spin-u")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        registrative: true,
        passive: true,
    });
    f.closure = Some(ClosureSpec {
        preparation: PreparationSpec {
            measurement: "Z".into(),
            outcome: vec![0],
            tick: 0,
        },
        probe: ProbeSpec {
            measurement: "T".into(),
            tick: 2,
        },
        priors: Vec::new(),
        random_priors: 100,
        seed: Some(7),
        threshold: 1e-12,
        expect_violation: false,
    });
    f
}

/// Outer spin measurements along z around a pi/2 measurement whose two
/// outcomes are merged into one.
pub fn sg_coarse() -> ExperimentFile {
    let mut f = ExperimentFile::new("sg_coarse", 2)
        .with_basis("Z", MatrixSource::generator("sg(0, 0)"))
        .with_basis("T", MatrixSource::generator("sg(pi/2, 0)"))
        .with_measurement("Z", "Z", &[&[0], &[1]])
        .with_measurement("T", "T", &[&[0], &[1]])
        .with_measurement("T_merged", "T", &[&[0, 1]])
        .with_sequence("C", &[(0, "Z", &[0]), (2, "T", &[0]), (4, "Z", &[0])])
        .with_sequence("D", &[(0, "Z", &[0]), (2, "T", &[1]), (4, "Z", &[0])])
        .with_sequence("E", &[(0, "Z", &[0]), (2, "T_merged", &[0, 1]), (4, "Z", &[0])]);
    f.description =
        Some("E = C v D: the merged outcome restores certainty that the two atomic routes do not add up to.".into());
    f.attribution = Some(AttributionSpec {
        regime: Regime::Quantum,
        subject: "atom".into(),
        kinds: [("Z", "spin-z"), ("T", "spin-x")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        registrative: true,
        passive: true,
    });
    f
}

/// A coarse preparation that fails closure: a sign flip on one of the
/// two merged levels before preparing `{0, 1}` changes the Fourier-basis
/// statistics afterwards.
pub fn closure_counterexample() -> ExperimentFile {
    let mut f = ExperimentFile::new("closure_counterexample", 3)
        .with_basis("Z", MatrixSource::generator("identity"))
        .with_basis("F", MatrixSource::generator("qft(3)"))
        .with_measurement("Z", "Z", &[&[0], &[1], &[2]])
        .with_measurement("Z_01", "Z", &[&[0, 1], &[2]])
        .with_measurement("F", "F", &[&[0], &[1], &[2]])
        .with_sequence("atomic", &[(0, "Z", &[0]), (2, "F", &[1])]);
    f.closure = Some(ClosureSpec {
        preparation: PreparationSpec {
            measurement: "Z_01".into(),
            outcome: vec![0, 1],
            tick: 0,
        },
        probe: ProbeSpec {
            measurement: "F".into(),
            tick: 1,
        },
        priors: vec![PriorSpec {
            id: "phase-flip".into(),
            generator: Some("phase(0, pi, 0)".into()),
            matrix: None,
        }],
        random_priors: 0,
        seed: None,
        threshold: 0.01,
        expect_violation: true,
    });
    f
}

fn quantum(e: &Experiment) -> &QuantumModel {
    e.quantum.as_ref().expect("built-in quantum scenario")
}

fn seq<'a>(e: &'a Experiment, name: &str) -> &'a Sequence {
    e.sequence(name).expect("built-in sequence")
}

/// `|<j at theta_b | i at theta_a>|^2` for in-plane spin-1/2 directions.
fn transition(theta_a: f64, i: usize, theta_b: f64, j: usize) -> f64 {
    let half = (theta_b - theta_a) / 2.0;
    if i == j {
        half.cos().powi(2)
    } else {
        half.sin().powi(2)
    }
}

pub(super) fn chain_checks(e: &Experiment, checks: &mut Checks) -> Result<(), ScenarioError> {
    let q = quantum(e);
    checks.equal("seq1 probability", q.probability(seq(e, "seq1"))?, 0.5);
    let [tz, tt, tu] = ANGLES;
    let mut total = [0.0; 2];
    for (a, total_a) in total.iter_mut().enumerate() {
        for b in 0..2 {
            for c in 0..2 {
                let name = format!("chain_{a}{b}{c}");
                let s = seq(e, &name);
                let p = q.probability(s)?;
                *total_a += p;
                let closed = transition(tz, a, tt, b) * transition(tt, b, tu, c);
                checks.equal(format!("{name} closed form"), p, closed);
                let records = s.records();
                let head = Sequence::new(records[..2].to_vec());
                let tail = Sequence::new(records[1..].to_vec());
                let (lhs, rhs) = series_product_check(q, &head, &tail)?;
                checks.equal(format!("{name} series product"), lhs, rhs);
            }
        }
    }
    for (a, t) in total.iter().enumerate() {
        checks.equal(format!("normalization from anchor {a}"), *t, 1.0);
    }
    if let Some(setup) = e.closure_setup() {
        let spec = e.file.closure.as_ref().expect("closure declared");
        let r = crate::closure::check_closure_random(q, &setup, spec.random_priors, spec.seed.unwrap_or(0))?;
        checks.equal("atomic preparation closure deviation", r.max_deviation, 0.0);
    }
    Ok(())
}

pub(super) fn coarse_checks(e: &Experiment, checks: &mut Checks) -> Result<(), ScenarioError> {
    let q = quantum(e);
    let (c, d, big_e) = (seq(e, "C"), seq(e, "D"), seq(e, "E"));
    let (zc, zd, ze) = (q.amplitude(c)?, q.amplitude(d)?, q.amplitude(big_e)?);
    let (pc, pd, pe) = (zc.probability(), zd.probability(), ze.probability());
    checks.holds("E is C v D", parallel(c, d).map(|s| &s == big_e).unwrap_or(false));
    checks.equal("|z(E) - z(C) - z(D)|", ze.distance(zc + zd), 0.0);
    checks.equal("P(E) from summed amplitudes", pe, (zc + zd).probability());
    checks.equal("P(E)", pe, 1.0);
    checks.equal("P(C) + P(D)", pc + pd, 0.5);
    checks.above("|P(E) - P(C) - P(D)|", (pe - pc - pd).abs(), 0.01);
    checks.equal(
        "interference formula",
        interference_prediction(pc, pd, zc.phase(), zd.phase()),
        pe,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_transition() {
        assert!((transition(0.0, 0, PI / 2.0, 0) - 0.5).abs() < 1e-15);
        assert!((transition(0.0, 0, PI, 1) - 1.0).abs() < 1e-15);
        assert!((transition(0.0, 1, 0.0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counterexample_violates_closure() {
        let e = Experiment::from_file(closure_counterexample()).unwrap();
        let r = crate::closure::check_closure(
            e.quantum.as_ref().unwrap(),
            &e.closure_setup().unwrap(),
            &e.closure_priors(),
        )
        .unwrap();
        assert!(r.max_deviation > 0.01, "{}", r.max_deviation);
    }
}
