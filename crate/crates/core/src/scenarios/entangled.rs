use super::{Checks, ScenarioError};
use crate::experiment::{
    AttributionSpec, CompositeSpec, EvolutionSpec, Experiment, ExperimentFile, MatrixSource, PartSpec,
};
use crate::linalg::singular_values;
use crate::property::{attribute_composite, Extension, Modality, PotentialPolicy, Regime};

fn part(name: &str) -> PartSpec {
    PartSpec {
        name: name.into(),
        dimension: 2,
        bases: [("X".to_string(), MatrixSource::generator("identity"))]
            .into_iter()
            .collect(),
        evolutions: vec![
            EvolutionSpec::generator(0, "qft(2)"),
            EvolutionSpec::generator(2, "qft(2)"),
        ],
    }
}

/// Two non-interacting two-cell particles found at `(0, 0)`, then in the
/// swapped configurations `{(0, 1), (1, 0)}`, then at `(0, 1)`.
pub fn entangled_pair() -> ExperimentFile {
    let mut f = ExperimentFile::new("entangled_pair", 4)
        .with_measurement("X", "X", &[&[0], &[1], &[2], &[3]])
        .with_measurement("swapped", "X", &[&[1, 2], &[0], &[3]])
        .with_sequence("swapped", &[(0, "X", &[0]), (2, "swapped", &[1, 2]), (4, "X", &[1])]);
    for k in 0..4 {
        f = f.with_sequence(&format!("via_{k}"), &[(0, "X", &[0]), (2, "X", &[k]), (4, "X", &[1])]);
    }
    f.description = Some("Joint index i_A * 2 + i_B; both particles evolve by a Hadamard between records.".into());
    f.composite = Some(CompositeSpec {
        parts: vec![part("A"), part("B")],
        joint_evolutions: Vec::new(),
    });
    f.attribution = Some(AttributionSpec {
        regime: Regime::Quantum,
        subject: "pair".into(),
        kinds: [("X".to_string(), "position".to_string())].into_iter().collect(),
        registrative: true,
        passive: true,
    });
    f
}

pub(super) fn checks(e: &Experiment, checks: &mut Checks) -> Result<(), ScenarioError> {
    let cm = e.composite.as_ref().expect("composite file");
    let seq = |n: &str| e.sequence(n).expect("built-in sequence");
    let mut via = Vec::new();
    for k in 0..4 {
        let s = seq(&format!("via_{k}"));
        let joint = cm.amplitude(s)?;
        checks.equal(
            format!("via_{k} factorizes"),
            joint.distance(cm.factorized_amplitude(s)?),
            0.0,
        );
        via.push(joint);
    }
    let swapped = seq("swapped");
    let z = cm.amplitude(swapped)?;
    checks.equal(
        "swapped is the sum of its configurations",
        z.distance(via[cm.flat(0, 1)] + via[cm.flat(1, 0)]),
        0.0,
    );
    checks.equal(
        "swapped factorized route",
        z.distance(cm.factorized_amplitude(swapped)?),
        0.0,
    );
    let m = cm.branch_matrix(swapped, 1)?;
    let s = singular_values(&m);
    checks.above("second singular value of the branch matrix", s[1], 1e-6);
    checks.equal(
        "branch matrix antisymmetry",
        (&m + m.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max),
        0.0,
    );
    let input = e
        .attribution_input("swapped", PotentialPolicy::AllSubsets)
        .expect("attribution declared");
    let out = attribute_composite(&input, cm.part_b().dim())?;
    let at_swap: Vec<_> = out.iter().filter(|a| a.time_tag.tick == 2).collect();
    checks.holds(
        "swapped outcome is an extended complex",
        at_swap
            .iter()
            .any(|a| a.modality == Modality::Actual && a.extension == Some(Extension::ExtendedComplex)),
    );
    checks.equal(
        "potential configurations",
        at_swap.iter().filter(|a| a.modality == Modality::Potential).count() as f64,
        2.0,
    );
    Ok(())
}
