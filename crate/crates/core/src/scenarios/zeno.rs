use serde::Serialize;

use super::{Checks, ScenarioError};
use crate::experiment::{AttributionSpec, EvolutionSpec, Experiment, ExperimentFile, MatrixSource};
use crate::models::PredictiveModel;
use crate::property::{
    attribute, effective_speed, exclusivity_holds, Kind, Modality, PotentialPolicy, PropertyAscription, PropertyValue,
    Regime,
};

const CELLS: usize = 12;
const WIDTH: usize = 3;

fn region_blocks(k: usize) -> Vec<Vec<usize>> {
    let mut blocks = vec![(k..k + WIDTH).collect::<Vec<_>>()];
    blocks.extend((0..CELLS).filter(|i| !(k..k + WIDTH).contains(i)).map(|i| vec![i]));
    blocks
}

fn arrow(records: usize) -> ExperimentFile {
    assert!((1..=CELLS - WIDTH + 1).contains(&records), "chain length out of range");
    let singletons: Vec<Vec<usize>> = (0..CELLS).map(|i| vec![i]).collect();
    let refs: Vec<&[usize]> = singletons.iter().map(Vec::as_slice).collect();
    let mut f = ExperimentFile::new("zeno_arrow", CELLS)
        .with_basis("X", MatrixSource::generator("identity"))
        .with_measurement("cell", "X", &refs);
    for k in 0..records {
        let blocks = region_blocks(k);
        let refs: Vec<&[usize]> = blocks.iter().map(Vec::as_slice).collect();
        f = f.with_measurement(&format!("region_{k}"), "X", &refs);
    }
    let cells: Vec<Vec<usize>> = (0..records).map(|k| vec![k]).collect();
    let regions: Vec<Vec<usize>> = (0..records).map(|k| (k..k + WIDTH).collect()).collect();
    let region_names: Vec<String> = (0..records).map(|k| format!("region_{k}")).collect();
    let atomic: Vec<_> = (0..records)
        .map(|k| (2 * k as i64, "cell", cells[k].as_slice()))
        .collect();
    let coarse: Vec<_> = (0..records)
        .map(|k| (2 * k as i64, region_names[k].as_str(), regions[k].as_slice()))
        .collect();
    f = f.with_sequence("atomic", &atomic).with_sequence("regions", &coarse);
    f.description = Some("An arrow on a ring of 12 cells, advanced one cell between records.".into());
    f.evolutions = (0..records.saturating_sub(1))
        .map(|k| EvolutionSpec::generator(2 * k as i64, "shift(1)"))
        .collect();
    f.attribution = Some(AttributionSpec {
        regime: Regime::Quantum,
        subject: "arrow".into(),
        kinds: [("X".to_string(), "position".to_string())].into_iter().collect(),
        registrative: true,
        passive: true,
    });
    f
}

/// Five position records of an arrow that moves one cell every two ticks.
pub fn zeno_arrow() -> ExperimentFile {
    arrow(5)
}

/// Ascriptions at one record time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoTick {
    pub tick: i64,
    pub actual: PropertyValue,
    pub potentials: usize,
    pub evolutive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoReport {
    /// Chain of exact cells.
    pub atomic: Vec<ZenoTick>,
    /// Chain of three-cell regions.
    pub regions: Vec<ZenoTick>,
    /// Displacement per tick over the atomic chain; `None` for a single record.
    pub effective_speed: Option<f64>,
}

fn summarize(out: &[PropertyAscription], ticks: impl Iterator<Item = i64>) -> Vec<ZenoTick> {
    ticks
        .map(|tick| {
            let here: Vec<_> = out.iter().filter(|a| a.time_tag.tick == tick).collect();
            ZenoTick {
                tick,
                actual: here
                    .iter()
                    .find(|a| a.kind == Kind::Icp && a.modality == Modality::Actual)
                    .map(|a| a.value.clone())
                    .unwrap_or(PropertyValue::Unvalued),
                potentials: here.iter().filter(|a| a.modality == Modality::Potential).count(),
                evolutive: here.iter().any(|a| a.kind == Kind::Evolutive),
            }
        })
        .collect()
}

/// Attributes both chains of an arrow observed `records` times.
pub fn zeno_report(records: usize) -> Result<ZenoReport, ScenarioError> {
    let e = Experiment::from_file(arrow(records))?;
    zeno_report_for(&e)
}

fn zeno_report_for(e: &Experiment) -> Result<ZenoReport, ScenarioError> {
    let run = |name: &str| -> Result<Vec<ZenoTick>, ScenarioError> {
        let input = e
            .attribution_input(name, PotentialPolicy::AllSubsets)
            .expect("attribution declared");
        let out = attribute(&input)?;
        Ok(summarize(&out, input.sequence.records().iter().map(|r| r.time())))
    };
    let atomic = run("atomic")?;
    let effective_speed = match (atomic.first(), atomic.last()) {
        (Some(a), Some(b)) if b.tick > a.tick => {
            let atom = |t: &ZenoTick| match &t.actual {
                PropertyValue::Outcome(o) => o.min(),
                _ => unreachable!("atomic chain"),
            };
            Some(
                effective_speed(atom(a), atom(b), b.tick - a.tick, Regime::Quantum)?
                    .0
                    .value,
            )
        }
        _ => None,
    };
    Ok(ZenoReport {
        atomic,
        regions: run("regions")?,
        effective_speed,
    })
}

pub(super) fn checks(e: &Experiment, checks: &mut Checks) -> Result<(), ScenarioError> {
    let q = e.quantum.as_ref().expect("quantum file");
    checks.equal(
        "atomic chain probability",
        q.probability(e.sequence("atomic").expect("atomic"))?,
        1.0,
    );
    let report = zeno_report_for(e)?;
    for t in &report.atomic {
        checks.holds(format!("no evolutive at exact cell {}", t.tick), !t.evolutive);
    }
    for t in &report.regions {
        checks.holds(format!("evolutive within region at {}", t.tick), t.evolutive);
        checks.equal(
            format!("potentials within region at {}", t.tick),
            t.potentials as f64,
            6.0,
        );
    }
    checks.equal("effective speed", report.effective_speed.unwrap_or(f64::NAN), 0.5);
    for name in ["atomic", "regions"] {
        let input = e
            .attribution_input(name, PotentialPolicy::AllSubsets)
            .expect("attribution declared");
        checks.holds(format!("{name} exclusivity"), exclusivity_holds(&attribute(&input)?));
    }
    Ok(())
}
