#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use opseq::experiment::{parse_experiment, Experiment};
use opseq::linalg::{haar_unitary, random_stochastic, CMatrix};
use opseq::models::{ClassicalModel, QuantumModel};
use opseq::outcome::{make_measurement, Measurement, Outcome};
use opseq::sequence::{Sequence, SequenceRecord, Tick};
use rand::Rng;

pub const LABELS: [&str; 3] = ["A", "B", "C"];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            let stem = name.strip_suffix(".json")?;
            (!stem.ends_with(".schema")).then(|| stem.to_string())
        })
        .collect();
    names.sort();
    names
}

pub fn load_fixture(name: &str) -> Experiment {
    let text = std::fs::read_to_string(fixtures_dir().join(format!("{name}.json"))).expect("fixture file");
    parse_experiment(&text).unwrap_or_else(|d| panic!("{name}: {d}"))
}

/// Haar bases `A`, `B`, `C` and a Haar unitary on every interval of
/// `0..horizon`.
pub fn random_quantum<R: Rng>(rng: &mut R, d: usize, horizon: Tick) -> QuantumModel {
    let mut q = QuantumModel::new(d);
    for l in LABELS {
        q = q.with_basis(l, haar_unitary(rng, d)).unwrap();
    }
    for t in 0..horizon {
        q = q.with_evolution(t, haar_unitary(rng, d)).unwrap();
    }
    q
}

pub fn random_classical<R: Rng>(rng: &mut R, d: usize, horizon: Tick) -> ClassicalModel {
    let mut c = ClassicalModel::new(d);
    for t in 0..horizon {
        c = c.with_transition(t, random_stochastic(rng, d)).unwrap();
    }
    c
}

/// A partition of `0..d` with at least two blocks, in random order.
pub fn random_partition<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<usize>> {
    let k = rng.random_range(2..=d);
    let mut blocks = vec![Vec::new(); k];
    let mut atoms: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        atoms.swap(i, rng.random_range(0..=i));
    }
    for (i, a) in atoms.into_iter().enumerate() {
        let b = if i < k { i } else { rng.random_range(0..k) };
        blocks[b].push(a);
    }
    for b in &mut blocks {
        b.sort();
    }
    blocks
}

pub fn atomic(label: &str, d: usize) -> Arc<Measurement> {
    Arc::new(Measurement::atomic(label, d).unwrap())
}

pub fn partitioned(label: &str, d: usize, blocks: &[Vec<usize>]) -> Arc<Measurement> {
    Arc::new(make_measurement(label, d, blocks).unwrap())
}

pub fn rec(t: Tick, m: &Arc<Measurement>, o: &[usize]) -> SequenceRecord {
    SequenceRecord::new(t, m.clone(), Outcome::new(o.iter().copied()).unwrap()).unwrap()
}

/// `(C, D)`: atomic anchor in `A` at 0, disjoint blocks of one random
/// partition of `B` at 2, atomic final in `C` at 4.
pub fn interference_pair<R: Rng>(rng: &mut R, d: usize) -> (Sequence, Sequence) {
    let blocks = random_partition(rng, d);
    let (a, b, c) = (atomic("A", d), partitioned("B", d, &blocks), atomic("C", d));
    let anchor = rng.random_range(0..d);
    let last = rng.random_range(0..d);
    let i = rng.random_range(0..blocks.len());
    let j = (i + rng.random_range(1..blocks.len())) % blocks.len();
    let make = |k: usize| Sequence::new(vec![rec(0, &a, &[anchor]), rec(2, &b, &blocks[k]), rec(4, &c, &[last])]);
    (make(i), make(j))
}

/// Product of the per-interval unitaries over `[from, to)`, built directly.
fn oracle_propagator(q: &QuantumModel, from: Tick, to: Tick) -> CMatrix {
    let mut u = CMatrix::identity(q.dim(), q.dim());
    for t in from..to {
        if let Some(step) = q.evolutions().get(&t) {
            u = step * u;
        }
    }
    u
}

/// Brute-force path sum over every atom of every intermediate outcome.
pub fn oracle_amplitude(q: &QuantumModel, s: &Sequence) -> Complex64 {
    let r = s.records();
    let basis = |i: usize| q.basis(r[i].measurement().label()).unwrap().clone();
    let mut paths: Vec<(usize, Complex64)> = vec![(r[0].outcome().min(), Complex64::new(1.0, 0.0))];
    for k in 1..r.len() {
        let (prev, next) = (basis(k - 1), basis(k));
        let u = oracle_propagator(q, r[k - 1].time(), r[k].time());
        let mut step = Vec::new();
        for &(from, w) in &paths {
            for &to in r[k].outcome().members() {
                let bra = next.column(to).adjoint();
                let amp = (bra * &u * prev.column(from))[(0, 0)];
                step.push((to, w * amp));
            }
        }
        paths = step;
    }
    paths.into_iter().map(|(_, w)| w).sum()
}

/// Brute-force path sum of transition probabilities, conditioned on the
/// anchor atom.
pub fn oracle_classical(c: &ClassicalModel, s: &Sequence) -> f64 {
    let r = s.records();
    let d = c.dim();
    let step = |from: Tick, to: Tick| {
        let mut t = DMatrix::<f64>::identity(d, d);
        for k in from..to {
            if let Some(m) = c.transitions().get(&k) {
                t = m * t;
            }
        }
        t
    };
    let mut weights = vec![0.0; d];
    weights[r[0].outcome().min()] = 1.0;
    for k in 1..r.len() {
        let t = step(r[k - 1].time(), r[k].time());
        let mut next = vec![0.0; d];
        for &j in r[k].outcome().members() {
            next[j] = (0..d).map(|i| t[(j, i)] * weights[i]).sum();
        }
        weights = next;
    }
    weights.iter().sum()
}
