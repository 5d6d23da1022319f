mod common;

use approx::assert_abs_diff_eq;
use common::*;
use opseq::experiment::{parse_experiment, ExperimentFile, MatrixSource};
use opseq::models::{interference_prediction, refinement_sum, series_product_check, PredictiveModel};
use opseq::property::{attribute, exclusivity_holds, AttributionInput, PotentialPolicy, Regime};
use opseq::sequence::{parallel, series, Sequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Five atomic records at ticks 0, 2, 4, 6, 8 drawn from bases A, B, C.
fn atomic_chain<R: Rng>(r: &mut R, d: usize) -> Vec<opseq::sequence::SequenceRecord> {
    (0..5)
        .map(|k| {
            let m = atomic(LABELS[r.random_range(0..3)], d);
            rec(2 * k, &m, &[r.random_range(0..d)])
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn series_is_associative(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let recs = atomic_chain(&mut r, d);
        let a = Sequence::new(recs[0..2].to_vec());
        let b = Sequence::new(recs[1..4].to_vec());
        let c = Sequence::new(recs[3..5].to_vec());
        let left = series(&series(&a, &b).unwrap(), &c).unwrap();
        let right = series(&a, &series(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(left, Sequence::new(recs));
    }

    #[test]
    fn parallel_is_commutative_and_associative(seed in any::<u64>(), d in 3usize..=6) {
        let mut r = rng(seed);
        let mut blocks = random_partition(&mut r, d);
        while blocks.len() < 3 {
            blocks = random_partition(&mut r, d);
        }
        let (a, b, c) = (atomic("A", d), partitioned("B", d, &blocks), atomic("C", d));
        let seq = |k: usize| Sequence::new(vec![rec(0, &a, &[0]), rec(1, &b, &blocks[k]), rec(2, &c, &[1])]);
        let (x, y, z) = (seq(0), seq(1), seq(2));
        prop_assert_eq!(parallel(&x, &y).unwrap(), parallel(&y, &x).unwrap());
        let left = parallel(&parallel(&x, &y).unwrap(), &z).unwrap();
        let right = parallel(&x, &parallel(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn experiment_file_round_trips(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let blocks = random_partition(&mut r, d);
        let refs: Vec<&[usize]> = blocks.iter().map(Vec::as_slice).collect();
        let atoms: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
        let atom_refs: Vec<&[usize]> = atoms.iter().map(Vec::as_slice).collect();
        let anchor = [r.random_range(0..d)];
        let last = [r.random_range(0..d)];
        let mut f = ExperimentFile::new(format!("random-{seed}"), d)
            .with_basis("A", MatrixSource::generator(format!("qft({d})")))
            .with_basis("B", MatrixSource::matrix(&opseq::linalg::haar_unitary(&mut r, d)))
            .with_measurement("a", "A", &atom_refs)
            .with_measurement("b", "B", &refs)
            .with_sequence("s", &[(0, "a", &anchor), (3, "b", refs[0]), (5, "a", &last)]);
        f.evolutions.push(opseq::experiment::EvolutionSpec::generator(1, format!("shift({})", seed % 7)));
        let text = f.to_json();
        let e = parse_experiment(&text).unwrap();
        prop_assert_eq!(&e.file, &f);
        prop_assert_eq!(e.file.to_json(), text);
    }

    #[test]
    fn quantum_matches_path_sum_oracle(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let q = random_quantum(&mut r, d, 4);
        let (c, _) = interference_pair(&mut r, d);
        let z = q.amplitude(&c).unwrap();
        prop_assert!((z.value() - oracle_amplitude(&q, &c)).norm() <= 1e-12);
        prop_assert_eq!(q.probability(&c).unwrap(), z.value().norm_sqr());
    }

    #[test]
    fn quantum_chain_normalizes(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let q = random_quantum(&mut r, d, 4);
        let (a, b, c) = (atomic("A", d), atomic("B", d), atomic("C", d));
        let anchor = r.random_range(0..d);
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                let s = Sequence::new(vec![rec(0, &a, &[anchor]), rec(2, &b, &[i]), rec(4, &c, &[j])]);
                total += q.probability(&s).unwrap();
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interference_is_bounded(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let q = random_quantum(&mut r, d, 4);
        let (c, dd) = interference_pair(&mut r, d);
        let e = parallel(&c, &dd).unwrap();
        let (zc, zd) = (q.amplitude(&c).unwrap(), q.amplitude(&dd).unwrap());
        let (pc, pd, pe) = (zc.probability(), zd.probability(), q.probability(&e).unwrap());
        prop_assert!((pe - pc - pd).abs() <= 2.0 * (pc * pd).sqrt() + 1e-12);
        prop_assert!((pe - interference_prediction(pc, pd, zc.phase(), zd.phase())).abs() <= 1e-9);
    }

    #[test]
    fn classical_is_additive(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let cm = random_classical(&mut r, d, 4);
        let (c, dd) = interference_pair(&mut r, d);
        let e = parallel(&c, &dd).unwrap();
        let (pc, pd, pe) = (cm.probability(&c).unwrap(), cm.probability(&dd).unwrap(), cm.probability(&e).unwrap());
        prop_assert!((pe - pc - pd).abs() <= 1e-12);
        prop_assert!((pc - oracle_classical(&cm, &c)).abs() <= 1e-12);
    }

    #[test]
    fn coarse_amplitude_sums_its_refinements(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let q = random_quantum(&mut r, d, 4);
        let (c, _) = interference_pair(&mut r, d);
        let fine = c.refine_at(1).unwrap();
        let summed: opseq::models::Amplitude = fine.iter().map(|s| q.amplitude(s).unwrap()).sum();
        prop_assert!(q.amplitude(&c).unwrap().distance(summed) <= 1e-12);
        let classical: f64 = fine.iter().map(|s| q.probability(s).unwrap()).sum();
        prop_assert!((refinement_sum(&q, &c).unwrap() - classical).abs() <= 1e-12);
    }

    #[test]
    fn series_product_in_both_models(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let q = random_quantum(&mut r, d, 8);
        let cm = random_classical(&mut r, d, 8);
        let recs = atomic_chain(&mut r, d);
        let a = Sequence::new(recs[0..3].to_vec());
        let b = Sequence::new(recs[2..5].to_vec());
        let (lhs, rhs) = series_product_check(&q, &a, &b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        let (lhs, rhs) = series_product_check(&cm, &a, &b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn quantum_attribution_is_exclusive(seed in any::<u64>(), d in 2usize..=6, len in 1usize..=5) {
        let mut r = rng(seed);
        let blocks = random_partition(&mut r, d);
        let coarse = partitioned("X", d, &blocks);
        let fine = atomic("X", d);
        let mut t = 0;
        let records = (0..len)
            .map(|_| {
                t += r.random_range(1..=2);
                if r.random_bool(0.5) {
                    rec(t, &fine, &[r.random_range(0..d)])
                } else {
                    rec(t, &coarse, &blocks[r.random_range(0..blocks.len())])
                }
            })
            .collect();
        let policy = if r.random_bool(0.5) { PotentialPolicy::AllSubsets } else { PotentialPolicy::AtomicOnly };
        let input = AttributionInput::new(Regime::Quantum, "object", Sequence::new(records))
            .with_kind("X", "position")
            .with_flags(r.random_bool(0.5), r.random_bool(0.5))
            .with_potentials(policy);
        prop_assert!(exclusivity_holds(&attribute(&input).unwrap()));
    }
}
