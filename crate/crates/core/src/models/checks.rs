//! Side-by-side evaluations of the sequence-combination laws.

use std::sync::Arc;

use super::{Amplitude, ModelError, PredictiveModel, QuantumModel};
use crate::outcome::{Measurement, Outcome};
use crate::sequence::{parallel, series, Sequence, SequenceRecord, Tick};

/// `(P(a · b), P(a) · P(b))`.
pub fn series_product_check<M: PredictiveModel>(
    model: &M,
    a: &Sequence,
    b: &Sequence,
) -> Result<(f64, f64), ModelError> {
    let joined = series(a, b)?;
    let lhs = model.probability(&joined)?;
    let rhs = model.probability(a)? * model.probability(b)?;
    Ok((lhs, rhs))
}

/// `(z(c ∨ d), z(c) + z(d))`.
pub fn amplitude_sum_check(q: &QuantumModel, c: &Sequence, d: &Sequence) -> Result<(Amplitude, Amplitude), ModelError> {
    let combined = parallel(c, d)?;
    Ok((q.amplitude(&combined)?, q.amplitude(c)? + q.amplitude(d)?))
}

/// `P(C) + P(D) + 2 sqrt(P(C) P(D)) cos(phi_c - phi_d)`.
pub fn interference_prediction(p_c: f64, p_d: f64, phi_c: f64, phi_d: f64) -> f64 {
    p_c + p_d + 2.0 * (p_c * p_d).sqrt() * (phi_c - phi_d).cos()
}

/// `(P(s), P(s'))` where `s'` has a single-outcome measurement inserted at
/// `tick`, which must lie strictly between the first and last records and
/// not coincide with an existing one. The inserted measurement reuses the
/// observable label of the record preceding it.
pub fn trivial_insertion_check<M: PredictiveModel>(
    model: &M,
    s: &Sequence,
    tick: Tick,
) -> Result<(f64, f64), ModelError> {
    let p_before = model.probability(s)?;
    let (first, last) = (s.records()[0].time(), s.records()[s.len() - 1].time());
    if tick <= first || tick >= last {
        return Err(ModelError::BoundaryTick { tick, first, last });
    }
    if s.records().iter().any(|r| r.time() == tick) {
        return Err(ModelError::OccupiedTick(tick));
    }
    let before = s
        .records()
        .iter()
        .rev()
        .find(|r| r.time() < tick)
        .expect("tick is after the first record");
    let d = before.measurement().context_size();
    let trivial = Arc::new(Measurement::trivial(before.measurement().label(), d)?);
    let full = Outcome::full(d).expect("context is nonempty");
    let record = SequenceRecord::new(tick, trivial, full)?;
    let p_after = model.probability(&s.with_inserted(record))?;
    Ok((p_before, p_after))
}

/// Probability of `s` with every interior non-atomic record split into its
/// atoms and the branches added as probabilities, the value a classical
/// reading of the same model assigns.
pub fn refinement_sum<M: PredictiveModel>(model: &M, s: &Sequence) -> Result<f64, ModelError> {
    let interior = 1..s.len().saturating_sub(1);
    match interior.into_iter().find(|&i| !s.records()[i].is_atomic()) {
        None => model.probability(s),
        Some(i) => s
            .refine_at(i)
            .expect("position in range")
            .iter()
            .map(|branch| refinement_sum(model, branch))
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, identity};
    use crate::models::ClassicalModel;
    use crate::outcome::make_measurement;
    use crate::sequence::SequenceError;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rec(t: Tick, m: &Arc<Measurement>, o: &[usize]) -> SequenceRecord {
        SequenceRecord::new(t, m.clone(), Outcome::new(o.iter().copied()).unwrap()).unwrap()
    }

    fn random_model(seed: u64, d: usize) -> QuantumModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QuantumModel::new(d)
            .with_basis("L", haar_unitary(&mut rng, d))
            .unwrap()
            .with_basis("M", haar_unitary(&mut rng, d))
            .unwrap()
            .with_basis("N", haar_unitary(&mut rng, d))
            .unwrap()
            .with_evolution(0, haar_unitary(&mut rng, d))
            .unwrap()
            .with_evolution(2, haar_unitary(&mut rng, d))
            .unwrap()
    }

    #[test]
    fn series_product_holds_on_atomic_join() {
        let q = random_model(11, 3);
        let (l, m, n) = (
            Arc::new(Measurement::atomic("L", 3).unwrap()),
            Arc::new(Measurement::atomic("M", 3).unwrap()),
            Arc::new(Measurement::atomic("N", 3).unwrap()),
        );
        let a = Sequence::new(vec![rec(0, &l, &[1]), rec(2, &m, &[2])]);
        let b = Sequence::new(vec![rec(2, &m, &[2]), rec(4, &n, &[0])]);
        let (lhs, rhs) = series_product_check(&q, &a, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn deterministic_tail_leaves_head_probability() {
        let q = ClassicalModel::new(2)
            .with_transition(0, DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.7, 1.0]))
            .unwrap();
        let x = Arc::new(Measurement::atomic("X", 2).unwrap());
        let a = Sequence::new(vec![rec(0, &x, &[0]), rec(1, &x, &[1])]);
        let b = Sequence::new(vec![rec(1, &x, &[1]), rec(2, &x, &[1])]);
        let (lhs, rhs) = series_product_check(&q, &a, &b).unwrap();
        assert_eq!(lhs, q.probability(&a).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn series_check_propagates_non_atomic_join() {
        let q = random_model(1, 2);
        let l = Arc::new(Measurement::atomic("L", 2).unwrap());
        let coarse = Arc::new(make_measurement("M", 2, &[vec![0, 1]]).unwrap());
        let a = Sequence::new(vec![rec(0, &l, &[0]), rec(1, &coarse, &[0, 1])]);
        let b = Sequence::new(vec![rec(1, &coarse, &[0, 1]), rec(2, &l, &[0])]);
        assert!(matches!(
            series_product_check(&q, &a, &b),
            Err(ModelError::Sequence(SequenceError::NonAtomicJoin { .. }))
        ));
    }

    #[test]
    fn amplitude_sum_with_vanishing_branch() {
        // Identity dynamics in one basis: only the branch through the anchor survives.
        let q = QuantumModel::new(3).with_basis("Z", identity(3)).unwrap();
        let z = Arc::new(Measurement::atomic("Z", 3).unwrap());
        let c = Sequence::new(vec![rec(0, &z, &[0]), rec(1, &z, &[0]), rec(2, &z, &[0])]);
        let d = Sequence::new(vec![rec(0, &z, &[0]), rec(1, &z, &[1]), rec(2, &z, &[0])]);
        assert_eq!(q.amplitude(&d).unwrap(), Amplitude::ZERO);
        let (zp, zs) = amplitude_sum_check(&q, &c, &d).unwrap();
        assert_eq!(zp, q.amplitude(&c).unwrap());
        assert_eq!(zp, zs);
    }

    #[test]
    fn trivial_insertion_leaves_probability_unchanged() {
        let q = random_model(5, 4);
        let (l, n) = (
            Arc::new(Measurement::atomic("L", 4).unwrap()),
            Arc::new(Measurement::atomic("N", 4).unwrap()),
        );
        let s = Sequence::new(vec![rec(0, &l, &[3]), rec(4, &n, &[1])]);
        for tick in 1..4 {
            let (before, after) = trivial_insertion_check(&q, &s, tick).unwrap();
            assert!((before - after).abs() < 1e-12, "tick {tick}");
        }
        assert!(matches!(
            trivial_insertion_check(&q, &s, 0),
            Err(ModelError::BoundaryTick { tick: 0, .. })
        ));
        assert!(matches!(
            trivial_insertion_check(&q, &s, 4),
            Err(ModelError::BoundaryTick { .. })
        ));
    }

    #[test]
    fn interference_formula_extremes() {
        assert_eq!(interference_prediction(0.25, 0.25, 0.0, 0.0), 1.0);
        assert!(interference_prediction(0.25, 0.25, std::f64::consts::PI, 0.0).abs() < 1e-16);
    }

    #[test]
    fn refinement_sum_drops_cross_terms() {
        let q = random_model(3, 3);
        let (l, n) = (
            Arc::new(Measurement::atomic("L", 3).unwrap()),
            Arc::new(Measurement::atomic("N", 3).unwrap()),
        );
        let m = Arc::new(make_measurement("M", 3, &[vec![0, 2], vec![1]]).unwrap());
        let s = Sequence::new(vec![rec(0, &l, &[0]), rec(2, &m, &[0, 2]), rec(4, &n, &[1])]);
        let branches = s.refine_at(1).unwrap();
        let expected: f64 = branches.iter().map(|b| q.probability(b).unwrap()).sum();
        assert!((refinement_sum(&q, &s).unwrap() - expected).abs() < 1e-15);
        let atomic = &branches[0];
        assert_eq!(refinement_sum(&q, atomic).unwrap(), q.probability(atomic).unwrap());
    }
}
