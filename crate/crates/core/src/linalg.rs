//! Complex matrix helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Largest entry of `|M† M - I|`; zero for an exactly unitary `M`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let gram = m.adjoint() * m;
    max_abs_diff(&gram, &identity(m.nrows()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Orthogonal projector onto the span of `columns` of `basis`.
pub fn projector(basis: &CMatrix, columns: impl IntoIterator<Item = usize>) -> CMatrix {
    let d = basis.nrows();
    let mut p = CMatrix::zeros(d, d);
    for j in columns {
        let v = basis.column(j);
        p += v * v.adjoint();
    }
    p
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    haar_unitary(rng, d).column(0).into_owned()
}

/// Column-stochastic matrix with columns drawn uniformly from the simplex.
pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(d, d, |_, _| {
        let x: f64 = Exp1.sample(rng);
        x
    });
    for mut col in m.column_iter_mut() {
        let s: f64 = col.sum();
        col /= s;
    }
    m
}

/// Largest deviation of a column sum from 1, or infinity if any entry is
/// negative or not finite.
pub fn stochasticity_deviation(m: &DMatrix<f64>) -> f64 {
    if !m.is_square() || m.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return f64::INFINITY;
    }
    m.column_iter().map(|col| (col.sum() - 1.0).abs()).fold(0.0, f64::max)
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Half the L1 distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
