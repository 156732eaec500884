//! Complex matrix helpers, Hermitian spectral decomposition, and bosonic
//! operators on a truncated Fock space.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{QmeterError, Result};

pub type C64 = num_complex::Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Absolute max-norm tolerance on `‖M − M†‖` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Largest discarded Fock-space probability accepted for a coherent state.
pub const COHERENT_TAIL_THRESHOLD: f64 = 1e-8;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(QmeterError::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn require_dim(m: &ComplexMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(QmeterError::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// `tr{a b}` without forming the product.
pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `⟨v|op|v⟩`
pub fn expectation(op: &ComplexMatrix, v: &StateVector) -> C64 {
    v.dotc(&(op * v))
}

pub fn ket(dim: usize, k: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}

/// `|u⟩⟨v|`
pub fn ket_bra(u: &StateVector, v: &StateVector) -> ComplexMatrix {
    u * v.adjoint()
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Returns `AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(a)?;
    require_dim(b, n)?;
    Ok(a * b - b * a)
}

/// A Hermitian matrix together with its spectral decomposition.
///
/// Eigenvalues are stored in ascending order; the `k`-th column of
/// `eigenvectors` belongs to `eigenvalues[k]`. Within a degenerate eigenspace
/// the basis is whatever the decomposition produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianObservable {
    name: Option<String>,
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

/// Eigenvalues closer than this (scaled by the spectral radius) share an
/// eigenspace.
const DEGENERACY_TOL: f64 = 1e-9;

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        eigendecompose(&matrix, HERMITICITY_TOL)
    }

    /// Builds `Σ_k λ_k v_k v_k†` from a supplied orthonormal eigenbasis
    /// (columns of `eigenvectors`).
    pub fn from_spectrum(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Result<Self> {
        let n = require_square(&eigenvectors)?;
        if eigenvalues.len() != n {
            return Err(QmeterError::DimensionMismatch {
                expected: format!("{n} eigenvalues"),
                found: eigenvalues.len().to_string(),
            });
        }
        let gram = eigenvectors.adjoint() * &eigenvectors;
        let ortho = max_abs(&(gram - ComplexMatrix::identity(n, n)));
        if ortho > HERMITICITY_TOL {
            return Err(QmeterError::InternalConsistency(format!(
                "eigenvectors are not orthonormal (deviation {ortho:e})"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
        let values: Vec<f64> = order.iter().map(|&k| eigenvalues[k]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, col| eigenvectors[(r, order[col])]);
        let diag =
            ComplexMatrix::from_diagonal(&DVector::from_iterator(n, values.iter().map(|&l| c(l, 0.0))));
        let matrix = &vectors * diag * vectors.adjoint();
        Ok(Self { name: None, matrix, eigenvalues: values, eigenvectors: vectors })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Groups eigenvector indices by (numerically) equal eigenvalue, in
    /// ascending order of eigenvalue.
    pub fn eigenspaces(&self) -> Vec<(f64, Vec<usize>)> {
        let scale = self.eigenvalues.iter().fold(1.0_f64, |a, l| a.max(l.abs()));
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some((first, members)) if (lambda - *first).abs() <= DEGENERACY_TOL * scale => {
                    members.push(k)
                }
                _ => groups.push((lambda, vec![k])),
            }
        }
        groups
    }

    /// Largest absolute entry of `Σ λ v v† − matrix`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.dim();
        let diag = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            n,
            self.eigenvalues.iter().map(|&l| c(l, 0.0)),
        ));
        max_abs(&(&self.eigenvectors * diag * self.eigenvectors.adjoint() - &self.matrix))
    }
}

/// Spectral decomposition of a Hermitian matrix with ascending eigenvalues.
pub fn eigendecompose(m: &ComplexMatrix, tol: f64) -> Result<HermitianObservable> {
    let n = require_square(m)?;
    let deviation = hermiticity_deviation(m);
    if deviation > tol {
        return Err(QmeterError::NotHermitian { deviation, tol });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(QmeterError::DecompositionFailure)?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(QmeterError::DecompositionFailure);
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep decomposition order
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok(HermitianObservable { name: None, matrix: sym, eigenvalues, eigenvectors })
}

/// Fock space truncated to levels `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BosonicSpace {
    dim: usize,
}

/// Number and quadrature operators with `[x, y] = i/2` (untruncated).
#[derive(Debug, Clone)]
pub struct BosonicOperators {
    pub number: ComplexMatrix,
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
}

impl BosonicSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(QmeterError::InvalidTruncation(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncated annihilation operator, `a|n⟩ = √n |n−1⟩`.
    pub fn lowering(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.dim, |r, col| {
            if col == r + 1 {
                c((col as f64).sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    pub fn number(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&DVector::from_fn(self.dim, |k, _| c(k as f64, 0.0)))
    }

    /// `(a + a†)/2`
    pub fn quadrature_x(&self) -> ComplexMatrix {
        let a = self.lowering();
        (&a + a.adjoint()).scale(0.5)
    }

    /// `(a − a†)/(2i)`
    pub fn quadrature_y(&self) -> ComplexMatrix {
        let a = self.lowering();
        (&a - a.adjoint()) * c(0.0, -0.5)
    }

    pub fn operators(&self) -> BosonicOperators {
        BosonicOperators { number: self.number(), x: self.quadrature_x(), y: self.quadrature_y() }
    }
}

pub fn bosonic_operators(space: BosonicSpace) -> BosonicOperators {
    space.operators()
}

/// A normalized truncated coherent state and the probability mass that the
/// truncation discarded.
#[derive(Debug, Clone)]
pub struct CoherentState {
    pub alpha: C64,
    pub vector: StateVector,
    pub tail_mass: f64,
}

/// Exact Fock amplitudes `⟨n|α⟩` for `n < dim`, not renormalized.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> StateVector {
    let mut vector = StateVector::zeros(dim);
    let mut amp = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    vector[0] = amp;
    for k in 1..dim {
        amp = amp * alpha / (k as f64).sqrt();
        vector[k] = amp;
    }
    vector
}

/// Truncated coherent state `|α⟩`; fails if more than `threshold` of the
/// Poisson weight lies above the truncation.
pub fn coherent_state(alpha: C64, space: BosonicSpace, threshold: f64) -> Result<CoherentState> {
    let mut vector = coherent_amplitudes(alpha, space.dim());
    let kept: f64 = vector.iter().map(|z| z.norm_sqr()).sum();
    let tail_mass = (1.0 - kept).max(0.0);
    if tail_mass > threshold {
        return Err(QmeterError::Truncation { tail_mass, threshold });
    }
    vector.unscale_mut(kept.sqrt());
    Ok(CoherentState { alpha, vector, tail_mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn pauli_z_eigensystem() {
        let obs = HermitianObservable::new(pauli_z()).unwrap();
        assert_eq!(obs.eigenvalues(), &[-1.0, 1.0]);
        // eigenvector of -1 is e_1 up to phase
        assert_close(obs.eigenvector(0)[1].norm(), 1.0, 1e-14);
        assert_close(obs.eigenvector(1)[0].norm(), 1.0, 1e-14);
    }

    #[test]
    fn identity_is_threefold_degenerate() {
        let obs = HermitianObservable::new(ComplexMatrix::identity(3, 3)).unwrap();
        for &l in obs.eigenvalues() {
            assert_close(l, 1.0, 1e-14);
        }
        assert_eq!(obs.eigenspaces().len(), 1);
        let v = obs.eigenvectors();
        assert!(max_abs(&(v.adjoint() * v - ComplexMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn pauli_x_eigenvectors() {
        let obs = HermitianObservable::new(pauli_x()).unwrap();
        assert_close(obs.eigenvalues()[0], -1.0, 1e-14);
        assert_close(obs.eigenvalues()[1], 1.0, 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = StateVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]);
        let plus = StateVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        assert_close(obs.eigenvector(0).dotc(&minus).norm(), 1.0, 1e-12);
        assert_close(obs.eigenvector(1).dotc(&plus).norm(), 1.0, 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ket_bra(&ket(2, 0), &ket(2, 1));
        assert!(matches!(eigendecompose(&m, HERMITICITY_TOL), Err(QmeterError::NotHermitian { .. })));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(eigendecompose(&rect, 1e-9), Err(QmeterError::DimensionMismatch { .. })));
    }

    #[test]
    fn pauli_commutators() {
        let zx = commutator(&pauli_z(), &pauli_x()).unwrap();
        assert!(max_abs(&(zx - pauli_y() * c(0.0, 2.0))) < 1e-15);
        let zz = commutator(&pauli_z(), &pauli_z()).unwrap();
        assert_eq!(max_abs(&zz), 0.0);
        assert!(commutator(&pauli_z(), &ComplexMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn truncated_quadrature_commutator() {
        for n in 2..8 {
            let ops = BosonicSpace::new(n).unwrap().operators();
            let comm = commutator(&ops.x, &ops.y).unwrap();
            for r in 0..n {
                for col in 0..n {
                    let expected = if r != col {
                        0.0
                    } else if r + 1 < n {
                        0.5
                    } else {
                        -0.5 * (n as f64 - 1.0)
                    };
                    assert_close(comm[(r, col)].re, 0.0, 1e-14);
                    assert_close(comm[(r, col)].im, expected, 1e-13);
                }
            }
        }
    }

    #[test]
    fn two_level_bosonic_operators() {
        let ops = BosonicSpace::new(2).unwrap().operators();
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert_eq!(ops.x, x);
        assert_eq!(
            ops.number,
            ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]))
        );
    }

    #[test]
    fn three_level_y_quadrature() {
        let y = BosonicSpace::new(3).unwrap().quadrature_y();
        // (a − a†)/(2i): (0,1) = 1/(2i) = −i/2, (1,0) = +i/2, (1,2) = −i√2/2
        assert_close(y[(0, 1)].im, -0.5, 1e-15);
        assert_close(y[(1, 0)].im, 0.5, 1e-15);
        assert_close(y[(1, 2)].im, -(2.0_f64).sqrt() / 2.0, 1e-15);
        assert_close(y[(2, 1)].im, (2.0_f64).sqrt() / 2.0, 1e-15);
        assert!(hermiticity_deviation(&y) < 1e-15);
    }

    #[test]
    fn truncation_dimension_checked() {
        assert_eq!(BosonicSpace::new(1), Err(QmeterError::InvalidTruncation(1)));
    }

    #[test]
    fn vacuum_coherent_state() {
        let s = coherent_state(c(0.0, 0.0), BosonicSpace::new(5).unwrap(), COHERENT_TAIL_THRESHOLD).unwrap();
        assert_eq!(s.tail_mass, 0.0);
        assert_eq!(s.vector, ket(5, 0));
    }

    #[test]
    fn coherent_tail_mass() {
        // Poisson(1) mass above n = 29, summed directly
        let mut oracle = 0.0;
        let mut term = (-1.0_f64).exp();
        for k in 0..200 {
            if k >= 30 {
                oracle += term;
            }
            term /= (k + 1) as f64;
        }
        assert!(oracle < 1e-12);
        let s = coherent_state(c(1.0, 0.0), BosonicSpace::new(30).unwrap(), COHERENT_TAIL_THRESHOLD).unwrap();
        assert!(s.tail_mass < 1e-12);
    }

    #[test]
    fn coherent_mean_photon_number() {
        let space = BosonicSpace::new(60).unwrap();
        let s = coherent_state(c(0.5, 0.3), space, COHERENT_TAIL_THRESHOLD).unwrap();
        let n = expectation(&space.number(), &s.vector).re;
        assert_close(n, 0.34, 1e-10);
    }

    #[test]
    fn coherent_truncation_error() {
        let space = BosonicSpace::new(5).unwrap();
        assert!(matches!(
            coherent_state(c(3.0, 0.0), space, COHERENT_TAIL_THRESHOLD),
            Err(QmeterError::Truncation { .. })
        ));
    }
}
