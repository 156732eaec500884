//! Seeded random operators for the property suites and Monte Carlo runs.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed and selected
//! by a 64-bit stream index, so independent draws (per dimension, per
//! trial) never share state and are reproducible on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::measurement::KrausSet;
use crate::operators::{c, eigendecompose, ComplexMatrix, HermitianObservable, HERMITICITY_TOL};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Matrix of i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<HermitianObservable> {
    let g = gaussian_matrix(rng, dim, dim);
    HermitianObservable::new((&g + g.adjoint()).scale(0.5))
}

/// A single measurement operator of uniformly random rank.
pub fn kraus_operator<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let rank = rng.random_range(1..=dim);
    gaussian_matrix(rng, dim, rank) * gaussian_matrix(rng, rank, dim)
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    gaussian_matrix(rng, dim, dim).qr().q()
}

pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho.unscale(tr)
}

/// A complete set `M_k = G_k S^{-1/2}` with `S = Σ G_k†G_k`.
pub fn complete_kraus_set<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Result<KrausSet> {
    let raw: Vec<ComplexMatrix> = (0..outcomes).map(|_| gaussian_matrix(rng, dim, dim)).collect();
    let s = raw.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, g| acc + g.adjoint() * g);
    let eig = eigendecompose(&s, HERMITICITY_TOL * s.norm().max(1.0))?;
    let v = eig.eigenvectors();
    let inv_sqrt = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        eig.eigenvalues().iter().map(|&l| c(1.0 / l.sqrt(), 0.0)),
    ));
    let root = v * inv_sqrt * v.adjoint();
    KrausSet::from_operators(raw.into_iter().map(|g| g * &root).collect(), true)
}
