//! Randomized invariants. Operators are drawn from seeded ChaCha streams so
//! every proptest case is reproducible from its seed.

use proptest::prelude::*;
use rand::Rng;

use qmeter_core::backaction::{averaged_disturbance, decomposition_check};
use qmeter_core::measurement::{
    conditional_input_distribution, optimal_estimate, outcome_probability, quadratic_error,
    resolution_pair_check, retrodictive_operator,
};
use qmeter_core::mixture::{mixture_bound_check, MixtureComponent};
use qmeter_core::operators::{commutator, max_abs};
use qmeter_core::random::{complete_kraus_set, density_matrix, hermitian, kraus_operator, stream, unitary};
use qmeter_core::{ComplexMatrix, HermitianObservable, C64};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Spectrum with deliberate repeats, e.g. `[0, 0, 1, 2, 2, 2]`.
fn degenerate_spectrum<R: Rng>(rng: &mut R, dim: usize) -> (Vec<f64>, Vec<usize>) {
    let mut values = Vec::new();
    let mut blocks = Vec::new();
    let mut level = 0.0;
    while values.len() < dim {
        let k = rng.random_range(1..=(dim - values.len()).min(3));
        values.extend(std::iter::repeat_n(level, k));
        blocks.push(k);
        level += rng.random_range(0.5..2.0);
    }
    (values, blocks)
}

fn block_diagonal_unitary<R: Rng>(rng: &mut R, blocks: &[usize]) -> ComplexMatrix {
    let n: usize = blocks.iter().sum();
    let mut u = ComplexMatrix::zeros(n, n);
    let mut at = 0;
    for &k in blocks {
        u.view_mut((at, at), (k, k)).copy_from(&unitary(rng, k));
        at += k;
    }
    u
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 2usize..=8) {
        let a = hermitian(&mut stream(seed, 0), dim).unwrap();
        prop_assert!(a.reconstruction_error() <= 1e-10 * a.matrix().norm().max(1.0));
        prop_assert!(a.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn commutator_is_traceless(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = stream(seed, 0);
        let a = hermitian(&mut rng, dim).unwrap();
        let b = hermitian(&mut rng, dim).unwrap();
        let tr = commutator(a.matrix(), b.matrix()).unwrap().trace();
        prop_assert!(tr.norm() <= 1e-10 * (a.matrix().norm() * b.matrix().norm()).max(1.0));
    }

    #[test]
    fn results_ignore_basis_choice_inside_eigenspaces(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = stream(seed, 0);
        let (values, blocks) = degenerate_spectrum(&mut rng, dim);
        let u = unitary(&mut rng, dim);
        let remixed = &u * block_diagonal_unitary(&mut rng, &blocks);
        let a = HermitianObservable::from_spectrum(values.clone(), u).unwrap();
        let b = HermitianObservable::from_spectrum(values, remixed).unwrap();
        prop_assert!(max_abs(&(a.matrix() - b.matrix())) <= 1e-10);

        let m = kraus_operator(&mut rng, dim);
        let (ea, eb) = (optimal_estimate(&m, &a).unwrap(), optimal_estimate(&m, &b).unwrap());
        prop_assert!((ea.estimate - eb.estimate).abs() <= 1e-10);
        prop_assert!((ea.error - eb.error).abs() <= 1e-10);
        let (da, db) = (averaged_disturbance(&m, &a).unwrap(), averaged_disturbance(&m, &b).unwrap());
        prop_assert!((da.disturbance - db.disturbance).abs() <= 1e-10);
        prop_assert_eq!(da.records.len(), db.records.len());
        for (x, y) in da.records.iter().zip(&db.records) {
            prop_assert!((x.weight - y.weight).abs() <= 1e-10);
            prop_assert!((x.disturbance - y.disturbance).abs() <= 1e-9);
        }
        let (pa, pb) = (
            conditional_input_distribution(&m, &a).unwrap(),
            conditional_input_distribution(&m, &b).unwrap(),
        );
        for ((va, qa), (vb, qb)) in pa.iter().zip(&pb) {
            prop_assert!((va - vb).abs() <= 1e-12 && (qa - qb).abs() <= 1e-10);
        }
    }

    #[test]
    fn conditional_distribution_sums_to_one(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = stream(seed, 0);
        let a = hermitian(&mut rng, dim).unwrap();
        let m = kraus_operator(&mut rng, dim);
        let total: f64 = conditional_input_distribution(&m, &a).unwrap().iter().map(|p| p.1).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn retrodiction_ignores_left_unitaries(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = stream(seed, 0);
        let m = kraus_operator(&mut rng, dim);
        let um = unitary(&mut rng, dim) * &m;
        let r1 = retrodictive_operator(&m).unwrap();
        let r2 = retrodictive_operator(&um).unwrap();
        prop_assert!(max_abs(&(r1.matrix() - r2.matrix())) <= 1e-10);
    }

    #[test]
    fn commuting_meter_does_not_disturb(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = stream(seed, 0);
        let b = hermitian(&mut rng, dim).unwrap();
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| {
            C64::new(rng.random_range(0.1..1.0), rng.random_range(-1.0..1.0))
        }));
        let v = b.eigenvectors();
        let m = v * d * v.adjoint();
        prop_assert!(commutator(&m, b.matrix()).unwrap().norm() <= 1e-10 * b.matrix().norm().max(1.0));
        prop_assert!(averaged_disturbance(&m, &b).unwrap().disturbance <= 1e-10);
    }

    #[test]
    fn joint_resolution_and_gap(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = stream(seed, 0);
        let m = kraus_operator(&mut rng, dim);
        let a = hermitian(&mut rng, dim).unwrap();
        let b = hermitian(&mut rng, dim).unwrap();
        prop_assert!(resolution_pair_check(&m, &a, &b).unwrap().slack >= -1e-10);
        let d = decomposition_check(&m, &a, &b).unwrap();
        prop_assert!(d.reconstruction_error <= 1e-10);
        prop_assert!(d.gap >= -1e-10);
        prop_assert!((d.gap - d.estimate_spread).abs() <= 1e-10);
    }

    #[test]
    fn complete_set_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..=6, outcomes in 1usize..=5) {
        let mut rng = stream(seed, 0);
        let set = complete_kraus_set(&mut rng, dim, outcomes).unwrap();
        let rho = density_matrix(&mut rng, dim);
        let total: f64 = set
            .outcomes()
            .iter()
            .map(|o| outcome_probability(&set, &rho, &o.label).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn mixture_chain(seed in any::<u64>(), k in 1usize..=10) {
        let mut rng = stream(seed, 0);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-6).collect();
        let total: f64 = raw.iter().sum();
        let comps: Vec<MixtureComponent> = raw
            .iter()
            .map(|w| {
                let var_a = rng.random::<f64>() * 10.0;
                let var_b = rng.random::<f64>() * 10.0;
                let bound = rng.random::<f64>() * (var_a * var_b).sqrt();
                MixtureComponent { weight: w / total, var_a, var_b, bound }
            })
            .collect();
        let r = mixture_bound_check(&comps).unwrap();
        prop_assert!(r.satisfied && r.chain_holds());
    }
}

/// The optimal estimate beats every other constant estimate.
#[test]
fn optimal_estimate_minimizes_error() {
    for op in 0..500u64 {
        let mut rng = stream(0x0e57, op);
        let dim = rng.random_range(2..=6);
        let m = kraus_operator(&mut rng, dim);
        let a = hermitian(&mut rng, dim).unwrap();
        let best = optimal_estimate(&m, &a).unwrap();
        let spread = a.eigenvalues()[dim - 1] - a.eigenvalues()[0];
        for _ in 0..20 {
            let guess = best.estimate + rng.random_range(-1.0..1.0) * spread;
            let err = quadratic_error(&m, &a, guess).unwrap();
            assert!(err >= best.error - 1e-12, "guess {guess} beats {}", best.estimate);
            assert!((err - best.error - (guess - best.estimate).powi(2)).abs() <= 1e-9);
        }
    }
}
