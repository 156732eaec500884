//! Outcome statistics of a Kraus set and the information a single outcome
//! carries about an unknown eigenstate input.
//!
//! All estimates assume a uniform prior over the eigenstates of the queried
//! observable. Under that prior the outcome `m` is summarized by the
//! retrodictive operator `R_m = M†M / tr{M†M}`: the optimal estimate of an
//! observable is its expectation value in `R_m` and the resolution is its
//! variance.

use serde::{Deserialize, Serialize};

use crate::error::{QmeterError, Result};
use crate::operators::{
    c, commutator, eigendecompose, hermiticity_deviation, max_abs, require_dim, require_square,
    trace_product, ComplexMatrix, HermitianObservable,
};

/// Default absolute tolerance for `‖Σ M†M − 1‖_max`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// `tr{M†M}` below this means the outcome never occurs.
pub const UNREACHABLE_THRESHOLD: f64 = 1e-14;

/// Variances in `[−VARIANCE_CLAMP, 0)` are reported as zero.
pub const VARIANCE_CLAMP: f64 = 1e-12;

/// Slack granted to the uncertainty checks.
pub const UNCERTAINTY_SLACK: f64 = 1e-10;

const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub operator: ComplexMatrix,
}

/// An ordered collection of measurement operators, one per outcome.
///
/// A set may be declared partial (`complete = false`) when only some
/// outcomes are being characterized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausSet {
    dim: usize,
    outcomes: Vec<Outcome>,
    complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl KrausSet {
    pub fn new(outcomes: Vec<Outcome>, complete: bool) -> Result<Self> {
        let first = outcomes
            .first()
            .ok_or_else(|| QmeterError::InvalidConfig("a Kraus set needs at least one outcome".into()))?;
        let dim = require_square(&first.operator)?;
        for o in &outcomes {
            require_dim(&o.operator, dim)?;
        }
        for (i, o) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|p| p.label == o.label) {
                return Err(QmeterError::InvalidConfig(format!("duplicate outcome label `{}`", o.label)));
            }
        }
        Ok(Self { dim, outcomes, complete })
    }

    /// Labels outcomes `0, 1, …` in order.
    pub fn from_operators(operators: Vec<ComplexMatrix>, complete: bool) -> Result<Self> {
        let outcomes = operators
            .into_iter()
            .enumerate()
            .map(|(k, operator)| Outcome { label: k.to_string(), operator })
            .collect();
        Self::new(outcomes, complete)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Whether the set was declared to resolve the identity.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn operator(&self, label: &str) -> Result<&ComplexMatrix> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .map(|o| &o.operator)
            .ok_or_else(|| QmeterError::UnknownOutcome(label.to_string()))
    }

    /// `Σ_m M_m†M_m`
    pub fn effect_sum(&self) -> ComplexMatrix {
        self.outcomes
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, o| acc + o.operator.adjoint() * &o.operator)
    }
}

pub fn validate_completeness(set: &KrausSet, tol: f64) -> CompletenessReport {
    let identity = ComplexMatrix::identity(set.dim(), set.dim());
    let max_deviation = max_abs(&(set.effect_sum() - identity));
    CompletenessReport { max_deviation, tolerance: tol, pass: max_deviation <= tol }
}

fn check_density_matrix(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    require_dim(rho, dim)?;
    let herm = hermiticity_deviation(rho);
    if herm > STATE_TOL {
        return Err(QmeterError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
        return Err(QmeterError::InvalidState(format!("trace {trace} is not 1")));
    }
    let min = eigendecompose(rho, STATE_TOL)?.eigenvalues()[0];
    if min < -STATE_TOL {
        return Err(QmeterError::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// `p(m) = tr{ρ M_m†M_m}`
pub fn outcome_probability(set: &KrausSet, rho: &ComplexMatrix, label: &str) -> Result<f64> {
    let m = set.operator(label)?;
    check_density_matrix(rho, set.dim())?;
    Ok(trace_product(rho, &(m.adjoint() * m)).re)
}

/// `M ρ M† / p(m)`
pub fn post_measurement_state(set: &KrausSet, rho: &ComplexMatrix, label: &str) -> Result<ComplexMatrix> {
    let p = outcome_probability(set, rho, label)?;
    if p <= UNREACHABLE_THRESHOLD {
        return Err(QmeterError::ZeroProbabilityOutcome(label.to_string()));
    }
    let m = set.operator(label)?;
    Ok((m * rho * m.adjoint()).unscale(p))
}

/// The normalized operator `M†M / tr{M†M}` used to retrodict input
/// properties from an outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrodictiveOperator {
    matrix: ComplexMatrix,
    source_outcome: Option<String>,
}

impl RetrodictiveOperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn source_outcome(&self) -> Option<&str> {
        self.source_outcome.as_deref()
    }

    pub fn with_source(mut self, label: impl Into<String>) -> Self {
        self.source_outcome = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr{op R}`
    pub fn expectation(&self, op: &ComplexMatrix) -> crate::C64 {
        trace_product(op, &self.matrix)
    }
}

/// `tr{M†M}`, failing when the outcome is unreachable.
pub(crate) fn effect_norm(m: &ComplexMatrix) -> Result<f64> {
    require_square(m)?;
    let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if norm < UNREACHABLE_THRESHOLD {
        return Err(QmeterError::UnreachableOutcome { norm });
    }
    Ok(norm)
}

pub fn retrodictive_operator(m: &ComplexMatrix) -> Result<RetrodictiveOperator> {
    let norm = effect_norm(m)?;
    let effect = m.adjoint() * m;
    let mut matrix = effect.unscale(norm);
    // exact Hermitian symmetry
    matrix = (&matrix + matrix.adjoint()).scale(0.5);
    Ok(RetrodictiveOperator { matrix, source_outcome: None })
}

/// Reports negligible negative variances as zero.
pub(crate) fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(QmeterError::InternalConsistency(format!("negative variance {v:e}")))
    }
}

fn check_observable(m: &ComplexMatrix, a: &HermitianObservable) -> Result<()> {
    require_dim(m, a.dim())
}

/// `p(A|m)` aggregated over eigenspaces, as `(eigenvalue, probability)`
/// pairs in ascending eigenvalue order.
pub fn conditional_input_distribution(m: &ComplexMatrix, a: &HermitianObservable) -> Result<Vec<(f64, f64)>> {
    check_observable(m, a)?;
    let r = retrodictive_operator(m)?;
    Ok(a.eigenspaces()
        .into_iter()
        .map(|(value, members)| {
            let p: f64 = members
                .iter()
                .map(|&k| {
                    let v = a.eigenvector(k);
                    v.dotc(&(r.matrix() * &v)).re
                })
                .sum();
            (value, p.max(0.0))
        })
        .collect())
}

/// Optimal estimate of an observable from one outcome and its mean squared
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub observable: Option<String>,
    pub estimate: f64,
    pub error: f64,
}

/// `tr{(a − shift)² R}` for Hermitian `a`.
pub(crate) fn central_moment(r: &ComplexMatrix, a: &ComplexMatrix, shift: f64) -> f64 {
    let n = a.nrows();
    let centered = a - ComplexMatrix::identity(n, n) * c(shift, 0.0);
    trace_product(&(&centered * &centered), r).re
}

/// `⟨v|(a − shift)²|v⟩ = ‖(a − shift)v‖²` for Hermitian `a`.
pub(crate) fn central_moment_vec(a: &ComplexMatrix, v: &crate::StateVector, shift: f64) -> f64 {
    (a * v - v * c(shift, 0.0)).norm_squared()
}

pub fn optimal_estimate(m: &ComplexMatrix, a: &HermitianObservable) -> Result<EstimateReport> {
    check_observable(m, a)?;
    let r = retrodictive_operator(m)?;
    let estimate = r.expectation(a.matrix()).re;
    let error = clamp_variance(central_moment(r.matrix(), a.matrix(), estimate))?;
    Ok(EstimateReport { observable: a.name().map(str::to_string), estimate, error })
}

/// Mean squared error `tr{(assigned − A)² R_m}` of an arbitrary estimate.
pub fn quadratic_error(m: &ComplexMatrix, a: &HermitianObservable, assigned: f64) -> Result<f64> {
    check_observable(m, a)?;
    let r = retrodictive_operator(m)?;
    Ok(central_moment(r.matrix(), a.matrix(), assigned))
}

/// `¼|tr{ρ [A, B]}|²` for any normalized state or retrodictive operator.
pub(crate) fn robertson_bound(r: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let comm = commutator(a, b)?;
    Ok(0.25 * trace_product(r, &comm).norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPairReport {
    pub resolution_a: f64,
    pub resolution_b: f64,
    pub product: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

/// Joint resolution limit `δA_m² δB_m² ≥ ¼|tr{R_m[A,B]}|²`.
pub fn resolution_pair_check(
    m: &ComplexMatrix,
    a: &HermitianObservable,
    b: &HermitianObservable,
) -> Result<ResolutionPairReport> {
    let ea = optimal_estimate(m, a)?;
    let eb = optimal_estimate(m, b)?;
    let r = retrodictive_operator(m)?;
    let bound = robertson_bound(r.matrix(), a.matrix(), b.matrix())?;
    let product = ea.error * eb.error;
    let slack = product - bound;
    Ok(ResolutionPairReport {
        resolution_a: ea.error,
        resolution_b: eb.error,
        product,
        bound,
        slack,
        satisfied: slack >= -UNCERTAINTY_SLACK,
    })
}
