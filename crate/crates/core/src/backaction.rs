//! Disturbance of an observable `B` by a measurement outcome `M`.
//!
//! The outcome is followed by a precise projective measurement of `B` with
//! result `B_f`. The pair `(m, B_f)` retrodicts the pure state
//! `|r_mf⟩ = M†|B_f⟩ / ‖M†|B_f⟩‖`, and `R_m` decomposes into these states with
//! weights `w_m(B_f) = ⟨B_f|MM†|B_f⟩ / tr{M†M}`. The disturbance `ΔB_m²` is
//! the mean of `(B_f − B_i)²` over uniformly distributed `B` eigenstate
//! inputs `B_i` and the resulting final values `B_f`.

use serde::{Deserialize, Serialize};

use crate::error::{QmeterError, Result};
use crate::measurement::{
    central_moment_vec, clamp_variance, effect_norm, optimal_estimate, retrodictive_operator,
    robertson_bound, UNCERTAINTY_SLACK, UNREACHABLE_THRESHOLD,
};
use crate::mixture::{mixture_bound_check, MixtureComponent, MixtureReport};
use crate::operators::{
    commutator, expectation, ket_bra, max_abs, require_dim, trace_product, ComplexMatrix,
    HermitianObservable, StateVector,
};

/// Agreement required between the eigenbasis double sum and the closed
/// trace form of `ΔB_m²` (relative to `max(1, |ΔB_m²|)`).
pub const CROSS_CHECK_TOL: f64 = 1e-10;

/// Retrodicted state for the sequence "outcome `m`, then `B_f`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRetrodiction {
    /// Index of the eigenvector `|B_f⟩` in the observable's ascending order.
    pub eigen_index: usize,
    pub final_value: f64,
    pub state: StateVector,
    pub weight: f64,
}

pub fn joint_retrodictive_state(
    m: &ComplexMatrix,
    b: &HermitianObservable,
    f: usize,
) -> Result<JointRetrodiction> {
    require_dim(m, b.dim())?;
    if f >= b.dim() {
        return Err(QmeterError::DimensionMismatch {
            expected: format!("eigen index < {}", b.dim()),
            found: f.to_string(),
        });
    }
    let norm = effect_norm(m)?;
    joint_state_unchecked(m, b, f, norm)
}

fn joint_state_unchecked(
    m: &ComplexMatrix,
    b: &HermitianObservable,
    f: usize,
    norm: f64,
) -> Result<JointRetrodiction> {
    let v = m.adjoint() * b.eigenvector(f);
    let raw = v.norm_squared();
    if raw < UNREACHABLE_THRESHOLD {
        return Err(QmeterError::UnreachableSequence { index: f, weight: raw });
    }
    Ok(JointRetrodiction {
        eigen_index: f,
        final_value: b.eigenvalues()[f],
        state: v.unscale(raw.sqrt()),
        weight: raw / norm,
    })
}

/// All reachable joint retrodictions, ascending in `B_f`.
pub fn joint_retrodictions(m: &ComplexMatrix, b: &HermitianObservable) -> Result<Vec<JointRetrodiction>> {
    require_dim(m, b.dim())?;
    let norm = effect_norm(m)?;
    let mut out = Vec::with_capacity(b.dim());
    for f in 0..b.dim() {
        match joint_state_unchecked(m, b, f, norm) {
            Ok(r) => out.push(r),
            Err(QmeterError::UnreachableSequence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEstimates {
    pub estimate_a: f64,
    pub estimate_b: f64,
    pub resolution_a: f64,
    pub resolution_b: f64,
}

fn moments(op: &ComplexMatrix, v: &StateVector) -> Result<(f64, f64)> {
    let mean = expectation(op, v).re;
    let var = clamp_variance(central_moment_vec(op, v, mean))?;
    Ok((mean, var))
}

pub fn joint_estimates(
    r: &JointRetrodiction,
    a: &HermitianObservable,
    b: &HermitianObservable,
) -> Result<JointEstimates> {
    require_dim(a.matrix(), r.state.len())?;
    require_dim(b.matrix(), r.state.len())?;
    let (estimate_a, resolution_a) = moments(a.matrix(), &r.state)?;
    let (estimate_b, resolution_b) = moments(b.matrix(), &r.state)?;
    Ok(JointEstimates { estimate_a, estimate_b, resolution_a, resolution_b })
}

/// `ΔB_mf² = δB_mf² + (B_f − B_mf)²` for one final outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDisturbance {
    pub final_value: f64,
    pub weight: f64,
    /// `B_mf`
    pub estimate: f64,
    /// `δB_mf²`
    pub resolution: f64,
    /// `(B_f − B_mf)²`
    pub systematic: f64,
    /// `ΔB_mf²`, evaluated directly as `⟨r|(B_f − B)²|r⟩`.
    pub disturbance: f64,
}

fn conditional_from(r: &JointRetrodiction, b: &HermitianObservable) -> Result<ConditionalDisturbance> {
    let (estimate, resolution) = moments(b.matrix(), &r.state)?;
    let disturbance = clamp_variance(central_moment_vec(b.matrix(), &r.state, r.final_value))?;
    Ok(ConditionalDisturbance {
        final_value: r.final_value,
        weight: r.weight,
        estimate,
        resolution,
        systematic: (r.final_value - estimate).powi(2),
        disturbance,
    })
}

pub fn conditional_disturbance(
    m: &ComplexMatrix,
    b: &HermitianObservable,
    f: usize,
) -> Result<ConditionalDisturbance> {
    let r = joint_retrodictive_state(m, b, f)?;
    conditional_from(&r, b)
}

/// One row per distinct final eigenvalue with nonzero weight. Rows of a
/// degenerate eigenvalue merge its eigenvectors' retrodicted states into
/// their weighted mixture, so rows do not depend on the eigenbasis chosen
/// inside the eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport {
    pub observable: Option<String>,
    /// `ΔB_m²` from the eigenbasis double sum.
    pub disturbance: f64,
    /// `ΔB_m²` from the closed trace form.
    pub trace_form: f64,
    pub records: Vec<ConditionalDisturbance>,
}

impl DisturbanceReport {
    /// `Σ_f w_m(B_f) ΔB_mf²`
    pub fn weighted_record_sum(&self) -> f64 {
        self.records.iter().map(|r| r.weight * r.disturbance).sum()
    }
}

/// `Σ_{i,f} |⟨B_f|M|B_i⟩|² (B_f − B_i)² / tr{M†M}`
pub fn disturbance_double_sum(m: &ComplexMatrix, b: &HermitianObservable) -> Result<f64> {
    require_dim(m, b.dim())?;
    let norm = effect_norm(m)?;
    let v = b.eigenvectors();
    let t = v.adjoint() * m * v;
    let lambda = b.eigenvalues();
    let mut sum = 0.0;
    for f in 0..b.dim() {
        for i in 0..b.dim() {
            sum += t[(f, i)].norm_sqr() * (lambda[f] - lambda[i]).powi(2);
        }
    }
    Ok(sum / norm)
}

/// `(tr{M†B²M} + tr{B²M†M} − 2 tr{M†BMB}) / tr{M†M}`
pub fn disturbance_trace_form(m: &ComplexMatrix, b: &HermitianObservable) -> Result<f64> {
    require_dim(m, b.dim())?;
    let norm = effect_norm(m)?;
    let bm = b.matrix();
    let b2 = bm * bm;
    let md = m.adjoint();
    let t1 = trace_product(&(&md * &b2), m);
    let t2 = trace_product(&b2, &(&md * m));
    let t3 = trace_product(&(&md * bm), &(m * bm));
    Ok((t1 + t2 - t3 * 2.0).re / norm)
}

pub fn averaged_disturbance(m: &ComplexMatrix, b: &HermitianObservable) -> Result<DisturbanceReport> {
    let disturbance = clamp_variance(disturbance_double_sum(m, b)?)?;
    let trace_form = disturbance_trace_form(m, b)?;
    if (disturbance - trace_form).abs() > CROSS_CHECK_TOL * disturbance.abs().max(1.0) {
        return Err(QmeterError::InternalConsistency(format!(
            "disturbance double sum {disturbance:e} disagrees with trace form {trace_form:e}"
        )));
    }

    let joints = joint_retrodictions(m, b)?;
    let mut records = Vec::new();
    for (value, members) in b.eigenspaces() {
        let group: Vec<ConditionalDisturbance> = joints
            .iter()
            .filter(|r| members.contains(&r.eigen_index))
            .map(|r| conditional_from(r, b))
            .collect::<Result<_>>()?;
        let weight: f64 = group.iter().map(|g| g.weight).sum();
        if group.is_empty() || weight <= 0.0 {
            continue;
        }
        let estimate = group.iter().map(|g| g.weight * g.estimate).sum::<f64>() / weight;
        let resolution =
            group.iter().map(|g| g.weight * (g.resolution + (g.estimate - estimate).powi(2))).sum::<f64>()
                / weight;
        let disturbance = group.iter().map(|g| g.weight * g.disturbance).sum::<f64>() / weight;
        records.push(ConditionalDisturbance {
            final_value: value,
            weight,
            estimate,
            resolution,
            systematic: (value - estimate).powi(2),
            disturbance,
        });
    }

    Ok(DisturbanceReport { observable: b.name().map(str::to_string), disturbance, trace_form, records })
}

/// How `R_m` and `δA_m²` split over the final outcomes of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `‖R_m − Σ_f w |r_mf⟩⟨r_mf|‖_max`
    pub reconstruction_error: f64,
    pub weight_sum: f64,
    /// `δA_m²`
    pub resolution: f64,
    /// `Σ_f w δA_mf²`
    pub averaged_joint_resolution: f64,
    /// `δA_m² − Σ_f w δA_mf²`
    pub gap: f64,
    /// `Σ_f w (A_mf − A_m)²`; equals `gap`.
    pub estimate_spread: f64,
}

pub fn decomposition_check(
    m: &ComplexMatrix,
    a: &HermitianObservable,
    b: &HermitianObservable,
) -> Result<DecompositionReport> {
    require_dim(a.matrix(), b.dim())?;
    let r = retrodictive_operator(m)?;
    let est = optimal_estimate(m, a)?;
    let joints = joint_retrodictions(m, b)?;

    let mut rebuilt = ComplexMatrix::zeros(b.dim(), b.dim());
    let mut weight_sum = 0.0;
    let mut averaged_joint_resolution = 0.0;
    let mut estimate_spread = 0.0;
    for j in &joints {
        rebuilt += ket_bra(&j.state, &j.state) * crate::C64::new(j.weight, 0.0);
        weight_sum += j.weight;
        let e = joint_estimates(j, a, b)?;
        averaged_joint_resolution += j.weight * e.resolution_a;
        estimate_spread += j.weight * (e.estimate_a - est.estimate).powi(2);
    }

    Ok(DecompositionReport {
        reconstruction_error: max_abs(&(rebuilt - r.matrix())),
        weight_sum,
        resolution: est.error,
        averaged_joint_resolution,
        gap: est.error - averaged_joint_resolution,
        estimate_spread,
    })
}

/// Uncertainty relations for a single sequence `(m, B_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceUncertaintyReport {
    pub final_value: f64,
    pub weight: f64,
    /// `δA_mf²`
    pub resolution_a: f64,
    /// `δB_mf²`
    pub resolution_b: f64,
    /// `ΔB_mf²`
    pub disturbance_b: f64,
    /// `¼|⟨r_mf|[A,B]|r_mf⟩|²`
    pub bound: f64,
    /// `δA_mf² δB_mf² − bound`
    pub resolution_slack: f64,
    /// `δA_mf² ΔB_mf² − bound`
    pub disturbance_slack: f64,
    pub satisfied: bool,
}

fn sequence_report(
    j: &JointRetrodiction,
    a: &HermitianObservable,
    b: &HermitianObservable,
    comm: &ComplexMatrix,
) -> Result<SequenceUncertaintyReport> {
    let e = joint_estimates(j, a, b)?;
    let cond = conditional_from(j, b)?;
    let bound = 0.25 * expectation(comm, &j.state).norm_sqr();
    let resolution_slack = e.resolution_a * e.resolution_b - bound;
    let disturbance_slack = e.resolution_a * cond.disturbance - bound;
    Ok(SequenceUncertaintyReport {
        final_value: j.final_value,
        weight: j.weight,
        resolution_a: e.resolution_a,
        resolution_b: e.resolution_b,
        disturbance_b: cond.disturbance,
        bound,
        resolution_slack,
        disturbance_slack,
        satisfied: resolution_slack >= -UNCERTAINTY_SLACK && disturbance_slack >= -UNCERTAINTY_SLACK,
    })
}

pub fn sequence_uncertainty_check(
    m: &ComplexMatrix,
    a: &HermitianObservable,
    b: &HermitianObservable,
    f: usize,
) -> Result<SequenceUncertaintyReport> {
    let comm = commutator(a.matrix(), b.matrix())?;
    let j = joint_retrodictive_state(m, b, f)?;
    sequence_report(&j, a, b, &comm)
}

/// `δA_m² ΔB_m² ≥ ¼|tr{R_m[A,B]}|²` together with the per-sequence mixture
/// bound it is derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionDisturbanceReport {
    /// `δA_m²`
    pub resolution_a: f64,
    /// `ΔB_m²`
    pub disturbance_b: f64,
    pub product: f64,
    /// `¼|tr{R_m[A,B]}|²`
    pub bound: f64,
    pub slack: f64,
    /// `¼(Σ_f w |⟨r_mf|[A,B]|r_mf⟩|)²`
    pub mixture_bound: f64,
    /// `mixture_bound − bound`, never negative.
    pub chain_slack: f64,
    /// Averaging step over final outcomes, with `δA_mf²`, `ΔB_mf²` and
    /// `U_f = ½|⟨r_mf|[A,B]|r_mf⟩|` as components.
    pub mixture: MixtureReport,
    pub sequences: Vec<SequenceUncertaintyReport>,
    pub satisfied: bool,
}

pub fn resolution_disturbance_check(
    m: &ComplexMatrix,
    a: &HermitianObservable,
    b: &HermitianObservable,
) -> Result<ResolutionDisturbanceReport> {
    require_dim(a.matrix(), b.dim())?;
    let comm = commutator(a.matrix(), b.matrix())?;
    let r = retrodictive_operator(m)?;
    let resolution_a = optimal_estimate(m, a)?.error;
    let disturbance_b = averaged_disturbance(m, b)?.disturbance;
    let bound = robertson_bound(r.matrix(), a.matrix(), b.matrix())?;

    let joints = joint_retrodictions(m, b)?;
    let sequences: Vec<SequenceUncertaintyReport> =
        joints.iter().map(|j| sequence_report(j, a, b, &comm)).collect::<Result<_>>()?;
    let total: f64 = sequences.iter().map(|s| s.weight).sum();
    let components: Vec<MixtureComponent> = sequences
        .iter()
        .map(|s| MixtureComponent {
            weight: s.weight / total,
            var_a: s.resolution_a,
            var_b: s.disturbance_b,
            bound: s.bound.sqrt(),
        })
        .collect();
    let mixture = mixture_bound_check(&components)?;
    let mixture_bound = mixture.rhs;

    let product = resolution_a * disturbance_b;
    let slack = product - bound;
    Ok(ResolutionDisturbanceReport {
        resolution_a,
        disturbance_b,
        product,
        bound,
        slack,
        mixture_bound,
        chain_slack: mixture_bound - bound,
        mixture,
        sequences,
        satisfied: slack >= -UNCERTAINTY_SLACK,
    })
}
