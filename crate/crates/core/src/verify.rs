//! Randomized verification of the uncertainty relations and structural
//! identities.
//!
//! Each case draws a random measurement operator of random rank and two
//! random Hermitian observables. A few fixed anchor cases, some of which
//! saturate their bounds, always run first so that a mis-scaled bound is
//! caught even by a one-sample run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backaction::{
    conditional_disturbance, decomposition_check, disturbance_double_sum, disturbance_trace_form,
    joint_retrodictions, resolution_disturbance_check,
};
use crate::error::Result;
use crate::io::MatrixLiteral;
use crate::measurement::{resolution_pair_check, UNCERTAINTY_SLACK};
use crate::operators::{
    c, ket, ket_bra, pauli_x, pauli_z, BosonicSpace, ComplexMatrix, HermitianObservable, StateVector,
};
use crate::random;

/// Largest absolute error accepted for an exact identity.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `δA_m² δB_m² ≥ ¼|tr{R_m[A,B]}|²`
    JointResolution,
    /// `δA_mf² δB_mf² ≥ ¼|⟨r_mf|[A,B]|r_mf⟩|²`
    SequenceResolution,
    /// `δA_mf² ΔB_mf² ≥ ¼|⟨r_mf|[A,B]|r_mf⟩|²`
    SequenceDisturbance,
    /// `(Σ w δA_mf²)(Σ w ΔB_mf²) ≥ ¼(Σ w |⟨r_mf|[A,B]|r_mf⟩|)²`
    MixtureAverage,
    /// `¼(Σ w |⟨r_mf|[A,B]|r_mf⟩|)² ≥ ¼|tr{R_m[A,B]}|²`
    TriangleChain,
    /// `δA_m² ΔB_m² ≥ ¼|tr{R_m[A,B]}|²`
    ResolutionDisturbance,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::JointResolution,
        Relation::SequenceResolution,
        Relation::SequenceDisturbance,
        Relation::MixtureAverage,
        Relation::TriangleChain,
        Relation::ResolutionDisturbance,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `R_m = Σ_f w |r_mf⟩⟨r_mf|`
    RetrodictionDecomposition,
    /// eigenbasis double sum of `ΔB_m²` against its trace form
    DisturbanceTraceForm,
    /// `ΔB_mf² = δB_mf² + (B_f − B_mf)²`
    SystematicSplit,
    /// `ΔB_m² = Σ_f w ΔB_mf²`
    DisturbanceAverage,
    /// `δA_m² − Σ_f w δA_mf² = Σ_f w (A_mf − A_m)²`
    ResolutionGap,
    /// `Σ_f w_m(B_f) = 1`
    WeightNormalization,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::RetrodictionDecomposition,
        Identity::DisturbanceTraceForm,
        Identity::SystematicSplit,
        Identity::DisturbanceAverage,
        Identity::ResolutionGap,
        Identity::WeightNormalization,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Multiplies every bound before the slack is taken. Anything other than
    /// `1.0` is a negative control.
    pub bound_scale: f64,
    /// A relation fails when its slack drops below `−slack_tolerance`.
    pub slack_tolerance: f64,
    pub identity_tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dims: (2..=6).collect(),
            samples: 1000,
            seed: 0x5eed,
            bound_scale: 1.0,
            slack_tolerance: UNCERTAINTY_SLACK,
            identity_tolerance: IDENTITY_TOL,
        }
    }
}

/// One evaluated case, serialized when it violates a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub dim: usize,
    /// `None` for anchor cases.
    pub sample: Option<usize>,
    pub kraus: MatrixLiteral,
    pub a: MatrixLiteral,
    pub b: MatrixLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSummary {
    pub relation: Relation,
    pub checks: usize,
    pub min_slack: f64,
    pub violations: usize,
    pub first_violation: Option<CaseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub identity: Identity,
    pub checks: usize,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub cases: usize,
    pub relations: Vec<RelationSummary>,
    pub identities: Vec<IdentitySummary>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn relation(&self, r: Relation) -> &RelationSummary {
        self.relations.iter().find(|s| s.relation == r).expect("all relations are reported")
    }

    pub fn identity(&self, i: Identity) -> &IdentitySummary {
        self.identities.iter().find(|s| s.identity == i).expect("all identities are reported")
    }
}

struct Case {
    dim: usize,
    sample: Option<usize>,
    m: ComplexMatrix,
    a: HermitianObservable,
    b: HermitianObservable,
}

impl Case {
    fn record(&self) -> CaseRecord {
        CaseRecord {
            dim: self.dim,
            sample: self.sample,
            kraus: (&self.m).into(),
            a: self.a.matrix().into(),
            b: self.b.matrix().into(),
        }
    }
}

/// Per-case outcome: slacks for each relation (several for per-sequence
/// relations) and errors for each identity.
#[derive(Default)]
struct CaseResult {
    slacks: Vec<(Relation, f64)>,
    errors: Vec<(Identity, f64)>,
}

fn anchor_cases() -> Result<Vec<Case>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let y_plus = StateVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
    let sz = HermitianObservable::new(pauli_z())?;
    let sx = HermitianObservable::new(pauli_x())?;
    let space = BosonicSpace::new(4)?;
    let n = HermitianObservable::new(space.number())?;
    let x = HermitianObservable::new(space.quadrature_x())?;
    Ok(vec![
        // saturates the joint-resolution and sequence relations
        Case { dim: 2, sample: None, m: ket_bra(&ket(2, 0), &y_plus), a: sz.clone(), b: sx.clone() },
        Case {
            dim: 2,
            sample: None,
            m: ComplexMatrix::identity(2, 2) * c(s, 0.0),
            a: sz.clone(),
            b: sx.clone(),
        },
        Case { dim: 2, sample: None, m: ket_bra(&ket(2, 0), &ket(2, 0)), a: sz, b: sx },
        Case { dim: 4, sample: None, m: ket_bra(&ket(4, 0), &ket(4, 1)), a: n, b: x },
    ])
}

fn random_case(seed: u64, dim: usize, sample: usize) -> Result<Case> {
    let mut rng = random::stream(seed, ((dim as u64) << 32) | sample as u64);
    let m = random::kraus_operator(&mut rng, dim);
    let a = random::hermitian(&mut rng, dim)?;
    let b = random::hermitian(&mut rng, dim)?;
    Ok(Case { dim, sample: Some(sample), m, a, b })
}

fn evaluate(case: &Case, scale: f64) -> Result<CaseResult> {
    let (m, a, b) = (&case.m, &case.a, &case.b);
    let mut out = CaseResult::default();

    let joint = resolution_pair_check(m, a, b)?;
    out.slacks.push((Relation::JointResolution, joint.product - scale * joint.bound));

    let rd = resolution_disturbance_check(m, a, b)?;
    for s in &rd.sequences {
        out.slacks.push((Relation::SequenceResolution, s.resolution_a * s.resolution_b - scale * s.bound));
        out.slacks.push((Relation::SequenceDisturbance, s.resolution_a * s.disturbance_b - scale * s.bound));
    }
    out.slacks.push((Relation::MixtureAverage, rd.mixture.lhs - scale * rd.mixture.rhs));
    out.slacks.push((Relation::TriangleChain, rd.mixture_bound - scale * rd.bound));
    out.slacks.push((Relation::ResolutionDisturbance, rd.product - scale * rd.bound));

    let dec = decomposition_check(m, a, b)?;
    out.errors.push((Identity::RetrodictionDecomposition, dec.reconstruction_error));
    out.errors.push((Identity::ResolutionGap, (dec.gap - dec.estimate_spread).abs()));
    out.errors.push((Identity::WeightNormalization, (dec.weight_sum - 1.0).abs()));

    let double_sum = disturbance_double_sum(m, b)?;
    let trace_form = disturbance_trace_form(m, b)?;
    out.errors.push((Identity::DisturbanceTraceForm, (double_sum - trace_form).abs()));

    let mut averaged = 0.0;
    for j in joint_retrodictions(m, b)? {
        let cd = conditional_disturbance(m, b, j.eigen_index)?;
        out.errors.push((Identity::SystematicSplit, (cd.disturbance - cd.resolution - cd.systematic).abs()));
        averaged += cd.weight * cd.disturbance;
    }
    out.errors.push((Identity::DisturbanceAverage, (averaged - double_sum).abs()));
    Ok(out)
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut cases = anchor_cases()?;
    for &dim in &config.dims {
        for sample in 0..config.samples {
            cases.push(random_case(config.seed, dim, sample)?);
        }
    }

    let results: Vec<CaseResult> =
        cases.par_iter().map(|c| evaluate(c, config.bound_scale)).collect::<Result<_>>()?;

    let mut relations: Vec<RelationSummary> = Relation::ALL
        .iter()
        .map(|&relation| RelationSummary {
            relation,
            checks: 0,
            min_slack: f64::INFINITY,
            violations: 0,
            first_violation: None,
        })
        .collect();
    let mut identities: Vec<IdentitySummary> = Identity::ALL
        .iter()
        .map(|&identity| IdentitySummary { identity, checks: 0, max_error: 0.0, pass: true })
        .collect();

    for (case, result) in cases.iter().zip(&results) {
        for &(rel, slack) in &result.slacks {
            let s = relations.iter_mut().find(|s| s.relation == rel).expect("known relation");
            s.checks += 1;
            s.min_slack = s.min_slack.min(slack);
            if slack < -config.slack_tolerance {
                s.violations += 1;
                if s.first_violation.is_none() {
                    s.first_violation = Some(case.record());
                }
            }
        }
        for &(id, err) in &result.errors {
            let s = identities.iter_mut().find(|s| s.identity == id).expect("known identity");
            s.checks += 1;
            s.max_error = s.max_error.max(err);
        }
    }
    for s in &mut identities {
        s.pass = s.max_error <= config.identity_tolerance;
    }
    let pass = relations.iter().all(|r| r.violations == 0) && identities.iter().all(|i| i.pass);

    Ok(SuiteReport { config: config.clone(), cases: cases.len(), relations, identities, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_is_deterministic() {
        let cfg = SuiteConfig { dims: vec![3], samples: 1, seed: 11, ..SuiteConfig::default() };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.pass);
        assert_eq!(a.cases, 5);
    }

    #[test]
    fn inflated_bound_is_caught() {
        let cfg =
            SuiteConfig { dims: vec![2], samples: 1, seed: 11, bound_scale: 1.01, ..SuiteConfig::default() };
        let r = run_suite(&cfg).unwrap();
        assert!(!r.pass);
        let joint = r.relation(Relation::JointResolution);
        assert!(joint.violations > 0);
        assert!(joint.first_violation.as_ref().unwrap().sample.is_none());
    }
}
