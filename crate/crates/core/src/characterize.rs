//! Batch characterization of a Kraus set against a list of observables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backaction::{averaged_disturbance, resolution_disturbance_check};
use crate::error::{QmeterError, Result};
use crate::measurement::{
    optimal_estimate, resolution_pair_check, validate_completeness, CompletenessReport, KrausSet,
    COMPLETENESS_TOL,
};
use crate::operators::HermitianObservable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Unreachable,
}

/// Estimate, resolution and disturbance of one observable for one outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub outcome: String,
    pub observable: String,
    pub status: RowStatus,
    pub estimate: Option<f64>,
    pub resolution: Option<f64>,
    pub disturbance: Option<f64>,
}

/// Both uncertainty relations for an ordered pair `(A, B)`: joint
/// resolution `δA² δB²` and resolution-disturbance `δA² ΔB²`, each against
/// `¼|tr{R_m[A,B]}|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub outcome: String,
    pub a: String,
    pub b: String,
    pub status: RowStatus,
    pub bound: Option<f64>,
    pub resolution_product: Option<f64>,
    pub resolution_slack: Option<f64>,
    pub disturbance_product: Option<f64>,
    pub disturbance_slack: Option<f64>,
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub dim: usize,
    pub declared_complete: bool,
    pub completeness: CompletenessReport,
    pub rows: Vec<ObservableRow>,
    pub pairs: Vec<PairRow>,
}

fn label(o: &HermitianObservable, k: usize) -> String {
    o.name().map(str::to_string).unwrap_or_else(|| format!("obs{k}"))
}

fn observable_row(
    outcome: &str,
    m: &crate::ComplexMatrix,
    o: &HermitianObservable,
    k: usize,
) -> Result<ObservableRow> {
    let mut row = ObservableRow {
        outcome: outcome.to_string(),
        observable: label(o, k),
        status: RowStatus::Ok,
        estimate: None,
        resolution: None,
        disturbance: None,
    };
    match optimal_estimate(m, o) {
        Ok(e) => {
            row.estimate = Some(e.estimate);
            row.resolution = Some(e.error);
            row.disturbance = Some(averaged_disturbance(m, o)?.disturbance);
        }
        Err(QmeterError::UnreachableOutcome { .. }) => row.status = RowStatus::Unreachable,
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn pair_row(
    outcome: &str,
    m: &crate::ComplexMatrix,
    (a, ka): (&HermitianObservable, usize),
    (b, kb): (&HermitianObservable, usize),
) -> Result<PairRow> {
    let mut row = PairRow {
        outcome: outcome.to_string(),
        a: label(a, ka),
        b: label(b, kb),
        status: RowStatus::Ok,
        bound: None,
        resolution_product: None,
        resolution_slack: None,
        disturbance_product: None,
        disturbance_slack: None,
        satisfied: None,
    };
    let joint = match resolution_pair_check(m, a, b) {
        Ok(r) => r,
        Err(QmeterError::UnreachableOutcome { .. }) => {
            row.status = RowStatus::Unreachable;
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let rd = resolution_disturbance_check(m, a, b)?;
    row.bound = Some(joint.bound);
    row.resolution_product = Some(joint.product);
    row.resolution_slack = Some(joint.slack);
    row.disturbance_product = Some(rd.product);
    row.disturbance_slack = Some(rd.slack);
    row.satisfied = Some(joint.satisfied && rd.satisfied);
    Ok(row)
}

/// Characterizes every outcome (or only `only_outcome`) against each
/// observable, and each index pair in `pairs`. Outcomes are evaluated in
/// parallel; rows keep the Kraus set's outcome order.
pub fn characterize(
    set: &KrausSet,
    observables: &[HermitianObservable],
    pairs: &[(usize, usize)],
    only_outcome: Option<&str>,
) -> Result<CharacterizationReport> {
    for o in observables {
        if o.dim() != set.dim() {
            return Err(QmeterError::DimensionMismatch {
                expected: format!("observables of dimension {}", set.dim()),
                found: o.dim().to_string(),
            });
        }
    }
    for &(i, j) in pairs {
        if i >= observables.len() || j >= observables.len() {
            return Err(QmeterError::UnknownObservable(format!("pair index ({i}, {j})")));
        }
    }
    if let Some(label) = only_outcome {
        set.operator(label)?;
    }
    let selected: Vec<_> =
        set.outcomes().iter().filter(|o| only_outcome.is_none_or(|l| l == o.label)).collect();

    let per_outcome: Vec<(Vec<ObservableRow>, Vec<PairRow>)> = selected
        .par_iter()
        .map(|o| {
            let rows = observables
                .iter()
                .enumerate()
                .map(|(k, obs)| observable_row(&o.label, &o.operator, obs, k))
                .collect::<Result<Vec<_>>>()?;
            let prs = pairs
                .iter()
                .map(|&(i, j)| pair_row(&o.label, &o.operator, (&observables[i], i), (&observables[j], j)))
                .collect::<Result<Vec<_>>>()?;
            Ok((rows, prs))
        })
        .collect::<Result<_>>()?;

    let (rows, prs): (Vec<_>, Vec<_>) = per_outcome.into_iter().unzip();
    Ok(CharacterizationReport {
        dim: set.dim(),
        declared_complete: set.is_complete(),
        completeness: validate_completeness(set, COMPLETENESS_TOL),
        rows: rows.into_iter().flatten().collect(),
        pairs: prs.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::observable_preset;
    use crate::operators::{ket, ket_bra, ComplexMatrix};

    #[test]
    fn unreachable_outcome_is_a_row_status() {
        let set =
            KrausSet::from_operators(vec![ComplexMatrix::identity(2, 2), ComplexMatrix::zeros(2, 2)], true)
                .unwrap();
        let obs = vec![observable_preset("sz", 2).unwrap(), observable_preset("sx", 2).unwrap()];
        let r = characterize(&set, &obs, &[(0, 1)], None).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows[0].status, RowStatus::Ok);
        assert_eq!(r.rows[2].status, RowStatus::Unreachable);
        assert_eq!(r.pairs[1].status, RowStatus::Unreachable);
        assert!(r.completeness.pass);
    }

    #[test]
    fn single_outcome_filter() {
        let set = KrausSet::from_operators(
            vec![ket_bra(&ket(2, 0), &ket(2, 0)), ket_bra(&ket(2, 1), &ket(2, 1))],
            true,
        )
        .unwrap();
        let obs = vec![observable_preset("sx", 2).unwrap()];
        let r = characterize(&set, &obs, &[], Some("1")).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!((r.rows[0].disturbance.unwrap() - 2.0).abs() < 1e-14);
        assert!(characterize(&set, &obs, &[], Some("7")).is_err());
        assert!(characterize(&set, &obs, &[(0, 3)], None).is_err());
    }
}
