//! Uncertainty relations survive statistical mixing.
//!
//! If every component of a mixture obeys `δA_i² δB_i² ≥ U_i²`, then the
//! averaged variances obey `(Σ p_i δA_i²)(Σ p_i δB_i²) ≥ (Σ p_i U_i)²`. The
//! proof runs through two intermediate quantities, both reported here so
//! each link can be checked on its own.

use serde::{Deserialize, Serialize};

use crate::error::{QmeterError, Result};

/// Tolerance on the mixture inequalities and on each component's own
/// inequality.
pub const MIXTURE_TOL: f64 = 1e-12;

const WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub var_a: f64,
    pub var_b: f64,
    /// Lower bound `U_i` on `δA_i δB_i`.
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    /// `(Σ p δA²)(Σ p δB²)`
    pub lhs: f64,
    /// `Σ_ij p_i p_j ½(δA_i² δB_j² + δA_j² δB_i²)`, equal to `lhs`.
    pub symmetrized: f64,
    /// `(Σ p δA δB)²`
    pub geometric: f64,
    /// `(Σ p U)²`
    pub rhs: f64,
    pub satisfied: bool,
}

impl MixtureReport {
    /// Every link of `lhs = symmetrized ≥ geometric ≥ rhs` holds to
    /// `MIXTURE_TOL`.
    pub fn chain_holds(&self) -> bool {
        let scale = 1.0_f64.max(self.lhs.abs());
        (self.lhs - self.symmetrized).abs() <= MIXTURE_TOL * scale
            && self.symmetrized >= self.geometric - MIXTURE_TOL * scale
            && self.geometric >= self.rhs - MIXTURE_TOL * scale
    }
}

fn validate(components: &[MixtureComponent]) -> Result<()> {
    if components.is_empty() {
        return Err(QmeterError::InvalidWeights("empty mixture".into()));
    }
    let mut total = 0.0;
    for (i, c) in components.iter().enumerate() {
        if !(0.0..=1.0).contains(&c.weight) {
            return Err(QmeterError::InvalidWeights(format!("weight {i} = {} outside [0, 1]", c.weight)));
        }
        if c.var_a < 0.0 || c.var_b < 0.0 || c.bound < 0.0 {
            return Err(QmeterError::InvalidWeights(format!("component {i} has a negative entry")));
        }
        if c.var_a * c.var_b < c.bound * c.bound - MIXTURE_TOL {
            return Err(QmeterError::PreconditionViolated { index: i });
        }
        total += c.weight;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(QmeterError::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

pub fn mixture_bound_check(components: &[MixtureComponent]) -> Result<MixtureReport> {
    validate(components)?;
    let mean_a: f64 = components.iter().map(|c| c.weight * c.var_a).sum();
    let mean_b: f64 = components.iter().map(|c| c.weight * c.var_b).sum();
    let lhs = mean_a * mean_b;

    let mut symmetrized = 0.0;
    for ci in components {
        for cj in components {
            symmetrized += ci.weight * cj.weight * 0.5 * (ci.var_a * cj.var_b + cj.var_a * ci.var_b);
        }
    }
    let geometric = components.iter().map(|c| c.weight * (c.var_a * c.var_b).sqrt()).sum::<f64>().powi(2);
    let rhs = components.iter().map(|c| c.weight * c.bound).sum::<f64>().powi(2);

    Ok(MixtureReport { lhs, symmetrized, geometric, rhs, satisfied: lhs >= rhs - MIXTURE_TOL })
}
