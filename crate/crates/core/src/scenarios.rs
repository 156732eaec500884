//! Preset measurements and the intercept-resend Monte Carlo.
//!
//! All analytic numbers come from [`crate::measurement`] and
//! [`crate::backaction`]; nothing here re-derives a resolution or a
//! disturbance on its own.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backaction::averaged_disturbance;
use crate::characterize::{characterize, CharacterizationReport, RowStatus};
use crate::error::{QmeterError, Result};
use crate::io::{cell, vector_from_literal, KrausFile, NamedObservable, ObservableSpec, Table};
use crate::measurement::{
    optimal_estimate, validate_completeness, CompletenessReport, KrausSet, Outcome, COMPLETENESS_TOL,
};
use crate::operators::{
    c, coherent_amplitudes, coherent_state, eigendecompose, ket, ket_bra, max_abs, BosonicSpace,
    ComplexMatrix, HermitianObservable, StateVector, C64, COHERENT_TAIL_THRESHOLD, HERMITICITY_TOL,
};
use crate::random;

/// Single-photon detection by absorption, `|0⟩⟨1|`, as a partial set.
pub fn photon_detector_preset(space: BosonicSpace) -> KrausSet {
    let n = space.dim();
    let outcome = Outcome { label: "n=1".into(), operator: ket_bra(&ket(n, 0), &ket(n, 1)) };
    KrausSet::new(vec![outcome], false).expect("one square operator")
}

/// Evenly spaced pointer readings `start, start + step, …` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    #[serde(default = "unit_step")]
    pub step: f64,
}

fn unit_step() -> f64 {
    1.0
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let ordered = self.stop.is_finite() && self.start.is_finite() && self.stop >= self.start;
        if !ordered || self.step.is_nan() || self.step <= 0.0 {
            return Err(QmeterError::InvalidConfig(format!("bad grid {self:?}")));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| self.start + k as f64 * self.step).collect())
    }
}

/// Photon-number QND measurement with Gaussian pointer response
/// `M_m(n) ∝ exp(−(m − n)²/(4σ²))`.
///
/// Each Fock level is normalized by the exact discrete sum over the grid, so
/// the set resolves the identity to rounding.
pub fn qnd_preset(space: BosonicSpace, pointer_sigma: f64, grid: &[f64]) -> Result<KrausSet> {
    if !pointer_sigma.is_finite() || pointer_sigma <= 0.0 {
        return Err(QmeterError::InvalidConfig(format!(
            "pointer width must be positive, got {pointer_sigma}"
        )));
    }
    if grid.is_empty() {
        return Err(QmeterError::InvalidConfig("empty outcome grid".into()));
    }
    let dim = space.dim();
    let var2 = 2.0 * pointer_sigma * pointer_sigma;
    let norms: Vec<f64> =
        (0..dim).map(|n| grid.iter().map(|&m| (-(m - n as f64).powi(2) / var2).exp()).sum()).collect();
    if let Some(n) = norms.iter().position(|&z| !z.is_finite() || z < f64::MIN_POSITIVE) {
        return Err(QmeterError::CompletenessUnachievable(format!(
            "no grid point has weight on level n = {n}"
        )));
    }
    let outcomes = grid
        .iter()
        .map(|&m| {
            let diag = StateVector::from_fn(dim, |n, _| {
                c((-(m - n as f64).powi(2) / (2.0 * var2)).exp() / norms[n].sqrt(), 0.0)
            });
            Outcome { label: format!("{m}"), operator: ComplexMatrix::from_diagonal(&diag) }
        })
        .collect();
    let set = KrausSet::new(outcomes, true)?;
    let report = validate_completeness(&set, COMPLETENESS_TOL);
    if !report.pass {
        return Err(QmeterError::CompletenessUnachievable(format!("deviation {:e}", report.max_deviation)));
    }
    Ok(set)
}

/// `M(α) = π^{−1/2} |α⟩⟨α|` on the truncated space, with the truncation's
/// discarded mass.
pub fn coherent_projector(alpha: C64, space: BosonicSpace) -> Result<(ComplexMatrix, f64)> {
    let state = coherent_state(alpha, space, COHERENT_TAIL_THRESHOLD)?;
    let m = ket_bra(&state.vector, &state.vector) * c(std::f64::consts::PI.sqrt().recip(), 0.0);
    Ok((m, state.tail_mass))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportationReport {
    pub alpha: [f64; 2],
    /// `x_α + i y_α`
    pub estimate: [f64; 2],
    pub resolution_x: f64,
    pub resolution_y: f64,
    pub disturbance_x: f64,
    pub disturbance_y: f64,
    pub tail_mass: f64,
}

/// Resolution and disturbance of the quadratures for the coherent-state
/// projection `M(α)` (classical teleportation limit).
pub fn classical_teleportation_preset(alpha: C64, space: BosonicSpace) -> Result<TeleportationReport> {
    let (m, tail_mass) = coherent_projector(alpha, space)?;
    let x = HermitianObservable::new(space.quadrature_x())?.with_name("x");
    let y = HermitianObservable::new(space.quadrature_y())?.with_name("y");
    let ex = optimal_estimate(&m, &x)?;
    let ey = optimal_estimate(&m, &y)?;
    Ok(TeleportationReport {
        alpha: [alpha.re, alpha.im],
        estimate: [ex.estimate, ey.estimate],
        resolution_x: ex.error,
        resolution_y: ey.error,
        disturbance_x: averaged_disturbance(&m, &x)?.disturbance,
        disturbance_y: averaged_disturbance(&m, &y)?.disturbance,
        tail_mass,
    })
}

/// Square grid of coherent projections used to approximate the continuum
/// resolution of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentGridCheck {
    pub spacing: f64,
    pub half_width: f64,
    /// Only the leading `levels × levels` block is compared with the
    /// identity.
    pub levels: usize,
}

/// `‖Σ_k (h²/π)|α_k⟩⟨α_k| − 1‖_max` on the leading Fock block.
pub fn coherent_grid_deviation(space: BosonicSpace, grid: CoherentGridCheck) -> Result<f64> {
    if grid.spacing.is_nan()
        || grid.spacing <= 0.0
        || grid.half_width.is_nan()
        || grid.half_width <= 0.0
        || grid.levels == 0
        || grid.levels > space.dim()
    {
        return Err(QmeterError::InvalidConfig(format!("bad coherent grid {grid:?}")));
    }
    let steps = (grid.half_width / grid.spacing).floor() as i64;
    let weight = grid.spacing * grid.spacing / std::f64::consts::PI;
    let mut sum = ComplexMatrix::zeros(grid.levels, grid.levels);
    for i in -steps..=steps {
        for j in -steps..=steps {
            let alpha = c(i as f64 * grid.spacing, j as f64 * grid.spacing);
            let v = coherent_amplitudes(alpha, grid.levels);
            sum += ket_bra(&v, &v) * c(weight, 0.0);
        }
    }
    Ok(max_abs(&(sum - ComplexMatrix::identity(grid.levels, grid.levels))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloningReport {
    /// How well the preparation states resolve the identity.
    pub completeness: CompletenessReport,
    /// Per-outcome rows; the `disturbance` column is the error of every
    /// clone, whatever the number of copies.
    pub characterization: CharacterizationReport,
}

impl CloningReport {
    pub fn clone_error(&self, outcome: &str, observable: &str) -> Option<f64> {
        self.characterization
            .rows
            .iter()
            .find(|r| r.outcome == outcome && r.observable == observable)
            .and_then(|r| r.disturbance)
    }
}

const UNIT_NORM_TOL: f64 = 1e-10;

/// Measure-and-prepare cloning with `C_m = |ψ_m⟩⟨ψ_m|`.
pub fn cloning_error(
    states: &[StateVector],
    observables: &[HermitianObservable],
    pairs: &[(usize, usize)],
) -> Result<CloningReport> {
    for (index, s) in states.iter().enumerate() {
        let norm = s.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(QmeterError::NonUnitState { index, norm });
        }
    }
    let operators = states.iter().map(|s| ket_bra(s, s)).collect();
    let mut set = KrausSet::from_operators(operators, true)?;
    let completeness = validate_completeness(&set, COMPLETENESS_TOL);
    if !completeness.pass {
        set = KrausSet::new(set.outcomes().to_vec(), false)?;
    }
    let characterization = characterize(&set, observables, pairs, None)?;
    Ok(CloningReport { completeness, characterization })
}

/// What the eavesdropper sends on after measuring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Forwarding {
    /// Forward the post-measurement state `M_m|ψ⟩` unchanged.
    #[default]
    Resend,
    /// Send a fresh copy of the most likely output state of `M_m` (top
    /// eigenvector of `M_m M_m†`), discarding the measured system.
    Reprepare,
}

#[derive(Debug, Clone)]
pub struct EavesdropSetup {
    pub eve: KrausSet,
    pub a: HermitianObservable,
    pub b: HermitianObservable,
    pub trials: u64,
    pub seed: u64,
    pub forwarding: Forwarding,
}

/// Running mean and variance, accumulated in trial order.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std_error(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt())
    }
}

/// Empirical mean squared change `(X_f − X_i)²` against the analytic
/// disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceStat {
    pub trials: u64,
    pub empirical: Option<f64>,
    pub std_error: Option<f64>,
    pub analytic: Option<f64>,
    /// `|empirical − analytic| ≤ 3 · std_error`; exact agreement counts when
    /// the standard error is zero.
    pub within_3se: Option<bool>,
}

impl DisturbanceStat {
    fn from(acc: &Accumulator, analytic: Option<f64>) -> Self {
        let empirical = (acc.count > 0).then_some(acc.mean);
        let std_error = acc.std_error();
        let within_3se = match (empirical, std_error, analytic) {
            (Some(e), Some(se), Some(a)) => Some((e - a).abs() <= 3.0 * se + 1e-12),
            _ => None,
        };
        Self { trials: acc.count, empirical, std_error, analytic, within_3se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStat {
    pub outcome: String,
    #[serde(flatten)]
    pub stat: DisturbanceStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisReport {
    pub basis: String,
    pub overall: DisturbanceStat,
    pub outcomes: Vec<OutcomeStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EavesdropReport {
    pub trials: u64,
    pub seed: u64,
    pub forwarding: Forwarding,
    pub bases: Vec<BasisReport>,
}

/// Precomputed sampling tables for one encoding basis.
struct BasisTables {
    values: Vec<f64>,
    /// `[input][outcome]` cumulative outcome probabilities.
    outcome_cdf: Vec<Vec<f64>>,
    /// `[input][outcome][final]` cumulative final-result probabilities.
    final_cdf: Vec<Vec<Vec<f64>>>,
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .map(|p| {
            acc += p.max(0.0);
            acc
        })
        .collect();
    if acc > 0.0 {
        for v in &mut out {
            *v /= acc;
        }
    }
    out
}

fn sample(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
        // u rounds past the last bucket: take the last one with mass
        cdf.iter().rposition(|_| true).unwrap_or(0)
    })
}

fn forwarded_states(setup: &EavesdropSetup) -> Result<Vec<Option<StateVector>>> {
    match setup.forwarding {
        Forwarding::Resend => Ok(vec![None; setup.eve.len()]),
        Forwarding::Reprepare => setup
            .eve
            .outcomes()
            .iter()
            .map(|o| {
                let out = &o.operator * o.operator.adjoint();
                let eig = eigendecompose(&out, HERMITICITY_TOL * out.norm().max(1.0))?;
                Ok(Some(eig.eigenvector(setup.eve.dim() - 1)))
            })
            .collect(),
    }
}

fn basis_tables(
    eve: &KrausSet,
    basis: &HermitianObservable,
    forwarded: &[Option<StateVector>],
) -> BasisTables {
    let d = basis.dim();
    let vectors: Vec<StateVector> = (0..d).map(|k| basis.eigenvector(k)).collect();
    let mut outcome_cdf = Vec::with_capacity(d);
    let mut final_cdf = Vec::with_capacity(d);
    for input in &vectors {
        let mut probs = Vec::with_capacity(eve.len());
        let mut finals = Vec::with_capacity(eve.len());
        for (o, fwd) in eve.outcomes().iter().zip(forwarded) {
            let out = &o.operator * input;
            let p = out.norm_squared();
            probs.push(p);
            let sent = match fwd {
                Some(state) => state.clone(),
                None if p > 0.0 => out.unscale(p.sqrt()),
                None => out,
            };
            finals.push(cumulative(vectors.iter().map(|v| v.dotc(&sent).norm_sqr())));
        }
        outcome_cdf.push(cumulative(probs.into_iter()));
        final_cdf.push(finals);
    }
    BasisTables { values: basis.eigenvalues().to_vec(), outcome_cdf, final_cdf }
}

/// Disturbance of `basis` caused by each of Eve's outcomes, as seen by Bob.
fn analytic_disturbances(
    setup: &EavesdropSetup,
    basis: &HermitianObservable,
    forwarded: &[Option<StateVector>],
) -> Result<Vec<Option<f64>>> {
    let d = setup.eve.dim();
    setup
        .eve
        .outcomes()
        .iter()
        .zip(forwarded)
        .map(|(o, fwd)| {
            let norm: f64 = o.operator.iter().map(|z| z.norm_sqr()).sum();
            let pieces: Vec<(f64, ComplexMatrix)> = match fwd {
                None => vec![(norm, o.operator.clone())],
                // re-preparation acts like the finer Kraus set |ψ_m⟩⟨e_j|M_m
                Some(psi) => (0..d)
                    .map(|j| {
                        let k = ket_bra(psi, &ket(d, j)) * &o.operator;
                        (k.iter().map(|z| z.norm_sqr()).sum(), k)
                    })
                    .collect(),
            };
            let mut total = 0.0;
            let mut weight = 0.0;
            for (w, k) in pieces {
                match averaged_disturbance(&k, basis) {
                    Ok(r) => {
                        total += w * r.disturbance;
                        weight += w;
                    }
                    Err(QmeterError::UnreachableOutcome { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok((weight > 0.0).then(|| total / weight))
        })
        .collect()
}

/// Intercept-resend Monte Carlo.
///
/// Each trial picks the encoding basis (`A` or `B`) and one of its
/// eigenstates uniformly, lets Eve measure with her Kraus set, forwards the
/// resulting state, and has Bob measure projectively in the sent basis. Trial
/// `t` draws from ChaCha8 stream `t` keyed by `seed`; results are reduced in
/// trial order, so a report depends only on its setup.
pub fn eavesdrop_simulation(setup: &EavesdropSetup) -> Result<EavesdropReport> {
    if setup.trials == 0 {
        return Err(QmeterError::InvalidConfig("trials must be at least 1".into()));
    }
    let d = setup.eve.dim();
    for o in [&setup.a, &setup.b] {
        if o.dim() != d {
            return Err(QmeterError::DimensionMismatch {
                expected: format!("observables of dimension {d}"),
                found: o.dim().to_string(),
            });
        }
    }
    let completeness = validate_completeness(&setup.eve, COMPLETENESS_TOL);
    if !completeness.pass {
        return Err(QmeterError::IncompleteKrausSet {
            deviation: completeness.max_deviation,
            tol: COMPLETENESS_TOL,
        });
    }

    let forwarded = forwarded_states(setup)?;
    let bases = [&setup.a, &setup.b];
    let tables: Vec<BasisTables> = bases.iter().map(|b| basis_tables(&setup.eve, b, &forwarded)).collect();

    let draws: Vec<(usize, usize, f64)> = (0..setup.trials)
        .into_par_iter()
        .map(|t| {
            use rand::Rng;
            let mut rng = random::stream(setup.seed, t);
            let basis = rng.random_range(0..2usize);
            let input = rng.random_range(0..d);
            let tab = &tables[basis];
            let outcome = sample(&tab.outcome_cdf[input], rng.random::<f64>());
            let fin = sample(&tab.final_cdf[input][outcome], rng.random::<f64>());
            (basis, outcome, (tab.values[fin] - tab.values[input]).powi(2))
        })
        .collect();

    let mut overall = [Accumulator::default(); 2];
    let mut per_outcome = vec![vec![Accumulator::default(); setup.eve.len()]; 2];
    for &(basis, outcome, sq) in &draws {
        overall[basis].push(sq);
        per_outcome[basis][outcome].push(sq);
    }

    let mut reports = Vec::with_capacity(2);
    for (k, basis) in bases.iter().enumerate() {
        let analytic = analytic_disturbances(setup, basis, &forwarded)?;
        let mut mean = 0.0;
        for (o, a) in setup.eve.outcomes().iter().zip(&analytic) {
            let p: f64 = o.operator.iter().map(|z| z.norm_sqr()).sum::<f64>() / d as f64;
            mean += p * a.unwrap_or(0.0);
        }
        reports.push(BasisReport {
            basis: basis.name().map(str::to_string).unwrap_or_else(|| ["A", "B"][k].to_string()),
            overall: DisturbanceStat::from(&overall[k], Some(mean)),
            outcomes: setup
                .eve
                .outcomes()
                .iter()
                .zip(&per_outcome[k])
                .zip(&analytic)
                .map(|((o, acc), &a)| OutcomeStat {
                    outcome: o.label.clone(),
                    stat: DisturbanceStat::from(acc, a),
                })
                .collect(),
        });
    }

    Ok(EavesdropReport {
        trials: setup.trials,
        seed: setup.seed,
        forwarding: setup.forwarding,
        bases: reports,
    })
}

/// Scenario configuration file, tagged by `"scenario"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioConfig {
    Photon {
        dim: usize,
    },
    Qnd {
        dim: usize,
        sigma: f64,
        grid: GridSpec,
    },
    ClassicalTeleport {
        dim: usize,
        alphas: Vec<[f64; 2]>,
        #[serde(default)]
        grid_check: Option<CoherentGridCheck>,
    },
    Cloning {
        states: Vec<Vec<[f64; 2]>>,
        observables: Vec<NamedObservable>,
        #[serde(default)]
        pairs: Vec<[String; 2]>,
    },
    Eavesdrop {
        eve: KrausFile,
        a: ObservableSpec,
        b: ObservableSpec,
        trials: u64,
        seed: u64,
        #[serde(default)]
        forwarding: Forwarding,
    },
}

/// Parses a scenario file. Errors name the offending field and, when the
/// field appears in the text, its line and column.
pub fn parse_scenario_config(json: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(json).map_err(|e| {
        let msg = e.to_string();
        if e.line() > 0 && msg.contains(" line ") {
            return QmeterError::Parse(msg);
        }
        match locate_field(json, &msg) {
            Some((line, col)) => QmeterError::Parse(format!("{msg} at line {line} column {col}")),
            None => QmeterError::Parse(msg),
        }
    })
}

/// Position of the first key named in backticks in a serde message.
fn locate_field(json: &str, msg: &str) -> Option<(usize, usize)> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    let key = format!("\"{}\"", &msg[start..end]);
    let offset = json.find(&key)?;
    let before = &json[..offset];
    let line = before.matches('\n').count() + 1;
    let col = offset - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    Some((line, col))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioReport {
    Photon { characterization: CharacterizationReport },
    Qnd { sigma: f64, characterization: CharacterizationReport },
    ClassicalTeleport { results: Vec<TeleportationReport>, grid_deviation: Option<f64> },
    Cloning(CloningReport),
    Eavesdrop(EavesdropReport),
}

fn pair_indices(observables: &[HermitianObservable], pairs: &[[String; 2]]) -> Result<Vec<(usize, usize)>> {
    let find = |name: &str| {
        observables
            .iter()
            .position(|o| o.name() == Some(name))
            .ok_or_else(|| QmeterError::UnknownObservable(name.to_string()))
    };
    pairs.iter().map(|[a, b]| Ok((find(a)?, find(b)?))).collect()
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    match config {
        ScenarioConfig::Photon { dim } => {
            let space = BosonicSpace::new(*dim)?;
            let obs = vec![
                HermitianObservable::new(space.number())?.with_name("n"),
                HermitianObservable::new(space.quadrature_x())?.with_name("x"),
            ];
            let characterization =
                characterize(&photon_detector_preset(space), &obs, &[(0, 1), (1, 0)], None)?;
            Ok(ScenarioReport::Photon { characterization })
        }
        ScenarioConfig::Qnd { dim, sigma, grid } => {
            let space = BosonicSpace::new(*dim)?;
            let set = qnd_preset(space, *sigma, &grid.points()?)?;
            let obs = vec![HermitianObservable::new(space.number())?.with_name("n")];
            let characterization = characterize(&set, &obs, &[], None)?;
            Ok(ScenarioReport::Qnd { sigma: *sigma, characterization })
        }
        ScenarioConfig::ClassicalTeleport { dim, alphas, grid_check } => {
            let space = BosonicSpace::new(*dim)?;
            let results = alphas
                .iter()
                .map(|&[re, im]| classical_teleportation_preset(c(re, im), space))
                .collect::<Result<Vec<_>>>()?;
            let grid_deviation = grid_check.map(|g| coherent_grid_deviation(space, g)).transpose()?;
            Ok(ScenarioReport::ClassicalTeleport { results, grid_deviation })
        }
        ScenarioConfig::Cloning { states, observables, pairs } => {
            let vectors: Vec<StateVector> = states.iter().map(|s| vector_from_literal(s)).collect();
            let dim = vectors
                .first()
                .map(|v| v.len())
                .ok_or_else(|| QmeterError::InvalidConfig("no cloning states".into()))?;
            let obs =
                observables.iter().map(|o| o.observable.resolve(&o.name, dim)).collect::<Result<Vec<_>>>()?;
            let idx = pair_indices(&obs, pairs)?;
            Ok(ScenarioReport::Cloning(cloning_error(&vectors, &obs, &idx)?))
        }
        ScenarioConfig::Eavesdrop { eve, a, b, trials, seed, forwarding } => {
            let eve = eve.to_set()?;
            let setup = EavesdropSetup {
                a: a.resolve("A", eve.dim())?,
                b: b.resolve("B", eve.dim())?,
                eve,
                trials: *trials,
                seed: *seed,
                forwarding: *forwarding,
            };
            Ok(ScenarioReport::Eavesdrop(eavesdrop_simulation(&setup)?))
        }
    }
}

fn characterization_table(r: &CharacterizationReport) -> Table {
    let mut t = Table::new(&["outcome", "observable", "status", "estimate", "resolution", "disturbance"]);
    for row in &r.rows {
        t.push(vec![
            row.outcome.clone(),
            row.observable.clone(),
            match row.status {
                RowStatus::Ok => "ok".into(),
                RowStatus::Unreachable => "unreachable".into(),
            },
            cell(row.estimate),
            cell(row.resolution),
            cell(row.disturbance),
        ]);
    }
    t
}

impl ScenarioReport {
    /// Flat per-row view for CSV export.
    pub fn table(&self) -> Table {
        match self {
            ScenarioReport::Photon { characterization } | ScenarioReport::Qnd { characterization, .. } => {
                characterization_table(characterization)
            }
            ScenarioReport::Cloning(r) => characterization_table(&r.characterization),
            ScenarioReport::ClassicalTeleport { results, .. } => {
                let mut t = Table::new(&[
                    "alpha_re",
                    "alpha_im",
                    "x",
                    "y",
                    "delta2_x",
                    "delta2_y",
                    "Delta2_x",
                    "Delta2_y",
                    "tail_mass",
                ]);
                for r in results {
                    t.push(
                        [
                            r.alpha[0],
                            r.alpha[1],
                            r.estimate[0],
                            r.estimate[1],
                            r.resolution_x,
                            r.resolution_y,
                            r.disturbance_x,
                            r.disturbance_y,
                            r.tail_mass,
                        ]
                        .iter()
                        .map(f64::to_string)
                        .collect(),
                    );
                }
                t
            }
            ScenarioReport::Eavesdrop(r) => {
                let mut t = Table::new(&[
                    "basis",
                    "outcome",
                    "trials",
                    "empirical",
                    "std_error",
                    "analytic",
                    "within_3se",
                ]);
                for b in &r.bases {
                    let rows = std::iter::once(("*", &b.overall))
                        .chain(b.outcomes.iter().map(|o| (o.outcome.as_str(), &o.stat)));
                    for (label, s) in rows {
                        t.push(vec![
                            b.basis.clone(),
                            label.to_string(),
                            s.trials.to_string(),
                            cell(s.empirical),
                            cell(s.std_error),
                            cell(s.analytic),
                            cell(s.within_3se),
                        ]);
                    }
                }
                t
            }
        }
    }
}
