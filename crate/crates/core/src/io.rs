//! JSON file formats: matrix literals, Kraus set files, observable lists.
//!
//! A matrix literal is `{"rows": R, "cols": C, "data": [[re, im], ...]}` with
//! entries in row-major order. A Kraus set file is
//! `{"dim": d, "outcomes": [{"label": s, "matrix": <literal>}, ...], "complete": bool}`;
//! `complete` defaults to `true`.

use serde::{Deserialize, Serialize};

use crate::error::{QmeterError, Result};
use crate::measurement::{KrausSet, Outcome};
use crate::operators::{
    c, pauli_x, pauli_y, pauli_z, BosonicSpace, ComplexMatrix, HermitianObservable, StateVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixLiteral {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(r, col)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<&MatrixLiteral> for ComplexMatrix {
    type Error = QmeterError;

    fn try_from(lit: &MatrixLiteral) -> Result<Self> {
        if lit.rows == 0 || lit.cols == 0 {
            return Err(QmeterError::Parse("matrix literal with an empty dimension".into()));
        }
        if lit.data.len() != lit.rows * lit.cols {
            return Err(QmeterError::Parse(format!(
                "matrix literal declares {}x{} but holds {} entries",
                lit.rows,
                lit.cols,
                lit.data.len()
            )));
        }
        Ok(ComplexMatrix::from_row_iterator(lit.rows, lit.cols, lit.data.iter().map(|&[re, im]| c(re, im))))
    }
}

/// A state vector as a list of `[re, im]` amplitudes.
pub fn vector_from_literal(data: &[[f64; 2]]) -> StateVector {
    StateVector::from_iterator(data.len(), data.iter().map(|&[re, im]| c(re, im)))
}

pub fn vector_to_literal(v: &StateVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn default_complete() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausFileOutcome {
    pub label: String,
    pub matrix: MatrixLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausFile {
    pub dim: usize,
    pub outcomes: Vec<KrausFileOutcome>,
    #[serde(default = "default_complete")]
    pub complete: bool,
}

impl KrausFile {
    pub fn to_set(&self) -> Result<KrausSet> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| {
                let operator = ComplexMatrix::try_from(&o.matrix)?;
                if operator.nrows() != self.dim || operator.ncols() != self.dim {
                    return Err(QmeterError::Parse(format!(
                        "outcome `{}` is {}x{} but the file declares dim {}",
                        o.label,
                        operator.nrows(),
                        operator.ncols(),
                        self.dim
                    )));
                }
                Ok(Outcome { label: o.label.clone(), operator })
            })
            .collect::<Result<Vec<_>>>()?;
        KrausSet::new(outcomes, self.complete)
    }
}

impl From<&KrausSet> for KrausFile {
    fn from(set: &KrausSet) -> Self {
        Self {
            dim: set.dim(),
            outcomes: set
                .outcomes()
                .iter()
                .map(|o| KrausFileOutcome { label: o.label.clone(), matrix: (&o.operator).into() })
                .collect(),
            complete: set.is_complete(),
        }
    }
}

pub fn parse_kraus_set(json: &str) -> Result<KrausSet> {
    let file: KrausFile = serde_json::from_str(json).map_err(|e| QmeterError::Parse(e.to_string()))?;
    file.to_set()
}

pub fn kraus_set_to_json(set: &KrausSet) -> String {
    serde_json::to_string_pretty(&KrausFile::from(set)).expect("Kraus files always serialize")
}

/// Named observable presets: `sz`, `sx`, `sy` (qubit) and `n`, `x`, `y`
/// (truncated Fock space of dimension `dim`).
pub fn observable_preset(name: &str, dim: usize) -> Result<HermitianObservable> {
    let matrix = match name {
        "sz" | "sx" | "sy" => {
            if dim != 2 {
                return Err(QmeterError::DimensionMismatch {
                    expected: "dimension 2 for a Pauli observable".into(),
                    found: dim.to_string(),
                });
            }
            match name {
                "sz" => pauli_z(),
                "sx" => pauli_x(),
                _ => pauli_y(),
            }
        }
        "n" => BosonicSpace::new(dim)?.number(),
        "x" => BosonicSpace::new(dim)?.quadrature_x(),
        "y" => BosonicSpace::new(dim)?.quadrature_y(),
        other => return Err(QmeterError::UnknownObservable(other.to_string())),
    };
    Ok(HermitianObservable::new(matrix)?.with_name(name))
}

/// Either a preset name or an explicit Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(String),
    Matrix(MatrixLiteral),
}

impl ObservableSpec {
    pub fn resolve(&self, name: &str, dim: usize) -> Result<HermitianObservable> {
        match self {
            ObservableSpec::Preset(p) => Ok(observable_preset(p, dim)?.with_name(name)),
            ObservableSpec::Matrix(lit) => {
                let m = ComplexMatrix::try_from(lit)?;
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(QmeterError::DimensionMismatch {
                        expected: format!("{dim}x{dim} observable `{name}`"),
                        found: format!("{}x{}", m.nrows(), m.ncols()),
                    });
                }
                Ok(HermitianObservable::new(m)?.with_name(name))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedObservable {
    pub name: String,
    pub observable: ObservableSpec,
}

/// `{"observables": [{"name": "A", "observable": "sz"}, {"name": "B", "observable": <literal>}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablesFile {
    pub observables: Vec<NamedObservable>,
}

impl ObservablesFile {
    pub fn resolve(&self, dim: usize) -> Result<Vec<HermitianObservable>> {
        self.observables.iter().map(|o| o.observable.resolve(&o.name, dim)).collect()
    }
}

pub fn parse_observables(json: &str, dim: usize) -> Result<Vec<HermitianObservable>> {
    let file: ObservablesFile = serde_json::from_str(json).map_err(|e| QmeterError::Parse(e.to_string()))?;
    file.resolve(dim)
}

/// A flat table for CSV export.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Formats a cell; missing values become empty cells.
pub fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-final-outcome disturbance records, one row each.
pub fn disturbance_table(entries: &[(String, crate::backaction::DisturbanceReport)]) -> Table {
    let mut t = Table::new(&["outcome", "observable", "B_f", "w", "delta2", "systematic", "Delta2"]);
    for (outcome, report) in entries {
        let observable = report.observable.clone().unwrap_or_default();
        for r in &report.records {
            t.push(vec![
                outcome.clone(),
                observable.clone(),
                r.final_value.to_string(),
                r.weight.to_string(),
                r.resolution.to_string(),
                r.systematic.to_string(),
                r.disturbance.to_string(),
            ]);
        }
    }
    t
}
