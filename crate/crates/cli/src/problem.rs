use nalgebra::DMatrix;
use orecover_core::ell1;
use orecover_core::recovery::{ProblemSpec, Scenario};
use orecover_core::scenarios::{self, L2Spec, MixedSpec, TwoSpaceSpec};
use orecover_core::{DenseMatrix, Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cert::to_canonical_json;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ScenarioName {
    #[default]
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "two-space")]
    TwoSpace,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "l1")]
    L1,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Exact => Scenario::Exact2Ellipsoid.as_str(),
            ScenarioName::TwoSpace => Scenario::TwoSpace.as_str(),
            ScenarioName::L2 => Scenario::L2Inaccurate.as_str(),
            ScenarioName::Mixed => Scenario::Mixed.as_str(),
            ScenarioName::L1 => Scenario::L1Inaccurate.as_str(),
        }
    }
}

/// Problem file. Matrices are arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(rename = "Lambda", default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Rows>,
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Rows>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default)]
    pub scenario: ScenarioName,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Rows>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Rows>,
    #[serde(rename = "Sprime", default, skip_serializing_if = "Option::is_none")]
    pub s_prime: Option<Rows>,
    #[serde(rename = "Sdoubleprime", default, skip_serializing_if = "Option::is_none")]
    pub s_dprime: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Forms `R_iᵀR_i` for the multi-ellipsoid diagnostic.
    #[serde(rename = "R_list", default, skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<Rows>>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// sha256 of the canonical serialization of the parsed problem.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(to_canonical_json(self)))
    }

    pub fn n(&self) -> Result<usize> {
        let n = self
            .q
            .first()
            .map(Vec::len)
            .or(self.dim)
            .ok_or_else(|| Error::InvalidInput("field Q: cannot infer the dimension (give dim)".into()))?;
        if let Some(d) = self.dim {
            if d != n {
                return Err(Error::DimensionMismatch(format!("field dim = {d} but Q has {n} columns")));
            }
        }
        Ok(n)
    }

    fn required<'a>(&self, field: &'a Option<Rows>, name: &str) -> Result<&'a Rows> {
        field.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("field {name} is required for scenario \"{}\"", self.scenario.as_str()))
        })
    }

    fn levels(&self) -> (f64, f64) {
        (self.epsilon.unwrap_or(1.0), self.eta.unwrap_or(1.0))
    }

    pub fn lambda_matrix(&self, n: usize) -> Result<DenseMatrix> {
        to_matrix("Lambda", self.required(&self.lambda, "Lambda")?, n)
    }

    pub fn compile(&self) -> Result<Compiled> {
        let n = self.n()?;
        let q = to_matrix("Q", &self.q, n)?;
        let (epsilon, eta) = self.levels();
        match self.scenario {
            ScenarioName::Exact => {
                let lambda = self.lambda_matrix(n)?;
                let r = to_matrix("R", self.required(&self.r, "R")?, n)?;
                let s = to_matrix("S", self.required(&self.s, "S")?, n)?;
                let spec = ProblemSpec::new(lambda, q, r, s)?.with_levels(epsilon, eta)?;
                Ok(Compiled::Exact(spec))
            }
            ScenarioName::TwoSpace => {
                let ts = TwoSpaceSpec {
                    // listed as basis vectors (rows); the solver wants them as columns
                    v: to_matrix("V", self.required(&self.v, "V")?, n)?.transpose(),
                    w: to_matrix("W", self.required(&self.w, "W")?, n)?.transpose(),
                    epsilon,
                    eta,
                    lambda: self.lambda_matrix(n)?,
                    q,
                };
                let (spec, _) = scenarios::two_space_problem(&ts)?;
                Ok(Compiled::TwoSpace(ts, spec))
            }
            ScenarioName::L2 => {
                let lambda = self.lambda_matrix(n)?;
                let m = lambda.nrows();
                let spec = L2Spec {
                    r: to_matrix("R", self.required(&self.r, "R")?, n)?,
                    s: to_matrix("S", self.required(&self.s, "S")?, m)?,
                    lambda,
                    q,
                    epsilon,
                    eta,
                };
                let ext = scenarios::l2_inaccurate_problem(&spec)?;
                Ok(Compiled::L2(spec, ext.spec))
            }
            ScenarioName::Mixed => {
                let lambda = self.lambda_matrix(n)?;
                let m = lambda.nrows();
                let spec = MixedSpec {
                    r: to_matrix("R", self.required(&self.r, "R")?, n)?,
                    s_prime: to_matrix("Sprime", self.required(&self.s_prime, "Sprime")?, m)?,
                    s_dprime: to_matrix("Sdoubleprime", self.required(&self.s_dprime, "Sdoubleprime")?, m)?,
                    lambda,
                    q,
                    epsilon,
                    eta,
                };
                let ext = scenarios::mixed_problem(&spec)?;
                Ok(Compiled::Mixed(spec, ext.spec))
            }
            ScenarioName::L1 => {
                let lambda = self.lambda_matrix(n)?;
                let r = to_matrix("R", self.required(&self.r, "R")?, n)?;
                let spec = ProblemSpec {
                    n,
                    lambda,
                    q,
                    r,
                    s: DMatrix::zeros(0, n),
                    epsilon,
                    eta,
                    scenario: Scenario::L1Inaccurate,
                };
                ell1::check_spec(&spec)?;
                Ok(Compiled::L1(spec))
            }
        }
    }

    /// Forms `R_iᵀR_i` and `C = QᵀQ` for the multi-ellipsoid diagnostic.
    pub fn diagnostic_forms(&self) -> Result<(Vec<DenseMatrix>, DenseMatrix)> {
        let n = self.n()?;
        let list = self
            .r_list
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("field R_list is required for diagnose-n".into()))?;
        let forms = list
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let r = to_matrix(&format!("R_list[{i}]"), rows, n)?;
                Ok(r.transpose() * r)
            })
            .collect::<Result<Vec<_>>>()?;
        let q = to_matrix("Q", &self.q, n)?;
        Ok((forms, q.transpose() * q))
    }
}

/// A problem after scenario dispatch. The second spec of the inexact
/// scenarios is the two-ellipsoid problem on the extended space.
#[derive(Debug, Clone)]
pub enum Compiled {
    Exact(ProblemSpec),
    TwoSpace(TwoSpaceSpec, ProblemSpec),
    L2(L2Spec, ProblemSpec),
    Mixed(MixedSpec, ProblemSpec),
    L1(ProblemSpec),
}

impl Compiled {
    /// The spec whose worst-case error certifies a map: `Q̃ − QDΛ̃` is the
    /// error operator of a native map `D` on it.
    pub fn working_spec(&self) -> &ProblemSpec {
        match self {
            Compiled::Exact(s) | Compiled::L1(s) => s,
            Compiled::TwoSpace(_, s) | Compiled::L2(_, s) | Compiled::Mixed(_, s) => s,
        }
    }

    pub fn error_operator(&self, qd: &DenseMatrix) -> DenseMatrix {
        let spec = self.working_spec();
        &spec.q - qd * &spec.lambda
    }
}

pub fn to_matrix(name: &str, rows: &Rows, cols_if_empty: usize) -> Result<DenseMatrix> {
    let Some(first) = rows.first() else {
        return Ok(DMatrix::zeros(0, cols_if_empty));
    };
    let cols = first.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "field {name}: row {} has {} entries, expected {cols}",
                i + 1,
                row.len()
            )));
        }
    }
    if cols != cols_if_empty {
        return Err(Error::DimensionMismatch(format!(
            "field {name}: has {cols} columns, expected {cols_if_empty}"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DenseMatrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

pub fn from_rows(rows: &Rows) -> DenseMatrix {
    let cols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = r#"{"dim": 2, "Lambda": [[1, 0]], "Q": [[1, 0], [0, 1]],
        "R": [[1, 0], [0, 1]], "S": [[1, 0], [0, 2]], "scenario": "exact"}"#;

    #[test]
    fn round_trip_field_for_field() {
        let p = ProblemFile::parse(E1).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(ProblemFile::parse(&text).unwrap(), p);
        let canonical = String::from_utf8(to_canonical_json(&p)).unwrap();
        assert_eq!(ProblemFile::parse(&canonical).unwrap(), p);
    }

    #[test]
    fn hash_ignores_layout() {
        let p = ProblemFile::parse(E1).unwrap();
        let q = ProblemFile::parse(&E1.replace('\n', " ").replace("  ", " ")).unwrap();
        assert_eq!(p.hash(), q.hash());
    }

    #[test]
    fn ragged_rows_are_reported() {
        let p = ProblemFile::parse(&E1.replace("[[1, 0], [0, 2]]", "[[1, 0], [0]]")).unwrap();
        let err = p.compile().unwrap_err();
        assert!(err.to_string().contains("field S: row 2"), "{err}");
    }

    #[test]
    fn parse_error_has_line() {
        match ProblemFile::parse("{\n\"Q\": [[1]],\n\"oops\": 1}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_scenario_key() {
        let p = ProblemFile::parse(r#"{"Lambda": [[1, 0]], "Q": [[1, 0]], "R": [[1, 0], [0, 1]], "scenario": "two-space"}"#)
            .unwrap();
        assert!(p.compile().unwrap_err().to_string().contains("field V"));
    }
}
