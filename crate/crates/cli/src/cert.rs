use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::problem::Rows;

/// Wraps a serde_json formatter so every float is written with 17
/// significant digits in exponent form; non-finite values become `null`.
struct FixedFloats<F>(F);

macro_rules! delegate {
    ($($name:ident),*) => {$(
        fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        }
    )*};
}

macro_rules! delegate_first {
    ($($name:ident),*) => {$(
        fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
            self.0.$name(w, first)
        }
    )*};
}

impl<F: Formatter> Formatter for FixedFloats<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, end_object_key, begin_object_value, end_object_value);
    delegate_first!(begin_array_value, begin_object_key);
}

fn serialize_with<T: Serialize, F: Formatter>(value: &T, formatter: F) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(formatter));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    serialize_with(value, CompactFormatter)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serialize_with(value, PrettyFormatter::new());
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Smallest eigenvalue of `a♯A + b♯B − C` on the reduced space.
    pub psd: f64,
    /// `|radius² − (a♯ + b♯)|`
    pub sum: f64,
    /// `|dual worst case of the returned map − radius²|`, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<f64>,
    pub tau_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Section {
    /// "Holds" or "Fails".
    pub verdict: String,
    /// 1-based index of the selected axis.
    pub k: usize,
    pub lb_prime: Vec<f64>,
    pub m_column: Vec<f64>,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_table: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub method: String,
    /// What the oracle maximized.
    pub target: String,
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tool: String,
    pub version: String,
    pub input_hash: String,
    pub scenario: String,
    /// "Optimal" or "BestEffort".
    pub status: String,
    /// Squared radius of information; absent when only bounds are known.
    pub radius_sq: Option<f64>,
    pub lower_bound: f64,
    /// Squared worst-case error of the returned map.
    pub upper_bound: f64,
    pub a_sharp: f64,
    pub b_sharp: f64,
    pub tau_sharp: f64,
    pub lambda_sharp: f64,
    /// Native regularization weights, for scenarios with levels folded in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_sharp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_sharp: Option<f64>,
    pub limit_case: String,
    /// Recovery map `y ↦ f̂` (n × m).
    pub map_d: Rows,
    /// `y ↦ Q f̂` (q × m).
    pub map_qd: Rows,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<L1Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}
