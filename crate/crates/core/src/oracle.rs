//! Brute-force estimators of constrained suprema `sup hᵀCh` over
//! intersections of centered ellipsoids `{hᵀA_i h ≤ 1}`.
//!
//! Every reported value is attained at a reported feasible point, so it is a
//! lower bound on the true supremum. None of this code touches the dominance
//! solver; it exists to check it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::recovery::ProblemSpec;

/// Ascent steps per start.
pub const STEPS_PER_START: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Grid,
    MultiStartAscent,
    VertexEnum,
}

impl OracleMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleMethod::Grid => "grid",
            OracleMethod::MultiStartAscent => "multi-start-ascent",
            OracleMethod::VertexEnum => "vertex-enum",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub best_value: f64,
    pub best_point: DVector<f64>,
    pub samples: usize,
    pub method: OracleMethod,
    pub seed: u64,
}

/// splitmix64 step; derives per-start seeds from the master seed.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(index + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn quad(m: &DenseMatrix, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

/// Objective after optimal radial scaling: `xᵀCx / max_i xᵀA_i x`, plus the
/// index set of the forms attaining the max (within a relative band).
struct Scaled<'a> {
    forms: &'a [DenseMatrix],
    c: &'a DenseMatrix,
}

impl Scaled<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let den = self.forms.iter().map(|f| quad(f, x)).fold(0.0, f64::max);
        let num = quad(self.c, x);
        if den <= 0.0 {
            if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            num / den
        }
    }

    /// `log xᵀCx − (1/p) log Σ (xᵀA_i x)ᵖ` and its tangent gradient on the
    /// sphere. The p-norm smooths the max over forms; it never exceeds the
    /// true ratio by more than a factor `k^(1/p)`.
    fn smoothed(&self, x: &DVector<f64>, p: f64) -> Option<(f64, DVector<f64>)> {
        let num = quad(self.c, x);
        let dens: Vec<f64> = self.forms.iter().map(|f| quad(f, x)).collect();
        let top = dens.iter().cloned().fold(0.0, f64::max);
        if num <= 0.0 || top <= 0.0 {
            return None;
        }
        let weights: Vec<f64> = dens.iter().map(|d| (d / top).powf(p)).collect();
        let total: f64 = weights.iter().sum();
        let value = num.ln() - top.ln() - total.ln() / p;
        let mut g = (self.c * x) * (2.0 / num);
        for ((f, d), w) in self.forms.iter().zip(&dens).zip(&weights) {
            if *w > 0.0 && *d > 0.0 {
                g -= (f * x) * (2.0 * w / (total * d));
            }
        }
        let radial = g.dot(x);
        Some((value, g - x * radial))
    }
}

/// Normalized gradient ascent with backtracking on the smoothed ratio, the
/// smoothing exponent rising geometrically from 2 to 1e6 over the run.
fn ascend(obj: &Scaled, mut x: DVector<f64>) -> (f64, DVector<f64>) {
    x /= x.norm();
    let mut step = 0.1;
    let mut best = (obj.value(&x), x.clone());
    let last = (STEPS_PER_START - 1) as f64;
    for k in 0..STEPS_PER_START {
        let p = 2.0 * (5e5f64).powf(k as f64 / last);
        let Some((val, g)) = obj.smoothed(&x, p) else { break };
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        let mut moved = false;
        while step > 1e-14 {
            let t = &x + &g * (step / gn);
            let t = &t / t.norm();
            if obj.smoothed(&t, p).is_some_and(|(v, _)| v > val) {
                x = t;
                step = (step * 1.2).min(1.0);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        let v = obj.value(&x);
        if v > best.0 {
            best = (v, x.clone());
        }
        if !moved {
            // stalled at this smoothing level; let the next one reopen the step
            step = 1e-3;
        }
    }
    best
}

fn feasible_point(forms: &[DenseMatrix], c: &DenseMatrix, x: &DVector<f64>) -> (f64, DVector<f64>) {
    let den = forms.iter().map(|f| quad(f, x)).fold(0.0, f64::max);
    if den <= 0.0 {
        return (0.0, DVector::zeros(x.len()));
    }
    let h = x / den.sqrt();
    (quad(c, &h), h)
}

/// Change of variables `x = L⁻ᵀz` with `LLᵀ = Σ A_i`, when that sum is
/// positive definite. The supremum is unchanged; the sphere search becomes
/// far better conditioned when the forms live on very different scales.
fn whiten(
    forms: Vec<DenseMatrix>,
    c: DenseMatrix,
    lift: DenseMatrix,
) -> (Vec<DenseMatrix>, DenseMatrix, DenseMatrix) {
    let p = c.nrows();
    let total = forms.iter().fold(DMatrix::zeros(p, p), |acc, f| acc + f);
    let Ok(chol) = linalg::cholesky(&total, 1e-13) else {
        return (forms, c, lift);
    };
    let Some(li) = chol.l().try_inverse() else {
        return (forms, c, lift);
    };
    let congr = |m: &DenseMatrix| linalg::symmetrize(&(&li * m * li.transpose()));
    let forms = forms.iter().map(congr).collect();
    (forms, congr(&c), lift * li.transpose())
}

/// Multi-start ascent for `sup hᵀCh` over `{hᵀA_i h ≤ 1 for all i}`.
///
/// `budget / 200` random starts plus the eigenvectors of `C` and each `A_i`,
/// each followed by 200 normalized ascent steps with backtracking. If a
/// `basis` is given the search runs on its span; all matrices and the
/// returned point are in ambient coordinates.
pub fn sup_quadratic_ellipsoids(
    forms: &[DenseMatrix],
    c: &DenseMatrix,
    basis: Option<&DenseMatrix>,
    budget: usize,
    seed: u64,
) -> OracleReport {
    let n = c.nrows();
    let (forms_w, c_w, lift): (Vec<DenseMatrix>, DenseMatrix, DenseMatrix) = match basis {
        Some(b) => (
            forms.iter().map(|f| linalg::symmetrize(&(b.transpose() * f * b))).collect(),
            linalg::symmetrize(&(b.transpose() * c * b)),
            b.clone(),
        ),
        None => (forms.to_vec(), c.clone(), DMatrix::identity(n, n)),
    };
    let (forms_w, c_w, lift) = whiten(forms_w, c_w, lift);
    let p = c_w.nrows();
    let empty = OracleReport {
        best_value: 0.0,
        best_point: DVector::zeros(n),
        samples: 0,
        method: OracleMethod::MultiStartAscent,
        seed,
    };
    if p == 0 || c_w.amax() == 0.0 {
        return empty;
    }
    let obj = Scaled { forms: &forms_w, c: &c_w };

    let mut seeds: Vec<DVector<f64>> = Vec::new();
    for m in std::iter::once(&c_w).chain(forms_w.iter()) {
        let eig = linalg::sym_eig(m);
        for i in 0..p {
            seeds.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    let random_starts = (budget / STEPS_PER_START).max(1);
    let results: Vec<(f64, DVector<f64>)> = (0..seeds.len() + random_starts)
        .into_par_iter()
        .map(|i| {
            let x0 = if i < seeds.len() {
                seeds[i].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, i as u64));
                let v = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
                if v.norm() == 0.0 {
                    DVector::from_element(p, 1.0)
                } else {
                    v
                }
            };
            let (_, x) = ascend(&obj, x0);
            feasible_point(&forms_w, &c_w, &x)
        })
        .collect();
    // first maximum in index order, independent of scheduling
    let (best_value, best_w) = results
        .into_iter()
        .fold((f64::NEG_INFINITY, DVector::zeros(p)), |acc, r| if r.0 > acc.0 { r } else { acc });
    OracleReport {
        best_value: best_value.max(0.0),
        best_point: lift * best_w,
        samples: (seeds.len() + random_starts) * STEPS_PER_START,
        method: OracleMethod::MultiStartAscent,
        seed,
    }
}

/// Two-ellipsoid convenience wrapper.
pub fn sup_quadratic_two_ellipsoids(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    basis: Option<&DenseMatrix>,
    budget: usize,
    seed: u64,
) -> OracleReport {
    sup_quadratic_ellipsoids(&[a.clone(), b.clone()], c, basis, budget, seed)
}

/// Exhaustive angular grid for two-dimensional problems: on each ray the
/// supremum sits on the boundary, so only the angle is sampled.
pub fn grid_sup_2d(forms: &[DenseMatrix], c: &DenseMatrix, angles: usize) -> Result<OracleReport> {
    if c.nrows() != 2 {
        return Err(Error::DimensionMismatch("grid oracle needs a 2-dimensional problem".into()));
    }
    let at = |t: f64| feasible_point(forms, c, &DVector::from_vec(vec![t.cos(), t.sin()]));
    let step = std::f64::consts::PI / angles.max(1) as f64;
    let mut best = (0.0, DVector::zeros(2));
    let mut best_t = 0.0;
    for k in 0..angles {
        let t = step * k as f64;
        let (v, h) = at(t);
        if v > best.0 {
            best = (v, h);
            best_t = t;
        }
    }
    // The maximum often sits on a kink of the ratio, where a plain grid is
    // only first-order accurate; polish the best cell by golden section.
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (t1, t2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if at(t1).0 >= at(t2).0 {
            hi = t2;
        } else {
            lo = t1;
        }
    }
    let polished = at(0.5 * (lo + hi));
    if polished.0 > best.0 {
        best = polished;
    }
    Ok(OracleReport {
        best_value: best.0,
        best_point: best.1,
        samples: angles,
        method: OracleMethod::Grid,
        seed: 0,
    })
}

/// Worst case of `‖M f‖²` over `{‖Rf‖ ≤ ε, ‖Sf‖ ≤ η}`.
pub fn worst_case_error(m: &DenseMatrix, spec: &ProblemSpec, budget: usize, seed: u64) -> OracleReport {
    let a = linalg::gram(&spec.r_scaled());
    let b = linalg::gram(&spec.s_scaled());
    sup_quadratic_two_ellipsoids(&a, &b, &linalg::gram(m), None, budget, seed)
}

/// `sup ‖Qh‖²` over the model set intersected with `ker Λ`.
pub fn lower_bound(spec: &ProblemSpec, budget: usize, seed: u64) -> OracleReport {
    let basis = linalg::orthonormal_nullspace(&spec.lambda, linalg::RANK_TOL);
    let a = linalg::gram(&spec.r_scaled());
    let b = linalg::gram(&spec.s_scaled());
    sup_quadratic_two_ellipsoids(&a, &b, &linalg::gram(&spec.q), Some(&basis), budget, seed)
}

/// Worst case of a linear map `y ↦ D y` (D is `q × m`, estimating `Qf`)
/// under `‖Rf‖ ≤ ε` and `‖e‖₁ ≤ η`, by enumerating the vertices `±η e_i` of
/// the error ball. Works in the variables `(f, θ)` with `e = θ e_i`.
///
/// The returned point is `(f, θ)` for the best axis.
pub fn l1_worstcase_vertex(d: &DenseMatrix, spec: &ProblemSpec, budget: usize, seed: u64) -> Result<OracleReport> {
    let (m, n) = spec.lambda.shape();
    if d.shape() != (spec.q.nrows(), m) {
        return Err(Error::DimensionMismatch(format!(
            "map is {:?}, expected {:?}",
            d.shape(),
            (spec.q.nrows(), m)
        )));
    }
    let base = &spec.q - d * &spec.lambda;
    let rr = linalg::gram(&spec.r_scaled());
    let mut best: Option<OracleReport> = None;
    let mut samples = 0;
    for i in 0..m {
        let axis_seed = split_seed(seed, 1_000_003 + i as u64);
        let report = if spec.eta > 0.0 {
            let mut a = DMatrix::zeros(n + 1, n + 1);
            a.view_mut((0, 0), (n, n)).copy_from(&rr);
            let mut b = DMatrix::zeros(n + 1, n + 1);
            b[(n, n)] = 1.0 / (spec.eta * spec.eta);
            let err = linalg::hstack(&[&base, &(-d.columns(i, 1).into_owned())]);
            sup_quadratic_two_ellipsoids(&a, &b, &linalg::gram(&err), None, budget, axis_seed)
        } else {
            let mut r = sup_quadratic_ellipsoids(std::slice::from_ref(&rr), &linalg::gram(&base), None, budget, axis_seed);
            r.best_point = r.best_point.push(0.0);
            r
        };
        samples += report.samples;
        if best.as_ref().is_none_or(|b| report.best_value > b.best_value) {
            best = Some(report);
        }
    }
    let mut out = best.unwrap_or(OracleReport {
        best_value: 0.0,
        best_point: DVector::zeros(n + 1),
        samples: 0,
        method: OracleMethod::VertexEnum,
        seed,
    });
    out.samples = samples;
    out.method = OracleMethod::VertexEnum;
    out.seed = seed;
    Ok(out)
}
