//! Quadratic dominance on a subspace.
//!
//! The central object is the program
//!
//! ```text
//! minimize a + b   subject to   a·A + b·B ⪰ C,   a, b ≥ 0
//! ```
//!
//! for symmetric PSD forms `A`, `B`, `C` written in an orthonormal basis of
//! some subspace. Its value equals `min_τ λ_max(C, (1-τ)A + τB)` over
//! `τ ∈ [0, 1]`, a convex function of `τ`, which is what the solver searches.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};

/// τ-search interval is `[TAU_EDGE, 1 - TAU_EDGE]`; endpoints are handled apart.
pub const TAU_EDGE: f64 = 1e-12;
/// Default width at which the τ bracket is considered converged.
pub const DEFAULT_TAU_WIDTH: f64 = 1e-12;
/// Relative level above the optimum that still counts as "flat".
const FLAT_REL: f64 = 1e-12;
/// A near-optimal τ interval narrower than this is a point, not a plateau.
const FLAT_MIN_WIDTH: f64 = 1e-6;
/// Eigenvalue cut (relative) for deciding that a form is singular.
const FORM_KERNEL_TOL: f64 = 1e-12;
/// Eigenvalue cut (relative) for the kernel-intersection invariant.
const KERNEL_TOL: f64 = 1e-13;
/// Relative size below which a♯ or b♯ is treated as zero.
const DEGENERATE_REL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DominanceProblem {
    a: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    pub labels: [String; 3],
}

fn check_form(m: &DenseMatrix, name: &str) -> Result<()> {
    linalg::ensure_finite(m, name)?;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{name} is not square")));
    }
    let scale = 1.0 + m.amax();
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidInput(format!("{name} is not symmetric")));
    }
    let lmin = linalg::lambda_min(m);
    if lmin < -1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "{name} is not positive semidefinite (λ_min = {lmin:.3e})"
        )));
    }
    Ok(())
}

fn common_kernel(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let sum = a + b;
    let (_, kernel) = linalg::psd_range_kernel(&sum, KERNEL_TOL);
    kernel
}

/// True when `c` vanishes (relative to its own size) on the columns of `basis`.
fn vanishes_on(c: &DenseMatrix, basis: &DenseMatrix) -> bool {
    if basis.ncols() == 0 {
        return true;
    }
    let cn = c.norm();
    (c * basis).norm() <= 1e-9 * cn.max(f64::MIN_POSITIVE)
}

impl DominanceProblem {
    /// Validates symmetry, positive semidefiniteness and `ker A ∩ ker B = {0}`.
    pub fn new(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        let p = a.nrows();
        if b.shape() != (p, p) || c.shape() != (p, p) || a.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "forms have shapes {:?}, {:?}, {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        check_form(&a, "A")?;
        check_form(&b, "B")?;
        check_form(&c, "C")?;
        if common_kernel(&a, &b).ncols() > 0 {
            return Err(Error::InvalidInput(
                "ker A ∩ ker B is nontrivial".to_string(),
            ));
        }
        Ok(Self {
            a: linalg::symmetrize(&a),
            b: linalg::symmetrize(&b),
            c: linalg::symmetrize(&c),
            labels: ["A".into(), "B".into(), "C".into()],
        })
    }

    /// Like [`DominanceProblem::new`], but first projects out `ker A ∩ ker B`
    /// when `C` vanishes there. Returns the problem and the orthonormal basis
    /// (in the original coordinates) of the subspace it lives on.
    pub fn reduced(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
    ) -> Result<(Self, DenseMatrix)> {
        let p = a.nrows();
        check_form(&a, "A")?;
        check_form(&b, "B")?;
        check_form(&c, "C")?;
        let kernel = common_kernel(&a, &b);
        if kernel.ncols() == 0 {
            return Ok((Self::new(a, b, c)?, DMatrix::identity(p, p)));
        }
        if !vanishes_on(&c, &kernel) {
            return Err(Error::Unbounded(format!(
                "C is nonzero on the {}-dimensional common kernel of A and B",
                kernel.ncols()
            )));
        }
        let (basis, _) = linalg::psd_range_kernel(&(&a + &b), KERNEL_TOL);
        let restrict = |m: &DenseMatrix| linalg::symmetrize(&(basis.transpose() * m * &basis));
        Ok((Self::new(restrict(&a), restrict(&b), restrict(&c))?, basis))
    }

    pub fn with_labels(mut self, a: &str, b: &str, c: &str) -> Self {
        self.labels = [a.to_string(), b.to_string(), c.to_string()];
        self
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn c(&self) -> &DenseMatrix {
        &self.c
    }

    pub fn pencil(&self, tau: f64) -> DenseMatrix {
        &self.a * (1.0 - tau) + &self.b * tau
    }

    fn c_is_zero(&self) -> bool {
        self.c.norm() <= 1e-24 * (1.0 + self.a.norm() + self.b.norm())
    }
}

/// λ_max of the pencil `C v = λ ((1-τ)A + τB) v`.
pub fn phi(problem: &DominanceProblem, tau: f64) -> Result<f64> {
    if problem.dim() == 0 {
        return Ok(0.0);
    }
    Ok(linalg::gen_eig_max(&problem.c, &problem.pencil(tau))?.0)
}

/// Top generalized eigenpair of `(C, form)` for a possibly singular `form`.
///
/// When `form` has a kernel, the pair is computed on its range, which is only
/// meaningful when `C` vanishes on the kernel; otherwise `None` (the endpoint
/// is infeasible). The vector is normalized so that `vᵀ form v = 1`.
fn endpoint_pair(form: &DenseMatrix, c: &DenseMatrix) -> Option<(f64, DVector<f64>, DenseMatrix)> {
    let (range, kernel) = linalg::psd_range_kernel(form, FORM_KERNEL_TOL);
    if range.ncols() == 0 {
        return None;
    }
    if kernel.ncols() > 0 && !vanishes_on(c, &kernel) {
        return None;
    }
    let fr = linalg::symmetrize(&(range.transpose() * form * &range));
    let cr = linalg::symmetrize(&(range.transpose() * c * &range));
    let eig = linalg::gen_eig(&cr, &fr).ok()?;
    let top = eig.eigenvalues[0];
    let v = &range * eig.eigenvectors.column(0);
    // eigenvectors of the whole top cluster, lifted
    let cluster: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] >= top - 1e-9 * top.abs().max(1e-300))
        .map(|i| &range * eig.eigenvectors.column(i))
        .collect();
    Some((top, v, DMatrix::from_columns(&cluster)))
}

/// Endpoint objective at τ = 0 (`form = A`) or τ = 1 (`form = B`).
fn endpoint_value(form: &DenseMatrix, c: &DenseMatrix) -> Option<f64> {
    endpoint_pair(form, c).map(|(v, _, _)| v)
}

/// Proof object for the optimal dominance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCertificate {
    pub a_sharp: f64,
    pub b_sharp: f64,
    pub tau_sharp: f64,
    pub lambda_sharp: f64,
    /// Smallest eigenvalue of `a♯A + b♯B - C`.
    pub psd_residual: f64,
    /// Half-width of the τ interval on which the objective is within
    /// rounding of the optimum.
    pub tau_tolerance: f64,
}

impl ParamCertificate {
    pub fn zero() -> Self {
        Self {
            a_sharp: 0.0,
            b_sharp: 0.0,
            tau_sharp: 0.5,
            lambda_sharp: 0.0,
            psd_residual: 0.0,
            tau_tolerance: 0.0,
        }
    }

    fn from_tau(problem: &DominanceProblem, tau: f64, lambda: f64, tau_tolerance: f64) -> Self {
        let a_sharp = (1.0 - tau) * lambda;
        let b_sharp = tau * lambda;
        let m = problem.a() * a_sharp + problem.b() * b_sharp - problem.c();
        Self {
            a_sharp,
            b_sharp,
            tau_sharp: tau,
            lambda_sharp: lambda,
            psd_residual: linalg::lambda_min(&m),
            tau_tolerance,
        }
    }

    /// `a♯ + b♯`.
    pub fn value(&self) -> f64 {
        self.a_sharp + self.b_sharp
    }
}

/// Golden-section minimization of a convex function on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, width: f64, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for the boundary of a convex sublevel set: `inside` lies in the
/// set, `outside` does not; returns a point of the set next to the boundary.
fn sublevel_edge(mut inside: f64, mut outside: f64, level: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    for _ in 0..64 {
        let mid = 0.5 * (inside + outside);
        if f(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Solves `min a + b  s.t.  aA + bB ⪰ C` by convex search over τ.
///
/// `tol` is the width at which the τ bracket stops shrinking. Optima on the
/// boundary (`a♯ = 0` or `b♯ = 0`) are returned exactly; on a plateau of the
/// objective the midpoint of the plateau is returned.
pub fn sdominance_solve(problem: &DominanceProblem, tol: f64) -> Result<ParamCertificate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if problem.dim() == 0 || problem.c_is_zero() {
        return Ok(ParamCertificate::zero());
    }
    let interior = |tau: f64| phi(problem, tau).unwrap_or(f64::INFINITY);
    let at_zero = endpoint_value(problem.a(), problem.c());
    let at_one = endpoint_value(problem.b(), problem.c());
    let eval = |tau: f64| -> f64 {
        if tau <= 0.0 {
            at_zero.unwrap_or(f64::INFINITY)
        } else if tau >= 1.0 {
            at_one.unwrap_or(f64::INFINITY)
        } else {
            interior(tau)
        }
    };

    let (tau_int, val_int) = golden_min(TAU_EDGE, 1.0 - TAU_EDGE, tol, &interior);

    let mut best_tau = tau_int;
    let mut best = val_int;
    for (tau, val) in [(0.0, at_zero), (1.0, at_one)] {
        if let Some(v) = val {
            if v <= best {
                best = v;
                best_tau = tau;
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::Infeasible(
            "no τ in [0, 1] gives a positive definite pencil dominating C".into(),
        ));
    }

    let level = best + FLAT_REL * best.abs();
    let left = if best_tau <= 0.0 || eval(0.0) <= level {
        0.0
    } else {
        sublevel_edge(best_tau, 0.0, level, &eval)
    };
    let right = if best_tau >= 1.0 || eval(1.0) <= level {
        1.0
    } else {
        sublevel_edge(best_tau, 1.0, level, &eval)
    };

    let (tau, half_width) = if right - left >= FLAT_MIN_WIDTH {
        (0.5 * (left + right), 0.5 * (right - left))
    } else {
        (best_tau, (0.5 * (right - left)).max(tol))
    };
    let lambda = eval(tau);
    Ok(ParamCertificate::from_tau(problem, tau, lambda, half_width))
}

/// A maximizer of `hᵀCh` over `{hᵀAh ≤ 1, hᵀBh ≤ 1}`, certified through the
/// stationarity condition `(a♯A + b♯B) h = C h`.
#[derive(Debug, Clone)]
pub struct ExtremalPoint {
    pub h: DVector<f64>,
    /// `hᵀAh`
    pub a_norm_sq: f64,
    /// `hᵀBh`
    pub b_norm_sq: f64,
    /// `‖(a♯A + b♯B - C) h‖`
    pub stationarity_residual: f64,
}

fn quad(m: &DenseMatrix, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}

/// Picks, inside the span of `cluster`, a direction on which the two forms
/// agree (`xᵀAx = xᵀBx`) when that is possible, otherwise the direction with
/// the smallest disagreement.
fn balance_in_cluster(cluster: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> DVector<f64> {
    if cluster.ncols() == 1 {
        return cluster.column(0).into_owned();
    }
    // Orthonormalize the cluster so that combinations stay well scaled.
    let q = cluster.clone().qr().q();
    let diff = linalg::symmetrize(&(q.transpose() * (a - b) * &q));
    let eig = linalg::sym_eig(&diff);
    let k = eig.eigenvalues.len();
    let (hi, lo) = (eig.eigenvalues[0], eig.eigenvalues[k - 1]);
    let u_hi = eig.eigenvectors.column(0).into_owned();
    let u_lo = eig.eigenvectors.column(k - 1).into_owned();
    let coeffs = if hi >= 0.0 && lo <= 0.0 {
        if hi - lo <= 0.0 {
            u_hi
        } else {
            // cos²θ·hi + sin²θ·lo = 0
            let s2 = hi / (hi - lo);
            &u_hi * (1.0 - s2).sqrt() + &u_lo * s2.sqrt()
        }
    } else if hi < 0.0 {
        u_hi
    } else {
        u_lo
    };
    q * coeffs
}

/// Builds `h♯` from the eigenvalue-1 eigenvector of `(C, a♯A + b♯B)`.
///
/// Requires both parameters positive; for boundary optima use
/// [`worst_direction`].
pub fn extremal_point(problem: &DominanceProblem, cert: &ParamCertificate) -> Result<ExtremalPoint> {
    extremal_point_with_tol(problem, cert, 1e-6)
}

pub fn extremal_point_with_tol(
    problem: &DominanceProblem,
    cert: &ParamCertificate,
    tol: f64,
) -> Result<ExtremalPoint> {
    let (a, b) = (cert.a_sharp, cert.b_sharp);
    let total = a + b;
    if !(a > DEGENERATE_REL * total) || !(b > DEGENERATE_REL * total) {
        return Err(Error::DegenerateParameters { a, b });
    }
    let t = problem.a() * a + problem.b() * b;
    let eig = linalg::gen_eig(problem.c(), &t)?;
    let top = eig.eigenvalues[0];
    if (top - 1.0).abs() > tol {
        return Err(Error::NoUnitEigenvalue(top));
    }
    let cluster: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] >= top - 1e-8)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let h = balance_in_cluster(&DMatrix::from_columns(&cluster), problem.a(), problem.b());
    let an = quad(problem.a(), &h);
    let h = if an > 0.0 {
        h / an.sqrt()
    } else {
        let bn = quad(problem.b(), &h);
        h / bn.sqrt()
    };
    Ok(ExtremalPoint {
        a_norm_sq: quad(problem.a(), &h),
        b_norm_sq: quad(problem.b(), &h),
        stationarity_residual: ((&t - problem.c()) * &h).norm(),
        h,
    })
}

/// A feasible maximizer of `hᵀCh` over `{hᵀAh ≤ 1, hᵀBh ≤ 1}`, covering the
/// boundary cases `a♯ = 0` / `b♯ = 0` through the single-form extremizer.
pub fn worst_direction(problem: &DominanceProblem, cert: &ParamCertificate) -> Result<ExtremalPoint> {
    let p = problem.dim();
    let total = cert.value();
    if p == 0 || total <= 0.0 {
        return Ok(ExtremalPoint {
            h: DVector::zeros(p),
            a_norm_sq: 0.0,
            b_norm_sq: 0.0,
            stationarity_residual: 0.0,
        });
    }
    let degenerate_a = !(cert.a_sharp > DEGENERATE_REL * total);
    let degenerate_b = !(cert.b_sharp > DEGENERATE_REL * total);
    let h = if degenerate_a || degenerate_b {
        // b♯ = 0: only A is active, maximize within its top cluster while
        // keeping B as small as possible (and symmetrically).
        let (active, other) = if degenerate_b {
            (problem.a(), problem.b())
        } else {
            (problem.b(), problem.a())
        };
        let (_, v, cluster) = endpoint_pair(active, problem.c())
            .ok_or_else(|| Error::Infeasible("boundary optimum without a valid endpoint".into()))?;
        if cluster.ncols() > 1 {
            let q = cluster.qr().q();
            let ra = linalg::symmetrize(&(q.transpose() * active * &q));
            let ro = linalg::symmetrize(&(q.transpose() * other * &q));
            // minimize the other form relative to the active one
            match linalg::gen_eig(&ro, &ra) {
                Ok(eig) => {
                    let k = eig.eigenvalues.len();
                    &q * eig.eigenvectors.column(k - 1)
                }
                Err(_) => v,
            }
        } else {
            v
        }
    } else {
        extremal_point(problem, cert)?.h
    };
    let an = quad(problem.a(), &h);
    let bn = quad(problem.b(), &h);
    let scale = an.max(bn);
    let h = if scale > 0.0 { h / scale.sqrt() } else { h };
    let t = problem.a() * cert.a_sharp + problem.b() * cert.b_sharp;
    Ok(ExtremalPoint {
        a_norm_sq: quad(problem.a(), &h),
        b_norm_sq: quad(problem.b(), &h),
        stationarity_residual: ((&t - problem.c()) * &h).norm(),
        h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    NotExact,
}

/// Outcome of the multi-ellipsoid exactness test.
#[derive(Debug, Clone)]
pub struct NDiagnostic {
    pub verdict: Exactness,
    /// Dominance weights `c♯_i` (their sum is the dominance value).
    pub weights: Vec<f64>,
    pub value: f64,
    /// Candidate extremizer, scaled so that `max_i hᵀA_i h = 1`.
    pub h: DVector<f64>,
    /// `hᵀA_i h` for each form.
    pub norms: Vec<f64>,
    /// Largest shortfall `1 - hᵀA_i h` over forms with a positive weight.
    pub slack: f64,
}

fn weighted_sum(forms: &[DenseMatrix], w: &[f64]) -> DenseMatrix {
    let p = forms[0].nrows();
    forms
        .iter()
        .zip(w)
        .fold(DMatrix::zeros(p, p), |acc, (f, wi)| acc + f * *wi)
}

/// Best-effort minimization of `Σ c_i` subject to `Σ c_i A_i ⪰ C`, by pairwise
/// coordinate descent on the simplex of weights `w = c / Σ c`.
///
/// Returns the weights `c♯` and their sum.
pub fn multi_dominance_solve(forms: &[DenseMatrix], c: &DenseMatrix) -> Result<(Vec<f64>, f64)> {
    let n = forms.len();
    if n == 0 {
        return Err(Error::InvalidInput("at least one form is required".into()));
    }
    for (i, f) in forms.iter().enumerate() {
        check_form(f, &format!("A_{}", i + 1))?;
        if f.shape() != c.shape() {
            return Err(Error::DimensionMismatch(format!("A_{} does not match C", i + 1)));
        }
    }
    check_form(c, "C")?;
    if c.nrows() == 0 || c.norm() == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    if n == 2 {
        let problem = DominanceProblem::new(forms[0].clone(), forms[1].clone(), c.clone())?;
        let cert = sdominance_solve(&problem, DEFAULT_TAU_WIDTH)?;
        return Ok((vec![cert.a_sharp, cert.b_sharp], cert.value()));
    }
    let objective = |w: &[f64]| -> f64 {
        linalg::gen_eig_max(c, &weighted_sum(forms, w))
            .map(|(v, _)| v)
            .unwrap_or(f64::INFINITY)
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut current = objective(&w);
    if !current.is_finite() {
        return Err(Error::Infeasible("forms have a common kernel where C is nonzero".into()));
    }
    for _sweep in 0..300 {
        let start = current;
        for i in 0..n {
            for j in (i + 1)..n {
                let (wi, wj) = (w[i], w[j]);
                let line = |t: f64| {
                    let mut trial = w.clone();
                    trial[i] = wi + t;
                    trial[j] = wj - t;
                    objective(&trial)
                };
                let (t, val) = golden_min(-wi, wj, 1e-13, &line);
                if val < current {
                    w[i] = (wi + t).max(0.0);
                    w[j] = (wj - t).max(0.0);
                    current = objective(&w);
                }
            }
        }
        if start - current <= 1e-15 * current.abs() {
            break;
        }
    }
    let weights: Vec<f64> = w.iter().map(|wi| wi * current).collect();
    Ok((weights, current))
}

/// Tests whether the dominance bound for `n ≥ 2` forms is attained: builds a
/// candidate `h` from the eigenvalue-1 eigenvector of `(C, Σ c♯_i A_i)` and
/// checks that every form with a positive weight is active at `h`.
///
/// The optimizer behind it is a heuristic for `n > 2`; the verdict is a
/// diagnostic, not a proof of inexactness.
pub fn n_ellipsoid_diagnostic(forms: &[DenseMatrix], c: &DenseMatrix, tol: f64) -> Result<NDiagnostic> {
    if forms.len() < 2 {
        return Err(Error::InvalidInput("the diagnostic needs at least two forms".into()));
    }
    let (weights, value) = multi_dominance_solve(forms, c)?;
    let p = c.nrows();
    if value <= 0.0 {
        return Ok(NDiagnostic {
            verdict: Exactness::Exact,
            weights,
            value,
            h: DVector::zeros(p),
            norms: vec![0.0; forms.len()],
            slack: 0.0,
        });
    }
    let active: Vec<bool> = weights.iter().map(|w| *w > 1e-8 * value).collect();
    let t = weighted_sum(forms, &weights);
    let eig = linalg::gen_eig(c, &t)?;
    let top = eig.eigenvalues[0];
    if (top - 1.0).abs() > 1e-6_f64.max(tol) {
        return Err(Error::NoUnitEigenvalue(top));
    }
    let cluster: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] >= top - 1e-7)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let evaluate = |h: &DVector<f64>| -> (DVector<f64>, Vec<f64>, f64) {
        let norms: Vec<f64> = forms.iter().map(|f| quad(f, h)).collect();
        let top = norms.iter().cloned().fold(0.0, f64::max);
        let h = if top > 0.0 { h / top.sqrt() } else { h.clone() };
        let norms: Vec<f64> = norms.iter().map(|v| if top > 0.0 { v / top } else { 0.0 }).collect();
        let slack = norms
            .iter()
            .zip(&active)
            .filter(|(_, a)| **a)
            .map(|(v, _)| 1.0 - v)
            .fold(0.0, f64::max);
        (h, norms, slack)
    };

    let mut best = evaluate(&cluster[0]);
    if cluster.len() > 1 {
        let basis = DMatrix::from_columns(&cluster);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for col in &cluster[1..] {
            let cand = evaluate(col);
            if cand.2 < best.2 {
                best = cand;
            }
        }
        for _ in 0..4000 {
            let coeffs = DVector::from_fn(cluster.len(), |_, _| rng.gen_range(-1.0..1.0));
            let cand = evaluate(&(&basis * coeffs));
            if cand.2 < best.2 {
                best = cand;
            }
        }
    }
    let (h, norms, slack) = best;
    let verdict = if slack <= tol {
        Exactness::Exact
    } else {
        Exactness::NotExact
    };
    Ok(NDiagnostic {
        verdict,
        weights,
        value,
        h,
        norms,
        slack,
    })
}

/// `q(x) = xᵀ M x + constant`.
#[derive(Debug, Clone)]
pub struct QuadForm {
    pub matrix: DenseMatrix,
    pub constant: f64,
}

impl QuadForm {
    pub fn new(matrix: DenseMatrix, constant: f64) -> Self {
        Self { matrix, constant }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        quad(&self.matrix, x) + self.constant
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone)]
pub enum SProcedureOutcome {
    /// `q0 ≤ a1·q1 + a2·q2` everywhere.
    Certificate {
        a1: f64,
        a2: f64,
        /// λ_min(a1 A1 + a2 A2 - A0)
        matrix_slack: f64,
        /// a1 α1 + a2 α2 - α0
        scalar_slack: f64,
    },
    /// A point with `q1 ≤ 0`, `q2 ≤ 0` and `q0 > 0`.
    Refuted { witness: DVector<f64>, values: [f64; 3] },
}

#[derive(Debug, Clone)]
pub struct SProcedureReport {
    pub outcome: SProcedureOutcome,
    /// The exactness theorem needs ambient dimension at least 3; below that
    /// a certificate is still valid but a missing one proves nothing.
    pub dimension_caveat: bool,
}

/// Candidate directions for searches over quadratic forms.
fn probe_directions(forms: &[&DenseMatrix], n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut dirs = Vec::new();
    let mut mats: Vec<DenseMatrix> = forms.iter().map(|m| (*m).clone()).collect();
    if forms.len() >= 2 {
        mats.push(forms[0] + forms[1]);
        mats.push(forms[0] - forms[1]);
    }
    for m in &mats {
        let eig = linalg::sym_eig(m);
        for i in 0..n {
            dirs.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 0.0 {
            dirs.push(v / norm);
        }
    }
    dirs
}

/// Admissible values of `s = t² ≥ 0` with `s·d + α ≤ 0` (or `< 0` if `strict`),
/// as an interval `[lo, hi]` (hi may be infinite). `None` if empty.
fn radial_interval(d: f64, alpha: f64, strict: bool) -> Option<(f64, f64)> {
    let ok = |v: f64| if strict { v < 0.0 } else { v <= 0.0 };
    if d == 0.0 {
        return if ok(alpha) { Some((0.0, f64::INFINITY)) } else { None };
    }
    let root = -alpha / d;
    if d > 0.0 {
        if root < 0.0 || (strict && root <= 0.0) {
            None
        } else {
            Some((0.0, root))
        }
    } else {
        Some((root.max(0.0), f64::INFINITY))
    }
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo <= hi {
        Some((lo, hi))
    } else {
        None
    }
}

fn find_strictly_feasible(q1: &QuadForm, q2: &QuadForm) -> Option<DVector<f64>> {
    let n = q1.dim();
    if q1.constant < 0.0 && q2.constant < 0.0 {
        return Some(DVector::zeros(n));
    }
    for d in probe_directions(&[&q1.matrix, &q2.matrix], n, 200, 17) {
        let i1 = radial_interval(quad(&q1.matrix, &d), q1.constant, true);
        let i2 = radial_interval(quad(&q2.matrix, &d), q2.constant, true);
        if let (Some(a), Some(b)) = (i1, i2) {
            if let Some((lo, hi)) = intersect(a, b) {
                let s = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
                let x = &d * s.sqrt();
                if q1.eval(&x) < 0.0 && q2.eval(&x) < 0.0 {
                    return Some(x);
                }
            }
        }
    }
    None
}

fn has_definite_combination(a1: &DenseMatrix, a2: &DenseMatrix) -> bool {
    let scale = 1.0 + a1.norm() + a2.norm();
    let f = |theta: f64| linalg::lambda_min(&(a1 * theta.cos() + a2 * theta.sin()));
    let mut best = (0.0, f64::NEG_INFINITY);
    let steps = 720;
    for k in 0..steps {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
        let v = f(theta);
        if v > best.1 {
            best = (theta, v);
        }
    }
    let h = std::f64::consts::PI / steps as f64;
    let (_, v) = golden_min(best.0 - h, best.0 + h, 1e-12, &|t| -f(t));
    best.1.max(-v) > 1e-12 * scale
}

/// Decides whether `q1 ≤ 0 ∧ q2 ≤ 0 ⇒ q0 ≤ 0` by producing either multipliers
/// `a1, a2 ≥ 0` with `q0 ≤ a1 q1 + a2 q2`, or a violating point.
pub fn sprocedure_certify(q0: &QuadForm, q1: &QuadForm, q2: &QuadForm) -> Result<SProcedureReport> {
    let n = q0.dim();
    for (i, q) in [q0, q1, q2].iter().enumerate() {
        linalg::ensure_finite(&q.matrix, &format!("q{i}"))?;
        if q.matrix.shape() != (n, n) || !q.constant.is_finite() {
            return Err(Error::DimensionMismatch(format!("q{i} does not match q0")));
        }
        let scale = 1.0 + q.matrix.amax();
        if (&q.matrix - q.matrix.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("q{i} matrix is not symmetric")));
        }
    }
    if find_strictly_feasible(q1, q2).is_none() {
        return Err(Error::PremiseViolated("no strictly feasible point for q1, q2".into()));
    }
    if !has_definite_combination(&q1.matrix, &q2.matrix) {
        return Err(Error::PremiseViolated(
            "no combination of the constraint matrices is positive definite".into(),
        ));
    }
    let dimension_caveat = n < 3;
    let tol = 1e-9 * (1.0 + q0.matrix.norm() + q0.constant.abs());

    let slacks = |a1: f64, a2: f64| -> (f64, f64) {
        let m = &q1.matrix * a1 + &q2.matrix * a2 - &q0.matrix;
        (
            linalg::lambda_min(&m),
            a1 * q1.constant + a2 * q2.constant - q0.constant,
        )
    };
    let certificate = |a1: f64, a2: f64| -> Option<SProcedureOutcome> {
        let (ms, ss) = slacks(a1, a2);
        (ms >= -tol && ss >= -tol).then_some(SProcedureOutcome::Certificate {
            a1,
            a2,
            matrix_slack: ms,
            scalar_slack: ss,
        })
    };

    // Ellipsoidal constraints with PSD objective: this is a dominance problem.
    let psd = |m: &DenseMatrix| linalg::lambda_min(m) >= -1e-10 * (1.0 + m.amax());
    if q1.constant < 0.0 && q2.constant < 0.0 && psd(&q0.matrix) && psd(&q1.matrix) && psd(&q2.matrix) {
        let (s1, s2) = (-q1.constant, -q2.constant);
        if let Ok(problem) = DominanceProblem::new(&q1.matrix / s1, &q2.matrix / s2, q0.matrix.clone()) {
            let cert = sdominance_solve(&problem, DEFAULT_TAU_WIDTH)?;
            let (a1, a2) = (cert.a_sharp / s1, cert.b_sharp / s2);
            if let Some(out) = certificate(a1, a2) {
                return Ok(SProcedureReport { outcome: out, dimension_caveat });
            }
            let ext = worst_direction(&problem, &cert)?;
            let x = ext.h;
            let values = [q0.eval(&x), q1.eval(&x), q2.eval(&x)];
            if values[0] > tol && values[1] <= tol && values[2] <= tol {
                return Ok(SProcedureReport {
                    outcome: SProcedureOutcome::Refuted { witness: x, values },
                    dimension_caveat,
                });
            }
        }
    }

    // General case: maximize the concave slack over a ≥ 0, polar in (s, τ).
    let g = |s: f64, tau: f64| -> f64 {
        let (ms, ss) = slacks(s * (1.0 - tau), s * tau);
        ms.min(ss)
    };
    let best_s = |tau: f64| -> (f64, f64) {
        let mut hi = 1.0;
        while hi < 1e12 && g(hi, tau) > g(0.5 * hi, tau) {
            hi *= 2.0;
        }
        let (s, v) = golden_min(0.0, hi, 1e-12 * hi, &|s| -g(s, tau));
        (s, -v)
    };
    let grid = 200;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for k in 0..=grid {
        let tau = k as f64 / grid as f64;
        let (s, v) = best_s(tau);
        if v > best.2 {
            best = (tau, s, v);
        }
    }
    let h = 1.0 / grid as f64;
    let (tau, _) = golden_min((best.0 - h).max(0.0), (best.0 + h).min(1.0), 1e-13, &|t| -best_s(t).1);
    let (s, v) = best_s(tau);
    let (tau, s) = if v >= best.2 { (tau, s) } else { (best.0, best.1) };
    if let Some(out) = certificate(s * (1.0 - tau), s * tau) {
        return Ok(SProcedureReport { outcome: out, dimension_caveat });
    }

    // No multipliers: look for a violating point along probe directions.
    for d in probe_directions(&[&q0.matrix, &q1.matrix, &q2.matrix], n, 2000, 29) {
        let i1 = radial_interval(quad(&q1.matrix, &d), q1.constant, false);
        let i2 = radial_interval(quad(&q2.matrix, &d), q2.constant, false);
        let Some((lo, hi)) = i1.zip(i2).and_then(|(a, b)| intersect(a, b)) else {
            continue;
        };
        let d0 = quad(&q0.matrix, &d);
        let sq = if d0 > 0.0 {
            if hi.is_finite() { hi } else { lo + 1.0 + (q0.constant.abs() + 1.0) / d0 }
        } else {
            lo
        };
        let x = &d * sq.sqrt();
        let values = [q0.eval(&x), q1.eval(&x), q2.eval(&x)];
        if values[0] > tol && values[1] <= tol && values[2] <= tol {
            return Ok(SProcedureReport {
                outcome: SProcedureOutcome::Refuted { witness: x, values },
                dimension_caveat,
            });
        }
    }
    Err(Error::Inconclusive(
        "neither multipliers nor a violating point were found".into(),
    ))
}
