//! Scenario reductions to the two-ellipsoid problem: the two-space model,
//! ℓ2-bounded observation errors, and mixed exact/ℓ2 observations.
//!
//! Each scenario compiles to a plain [`ProblemSpec`] on an extended space
//! `ℝⁿ × ℝᵏ`, with `f̃ = (f, z)` and observation error `e = E z`. The native
//! programs are also exposed so that the two routes can be compared.

use nalgebra::{DMatrix, DVector};

use crate::dominance::{self, DominanceProblem, ParamCertificate};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, RANK_TOL};
use crate::recovery::{self, LimitCase, ProblemSpec, RecoveryMap, Scenario};

/// A compiled scenario: the extended spec and how its coordinates relate to
/// the native object `f` and error `e`.
#[derive(Debug, Clone)]
pub struct ExtendedSpec {
    pub spec: ProblemSpec,
    pub native_dim: usize,
    /// Columns span the admissible errors; `e = error_basis · z`.
    pub error_basis: DenseMatrix,
}

impl ExtendedSpec {
    /// `(f, e) ↦ f̃`; `e` is projected onto the admissible error subspace.
    pub fn embed(&self, f: &DVector<f64>, e: &DVector<f64>) -> DVector<f64> {
        let z = self.error_basis.transpose() * e;
        let mut out = DVector::zeros(self.native_dim + z.len());
        out.rows_mut(0, self.native_dim).copy_from(f);
        out.rows_mut(self.native_dim, z.len()).copy_from(&z);
        out
    }

    /// `f̃ ↦ (f, e)`.
    pub fn project(&self, ft: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.native_dim;
        let k = self.error_basis.ncols();
        let f = ft.rows(0, n).into_owned();
        let e = &self.error_basis * ft.rows(n, k);
        (f, e)
    }

    /// Native map `y ↦ f` from an extended map: the first `n` rows.
    pub fn native_rows(&self, d_ext: &DenseMatrix) -> DenseMatrix {
        d_ext.rows(0, self.native_dim).into_owned()
    }
}

/// Model `{dist(f, V) ≤ ε, dist(f, W) ≤ η}` with exact data.
#[derive(Debug, Clone)]
pub struct TwoSpaceSpec {
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    pub epsilon: f64,
    pub eta: f64,
    pub lambda: DenseMatrix,
    pub q: DenseMatrix,
}

fn check_orthonormal(m: &DenseMatrix, name: &str) -> Result<()> {
    linalg::ensure_finite(m, name)?;
    let k = m.ncols();
    if k == 0 {
        return Ok(());
    }
    let dev = (m.transpose() * m - DMatrix::<f64>::identity(k, k)).amax();
    if dev > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "columns of {name} are not orthonormal (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

fn complement_projector(v: &DenseMatrix, n: usize) -> DenseMatrix {
    DMatrix::<f64>::identity(n, n) - v * v.transpose()
}

/// Converts the canonical parameters `(a, b)` into the two-space weights
/// `(c, d) = (a/ε², b/η²)`.
#[derive(Debug, Clone, Copy)]
pub struct LevelBackMap {
    pub epsilon: f64,
    pub eta: f64,
}

impl LevelBackMap {
    pub fn apply(&self, a: f64, b: f64) -> (f64, f64) {
        (a / (self.epsilon * self.epsilon), b / (self.eta * self.eta))
    }
}

pub fn two_space_problem(ts: &TwoSpaceSpec) -> Result<(ProblemSpec, LevelBackMap)> {
    let n = ts.lambda.ncols();
    if ts.v.nrows() != n || ts.w.nrows() != n {
        return Err(Error::DimensionMismatch("V and W must have n rows".into()));
    }
    check_orthonormal(&ts.v, "V")?;
    check_orthonormal(&ts.w, "W")?;
    let spec = ProblemSpec {
        n,
        lambda: ts.lambda.clone(),
        q: ts.q.clone(),
        r: complement_projector(&ts.v, n),
        s: complement_projector(&ts.w, n),
        epsilon: ts.epsilon,
        eta: ts.eta,
        scenario: Scenario::TwoSpace,
    };
    spec.validate()?;
    Ok((spec, LevelBackMap { epsilon: ts.epsilon, eta: ts.eta }))
}

/// Model `{‖Rf‖ ≤ ε}`, observations `y = Λf + e` with `‖Se‖ ≤ η`.
#[derive(Debug, Clone)]
pub struct L2Spec {
    pub lambda: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    /// Acts on `ℝᵐ`.
    pub s: DenseMatrix,
    pub epsilon: f64,
    pub eta: f64,
}

impl L2Spec {
    fn check(&self) -> Result<()> {
        let (m, n) = self.lambda.shape();
        if self.q.ncols() != n || self.r.ncols() != n || self.s.ncols() != m {
            return Err(Error::DimensionMismatch(
                "Q and R need n columns, S needs m columns".into(),
            ));
        }
        if !(self.epsilon > 0.0) || !(self.eta > 0.0) {
            return Err(Error::InvalidInput("levels must be positive".into()));
        }
        Ok(())
    }
}

/// Extended space `ℝⁿ × ℝᵐ`: `Λ̃ = [Λ | I]`, `Q̃ = [Q | 0]`, `R̃ = [R/ε | 0]`,
/// `S̃ = [0 | S/η]`.
pub fn l2_inaccurate_problem(spec: &L2Spec) -> Result<ExtendedSpec> {
    spec.check()?;
    let (m, n) = spec.lambda.shape();
    let eye = DMatrix::identity(m, m);
    extended(
        n,
        &spec.lambda,
        &spec.q,
        &spec.r / spec.epsilon,
        &spec.s / spec.eta,
        eye,
        Scenario::L2Inaccurate,
    )
}

fn extended(
    n: usize,
    lambda: &DenseMatrix,
    q: &DenseMatrix,
    r_scaled: DenseMatrix,
    s_on_errors: DenseMatrix,
    error_basis: DenseMatrix,
    scenario: Scenario,
) -> Result<ExtendedSpec> {
    let k = error_basis.ncols();
    let lt = linalg::hstack(&[lambda, &error_basis]);
    let qt = linalg::hstack(&[q, &DMatrix::zeros(q.nrows(), k)]);
    let rt = linalg::hstack(&[&r_scaled, &DMatrix::zeros(r_scaled.nrows(), k)]);
    let s_z = &s_on_errors * &error_basis;
    let st = linalg::hstack(&[&DMatrix::zeros(s_z.nrows(), n), &s_z]);
    let spec = ProblemSpec {
        n: n + k,
        lambda: lt,
        q: qt,
        r: rt,
        s: st,
        epsilon: 1.0,
        eta: 1.0,
        scenario,
    };
    spec.validate()?;
    Ok(ExtendedSpec {
        spec,
        native_dim: n,
        error_basis,
    })
}

/// The native ℓ2 program `min cε² + dη²  s.t.  cRᵀR + dΛᵀSᵀSΛ ⪰ QᵀQ` on
/// `ℝⁿ`, in the variables `a = cε²`, `b = dη²`.
pub fn l2_native_program(spec: &L2Spec) -> Result<DominanceProblem> {
    spec.check()?;
    let a = linalg::gram(&(&spec.r / spec.epsilon));
    let b = linalg::gram(&(&spec.s * &spec.lambda / spec.eta));
    let c = linalg::gram(&spec.q);
    Ok(DominanceProblem::reduced(a, b, c)?.0)
}

/// `y ↦ argmin c‖Rf‖² + d‖S(y − Λf)‖²`; the `c = 0` and `d = 0` cases are
/// the corresponding lexicographic limits.
pub fn l2_native_map(spec: &L2Spec, c: f64, d: f64) -> Result<RecoveryMap> {
    spec.check()?;
    let (m, n) = spec.lambda.shape();
    let sl = &spec.s * &spec.lambda;
    let zero_r = DMatrix::zeros(spec.r.nrows(), m);
    if c > 0.0 && d > 0.0 {
        let t = linalg::symmetrize(&(linalg::gram(&spec.r) * c + linalg::gram(&sl) * d));
        let rhs = sl.transpose() * &spec.s * d;
        let dm = linalg::solve_spd(&t, &rhs).map_err(|_| {
            Error::SingularRegularizer(format!("cRᵀR + dΛᵀSᵀSΛ is singular for (c, d) = ({c}, {d})"))
        })?;
        return Ok(RecoveryMap::new(dm, &spec.q, c, d, LimitCase::Interior));
    }
    let (dm, case) = if d == 0.0 && c > 0.0 {
        (recovery::lexicographic_lsq((&spec.r, &zero_r), (&sl, &spec.s), None)?, LimitCase::BZero)
    } else if c == 0.0 && d > 0.0 {
        (recovery::lexicographic_lsq((&sl, &spec.s), (&spec.r, &zero_r), None)?, LimitCase::AZero)
    } else {
        return Err(Error::InvalidInput(format!("invalid parameters (c, d) = ({c}, {d})")));
    };
    debug_assert_eq!(dm.nrows(), n);
    Ok(RecoveryMap::new(dm, &spec.q, c, d, case))
}

/// Observations split into an exact part `S′y = S′Λf` and an ℓ2-bounded
/// part: `e ∈ ker S′` with `‖S″e‖ ≤ η`.
#[derive(Debug, Clone)]
pub struct MixedSpec {
    pub lambda: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub s_prime: DenseMatrix,
    pub s_dprime: DenseMatrix,
    pub epsilon: f64,
    pub eta: f64,
}

impl MixedSpec {
    fn check(&self) -> Result<()> {
        let (m, n) = self.lambda.shape();
        if self.q.ncols() != n || self.r.ncols() != n || self.s_prime.ncols() != m || self.s_dprime.ncols() != m {
            return Err(Error::DimensionMismatch(
                "Q and R need n columns, S′ and S″ need m columns".into(),
            ));
        }
        if !(self.epsilon > 0.0) || !(self.eta > 0.0) {
            return Err(Error::InvalidInput("levels must be positive".into()));
        }
        Ok(())
    }

    /// Orthonormal basis of `ker S′`, the admissible error directions.
    pub fn error_basis(&self) -> DenseMatrix {
        linalg::orthonormal_nullspace(&self.s_prime, RANK_TOL)
    }
}

/// Extended space `ℝⁿ × ker S′` with basis `K′`: `Λ̃ = [Λ | K′]`,
/// `S̃ = [0 | S″K′/η]`.
pub fn mixed_problem(spec: &MixedSpec) -> Result<ExtendedSpec> {
    spec.check()?;
    let n = spec.lambda.ncols();
    extended(
        n,
        &spec.lambda,
        &spec.q,
        &spec.r / spec.epsilon,
        &spec.s_dprime / spec.eta,
        spec.error_basis(),
        Scenario::Mixed,
    )
}

/// The native mixed program on `ker(S′Λ)`: Grams of `R/ε`, `S″Λ/η`, `Q`.
pub fn mixed_native_program(spec: &MixedSpec) -> Result<DominanceProblem> {
    spec.check()?;
    let basis = linalg::orthonormal_nullspace(&(&spec.s_prime * &spec.lambda), RANK_TOL);
    let a = linalg::gram(&(&spec.r * &basis / spec.epsilon));
    let b = linalg::gram(&(&spec.s_dprime * &spec.lambda * &basis / spec.eta));
    let c = linalg::gram(&(&spec.q * &basis));
    Ok(DominanceProblem::reduced(a, b, c)?.0)
}

/// `y ↦ argmin c‖Rf‖² + d‖S″(y − Λf)‖²  s.t.  S′Λf = S′y`.
pub fn mixed_native_map(spec: &MixedSpec, c: f64, d: f64) -> Result<RecoveryMap> {
    spec.check()?;
    let m = spec.lambda.nrows();
    let sl = &spec.s_prime * &spec.lambda;
    let data = &spec.s_dprime * &spec.lambda;
    let zero_r = DMatrix::zeros(spec.r.nrows(), m);
    let constraint = (&sl, &spec.s_prime);
    let (dm, case) = if c > 0.0 && d > 0.0 {
        let a = linalg::vstack(&[&(&spec.r * c.sqrt()), &(&data * d.sqrt())]);
        let rhs = linalg::vstack(&[&zero_r, &(&spec.s_dprime * d.sqrt())]);
        (
            recovery::constrained_lsq_matrix(&a, &rhs, constraint.0, constraint.1)?,
            LimitCase::Interior,
        )
    } else if d == 0.0 && c > 0.0 {
        (
            recovery::lexicographic_lsq((&spec.r, &zero_r), (&data, &spec.s_dprime), Some(constraint))?,
            LimitCase::BZero,
        )
    } else if c == 0.0 && d > 0.0 {
        (
            recovery::lexicographic_lsq((&data, &spec.s_dprime), (&spec.r, &zero_r), Some(constraint))?,
            LimitCase::AZero,
        )
    } else {
        return Err(Error::InvalidInput(format!("invalid parameters (c, d) = ({c}, {d})")));
    };
    Ok(RecoveryMap::new(dm, &spec.q, c, d, case))
}

/// Radius and native weights for a compiled scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSolution {
    pub radius_sq: f64,
    pub params: ParamCertificate,
    /// `(c♯, d♯) = (a♯/ε², b♯/η²)`
    pub weights: (f64, f64),
    pub map: RecoveryMap,
}

fn weights_of(params: &ParamCertificate, epsilon: f64, eta: f64) -> (f64, f64) {
    LevelBackMap { epsilon, eta }.apply(params.a_sharp, params.b_sharp)
}

pub fn solve_two_space(ts: &TwoSpaceSpec, tol: f64) -> Result<ScenarioSolution> {
    let (spec, back) = two_space_problem(ts)?;
    let cert = recovery::solve_radius(&spec, tol)?;
    Ok(ScenarioSolution {
        radius_sq: cert.radius_sq,
        weights: back.apply(cert.params.a_sharp, cert.params.b_sharp),
        params: cert.params,
        map: cert.map,
    })
}

/// Solves the ℓ2 scenario on the extended space and returns the native map.
pub fn solve_l2(spec: &L2Spec, tol: f64) -> Result<ScenarioSolution> {
    let ext = l2_inaccurate_problem(spec)?;
    let cert = recovery::solve_radius(&ext.spec, tol)?;
    let weights = weights_of(&cert.params, spec.epsilon, spec.eta);
    let d = ext.native_rows(&cert.map.d);
    Ok(ScenarioSolution {
        radius_sq: cert.radius_sq,
        params: cert.params,
        weights,
        map: RecoveryMap::new(d, &spec.q, weights.0, weights.1, cert.map.limit_case),
    })
}

pub fn solve_mixed(spec: &MixedSpec, tol: f64) -> Result<ScenarioSolution> {
    let ext = mixed_problem(spec)?;
    let cert = recovery::solve_radius(&ext.spec, tol)?;
    let weights = weights_of(&cert.params, spec.epsilon, spec.eta);
    let d = ext.native_rows(&cert.map.d);
    Ok(ScenarioSolution {
        radius_sq: cert.radius_sq,
        params: cert.params,
        weights,
        map: RecoveryMap::new(d, &spec.q, weights.0, weights.1, cert.map.limit_case),
    })
}

/// Optimal value of a native program, for comparison with the extended route.
pub fn native_radius(problem: &DominanceProblem) -> Result<f64> {
    Ok(dominance::sdominance_solve(problem, dominance::DEFAULT_TAU_WIDTH)?.value())
}
