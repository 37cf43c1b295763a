//! Two-hyperellipsoid recovery problems: radius of information and the
//! constrained-regularization maps that attain it.
//!
//! A [`ProblemSpec`] describes the model set `{f : ‖Rf‖ ≤ ε, ‖Sf‖ ≤ η}` in
//! `ℝⁿ`, exact observations `y = Λf`, and a quantity of interest `Qf`.

use nalgebra::{DMatrix, DVector};

use crate::dominance::{self, DominanceProblem, ParamCertificate};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, RANK_TOL};

/// Where a [`ProblemSpec`] came from. The solver itself always reads the
/// spec as the exact-data two-ellipsoid problem; the tag only records
/// provenance for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Exact2Ellipsoid,
    TwoSpace,
    L2Inaccurate,
    Mixed,
    L1Inaccurate,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Exact2Ellipsoid => "exact",
            Scenario::TwoSpace => "two-space",
            Scenario::L2Inaccurate => "l2",
            Scenario::Mixed => "mixed",
            Scenario::L1Inaccurate => "l1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub lambda: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub s: DenseMatrix,
    pub epsilon: f64,
    pub eta: f64,
    pub scenario: Scenario,
}

impl ProblemSpec {
    /// Exact-data problem with unit levels.
    pub fn new(lambda: DenseMatrix, q: DenseMatrix, r: DenseMatrix, s: DenseMatrix) -> Result<Self> {
        let spec = Self {
            n: lambda.ncols(),
            lambda,
            q,
            r,
            s,
            epsilon: 1.0,
            eta: 1.0,
            scenario: Scenario::Exact2Ellipsoid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_levels(mut self, epsilon: f64, eta: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        self
    }

    pub fn m(&self) -> usize {
        self.lambda.nrows()
    }

    /// `R / ε`
    pub fn r_scaled(&self) -> DenseMatrix {
        &self.r / self.epsilon
    }

    /// `S / η`
    pub fn s_scaled(&self) -> DenseMatrix {
        &self.s / self.eta
    }

    /// Checks shapes, finiteness, surjectivity of `Λ` and
    /// `ker R ∩ ker S ∩ ker Λ = {0}`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for (m, name) in [(&self.lambda, "Lambda"), (&self.q, "Q"), (&self.r, "R"), (&self.s, "S")] {
            linalg::ensure_finite(m, name)?;
            if m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} columns, expected {n}",
                    m.ncols()
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "levels must be positive and finite (epsilon = {}, eta = {})",
                self.epsilon, self.eta
            )));
        }
        linalg::pseudo_inverse(&self.lambda)?;
        let stacked = linalg::vstack(&[&self.r, &self.s, &self.lambda]);
        if n > 0 && linalg::rank(&stacked, RANK_TOL) < n {
            return Err(Error::DegenerateModel(
                "ker R ∩ ker S ∩ ker Lambda is nontrivial".into(),
            ));
        }
        Ok(())
    }
}

/// Orthonormal basis `N` of `ker Λ` and the Grams of `R/ε`, `S/η`, `Q` on it.
pub fn restrict_grams(spec: &ProblemSpec) -> Result<(DenseMatrix, DominanceProblem)> {
    let basis = linalg::orthonormal_nullspace(&spec.lambda, RANK_TOL);
    let a = linalg::gram(&(spec.r_scaled() * &basis));
    let b = linalg::gram(&(spec.s_scaled() * &basis));
    let c = linalg::gram(&(&spec.q * &basis));
    let problem = DominanceProblem::new(a, b, c)?.with_labels("R on ker Lambda", "S on ker Lambda", "Q on ker Lambda");
    Ok((basis, problem))
}

/// Which formula produced a [`RecoveryMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitCase {
    /// Both parameters positive.
    Interior,
    /// `a = 0`: minimize the `S` seminorm first, then `R`.
    AZero,
    /// `b = 0`: minimize the `R` seminorm first, then `S`.
    BZero,
    /// `ker Λ = {0}`: the data determine `f`.
    Determined,
}

/// A linear recovery map `y ↦ D y` together with `Q D`.
#[derive(Debug, Clone)]
pub struct RecoveryMap {
    pub d: DenseMatrix,
    pub qd: DenseMatrix,
    pub a: f64,
    pub b: f64,
    pub limit_case: LimitCase,
}

impl RecoveryMap {
    pub fn new(d: DenseMatrix, q: &DenseMatrix, a: f64, b: f64, limit_case: LimitCase) -> Self {
        Self {
            qd: q * &d,
            d,
            a,
            b,
            limit_case,
        }
    }

    /// Returns `(D y, Q D y)`.
    pub fn apply(&self, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if y.len() != self.d.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "observation has length {}, map expects {}",
                y.len(),
                self.d.ncols()
            )));
        }
        Ok((&self.d * y, &self.qd * y))
    }
}

#[derive(Debug, Clone)]
pub struct RadiusCertificate {
    pub radius_sq: f64,
    pub params: ParamCertificate,
    pub map: RecoveryMap,
    pub oracle_lb: Option<f64>,
}

/// Radius of information (squared) and an optimal map for the exact-data
/// two-ellipsoid problem.
pub fn solve_radius(spec: &ProblemSpec, tol: f64) -> Result<RadiusCertificate> {
    spec.validate()?;
    let (basis, problem) = restrict_grams(spec)?;
    if basis.ncols() == 0 {
        let d = linalg::pseudo_inverse(&spec.lambda)?;
        return Ok(RadiusCertificate {
            radius_sq: 0.0,
            params: ParamCertificate::zero(),
            map: RecoveryMap::new(d, &spec.q, 0.0, 0.0, LimitCase::Determined),
            oracle_lb: None,
        });
    }
    let width = tol.min(dominance::DEFAULT_TAU_WIDTH.max(1e-15)).max(1e-15);
    let params = dominance::sdominance_solve(&problem, width)?;
    let map = if params.value() > 0.0 {
        regularization_map(spec, params.a_sharp, params.b_sharp)?
    } else {
        // Q vanishes on ker Λ: every interpolating map is optimal; pick the
        // one the a = b limit would give.
        regularization_map(spec, 1.0, 1.0)?
    };
    Ok(RadiusCertificate {
        radius_sq: params.a_sharp + params.b_sharp,
        params,
        map,
        oracle_lb: None,
    })
}

/// The constrained regularization map
/// `y ↦ argmin a‖Rf/ε‖² + b‖Sf/η‖²  s.t. Λf = y`, as an `n × m` matrix.
///
/// When one parameter vanishes the map is the limit of the above, i.e. a
/// lexicographic minimization: the surviving seminorm first, the other one
/// among its minimizers.
pub fn regularization_map(spec: &ProblemSpec, a: f64, b: f64) -> Result<RecoveryMap> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("parameters must be nonnegative (a = {a}, b = {b})")));
    }
    let pinv = linalg::pseudo_inverse(&spec.lambda)?;
    let basis = linalg::orthonormal_nullspace(&spec.lambda, RANK_TOL);
    if basis.ncols() == 0 {
        return Ok(RecoveryMap::new(pinv, &spec.q, a, b, LimitCase::Determined));
    }
    let r = spec.r_scaled();
    let s = spec.s_scaled();
    if a > 0.0 && b > 0.0 {
        let rn = &r * &basis;
        let sn = &s * &basis;
        let t = linalg::symmetrize(&(rn.transpose() * &rn * a + sn.transpose() * &sn * b));
        let rhs = (rn.transpose() * &r * a + sn.transpose() * &s * b) * &pinv;
        let z = linalg::solve_spd(&t, &rhs).map_err(|_| {
            Error::SingularRegularizer(format!(
                "a(RN)ᵀ(RN) + b(SN)ᵀ(SN) is singular for (a, b) = ({a}, {b})"
            ))
        })?;
        let d = &pinv - &basis * z;
        return Ok(RecoveryMap::new(d, &spec.q, a, b, LimitCase::Interior));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::InvalidInput(
            "a and b cannot both vanish when ker Lambda is nontrivial".into(),
        ));
    }
    let m = spec.m();
    let zeros_r = DMatrix::zeros(r.nrows(), m);
    let zeros_s = DMatrix::zeros(s.nrows(), m);
    let eye = DMatrix::identity(m, m);
    let (primary, secondary, case) = if b == 0.0 {
        ((&r, &zeros_r), (&s, &zeros_s), LimitCase::BZero)
    } else {
        ((&s, &zeros_s), (&r, &zeros_r), LimitCase::AZero)
    };
    let d = lexicographic_lsq(primary, secondary, Some((&spec.lambda, &eye)))
        .map_err(|e| match e {
            Error::IllPosed(msg) => Error::SingularRegularizer(msg),
            other => other,
        })?;
    Ok(RecoveryMap::new(d, &spec.q, a, b, case))
}

/// Residual threshold for accepting `B x̄ = b`.
fn consistency_tol(b: &DenseMatrix, rhs: &DenseMatrix) -> f64 {
    1e-9 * (1.0 + rhs.norm()) * (1.0 + b.norm())
}

/// Minimizer of `‖A X − A_rhs‖_F²` subject to `B X = B_rhs`, column by column.
///
/// Uses `X = X̄ − K (KᵀAᵀAK)⁻¹ KᵀAᵀ(AX̄ − A_rhs)` with `X̄ = B⁺ B_rhs` and `K`
/// an orthonormal basis of `ker B`.
pub fn constrained_lsq_matrix(
    a: &DenseMatrix,
    a_rhs: &DenseMatrix,
    b: &DenseMatrix,
    b_rhs: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = a.ncols();
    if b.ncols() != n || a_rhs.nrows() != a.nrows() || b_rhs.nrows() != b.nrows() || a_rhs.ncols() != b_rhs.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "constrained_lsq: A {:?}, a {:?}, B {:?}, b {:?}",
            a.shape(),
            a_rhs.shape(),
            b.shape(),
            b_rhs.shape()
        )));
    }
    let x_bar = linalg::pinv(b, RANK_TOL) * b_rhs;
    let residual = (b * &x_bar - b_rhs).norm();
    if residual > consistency_tol(b, b_rhs) {
        return Err(Error::InfeasibleConstraint(format!(
            "right-hand side is not in the range of B (residual {residual:.3e})"
        )));
    }
    let kernel = linalg::orthonormal_nullspace(b, RANK_TOL);
    if kernel.ncols() == 0 {
        return Ok(x_bar);
    }
    let ak = a * &kernel;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if ak.nrows() < ak.ncols() || linalg::rank(&ak, RANK_TOL) < ak.ncols() || ak.norm() <= RANK_TOL * scale {
        return Err(Error::IllPosed(
            "A is not injective on ker B".into(),
        ));
    }
    let gram = linalg::gram(&ak);
    let rhs = ak.transpose() * (a * &x_bar - a_rhs);
    let z = linalg::solve_spd(&gram, &rhs).map_err(|_| Error::IllPosed("A restricted to ker B is ill-conditioned".into()))?;
    Ok(x_bar - kernel * z)
}

/// Vector form of [`constrained_lsq_matrix`].
pub fn constrained_lsq(
    a: &DenseMatrix,
    a_vec: &DVector<f64>,
    b: &DenseMatrix,
    b_vec: &DVector<f64>,
) -> Result<DVector<f64>> {
    let x = constrained_lsq_matrix(
        a,
        &DMatrix::from_column_slice(a_vec.len(), 1, a_vec.as_slice()),
        b,
        &DMatrix::from_column_slice(b_vec.len(), 1, b_vec.as_slice()),
    )?;
    Ok(x.column(0).into_owned())
}

/// Minimizes `‖A₂X − a₂‖` over the minimizers of `‖A₁X − a₁‖` subject to
/// the optional constraint `BX = b`.
///
/// The first-stage minimizers are exactly the solutions of `BX = b` together
/// with the normal equations `K_Bᵀ A₁ᵀ(A₁X − a₁) = 0`, so the second stage is
/// another constrained least squares with those equations stacked.
pub fn lexicographic_lsq(
    primary: (&DenseMatrix, &DenseMatrix),
    secondary: (&DenseMatrix, &DenseMatrix),
    constraint: Option<(&DenseMatrix, &DenseMatrix)>,
) -> Result<DenseMatrix> {
    let (a1, r1) = primary;
    let (a2, r2) = secondary;
    let n = a1.ncols();
    let k = r1.ncols();
    let (b, rhs) = match constraint {
        Some((b, rhs)) => (b.clone(), rhs.clone()),
        None => (DMatrix::zeros(0, n), DMatrix::zeros(0, k)),
    };
    let kernel = linalg::orthonormal_nullspace(&b, RANK_TOL);
    let normal = kernel.transpose() * a1.transpose() * a1;
    let normal_rhs = kernel.transpose() * a1.transpose() * r1;
    let stacked = linalg::vstack(&[&b, &normal]);
    let stacked_rhs = linalg::vstack(&[&rhs, &normal_rhs]);
    constrained_lsq_matrix(a2, r2, &stacked, &stacked_rhs)
}

/// `sup ‖Mf‖²` over `{‖Rf‖ ≤ ε, ‖Sf‖ ≤ η}` by the dominance dual on `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct DualWorstCase {
    pub value: f64,
    pub params: ParamCertificate,
    /// Set when `n < 3`: the dual is then an upper bound whose tightness is
    /// not guaranteed by the S-procedure.
    pub dimension_caveat: bool,
}

pub fn worst_case_error_dual(m: &DenseMatrix, spec: &ProblemSpec) -> Result<DualWorstCase> {
    if m.ncols() != spec.n {
        return Err(Error::DimensionMismatch(format!(
            "error map has {} columns, expected {}",
            m.ncols(),
            spec.n
        )));
    }
    linalg::ensure_finite(m, "M")?;
    let a = linalg::gram(&spec.r_scaled());
    let b = linalg::gram(&spec.s_scaled());
    let c = linalg::gram(m);
    let (problem, _) = DominanceProblem::reduced(a, b, c)?;
    let params = dominance::sdominance_solve(&problem, dominance::DEFAULT_TAU_WIDTH)?;
    Ok(DualWorstCase {
        value: params.value(),
        params,
        dimension_caveat: spec.n < 3,
    })
}

/// Component maps `P_i = K T⁻¹ c_i KᵀR_iᵀR_i` with `T = Σ c_i KᵀR_iᵀR_iK`,
/// for an orthonormal basis `K` of a subspace.
///
/// With all inputs equal to `f`, `Σ P_i f` is the `N`-component removed by a
/// constrained regularization map, i.e. `(I − DΛ) f` when `K` spans `ker Λ`.
pub fn weighted_projection(basis: &DenseMatrix, forms: &[(f64, &DenseMatrix)]) -> Result<Vec<DenseMatrix>> {
    let p = basis.ncols();
    let mut t = DMatrix::zeros(p, p);
    for (c, r) in forms {
        let rk = *r * basis;
        t += rk.transpose() * &rk * *c;
    }
    let t = linalg::symmetrize(&t);
    forms
        .iter()
        .map(|(c, r)| {
            let rk = *r * basis;
            let rhs = rk.transpose() * *r * *c;
            let z = linalg::solve_spd(&t, &rhs).map_err(|_| {
                Error::SingularRegularizer("weighted Gram on the subspace is singular".into())
            })?;
            Ok(basis * z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DenseMatrix {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn e1() -> ProblemSpec {
        ProblemSpec::new(
            mat(1, 2, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            mat(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn restrict_grams_e1() {
        let (basis, p) = restrict_grams(&e1()).unwrap();
        assert_eq!(basis.shape(), (2, 1));
        assert!((p.a()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((p.b()[(0, 0)] - 4.0).abs() < 1e-14);
        assert!((p.c()[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn restrict_grams_degenerate_cases() {
        let spec = ProblemSpec::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let (basis, p) = restrict_grams(&spec).unwrap();
        assert_eq!((basis.ncols(), p.dim()), (0, 0));
        let mut spec = e1();
        spec.q = DMatrix::zeros(2, 2);
        let (_, p) = restrict_grams(&spec).unwrap();
        assert_eq!(p.c()[(0, 0)], 0.0);
    }

    #[test]
    fn solve_radius_e1() {
        let cert = solve_radius(&e1(), 1e-12).unwrap();
        assert!((cert.radius_sq - 0.25).abs() < 1e-12);
        assert_eq!(cert.params.a_sharp, 0.0);
        assert!((cert.params.b_sharp - 0.25).abs() < 1e-12);
        let (f, qf) = cert.map.apply(&dvector![3.0]).unwrap();
        assert!((f - dvector![3.0, 0.0]).norm() < 1e-12);
        assert!((qf - dvector![3.0, 0.0]).norm() < 1e-12);
    }

    #[test]
    fn solve_radius_invertible_and_coinciding() {
        let lam = mat(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let spec = ProblemSpec::new(lam.clone(), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let cert = solve_radius(&spec, 1e-12).unwrap();
        assert_eq!(cert.radius_sq, 0.0);
        assert!((&cert.map.d * &lam - DMatrix::identity(2, 2)).amax() < 1e-12);

        let spec = ProblemSpec::new(mat(1, 2, &[1.0, 0.0]), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let cert = solve_radius(&spec, 1e-12).unwrap();
        assert!((cert.radius_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regularization_map_examples() {
        let spec = ProblemSpec::new(mat(1, 2, &[1.0, 0.0]), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let map = regularization_map(&spec, 1.0, 1.0).unwrap();
        assert!((&map.d - mat(2, 1, &[1.0, 0.0])).amax() < 1e-14);
        let map = regularization_map(&e1(), 0.0, 0.25).unwrap();
        assert_eq!(map.limit_case, LimitCase::AZero);
        assert!((&map.d - mat(2, 1, &[1.0, 0.0])).amax() < 1e-14);
        let lam = mat(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let spec = ProblemSpec::new(lam.clone(), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let map = regularization_map(&spec, 0.3, 5.0).unwrap();
        assert!((&map.d * &lam - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn limit_map_uses_kernel_of_primary() {
        // R = diag(0, 1, 0): ker R = span(e1, e3); Λ = [1 0 1] (observes f1 + f3).
        let spec = ProblemSpec::new(
            mat(1, 3, &[1.0, 0.0, 1.0]),
            DMatrix::identity(3, 3),
            mat(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            mat(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]),
        )
        .unwrap();
        let map = regularization_map(&spec, 1.0, 0.0).unwrap();
        // Rf = 0 forces f2 = 0; then minimize f1² + 4 f3² with f1 + f3 = y.
        let expected = mat(3, 1, &[0.8, 0.0, 0.2]);
        assert!((&map.d - expected).amax() < 1e-12);
    }

    #[test]
    fn constrained_lsq_examples() {
        let x = constrained_lsq(&DMatrix::identity(2, 2), &dvector![5.0, 5.0], &DMatrix::identity(2, 2), &dvector![1.0, 2.0]).unwrap();
        assert!((x - dvector![1.0, 2.0]).norm() < 1e-14);
        let x = constrained_lsq(&DMatrix::identity(2, 2), &dvector![0.0, 0.0], &mat(1, 2, &[1.0, 0.0]), &dvector![3.0]).unwrap();
        assert!((x - dvector![3.0, 0.0]).norm() < 1e-14);
        let x = constrained_lsq(&mat(2, 2, &[1.0, 0.0, 0.0, 2.0]), &dvector![0.0, 0.0], &mat(1, 2, &[1.0, 1.0]), &dvector![1.0]).unwrap();
        assert!((x - dvector![0.8, 0.2]).norm() < 1e-14);
    }

    #[test]
    fn constrained_lsq_errors() {
        let r = constrained_lsq(&DMatrix::identity(2, 2), &dvector![0.0, 0.0], &mat(2, 2, &[1.0, 0.0, 1.0, 0.0]), &dvector![1.0, 2.0]);
        assert!(matches!(r, Err(Error::InfeasibleConstraint(_))));
        let r = constrained_lsq(&mat(1, 2, &[1.0, 0.0]), &dvector![0.0], &mat(1, 2, &[1.0, 0.0]), &dvector![1.0]);
        assert!(matches!(r, Err(Error::IllPosed(_))));
    }

    #[test]
    fn worst_case_dual_examples() {
        let spec = e1();
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(worst_case_error_dual(&zero, &spec).unwrap().value, 0.0);
        let m = mat(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let w = worst_case_error_dual(&m, &spec).unwrap();
        assert!((w.value - 0.25).abs() < 1e-12);
        assert!(w.dimension_caveat);
        let spec = ProblemSpec::new(mat(1, 2, &[1.0, 0.0]), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let m = mat(2, 2, &[1.0, 2.0, -0.5, 0.3]);
        let w = worst_case_error_dual(&m, &spec).unwrap();
        assert!((w.value - linalg::lambda_max(&linalg::gram(&m))).abs() < 1e-10);
    }

    #[test]
    fn worst_case_dual_unbounded() {
        let spec = ProblemSpec::new(
            mat(1, 2, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            mat(1, 2, &[0.0, 1.0]),
            mat(1, 2, &[0.0, 1.0]),
        )
        .unwrap();
        let r = worst_case_error_dual(&mat(1, 2, &[1.0, 0.0]), &spec);
        assert!(matches!(r, Err(Error::Unbounded(_))));
    }

    #[test]
    fn spec_validation() {
        let r = ProblemSpec::new(mat(2, 2, &[1.0, 0.0, 2.0, 0.0]), DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        assert!(matches!(r, Err(Error::RankDeficient(_))));
        let r = ProblemSpec::new(mat(1, 2, &[1.0, 0.0]), DMatrix::identity(2, 2), mat(1, 2, &[1.0, 0.0]), mat(1, 2, &[1.0, 0.0]));
        assert!(matches!(r, Err(Error::DegenerateModel(_))));
        let r = ProblemSpec::new(mat(1, 2, &[1.0, 0.0]), DMatrix::identity(3, 3), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
