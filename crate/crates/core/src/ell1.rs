//! Model `{‖Rf‖ ≤ ε}` with observation errors in the ℓ1 ball of radius `η`.
//!
//! The error ball is the convex hull of the `2m` vertices `±η e_j`, so every
//! quantity is assembled from `m` axis problems on `ℝⁿ⁺¹ = {(h, θ)}`:
//!
//! ```text
//! Γ = [Λ | 0],  Q⁽ʲ⁾ = [Q | −Q u_j],  R⁽ʲ⁾ = (1/ε)[R | −R u_j],  S̃ = (1/η)[0 | 1]
//! ```
//!
//! with `u_j = Λ† e_j`. The per-axis lower bounds `lb′_j` come from the
//! dominance problem on `ker Γ`; the table `M_{i,j}` measures the worst case
//! of the `j`-th axis map on axis `i` over the whole extended space.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dominance::{self, DominanceProblem, ParamCertificate};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, RANK_TOL};
use crate::recovery::{self, LimitCase, ProblemSpec, RecoveryMap, Scenario};

/// Additive slack (relative to `1 + M_kk`) when testing `M_{i,k} ≤ M_{k,k}`.
pub const CONDITION_SLACK: f64 = 1e-8;
/// Relative margin by which an axis must beat the current best to become `k`.
const ARGMAX_TIE: f64 = 1e-12;

/// Block matrices of one axis problem on `ℝⁿ⁺¹`.
#[derive(Debug, Clone)]
pub struct AxisMaps {
    pub j: usize,
    pub gamma: DenseMatrix,
    pub q_j: DenseMatrix,
    pub r_j: DenseMatrix,
    pub s_tilde: DenseMatrix,
}

impl AxisMaps {
    /// The axis problem as a two-ellipsoid spec (levels folded into the forms).
    pub fn extended_spec(&self) -> ProblemSpec {
        ProblemSpec {
            n: self.gamma.ncols(),
            lambda: self.gamma.clone(),
            q: self.q_j.clone(),
            r: self.r_j.clone(),
            s: self.s_tilde.clone(),
            epsilon: 1.0,
            eta: 1.0,
            scenario: Scenario::L1Inaccurate,
        }
    }
}

/// Shape and level checks, plus injectivity of `R`.
pub fn check_spec(spec: &ProblemSpec) -> Result<()> {
    let n = spec.n;
    for (m, name) in [(&spec.lambda, "Lambda"), (&spec.q, "Q"), (&spec.r, "R")] {
        linalg::ensure_finite(m, name)?;
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{name} has {} columns, expected {n}", m.ncols())));
        }
    }
    if !(spec.epsilon > 0.0 && spec.epsilon.is_finite()) || !(spec.eta > 0.0 && spec.eta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "levels must be positive and finite (epsilon = {}, eta = {})",
            spec.epsilon, spec.eta
        )));
    }
    if spec.m() == 0 {
        return Err(Error::InvalidInput("at least one observation is required".into()));
    }
    linalg::pseudo_inverse(&spec.lambda)?;
    if linalg::rank(&spec.r, RANK_TOL) < n {
        return Err(Error::Unbounded(
            "R must be injective: the worst case is infinite along ker R".into(),
        ));
    }
    Ok(())
}

/// Columns `u_j = Λ† e_j`.
pub fn preimages(spec: &ProblemSpec) -> Result<DenseMatrix> {
    linalg::pseudo_inverse(&spec.lambda)
}

pub fn build_axis(spec: &ProblemSpec, j: usize) -> Result<AxisMaps> {
    let u = preimages(spec)?;
    build_axis_with(spec, &u, j)
}

fn build_axis_with(spec: &ProblemSpec, u: &DenseMatrix, j: usize) -> Result<AxisMaps> {
    let (m, n) = spec.lambda.shape();
    if j >= m {
        return Err(Error::InvalidInput(format!("axis {j} out of range for m = {m}")));
    }
    let uj = u.columns(j, 1).into_owned();
    let gamma = linalg::hstack(&[&spec.lambda, &DMatrix::zeros(m, 1)]);
    let q_j = linalg::hstack(&[&spec.q, &(-(&spec.q * &uj))]);
    let r_j = linalg::hstack(&[&spec.r, &(-(&spec.r * &uj))]) / spec.epsilon;
    let mut s_tilde = DMatrix::zeros(1, n + 1);
    s_tilde[(0, n)] = 1.0 / spec.eta;
    Ok(AxisMaps { j, gamma, q_j, r_j, s_tilde })
}

#[derive(Debug, Clone)]
pub struct L1Workspace {
    /// `Λ†`, whose columns are the `u_j`.
    pub u: DenseMatrix,
    pub lb: Vec<f64>,
    /// `(c_j, d_j)` per axis.
    pub params: Vec<(f64, f64)>,
    pub certs: Vec<ParamCertificate>,
    pub k: usize,
    /// `m_table[i][j] = M_{i,j}` once computed.
    pub m_table: Vec<Vec<Option<f64>>>,
    pub condition_holds: Option<bool>,
    /// `Δ⁽ʲ⁾` with parameters `(c_j, d_j)`.
    pub maps: Vec<RecoveryMap>,
}

impl L1Workspace {
    pub fn m(&self) -> usize {
        self.lb.len()
    }

    pub fn m_column(&self, j: usize) -> Vec<Option<f64>> {
        self.m_table.iter().map(|row| row[j]).collect()
    }
}

/// Lowest index among the maximizers, with a relative tie band.
fn argmax_lowest(values: &[f64]) -> usize {
    let mut k = 0;
    for (j, v) in values.iter().enumerate().skip(1) {
        let best = values[k];
        if *v > best + ARGMAX_TIE * best.abs().max(f64::MIN_POSITIVE) {
            k = j;
        }
    }
    k
}

/// Per-axis lower bounds `lb′_j`, their parameters and maps, and `k`.
pub fn solve_lb_all(spec: &ProblemSpec, tol: f64) -> Result<L1Workspace> {
    check_spec(spec)?;
    let u = preimages(spec)?;
    let m = spec.m();
    let eps2 = spec.epsilon * spec.epsilon;
    let eta2 = spec.eta * spec.eta;
    let per_axis: Vec<(f64, (f64, f64), ParamCertificate, RecoveryMap)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let axis = build_axis_with(spec, &u, j)?;
            let cert = recovery::solve_radius(&axis.extended_spec(), tol)?;
            let (c, d) = (cert.params.a_sharp / eps2, cert.params.b_sharp / eta2);
            let map = if c == 0.0 && d == 0.0 {
                axis_map(spec, j, 1.0, 1.0)?
            } else {
                axis_map(spec, j, c, d)?
            };
            Ok((cert.radius_sq, (c, d), cert.params, map))
        })
        .collect::<Result<Vec<_>>>()?;
    let lb: Vec<f64> = per_axis.iter().map(|p| p.0).collect();
    let k = argmax_lowest(&lb);
    Ok(L1Workspace {
        u,
        k,
        params: per_axis.iter().map(|p| p.1).collect(),
        certs: per_axis.iter().map(|p| p.2.clone()).collect(),
        maps: per_axis.into_iter().map(|p| p.3).collect(),
        lb,
        m_table: vec![vec![None; m]; m],
        condition_holds: None,
    })
}

/// Rows of `Λ` other than `j`, and the matching rows of the identity.
fn other_rows(spec: &ProblemSpec, j: usize) -> (DenseMatrix, DenseMatrix) {
    let m = spec.m();
    let keep: Vec<usize> = (0..m).filter(|&i| i != j).collect();
    let lam = spec.lambda.select_rows(keep.iter());
    let eye = DMatrix::<f64>::identity(m, m).select_rows(keep.iter());
    (lam, eye)
}

/// `Δ⁽ʲ⁾_{c,d}: y ↦ argmin c‖Rf‖² + d(y_j − λ_j f)²  s.t.  λ_i f = y_i (i ≠ j)`.
pub fn axis_map(spec: &ProblemSpec, j: usize, c: f64, d: f64) -> Result<RecoveryMap> {
    let (m, _) = spec.lambda.shape();
    if j >= m {
        return Err(Error::InvalidInput(format!("axis {j} out of range for m = {m}")));
    }
    if !(c >= 0.0 && d >= 0.0) || (c == 0.0 && d == 0.0) {
        return Err(Error::InvalidInput(format!("invalid parameters (c, d) = ({c}, {d})")));
    }
    let (lam_other, eye_other) = other_rows(spec, j);
    let lam_j = spec.lambda.rows(j, 1).into_owned();
    let mut e_j = DMatrix::zeros(1, m);
    e_j[(0, j)] = 1.0;
    let zero_r = DMatrix::zeros(spec.r.nrows(), m);
    let (dm, case) = if c > 0.0 {
        let a = linalg::vstack(&[&(&spec.r * c.sqrt()), &(&lam_j * d.sqrt())]);
        let rhs = linalg::vstack(&[&zero_r, &(&e_j * d.sqrt())]);
        let case = if d > 0.0 { LimitCase::Interior } else { LimitCase::BZero };
        (recovery::constrained_lsq_matrix(&a, &rhs, &lam_other, &eye_other)?, case)
    } else {
        (
            recovery::lexicographic_lsq((&lam_j, &e_j), (&spec.r, &zero_r), Some((&lam_other, &eye_other)))?,
            LimitCase::AZero,
        )
    };
    Ok(RecoveryMap::new(dm, &spec.q, c, d, case))
}

/// Closed form `Λ† − K_j [cK_jᵀRᵀRK_j + dK_jᵀΛᵀΛK_j]⁻¹ K_jᵀ cRᵀRΛ†` with
/// `K_j` an orthonormal basis of `∩_{i≠j} ker λ_i`. Requires `c > 0`.
pub fn axis_map_closed_form(spec: &ProblemSpec, j: usize, c: f64, d: f64) -> Result<DenseMatrix> {
    let pinv = linalg::pseudo_inverse(&spec.lambda)?;
    let (lam_other, _) = other_rows(spec, j);
    let basis = linalg::orthonormal_nullspace(&lam_other, RANK_TOL);
    let rk = &spec.r * &basis;
    let lk = &spec.lambda * &basis;
    let t = linalg::symmetrize(&(rk.transpose() * &rk * c + lk.transpose() * &lk * d));
    let rhs = rk.transpose() * &spec.r * &pinv * c;
    let z = linalg::solve_spd(&t, &rhs)
        .map_err(|_| Error::IllPosed(format!("regularizer on axis {j} is singular")))?;
    Ok(pinv - basis * z)
}

/// Dominance problem on `ℝⁿ⁺¹` for the worst case on axis `i` of a linear
/// map `D` (`q × m`): forms `R⁽ⁱ⁾ᵀR⁽ⁱ⁾`, `S̃ᵀS̃`, and the Gram of
/// `[Q − DΛ | −Q u_i]`.
pub fn linear_error_problem(spec: &ProblemSpec, u: &DenseMatrix, i: usize, d: &DenseMatrix) -> Result<DominanceProblem> {
    let axis = build_axis_with(spec, u, i)?;
    let err = &axis.q_j - d * &axis.gamma;
    DominanceProblem::new(
        linalg::gram(&axis.r_j),
        linalg::gram(&axis.s_tilde),
        linalg::gram(&err),
    )
}

/// `M_{i,j}`: worst case on axis `i` of `Q Δ⁽ʲ⁾_{c_j,d_j}`.
pub fn compute_m(spec: &ProblemSpec, ws: &L1Workspace, i: usize, j: usize) -> Result<f64> {
    let problem = linear_error_problem(spec, &ws.u, i, &ws.maps[j].qd)?;
    Ok(dominance::sdominance_solve(&problem, dominance::DEFAULT_TAU_WIDTH)?.value())
}

/// Fills column `j` of the M table (in parallel over `i`).
pub fn fill_m_column(spec: &ProblemSpec, ws: &mut L1Workspace, j: usize) -> Result<()> {
    let col: Vec<f64> = (0..ws.m())
        .into_par_iter()
        .map(|i| compute_m(spec, ws, i, j))
        .collect::<Result<Vec<_>>>()?;
    for (i, v) in col.into_iter().enumerate() {
        ws.m_table[i][j] = Some(v);
    }
    Ok(())
}

pub fn fill_m_table(spec: &ProblemSpec, ws: &mut L1Workspace) -> Result<()> {
    for j in 0..ws.m() {
        if ws.m_table.iter().any(|row| row[j].is_none()) {
            fill_m_column(spec, ws, j)?;
        }
    }
    Ok(())
}

/// Exact worst case (squared) of a linear map `D` on each axis; the overall
/// worst case over the ℓ1 ball is their maximum.
pub fn l1_error_linear(spec: &ProblemSpec, u: &DenseMatrix, d: &DenseMatrix) -> Result<Vec<f64>> {
    (0..spec.m())
        .into_par_iter()
        .map(|i| {
            let problem = linear_error_problem(spec, u, i, d)?;
            Ok(dominance::sdominance_solve(&problem, dominance::DEFAULT_TAU_WIDTH)?.value())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1Verdict {
    /// `M_{i,k} ≤ M_{k,k}` for all `i`: the axis-`k` map is optimal.
    Holds,
    /// The sufficient condition fails; only bounds are available.
    Fails,
}

#[derive(Debug, Clone)]
pub struct L1Solution {
    pub verdict: L1Verdict,
    pub k: usize,
    /// `lb′_k`, a lower bound on the squared radius (equal to it under `Holds`).
    pub lower: f64,
    /// `max_i M_{i,k}`, the squared worst case of the returned map.
    pub upper: f64,
    /// `M_{·,k}`
    pub m_column: Vec<f64>,
    /// `M_{k,k} − max_{i≠k} M_{i,k}` (nonnegative when the condition holds strictly).
    pub margin: f64,
    /// `(c_k, d_k)`
    pub weights: (f64, f64),
    pub params: ParamCertificate,
    pub map: RecoveryMap,
}

impl L1Solution {
    /// Squared radius of information, when certified.
    pub fn radius_sq(&self) -> Option<f64> {
        (self.verdict == L1Verdict::Holds).then_some(self.lower)
    }
}

pub fn condition_holds(m_column: &[f64], k: usize) -> bool {
    let mkk = m_column[k];
    m_column
        .iter()
        .all(|v| *v <= mkk + CONDITION_SLACK * (1.0 + mkk.abs()))
}

pub fn l1_optimal_solve(spec: &ProblemSpec, tol: f64) -> Result<(L1Workspace, L1Solution)> {
    let mut ws = solve_lb_all(spec, tol)?;
    let k = ws.k;
    fill_m_column(spec, &mut ws, k)?;
    let m_column: Vec<f64> = ws.m_column(k).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let holds = condition_holds(&m_column, k);
    ws.condition_holds = Some(holds);
    let others = m_column
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = if others.is_finite() { m_column[k] - others } else { 0.0 };
    let upper = m_column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let solution = L1Solution {
        verdict: if holds { L1Verdict::Holds } else { L1Verdict::Fails },
        k,
        lower: ws.lb[k],
        upper,
        m_column,
        margin,
        weights: ws.params[k],
        params: ws.certs[k].clone(),
        map: ws.maps[k].clone(),
    };
    Ok((ws, solution))
}

#[derive(Debug, Clone)]
pub struct MinimaxResult {
    /// Best linear map found (`q × m`, estimating `Qf` from `y`).
    pub d: DenseMatrix,
    pub value: f64,
    /// Best value after each iteration (index 0 is the starting map).
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Reached the lower bound within tolerance.
    pub converged: bool,
    /// Stopped because the iteration budget ran out.
    pub hit_max_iterations: bool,
}

struct AxisEval {
    value: f64,
    axis: usize,
    g: DVector<f64>,
}

fn evaluate_linear(spec: &ProblemSpec, u: &DenseMatrix, d: &DenseMatrix) -> Result<AxisEval> {
    let per_axis: Vec<(f64, DVector<f64>)> = (0..spec.m())
        .into_par_iter()
        .map(|i| {
            let problem = linear_error_problem(spec, u, i, d)?;
            let cert = dominance::sdominance_solve(&problem, dominance::DEFAULT_TAU_WIDTH)?;
            let ext = dominance::worst_direction(&problem, &cert)?;
            Ok((cert.value(), ext.h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (v, _)) in per_axis.iter().enumerate() {
        if *v > per_axis[best].0 {
            best = i;
        }
    }
    let (value, g) = per_axis[best].clone();
    Ok(AxisEval { value, axis: best, g })
}

/// Minimizes the squared ℓ1 worst case `F(D) = max_i f_i(D)` over linear
/// maps by a subgradient method started at `Q Δ⁽ᵏ⁾`.
pub fn minimax_linear(spec: &ProblemSpec, ws: &L1Workspace, iters: usize, tol: f64) -> Result<MinimaxResult> {
    let lb = ws.lb.iter().cloned().fold(0.0, f64::max);
    let target_reached = |v: f64| v <= lb + tol * (1.0 + lb);
    let d0 = ws.maps[ws.k].qd.clone();
    let rho = 0.1 * d0.norm() + 0.1;
    let polyak = ws.condition_holds == Some(true);

    let mut d = d0.clone();
    let mut eval = evaluate_linear(spec, &ws.u, &d)?;
    let mut best = (eval.value, d0);
    let mut history = vec![best.0];
    let mut iterations = 0;
    let mut converged = target_reached(best.0);
    while !converged && iterations < iters {
        iterations += 1;
        let axis = build_axis_with(spec, &ws.u, eval.axis)?;
        let gg = &axis.gamma * &eval.g;
        let resid = &axis.q_j * &eval.g - &d * &gg;
        let grad = resid * gg.transpose() * -2.0;
        let gn = grad.norm();
        if gn == 0.0 {
            break;
        }
        let step = if polyak {
            (eval.value - lb).max(0.0) / (gn * gn)
        } else {
            rho / (iterations as f64).sqrt() / gn
        };
        d -= grad * step;
        eval = evaluate_linear(spec, &ws.u, &d)?;
        if eval.value < best.0 {
            best = (eval.value, d.clone());
        }
        history.push(best.0);
        converged = target_reached(best.0);
    }
    Ok(MinimaxResult {
        d: best.1,
        value: best.0,
        history,
        iterations,
        converged,
        hit_max_iterations: !converged && iterations >= iters,
    })
}

/// One nonzero entry of an SDPA constraint matrix (1-based block and indices,
/// upper triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaEntry {
    pub matrix: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Semidefinite program in SDPA sparse form:
/// minimize `cᵀx` subject to `Σ x_k F_k − F_0 ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m_dim: usize,
    pub block_struct: Vec<i64>,
    pub c: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

impl SdpaProblem {
    pub fn n_blocks(&self) -> usize {
        self.block_struct.len()
    }

    pub fn to_sdpa_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "* minimax over linear recovery maps, l1-bounded errors");
        let _ = writeln!(out, "{}", self.m_dim);
        let _ = writeln!(out, "{}", self.block_struct.len());
        let blocks: Vec<String> = self.block_struct.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "{}", blocks.join(" "));
        let c: Vec<String> = self.c.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", c.join(" "));
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {} {} {}", e.matrix, e.block, e.i, e.j, fmt_f64(e.value));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
        let tokens = |l: &str| -> Vec<String> {
            l.split(|ch: char| ch.is_whitespace() || ",{}()".contains(ch))
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        };
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            let (no, l) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            Ok((no, tokens(l)))
        };
        fn num<T: std::str::FromStr>(line: usize, t: &str) -> Result<T> {
            t.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse {t:?}"),
            })
        }
        let (no, t) = next("mDIM")?;
        let m_dim: usize = num(no, t.first().map_or("", |s| s))?;
        let (no, t) = next("nBLOCK")?;
        let n_block: usize = num(no, t.first().map_or("", |s| s))?;
        let (no, t) = next("bLOCKsTRUCT")?;
        if t.len() < n_block {
            return Err(Error::Parse { line: no, msg: "short block structure".into() });
        }
        let block_struct = t[..n_block].iter().map(|s| num(no, s)).collect::<Result<Vec<i64>>>()?;
        let (no, t) = next("c vector")?;
        if t.len() < m_dim {
            return Err(Error::Parse { line: no, msg: "short c vector".into() });
        }
        let c = t[..m_dim].iter().map(|s| num(no, s)).collect::<Result<Vec<f64>>>()?;
        let mut entries = Vec::new();
        for (no, l) in lines {
            let t = tokens(l);
            if t.len() != 5 {
                return Err(Error::Parse { line: no, msg: format!("expected 5 fields, found {}", t.len()) });
            }
            let e = SdpaEntry {
                matrix: num(no, &t[0])?,
                block: num(no, &t[1])?,
                i: num(no, &t[2])?,
                j: num(no, &t[3])?,
                value: num(no, &t[4])?,
            };
            if e.matrix > m_dim || e.block == 0 || e.block > n_block {
                return Err(Error::Parse { line: no, msg: "matrix or block index out of range".into() });
            }
            let size = block_struct[e.block - 1].unsigned_abs() as usize;
            if e.i == 0 || e.j == 0 || e.i > size || e.j > size {
                return Err(Error::Parse { line: no, msg: "entry index out of range".into() });
            }
            entries.push(e);
        }
        Ok(Self { m_dim, block_struct, c, entries })
    }

    /// `Σ x_k F_k − F_0`, block by block (diagonal blocks as diagonal matrices).
    pub fn block_matrices(&self, x: &[f64]) -> Result<Vec<DenseMatrix>> {
        if x.len() != self.m_dim {
            return Err(Error::DimensionMismatch(format!("expected {} variables", self.m_dim)));
        }
        let mut blocks: Vec<DenseMatrix> = self
            .block_struct
            .iter()
            .map(|b| {
                let s = b.unsigned_abs() as usize;
                DMatrix::zeros(s, s)
            })
            .collect();
        for e in &self.entries {
            let coef = if e.matrix == 0 { -1.0 } else { x[e.matrix - 1] };
            let blk = &mut blocks[e.block - 1];
            blk[(e.i - 1, e.j - 1)] += coef * e.value;
            if e.i != e.j {
                blk[(e.j - 1, e.i - 1)] += coef * e.value;
            }
        }
        Ok(blocks)
    }

    /// Smallest eigenvalue over all blocks at `x`.
    pub fn min_eigenvalue(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .block_matrices(x)?
            .iter()
            .map(linalg::lambda_min)
            .fold(f64::INFINITY, f64::min))
    }
}

/// Variable layout: `x = (γ, a_1, b_1, …, a_m, b_m, D_11, D_12, …, D_qm)`.
pub fn sdpa_var_count(q: usize, m: usize) -> usize {
    1 + 2 * m + q * m
}

fn var_a(i: usize) -> usize {
    2 + 2 * i
}

fn var_b(i: usize) -> usize {
    3 + 2 * i
}

fn var_d(m: usize, r: usize, s: usize) -> usize {
    2 + 2 * m + r * m + s
}

/// The SDP over `(γ, a_i, b_i, D)`: one block
/// `[[I, Q⁽ⁱ⁾ − DΓ], [·ᵀ, a_i R⁽ⁱ⁾ᵀR⁽ⁱ⁾ + b_i S̃ᵀS̃]] ⪰ 0` per axis plus a
/// diagonal block for `γ ≥ a_i + b_i`, `a_i ≥ 0`, `b_i ≥ 0`.
pub fn build_sdpa(spec: &ProblemSpec, ws: &L1Workspace) -> Result<SdpaProblem> {
    let (m, n) = spec.lambda.shape();
    let q = spec.q.nrows();
    let size = q + n + 1;
    let mut entries = Vec::new();
    let mut push = |matrix: usize, block: usize, i: usize, j: usize, value: f64| {
        if value != 0.0 {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            entries.push(SdpaEntry { matrix, block, i: i + 1, j: j + 1, value });
        }
    };
    for i in 0..m {
        let axis = build_axis_with(spec, &ws.u, i)?;
        let blk = i + 1;
        for t in 0..q {
            push(0, blk, t, t, -1.0);
        }
        for r in 0..q {
            for col in 0..=n {
                push(0, blk, r, q + col, -axis.q_j[(r, col)]);
            }
        }
        let rr = linalg::gram(&axis.r_j);
        let ss = linalg::gram(&axis.s_tilde);
        for a in 0..=n {
            for b in a..=n {
                push(var_a(i), blk, q + a, q + b, rr[(a, b)]);
                push(var_b(i), blk, q + a, q + b, ss[(a, b)]);
            }
        }
        for r in 0..q {
            for s in 0..m {
                for col in 0..=n {
                    push(var_d(m, r, s), blk, r, q + col, -axis.gamma[(s, col)]);
                }
            }
        }
        let lin = m + 1;
        push(1, lin, 3 * i, 3 * i, 1.0);
        push(var_a(i), lin, 3 * i, 3 * i, -1.0);
        push(var_b(i), lin, 3 * i, 3 * i, -1.0);
        push(var_a(i), lin, 3 * i + 1, 3 * i + 1, 1.0);
        push(var_b(i), lin, 3 * i + 2, 3 * i + 2, 1.0);
    }
    entries.sort_by_key(|e| (e.matrix, e.block, e.i, e.j));
    let mut block_struct = vec![size as i64; m];
    block_struct.push(-3 * m as i64);
    let m_dim = sdpa_var_count(q, m);
    let mut c = vec![0.0; m_dim];
    c[0] = 1.0;
    Ok(SdpaProblem { m_dim, block_struct, c, entries })
}

pub fn export_sdpa(spec: &ProblemSpec, ws: &L1Workspace, path: &Path) -> Result<SdpaProblem> {
    let sdp = build_sdpa(spec, ws)?;
    std::fs::write(path, sdp.to_sdpa_string()).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    Ok(sdp)
}

/// A feasible point of the exported SDP for a given map `D`: the per-axis
/// dominance certificates give `(a_i, b_i)` and `γ = max_i (a_i + b_i)`.
pub fn sdpa_point(spec: &ProblemSpec, ws: &L1Workspace, d: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, _) = spec.lambda.shape();
    let q = spec.q.nrows();
    let mut x = vec![0.0; sdpa_var_count(q, m)];
    for i in 0..m {
        let problem = linear_error_problem(spec, &ws.u, i, d)?;
        let cert = dominance::sdominance_solve(&problem, dominance::DEFAULT_TAU_WIDTH)?;
        x[var_a(i) - 1] = cert.a_sharp;
        x[var_b(i) - 1] = cert.b_sharp;
        x[0] = x[0].max(cert.value());
    }
    for r in 0..q {
        for s in 0..m {
            x[var_d(m, r, s) - 1] = d[(r, s)];
        }
    }
    Ok(x)
}
