//! Translation of a [`ConicProblem`] into Clarabel's standard form and back.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::ConicError;
use crate::problem::{AffineExpr, ConicProblem, Constraint, Sense, SymBlock, VarId};

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

// A threaded BLAS may reorder reductions between runs; solves are expected to
// be bit-reproducible and are parallelised one level up instead.
fn single_threaded_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    /// Objective in the problem's own sense, log terms included.
    pub objective: f64,
    pub status: SolveStatus,
    /// Largest relative constraint violation at `x` (see [`constraint_residual`]).
    pub primal_residual: f64,
    /// Backend's scaled dual residual.
    pub dual_residual: f64,
    pub iterations: u32,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.x[v.0]
    }

    pub fn eval(&self, e: &AffineExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn matrix(&self, b: &SymBlock) -> DMatrix<f64> {
        b.extract(&self.x)
    }
}

fn soc_distance(t: f64, x: &[f64]) -> f64 {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx <= t {
        0.0
    } else if nx <= -t {
        (t * t + nx * nx).sqrt()
    } else {
        (nx - t) / std::f64::consts::SQRT_2
    }
}

/// Relative violation of one constraint at `x`: the distance of the
/// constraint's affine image to its cone, divided by `max(1, size of image)`.
pub fn constraint_residual(c: &Constraint, x: &[f64]) -> f64 {
    match c {
        Constraint::Equality(e) => e.eval(x).abs() / e.magnitude(x).max(1.0),
        Constraint::Inequality(e) => (-e.eval(x)).max(0.0) / e.magnitude(x).max(1.0),
        Constraint::SecondOrder { t, x: xs } => {
            let tv = t.eval(x);
            let xv: Vec<f64> = xs.iter().map(|e| e.eval(x)).collect();
            let scale = (tv * tv + xv.iter().map(|v| v * v).sum::<f64>()).sqrt();
            soc_distance(tv, &xv) / scale.max(1.0)
        }
        Constraint::RotatedSecondOrder { u, v, x: xs } => {
            let (uv, vv) = (u.eval(x), v.eval(x));
            let mut xv: Vec<f64> = vec![uv - vv];
            xv.extend(xs.iter().map(|e| std::f64::consts::SQRT_2 * e.eval(x)));
            let t = uv + vv;
            let scale = (t * t + xv.iter().map(|v| v * v).sum::<f64>()).sqrt();
            soc_distance(t, &xv) / scale.max(1.0)
        }
        Constraint::Psd(b) => {
            let m = b.extract(x);
            let scale = m.norm().max(1.0);
            let eig = SymmetricEigen::new(m);
            let neg: f64 = eig.eigenvalues.iter().map(|&l| l.min(0.0).powi(2)).sum();
            neg.sqrt() / scale
        }
    }
}

/// Sparse matrix assembled row by row, finalized into CSC.
struct RowBuilder {
    n_cols: usize,
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl RowBuilder {
    fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            rows: 0,
            cols: vec![Vec::new(); n_cols],
            b: Vec::new(),
        }
    }

    /// Appends a slack row `s = expr`, i.e. `A = -coeffs`, `b = constant`.
    fn push(&mut self, e: &AffineExpr, scale: f64) {
        for (v, c) in e.terms() {
            if c != 0.0 {
                self.cols[v.0].push((self.rows, -c * scale));
            }
        }
        self.b.push(e.constant_part() * scale);
        self.rows += 1;
    }

    fn push_raw(&mut self, entries: &[(usize, f64)], b: f64) {
        for &(col, val) in entries {
            self.cols[col].push((self.rows, val));
        }
        self.b.push(b);
        self.rows += 1;
    }

    fn finish(self) -> (CscMatrix<f64>, Vec<f64>) {
        let mut colptr = Vec::with_capacity(self.n_cols + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for mut col in self.cols {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for (r, v) in col {
                if last == Some(r) {
                    *nzval.last_mut().unwrap() += v;
                } else {
                    rowval.push(r);
                    nzval.push(v);
                    last = Some(r);
                }
            }
            colptr.push(rowval.len());
        }
        (
            CscMatrix::new(self.rows, self.n_cols, colptr, rowval, nzval),
            self.b,
        )
    }
}

fn push_cone(cones: &mut Vec<SupportedConeT<f64>>, next: SupportedConeT<f64>) {
    use SupportedConeT::*;
    match (cones.last_mut(), &next) {
        (Some(ZeroConeT(a)), ZeroConeT(b)) => *a += b,
        (Some(NonnegativeConeT(a)), NonnegativeConeT(b)) => *a += b,
        _ => cones.push(next),
    }
}

/// Solves the problem with Clarabel.
///
/// `Optimal` is reported only when the backend converged and the returned
/// point satisfies every constraint within `feas_tol` (relative, see
/// [`constraint_residual`]).
pub fn solve(problem: &ConicProblem, tol: &Tolerances) -> Result<ConicSolution, ConicError> {
    use SupportedConeT::*;
    problem.validate()?;
    single_threaded_blas();
    let n = problem.n_vars;
    let n_log = problem.log_terms.len();
    let n_cols = n + n_log;
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut q = vec![0.0; n_cols];
    for (v, c) in problem.objective.terms() {
        q[v.0] += sign * c;
    }
    for (i, t) in problem.log_terms.iter().enumerate() {
        q[n + i] = sign * t.weight;
    }

    let mut rows = RowBuilder::new(n_cols);
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let sqrt2 = std::f64::consts::SQRT_2;
    for c in &problem.constraints {
        match c {
            Constraint::Equality(e) => {
                rows.push(e, 1.0);
                push_cone(&mut cones, ZeroConeT(1));
            }
            Constraint::Inequality(e) => {
                rows.push(e, 1.0);
                push_cone(&mut cones, NonnegativeConeT(1));
            }
            Constraint::SecondOrder { t, x } => {
                rows.push(t, 1.0);
                for e in x {
                    rows.push(e, 1.0);
                }
                cones.push(SecondOrderConeT(1 + x.len()));
            }
            Constraint::RotatedSecondOrder { u, v, x } => {
                // ||x||^2 <= 2uv  <=>  ||(u - v, sqrt2 x)|| <= u + v
                rows.push(&(u.clone() + v.clone()), 1.0);
                rows.push(&(u.clone() - v.clone()), 1.0);
                for e in x {
                    rows.push(e, sqrt2);
                }
                cones.push(SecondOrderConeT(2 + x.len()));
            }
            Constraint::Psd(b) => {
                for j in 0..b.dim() {
                    for i in 0..=j {
                        let s = if i == j { 1.0 } else { sqrt2 };
                        rows.push(&AffineExpr::var(b.entry(i, j)), s);
                    }
                }
                cones.push(PSDTriangleConeT(b.dim()));
            }
        }
    }
    // t_i <= ln(arg_i)  <=>  (t_i, 1, arg_i) in K_exp
    for (i, t) in problem.log_terms.iter().enumerate() {
        rows.push_raw(&[(n + i, -1.0)], 0.0);
        rows.push_raw(&[], 1.0);
        rows.push(&t.arg, 1.0);
        cones.push(ExponentialConeT());
    }

    let (a, b) = rows.finish();
    let p = CscMatrix::<f64>::zeros((n_cols, n_cols));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(tol.max_iter)
        // one decade inside the acceptance threshold so the residual check below passes
        .tol_feas(0.1 * tol.feas_tol)
        .tol_gap_abs(tol.opt_tol)
        .tol_gap_rel(tol.opt_tol)
        .max_threads(1)
        .build()
        .map_err(|e| ConicError::Backend(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| ConicError::Backend(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    let x: Vec<f64> = sol.x[..n].to_vec();
    let primal_residual = if x.iter().all(|v| v.is_finite()) {
        problem
            .constraints
            .iter()
            .map(|c| constraint_residual(c, &x))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            if primal_residual <= tol.feas_tol {
                SolveStatus::Optimal
            } else {
                SolveStatus::NumericalFailure
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };
    let objective = problem.objective_value(&x);
    Ok(ConicSolution {
        x,
        objective,
        status,
        primal_residual,
        dual_residual: sol.r_dual,
        iterations: sol.iterations,
    })
}
