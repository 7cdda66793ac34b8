//! Problem description: variable blocks, affine expressions and cone constraints.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::ConicError;

/// Index of one scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// A real symmetric matrix block stored as its upper triangle, column-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymBlock {
    offset: usize,
    dim: usize,
}

impl SymBlock {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Variable holding entry (i, j); symmetric, so (i, j) and (j, i) coincide.
    pub fn entry(&self, i: usize, j: usize) -> VarId {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        assert!(c < self.dim, "entry ({i}, {j}) outside {0}x{0} block", self.dim);
        VarId(self.offset + c * (c + 1) / 2 + r)
    }

    /// `Tr(C X)` for a symmetric coefficient matrix `C`.
    pub fn trace_inner(&self, c: &DMatrix<f64>) -> AffineExpr {
        assert_eq!(c.nrows(), self.dim);
        assert_eq!(c.ncols(), self.dim);
        let mut e = AffineExpr::zero();
        for j in 0..self.dim {
            for i in 0..=j {
                let w = if i == j { c[(i, i)] } else { c[(i, j)] + c[(j, i)] };
                if w != 0.0 {
                    e.add_term(self.entry(i, j), w);
                }
            }
        }
        e
    }

    /// `Tr(X)`.
    pub fn trace(&self) -> AffineExpr {
        let mut e = AffineExpr::zero();
        for i in 0..self.dim {
            e.add_term(self.entry(i, i), 1.0);
        }
        e
    }

    /// Reads the block back out of a flat solution vector.
    pub fn extract(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| x[self.entry(i, j).0])
    }
}

/// `constant + sum_i coeff_i * x_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        let mut e = Self::zero();
        e.add_term(v, 1.0);
        e
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    pub fn add_term(&mut self, v: VarId, coeff: f64) -> &mut Self {
        *self.terms.entry(v.0).or_insert(0.0) += coeff;
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(&i, &c)| (VarId(i), c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&i, &c)| c * x[i]).sum::<f64>()
    }

    /// Magnitude of the individual summands at `x`; used to scale residuals.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.constant.abs() + self.terms.iter().map(|(&i, &c)| (c * x[i]).abs()).sum::<f64>()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&i, &c)| (i, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v)
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        for (i, c) in rhs.terms {
            *self.terms.entry(i).or_insert(0.0) += c;
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + rhs.scaled(-1.0)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, rhs: f64) -> AffineExpr {
        self.scaled(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One constraint. Cone memberships are stated on affine images of the variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `expr == 0`
    Equality(AffineExpr),
    /// `expr >= 0`
    Inequality(AffineExpr),
    /// `||x|| <= t`
    SecondOrder { t: AffineExpr, x: Vec<AffineExpr> },
    /// `||x||^2 <= 2 u v`, `u, v >= 0`
    RotatedSecondOrder {
        u: AffineExpr,
        v: AffineExpr,
        x: Vec<AffineExpr>,
    },
    /// The symmetric block is positive semidefinite.
    Psd(SymBlock),
}

impl Constraint {
    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::Equality(_) => "eq",
            Constraint::Inequality(_) => "ineq",
            Constraint::SecondOrder { .. } => "soc",
            Constraint::RotatedSecondOrder { .. } => "rsoc",
            Constraint::Psd(_) => "psd",
        }
    }
}

/// `weight * ln(arg)` added to the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTerm {
    pub weight: f64,
    pub arg: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Scalar,
    Vector(usize),
    Symmetric(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockInfo {
    pub name: String,
    pub kind: BlockKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub(crate) n_vars: usize,
    pub(crate) blocks: Vec<BlockInfo>,
    pub(crate) sense: Sense,
    pub(crate) objective: AffineExpr,
    pub(crate) log_terms: Vec<LogTerm>,
    pub(crate) constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            n_vars: 0,
            blocks: Vec::new(),
            sense,
            objective: AffineExpr::zero(),
            log_terms: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.n_vars
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn log_terms(&self) -> &[LogTerm] {
        &self.log_terms
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> VarId {
        let v = VarId(self.n_vars);
        self.blocks.push(BlockInfo {
            name: name.into(),
            kind: BlockKind::Scalar,
            offset: self.n_vars,
        });
        self.n_vars += 1;
        v
    }

    pub fn add_vector(&mut self, name: impl Into<String>, len: usize) -> Vec<VarId> {
        let offset = self.n_vars;
        self.blocks.push(BlockInfo {
            name: name.into(),
            kind: BlockKind::Vector(len),
            offset,
        });
        self.n_vars += len;
        (offset..offset + len).map(VarId).collect()
    }

    pub fn add_symmetric(&mut self, name: impl Into<String>, dim: usize) -> SymBlock {
        let block = SymBlock {
            offset: self.n_vars,
            dim,
        };
        self.blocks.push(BlockInfo {
            name: name.into(),
            kind: BlockKind::Symmetric(dim),
            offset: self.n_vars,
        });
        self.n_vars += block.len();
        block
    }

    pub fn set_objective(&mut self, obj: AffineExpr) {
        self.objective = obj;
    }

    pub fn add_objective(&mut self, obj: AffineExpr) {
        let cur = std::mem::take(&mut self.objective);
        self.objective = cur + obj;
    }

    /// Adds `weight * ln(arg)` to the objective. Must keep the objective convex
    /// for the declared sense: `weight >= 0` when maximizing.
    pub fn add_log_term(&mut self, weight: f64, arg: AffineExpr) {
        self.log_terms.push(LogTerm { weight, arg });
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn add_eq(&mut self, e: AffineExpr) {
        self.add_constraint(Constraint::Equality(e));
    }

    /// `e >= 0`
    pub fn add_ge0(&mut self, e: AffineExpr) {
        self.add_constraint(Constraint::Inequality(e));
    }

    /// `lhs >= rhs`
    pub fn add_ge(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_ge0(lhs - rhs);
    }

    pub fn add_soc(&mut self, t: AffineExpr, x: Vec<AffineExpr>) {
        self.add_constraint(Constraint::SecondOrder { t, x });
    }

    pub fn add_rotated_soc(&mut self, u: AffineExpr, v: AffineExpr, x: Vec<AffineExpr>) {
        self.add_constraint(Constraint::RotatedSecondOrder { u, v, x });
    }

    pub fn add_psd(&mut self, b: SymBlock) {
        self.add_constraint(Constraint::Psd(b));
    }

    /// Full objective (linear part plus log terms) at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let logs: f64 = self
            .log_terms
            .iter()
            .map(|t| t.weight * t.arg.eval(x).max(0.0).ln())
            .sum();
        self.objective.eval(x) + logs
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.n_vars;
        let check = |e: &AffineExpr, what: &str| -> Result<(), ConicError> {
            if let Some(m) = e.max_var() {
                if m >= n {
                    return Err(ConicError::UndeclaredVariable {
                        index: m,
                        context: what.to_string(),
                    });
                }
            }
            if !e.constant.is_finite() || e.terms.values().any(|c| !c.is_finite()) {
                return Err(ConicError::NonFinite(what.to_string()));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for t in &self.log_terms {
            check(&t.arg, "log term")?;
            let convex = match self.sense {
                Sense::Maximize => t.weight >= 0.0,
                Sense::Minimize => t.weight <= 0.0,
            };
            if !convex || !t.weight.is_finite() {
                return Err(ConicError::NonConvexLogTerm(t.weight));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let ctx = format!("constraint {i} ({})", c.kind());
            match c {
                Constraint::Equality(e) | Constraint::Inequality(e) => check(e, &ctx)?,
                Constraint::SecondOrder { t, x } => {
                    check(t, &ctx)?;
                    for e in x {
                        check(e, &ctx)?;
                    }
                }
                Constraint::RotatedSecondOrder { u, v, x } => {
                    check(u, &ctx)?;
                    check(v, &ctx)?;
                    for e in x {
                        check(e, &ctx)?;
                    }
                }
                Constraint::Psd(b) => {
                    if b.offset + b.len() > n {
                        return Err(ConicError::UndeclaredVariable {
                            index: b.offset + b.len(),
                            context: ctx,
                        });
                    }
                    let declared = self.blocks.iter().any(|bi| {
                        bi.offset == b.offset && bi.kind == BlockKind::Symmetric(b.dim)
                    });
                    if !declared {
                        return Err(ConicError::Dimension(format!(
                            "{ctx}: PSD constraint does not match a declared symmetric block"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
