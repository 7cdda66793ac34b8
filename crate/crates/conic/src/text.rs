//! Plain-text dump of a problem for offline inspection.
//!
//! ```text
//! conic-problem v1
//! sense maximize
//! vars 7
//! block A scalar @0
//! block E symmetric 2 @1
//! objective 0 +1*x0
//! log 1 1 +2*x1
//! ineq -3 +1*x0
//! rsoc u=0 +1*x0 v=... x=[1]
//! psd @1 2
//! end
//! ```
//!
//! Every affine expression is written as its constant followed by signed
//! `coeff*x<index>` terms; floats use Rust's shortest round-trip formatting.

use std::fmt;

use crate::problem::{AffineExpr, BlockKind, ConicProblem, Constraint, Sense};

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant_part())?;
        for (v, c) in self.terms() {
            if c >= 0.0 {
                write!(f, " +{}*x{}", c, v.0)?;
            } else {
                write!(f, " {}*x{}", c, v.0)?;
            }
        }
        Ok(())
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[AffineExpr]) -> fmt::Result {
    write!(f, "[")?;
    for (i, e) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, "; ")?;
        }
        write!(f, "{e}")?;
    }
    write!(f, "]")
}

impl fmt::Display for ConicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conic-problem v1")?;
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        writeln!(f, "sense {sense}")?;
        writeln!(f, "vars {}", self.n_vars)?;
        for b in &self.blocks {
            match b.kind {
                BlockKind::Scalar => writeln!(f, "block {} scalar @{}", b.name, b.offset)?,
                BlockKind::Vector(n) => writeln!(f, "block {} vector {} @{}", b.name, n, b.offset)?,
                BlockKind::Symmetric(n) => {
                    writeln!(f, "block {} symmetric {} @{}", b.name, n, b.offset)?
                }
            }
        }
        writeln!(f, "objective {}", self.objective)?;
        for t in &self.log_terms {
            writeln!(f, "log {} {}", t.weight, t.arg)?;
        }
        for c in &self.constraints {
            match c {
                Constraint::Equality(e) => writeln!(f, "eq {e}")?,
                Constraint::Inequality(e) => writeln!(f, "ineq {e}")?,
                Constraint::SecondOrder { t, x } => {
                    write!(f, "soc t={t} x=")?;
                    write_list(f, x)?;
                    writeln!(f)?;
                }
                Constraint::RotatedSecondOrder { u, v, x } => {
                    write!(f, "rsoc u={u} v={v} x=")?;
                    write_list(f, x)?;
                    writeln!(f)?;
                }
                Constraint::Psd(b) => {
                    writeln!(f, "psd @{} {}", b.entry(0, 0).0, b.dim())?;
                }
            }
        }
        writeln!(f, "end")
    }
}
