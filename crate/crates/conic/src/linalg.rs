//! Hermitian helpers: real embedding and the dominant eigenpair.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::ConicError;

type C64 = Complex<f64>;

/// Relative asymmetry accepted as "Hermitian".
pub const HERMITIAN_TOL: f64 = 1e-9;

fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn asymmetry(a: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &DMatrix<C64>) -> bool {
    a.is_square() && asymmetry(a) <= HERMITIAN_TOL * max_abs(a).max(1.0)
}

fn check_hermitian(a: &DMatrix<C64>) -> Result<(), ConicError> {
    if !a.is_square() {
        return Err(ConicError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = asymmetry(a);
    if asym > HERMITIAN_TOL * max_abs(a).max(1.0) {
        return Err(ConicError::NotHermitian(asym));
    }
    Ok(())
}

/// `[[Re A, -Im A], [Im A, Re A]]`.
///
/// The map is a real algebra homomorphism: it preserves products, sends the
/// spectrum of `A` to the same spectrum with doubled multiplicity, and doubles
/// the trace.
pub fn hermitian_embed(a: &DMatrix<C64>) -> Result<DMatrix<f64>, ConicError> {
    check_hermitian(a)?;
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`hermitian_embed`] for a real symmetric `2n x 2n` matrix that
/// need not carry the block structure: the structured part is averaged out.
pub fn unembed_hermitian(x: &DMatrix<f64>) -> DMatrix<C64> {
    assert!(x.is_square() && x.nrows() % 2 == 0);
    let n = x.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        C64::new(re, im)
    })
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
///
/// The eigenvector's phase is fixed so that its largest-magnitude entry is
/// real and positive.
pub fn max_eigpair(a: &DMatrix<C64>) -> Result<(f64, DVector<C64>), ConicError> {
    check_hermitian(a)?;
    let n = a.nrows();
    if n == 0 {
        return Err(ConicError::Dimension("empty matrix".into()));
    }
    // Exact Hermitian part so the eigensolver sees a symmetric input.
    let herm = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let eig =
        SymmetricEigen::try_new(herm, 1e-15, 10_000).ok_or(ConicError::EigenFailure)?;
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(ConicError::EigenFailure)?;
    let mut v: DVector<C64> = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    if !(norm > 0.0) || !lambda.is_finite() {
        return Err(ConicError::EigenFailure);
    }
    v /= C64::new(norm, 0.0);
    let mut pivot = 0;
    for i in 1..n {
        if v[i].norm() > v[pivot].norm() * (1.0 + 1e-12) {
            pivot = i;
        }
    }
    let phase = v[pivot] / v[pivot].norm();
    v *= phase.conj();
    Ok((lambda, v))
}
