//! Dense kernels: thin SVD, Moore–Penrose pseudoinverse and minimum-norm
//! least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::num::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` with σ sorted in
/// non-increasing order.
#[derive(Debug, Clone)]
pub struct ThinSvd<T: Real> {
    pub u: DMatrix<T>,
    pub singular_values: DVector<T>,
    pub v_t: DMatrix<T>,
}

impl<T: Real> ThinSvd<T> {
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows == 0 || cols == 0 {
            return Ok(Self {
                u: DMatrix::zeros(rows, 0),
                singular_values: DVector::zeros(0),
                v_t: DMatrix::zeros(0, cols),
            });
        }
        if a.iter().any(|x| !x.finite()) {
            return Err(Error::SvdFailed { rows, cols });
        }
        // Jacobi works on the columns of a tall matrix; factor Aᵀ when wide.
        if rows >= cols {
            let (u, s, v) = jacobi_svd(a.clone()).ok_or(Error::SvdFailed { rows, cols })?;
            Ok(Self { u, singular_values: s, v_t: v.transpose() })
        } else {
            let (u, s, v) = jacobi_svd(a.transpose()).ok_or(Error::SvdFailed { rows, cols })?;
            Ok(Self { u: v, singular_values: s, v_t: u.transpose() })
        }
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v_t.ncols()
    }

    /// Largest singular value, zero for an empty decomposition.
    pub fn sigma_max(&self) -> T {
        self.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b))
    }

    /// Sum of `scale · σ_i u_i v_iᵀ` over the components accepted by `keep`.
    pub fn reconstruct(&self, scale: T, mut keep: impl FnMut(T) -> bool) -> (DMatrix<T>, usize) {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        let mut kept = 0;
        for (i, &s) in self.singular_values.iter().enumerate() {
            if keep(s) {
                kept += 1;
                out.ger(scale * s, &self.u.column(i), &self.v_t.row(i).transpose(), T::one());
            }
        }
        (out, kept)
    }

    /// Absolute cutoff for a relative tolerance; `None` selects the default
    /// `eps · max(m, n)`.
    pub fn cutoff(&self, rel_tol: Option<T>) -> T {
        let rel = rel_tol.unwrap_or_else(|| default_rel_tol(self.nrows(), self.ncols()));
        rel * self.sigma_max()
    }

    /// Pseudoinverse keeping singular values strictly above `cutoff`.
    pub fn pinv_with_cutoff(&self, cutoff: T) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.ncols(), self.nrows());
        for (i, &s) in self.singular_values.iter().enumerate() {
            if s > cutoff {
                out.ger(T::one() / s, &self.v_t.row(i).transpose(), &self.u.column(i), T::one());
            }
        }
        out
    }

    /// Minimum-norm least-squares solution of `A x ≈ b`.
    pub fn solve_with_cutoff(&self, b: &DVector<T>, cutoff: T) -> DVector<T> {
        let mut x = DVector::zeros(self.ncols());
        for (i, &s) in self.singular_values.iter().enumerate() {
            if s > cutoff {
                let coeff = self.u.column(i).dot(b) / s;
                x.axpy(coeff, &self.v_t.row(i).transpose(), T::one());
            }
        }
        x
    }

    /// Orthonormal basis of the numerical column space (singular values above `cutoff`).
    pub fn column_basis(&self, cutoff: T) -> DMatrix<T> {
        let keep: Vec<usize> = (0..self.singular_values.len()).filter(|&i| self.singular_values[i] > cutoff).collect();
        self.u.select_columns(keep.iter())
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix `b` (m ≥ n).
///
/// Returns `(U, σ, V)` with `U` m×n, σ non-increasing and `V` n×n orthogonal.
/// Columns of `U` belonging to zero singular values are zero.
/// Columns whose norm is at rounding level are treated as zero.
fn jacobi_svd<T: Real>(mut b: DMatrix<T>) -> Option<(DMatrix<T>, DVector<T>, DMatrix<T>)> {
    let (m, n) = b.shape();
    debug_assert!(m >= n);
    let mut v = DMatrix::<T>::identity(n, n);
    let tol = T::eps() * T::of_usize(m).sqrt();
    let two = T::of(2.0);
    // Columns below this norm are rounding noise and take no part in rotations.
    let negligible = {
        let f = b.norm_squared();
        T::eps() * T::eps() * f
    };

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (b.column(p), b.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(b.as_mut_slice(), m, p, q, c, s);
                rotate_columns(v.as_mut_slice(), n, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return None;
    }

    let sigma: Vec<T> = (0..n).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = DMatrix::zeros(m, n);
    let mut v_sorted = DMatrix::zeros(n, n);
    let mut s = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = sigma[src];
        if sigma[src] > T::zero() {
            u.set_column(dst, &(b.column(src) / sigma[src]));
        }
        v_sorted.set_column(dst, &v.column(src));
    }
    Some((u, s, v_sorted))
}

/// Applies the rotation `[c s; −s c]` to columns `p < q` of a column-major buffer.
fn rotate_columns<T: Real>(data: &mut [T], rows: usize, p: usize, q: usize, c: T, s: T) {
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Default relative rank cutoff, machine epsilon times the larger dimension.
pub fn default_rel_tol<T: Real>(rows: usize, cols: usize) -> T {
    T::eps() * T::of_usize(rows.max(cols))
}

/// Moore–Penrose pseudoinverse `A† = Σ_{σ_i > tol·σ_max} σ_i⁻¹ v_i u_iᵀ`.
///
/// `rel_tol = None` uses [`default_rel_tol`].
pub fn pseudoinverse<T: Real>(a: &DMatrix<T>, rel_tol: Option<T>) -> Result<DMatrix<T>> {
    let svd = ThinSvd::new(a)?;
    Ok(svd.pinv_with_cutoff(svd.cutoff(rel_tol)))
}

/// Minimum-ℓ₂-norm minimiser of `‖design · x − target‖₂`, i.e. `design† · target`.
pub fn least_squares<T: Real>(design: &DMatrix<T>, target: &DVector<T>, rel_tol: Option<T>) -> Result<DVector<T>> {
    if design.nrows() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("target of length {}", design.nrows()),
            found: format!("length {}", target.len()),
        });
    }
    let svd = ThinSvd::new(design)?;
    Ok(svd.solve_with_cutoff(target, svd.cutoff(rel_tol)))
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn numerical_rank<T: Real>(a: &DMatrix<T>, rel_tol: T) -> Result<usize> {
    let svd = ThinSvd::new(a)?;
    let cutoff = rel_tol * svd.sigma_max();
    Ok(svd.singular_values.iter().filter(|&&s| s > cutoff).count())
}
