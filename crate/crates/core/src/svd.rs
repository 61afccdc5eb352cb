//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of a working copy are rotated pairwise until mutually orthogonal;
//! the column norms are the singular values. Accurate for the small dense
//! matrices used in biplots and fully deterministic.

use ndarray::{Array1, Array2, Axis};

use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// `a = u * diag(s) * v^T` with `s` sorted non-increasing.
///
/// For an `n x d` input, `u` is `n x r`, `s` has length `r` and `v` is
/// `d x r`, where `r = min(n, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Array1<T>,
    pub v: Array2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("Jacobi SVD did not converge within {sweeps} sweeps")]
pub struct NoConvergence {
    pub sweeps: usize,
}

/// Computes the thin SVD. Each right singular vector is oriented so that its
/// largest-magnitude coordinate (first one on ties) is positive.
pub fn thin_svd<T: Scalar>(a: &Array2<T>) -> Result<Svd<T>, NoConvergence> {
    let (n, d) = a.dim();
    let (u, s, v) = if n >= d {
        jacobi(a.clone())?
    } else {
        let (v, s, u) = jacobi(a.t().to_owned())?;
        (u, s, v)
    };
    Ok(orient(u, s, v))
}

type Factors<T> = (Array2<T>, Array1<T>, Array2<T>);

/// One-sided Jacobi on a tall (`rows >= cols`) matrix.
fn jacobi<T: Scalar>(mut work: Array2<T>) -> Result<Factors<T>, NoConvergence> {
    let cols = work.ncols();
    let mut v = Array2::<T>::eye(cols);
    let tol = T::epsilon() * T::from_count(work.nrows().max(1));
    // columns this small are roundoff; rotating against them never settles
    let frob2: T = work.iter().map(|x| *x * *x).sum();
    let negligible = tol * tol * frob2;

    let mut converged = cols < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(NoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                let (cp, cq) = (work.column(p), work.column(q));
                let alpha: T = cp.iter().map(|x| *x * *x).sum();
                let beta: T = cq.iter().map(|x| *x * *x).sum();
                let gamma: T = cp.iter().zip(cq.iter()).map(|(x, y)| *x * *y).sum();
                if gamma == T::zero() || alpha <= negligible || beta <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut work, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
    }

    let norms: Array1<T> = work
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));

    let rows = work.nrows();
    let mut u = Array2::<T>::zeros((rows, cols));
    let mut vs = Array2::<T>::zeros((cols, cols));
    let mut s = Array1::<T>::zeros(cols);
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        if norms[src] > T::zero() {
            u.column_mut(dst).assign(&work.column(src).mapv(|x| x / norms[src]));
        }
        vs.column_mut(dst).assign(&v.column(src));
    }
    Ok((u, s, vs))
}

fn rotate<T: Scalar>(m: &mut Array2<T>, p: usize, q: usize, c: T, s: T) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let (x, y) = (row[p], row[q]);
        row[p] = c * x - s * y;
        row[q] = s * x + c * y;
    }
}

fn orient<T: Scalar>(mut u: Array2<T>, s: Array1<T>, mut v: Array2<T>) -> Svd<T> {
    for k in 0..s.len() {
        let col = v.column(k);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < T::zero() {
            v.column_mut(k).mapv_inplace(|x| -x);
            u.column_mut(k).mapv_inplace(|x| -x);
        }
    }
    Svd { u, s, v }
}
