//! Small dense helpers shared by the center solve, the ELM readout and the
//! classifiers. Systems here are at most a few hundred unknowns.

use ndarray::{Array2, ArrayView1, ArrayView2};

/// Squared Euclidean distance.
pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        _ => a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum(),
    }
}

pub fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        _ => a.iter().zip(b.iter()).map(|(x, y)| x * y).sum(),
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Returns `None` when a pivot is not strictly positive, i.e. the matrix is
/// not positive definite in working precision.
pub fn cholesky(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ X = B` for every column of `B`.
pub fn cholesky_solve(l: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let m = b.ncols();
    let l = l.as_standard_layout();
    let l = l.as_slice().expect("standard layout");
    let mut x = b.as_standard_layout().into_owned();
    let xs = x.as_slice_mut().expect("standard layout");
    // forward, then backward substitution, row by row over all columns
    for i in 0..n {
        let (done, rest) = xs.split_at_mut(i * m);
        let row = &mut rest[..m];
        for k in 0..i {
            let f = l[i * n + k];
            for (v, xk) in row.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                *v -= f * xk;
            }
        }
        let d = l[i * n + i];
        row.iter_mut().for_each(|v| *v /= d);
    }
    for i in (0..n).rev() {
        let (head, done) = xs.split_at_mut((i + 1) * m);
        let row = &mut head[i * m..];
        for k in (i + 1)..n {
            let f = l[k * n + i];
            let xk = &done[(k - i - 1) * m..(k - i) * m];
            for (v, xk) in row.iter_mut().zip(xk) {
                *v -= f * xk;
            }
        }
        let d = l[i * n + i];
        row.iter_mut().for_each(|v| *v /= d);
    }
    x
}

/// Gram matrix `X Xᵀ` of the rows of `x`.
pub fn row_gram(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = dot(x.row(i), x.row(j));
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}
