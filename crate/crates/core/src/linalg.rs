//! Symmetric cyclic tridiagonal solves.
//!
//! The matrix has diagonal `a`, super/sub-diagonal `b` (`b[i]` couples rows
//! `i` and `i+1`) and one corner entry `c` coupling rows `0` and `n-1`.

/// Solves `A x = rhs` by an `LDL^T` factorisation that keeps the corner as a
/// dense last column. Returns `None` when `A` is not positive definite.
pub fn cyclic_ldl_solve(a: &[f64], b: &[f64], c: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    assert_eq!(rhs.len(), n);
    if n <= 3 {
        return dense_spd_solve(&assemble(a, b, c), rhs);
    }
    assert!(b.len() >= n - 1);

    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut m = vec![0.0; n];

    d[0] = a[0];
    if d[0] <= 0.0 {
        return None;
    }
    l[0] = b[0] / d[0];
    m[0] = c / d[0];
    for i in 1..n - 2 {
        d[i] = a[i] - l[i - 1] * l[i - 1] * d[i - 1];
        if d[i] <= 0.0 {
            return None;
        }
        l[i] = b[i] / d[i];
        m[i] = -m[i - 1] * l[i - 1] * d[i - 1] / d[i];
    }
    let k = n - 2;
    d[k] = a[k] - l[k - 1] * l[k - 1] * d[k - 1];
    if d[k] <= 0.0 {
        return None;
    }
    m[k] = (b[k] - m[k - 1] * l[k - 1] * d[k - 1]) / d[k];
    let mut last = a[n - 1];
    for i in 0..n - 1 {
        last -= m[i] * m[i] * d[i];
    }
    d[n - 1] = last;
    if !(last > 0.0) {
        return None;
    }

    let mut z = vec![0.0; n];
    z[0] = rhs[0];
    for i in 1..n - 1 {
        z[i] = rhs[i] - l[i - 1] * z[i - 1];
    }
    let mut zl = rhs[n - 1];
    for i in 0..n - 1 {
        zl -= m[i] * z[i];
    }
    z[n - 1] = zl;
    for i in 0..n {
        z[i] /= d[i];
    }

    let mut x = vec![0.0; n];
    x[n - 1] = z[n - 1];
    x[n - 2] = z[n - 2] - m[n - 2] * x[n - 1];
    for i in (0..n - 2).rev() {
        x[i] = z[i] - l[i] * x[i + 1] - m[i] * x[n - 1];
    }
    Some(x)
}

/// Dense form of the cyclic matrix (entries add where they coincide, as for `n = 2`).
pub fn assemble(a: &[f64], b: &[f64], c: f64) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut mat = vec![vec![0.0; n]; n];
    for i in 0..n {
        mat[i][i] += a[i];
    }
    for i in 0..n.saturating_sub(1) {
        mat[i][i + 1] += b[i];
        mat[i + 1][i] += b[i];
    }
    if n >= 2 {
        mat[0][n - 1] += c;
        mat[n - 1][0] += c;
    }
    mat
}

/// Cholesky solve for small dense symmetric systems.
pub fn dense_spd_solve(mat: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = mat[i][i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (mat[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (rhs[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}
