//! Tridiagonal and cyclic tridiagonal solves.

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
/// of `rhs` (Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored).
/// Stable for diagonally dominant systems.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Periodic variant: `lower[0]` couples `x[0]` to `x[n-1]` and `upper[n-1]`
/// couples `x[n-1]` to `x[0]` (Sherman-Morrison on the Thomas solve).
pub fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    solve_tridiagonal(lower, &d, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(lower, &d, upper, &mut u);
    let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (x, z) in rhs.iter_mut().zip(&u) {
        *x -= fact * z;
    }
}

/// `y = A x` for the (optionally cyclic) tridiagonal `A`.
pub fn tridiagonal_apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64], cyclic: bool) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut y = diag[i] * x[i];
            if i > 0 {
                y += lower[i] * x[i - 1];
            } else if cyclic {
                y += lower[0] * x[n - 1];
            }
            if i + 1 < n {
                y += upper[i] * x[i + 1];
            } else if cyclic {
                y += upper[n - 1] * x[0];
            }
            y
        })
        .collect()
}
