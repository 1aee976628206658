//! Flat row-major dense kernels for the likelihood hot loop.
//!
//! Hyperparameter training evaluates the likelihood tens of thousands of
//! times per iteration on matrices of a few dozen rows; these routines avoid
//! the allocation and generic dispatch of the general-purpose path.

/// Plain dot product over the shorter of the two slices.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place lower Cholesky factorisation of the `n × n` matrix `a`.
/// Only the lower triangle is read and written. Returns `false` if a pivot
/// is not strictly positive.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        let (done, rest) = a.split_at_mut(i * n);
        let row_i = &mut rest[..n];
        for j in 0..i {
            let row_j = &done[j * n..j * n + j + 1];
            let s = dot(&row_i[..j], &row_j[..j]);
            row_i[j] = (row_i[j] - s) / row_j[j];
        }
        let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
        if !(d > 0.0 && d.is_finite()) {
            return false;
        }
        row_i[i] = d.sqrt();
    }
    true
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &x[..i]);
        x[i] = (x[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Lower triangle (and mirrored upper) of `(L Lᵀ)⁻¹` from the lower factor.
pub(crate) fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    // Row j of `v` holds column j of L⁻¹, i.e. the solution of L w = e_j,
    // which is zero before index j.
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        let w = &mut v[j * n..(j + 1) * n];
        for i in j..n {
            let s = dot(&l[i * n + j..i * n + i], &w[j..i]);
            let rhs = if i == j { 1.0 } else { 0.0 };
            w[i] = (rhs - s) / l[i * n + i];
        }
    }
    // (L⁻ᵀL⁻¹)_ij = Σ_k (L⁻¹)_ki (L⁻¹)_kj, non-zero only for k ≥ max(i, j).
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&v[i * n + i..(i + 1) * n], &v[j * n + i..(j + 1) * n]);
            inv[i * n + j] = s;
            inv[j * n + i] = s;
        }
    }
    inv
}
