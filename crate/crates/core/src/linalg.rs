//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CohError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian part `(M + M*)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(CohError::Dimension(format!(
            "eigendecomposition of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CohError::Numerical(
            "matrix has non-finite entries".to_string(),
        ));
    }
    let h = hermitize(m);
    let eig = h.clone().try_symmetric_eigen(1e-15, 10_000).ok_or_else(|| {
        let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        CohError::Numerical(format!(
            "Hermitian eigensolver did not converge ({n}x{n}, Frobenius norm {norm:e})"
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn min_singular_value(m: &CMat) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// `exp(-i t H / hbar)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMat, t: f64, hbar: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = vals.len();
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        n,
        vals.iter().map(|&e| (-I * (e * t / hbar)).exp()),
    ));
    Ok(&vecs * phases * vecs.adjoint())
}

/// Matrix exponential of a general complex matrix.
pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// `i/hbar [A, B]`, the quantum Lie product.
pub fn quantum_lie(a: &CMat, b: &CMat, hbar: f64) -> CMat {
    (a * b - b * a) * (I / hbar)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Conjugate-linear inner product `a* b` of two coordinate slices.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear product `a^T b`.
pub fn dot_bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Integer power by repeated squaring; `n = 0` yields one.
pub fn powi(z: C64, n: u32) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Pauli matrices sigma_x, sigma_y, sigma_z.
pub fn pauli() -> [CMat; 3] {
    let o = cr(0.0);
    let one = cr(1.0);
    [
        CMat::from_row_slice(2, 2, &[o, one, one, o]),
        CMat::from_row_slice(2, 2, &[o, -I, I, o]),
        CMat::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// Spin matrices `(J_x, J_y, J_z)` for spin `j = two_j / 2`, basis ordered
/// `m = j, j-1, ..., -j`.
pub fn spin_matrices(two_j: u32) -> [CMat; 3] {
    let d = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    let mut jp = CMat::zeros(d, d);
    let mut jz = CMat::zeros(d, d);
    for k in 0..d {
        let m = j - k as f64;
        jz[(k, k)] = cr(m);
        if k > 0 {
            // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>
            jp[(k - 1, k)] = cr((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).map(|z| z * 0.5);
    let jy = (&jp - &jm).map(|z| z * (-0.5 * I));
    [jx, jy, jz]
}
