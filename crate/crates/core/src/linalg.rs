//! Dense complex linear-algebra helpers shared by the solver and the
//! verification modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spectral (operator 2-) norm: the largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, s| acc.max(*s))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO })
}

/// Conjugate-linear in the second slot: `<f, g> = sum f_i conj(g_i)`.
pub fn inner(f: &CVector, g: &CVector) -> Complex64 {
    f.iter().zip(g.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize first so round-off asymmetry cannot leak in
    let h = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Square root and inverse square root of a Hermitian positive definite matrix.
///
/// Returns `None` when the smallest eigenvalue is not strictly positive.
pub fn hpd_sqrt_pair(m: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    let (values, vectors) = hermitian_eigen(m);
    if values.first().is_some_and(|v| *v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let root: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let inv_root: Vec<f64> = root.iter().map(|r| 1.0 / r).collect();
    let vh = vectors.adjoint();
    Some((
        &vectors * diag(&root) * &vh,
        &vectors * diag(&inv_root) * &vh,
    ))
}

/// Eigenpairs of a general (non-Hermitian) complex matrix.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    /// Eigenvalues ordered by real part.
    pub values: Vec<Complex64>,
    /// Unit-norm right eigenvectors, one column per eigenvalue.
    pub vectors: CMatrix,
    /// Index ranges of numerically degenerate clusters (length >= 1).
    pub clusters: Vec<std::ops::Range<usize>>,
}

/// Relative tolerance under which two eigenvalues are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;

/// General eigensolver: complex Schur form, triangular back-substitution for
/// isolated eigenvalues and an SVD null space for degenerate clusters.
pub fn general_eigen(m: &CMatrix) -> GeneralEigen {
    let n = m.nrows();
    if n == 0 {
        return GeneralEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
            clusters: Vec::new(),
        };
    }
    let (z, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        t[(a, a)]
            .re
            .total_cmp(&t[(b, b)].re)
            .then(t[(a, a)].im.total_cmp(&t[(b, b)].im))
    });
    let values: Vec<Complex64> = order.iter().map(|&k| t[(k, k)]).collect();
    let scale = 1.0 + values.iter().fold(0.0_f64, |a, v| a.max(v.norm()));

    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || (values[k] - values[k - 1]).norm() > CLUSTER_TOL * scale {
            clusters.push(start..k);
            start = k;
        }
    }

    let mut vectors = CMatrix::zeros(n, n);
    for range in &clusters {
        if range.len() == 1 {
            let k = order[range.start];
            let v = &z * triangular_eigenvector(&t, k);
            let norm = v.norm();
            vectors.set_column(range.start, &(v / c(norm)));
        } else {
            let mean: Complex64 =
                values[range.clone()].iter().sum::<Complex64>() / c(range.len() as f64);
            let shifted = m - CMatrix::identity(n, n) * mean;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested right singular vectors");
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
            for (offset, &row) in idx.iter().take(range.len()).enumerate() {
                let v = v_t.row(row).adjoint();
                vectors.set_column(range.start + offset, &v);
            }
        }
    }
    GeneralEigen {
        values,
        vectors,
        clusters,
    }
}

/// Eigenvector of the upper-triangular `t` for the eigenvalue `t[(k,k)]`.
fn triangular_eigenvector(t: &CMatrix, k: usize) -> CVector {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let small = 1e-14 * (1.0 + t.iter().fold(0.0_f64, |a, v| a.max(v.norm())));
    let mut x = CVector::zeros(n);
    x[k] = ONE;
    for i in (0..k).rev() {
        let mut s = ZERO;
        for j in (i + 1)..=k {
            s += t[(i, j)] * x[j];
        }
        let mut d = t[(i, i)] - lambda;
        if d.norm() < small {
            d = c(small);
        }
        x[i] = -s / d;
    }
    x
}

/// Neville extrapolation of samples `(h_k, y_k)` to `h = 0`.
pub fn extrapolate_to_zero(h: &[f64], y: &[Complex64]) -> Complex64 {
    assert_eq!(h.len(), y.len());
    assert!(!h.is_empty());
    let mut p: Vec<Complex64> = y.to_vec();
    let n = h.len();
    for m in 1..n {
        for i in 0..(n - m) {
            p[i] = (c(h[i + m]) * p[i] - c(h[i]) * p[i + 1]) / c(h[i + m] - h[i]);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(n, n, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn general_eigen_reconstructs() {
        let m = sample(6, 3);
        let eig = general_eigen(&m);
        for (k, z) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(k).into_owned();
            let r = &m * &v - &v * *z;
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
        }
    }

    #[test]
    fn degenerate_cluster_spans_eigenspace() {
        let m = diag(&[1.0, 1.0, 3.0]);
        let eig = general_eigen(&m);
        assert_eq!(eig.clusters.len(), 2);
        assert_eq!(eig.clusters[0], 0..2);
        let v = eig.vectors.columns(0, 2).into_owned();
        let r = &m * &v - &v;
        assert!(r.norm() < 1e-12);
        let gram = v.adjoint() * &v;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_pair_inverts() {
        let a = sample(4, 9);
        let x = &a * a.adjoint() + CMatrix::identity(4, 4);
        let (r, ri) = hpd_sqrt_pair(&x).unwrap();
        assert!((&r * &r - &x).norm() < 1e-12);
        assert!((&r * &ri - CMatrix::identity(4, 4)).norm() < 1e-12);
        assert!(hpd_sqrt_pair(&diag(&[1.0, -1.0])).is_none());
    }

    #[test]
    fn neville_is_exact_for_quadratics() {
        let h = [0.4, 0.2, 0.1];
        let y: Vec<Complex64> = h
            .iter()
            .map(|x| Complex64::new(2.0 - 3.0 * x + x * x, 1.0 + x))
            .collect();
        let y0 = extrapolate_to_zero(&h, &y);
        assert!((y0 - Complex64::new(2.0, 1.0)).norm() < 1e-13);
    }
}
