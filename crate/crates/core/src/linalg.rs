//! Dense linear-algebra helpers shared by the simulation, basis and solver code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real Hilbert-Schmidt inner product `Re Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

pub fn hs_norm(a: &CMat) -> f64 {
    hs_inner(a, a).sqrt()
}

/// `a += alpha * b`
pub fn axpy(a: &mut CMat, alpha: f64, b: &CMat) {
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += y * alpha;
    }
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= tol
}

// nalgebra's symmetric QR iteration can return NaN on exactly structured input (for
// instance large 0/1 rank-one matrices). On failure the decomposition is retried on
// H A H for a fixed Householder reflector H, which has the same spectrum.

fn reflector(n: usize, attempt: usize) -> RMat {
    let v = RVec::from_fn(n, |i, _| {
        (0.754_877_666 * (i + 1) as f64 + 0.3 * attempt as f64).sin() + 1.5
    });
    let v = v.normalize();
    RMat::identity(n, n) - (&v * v.transpose()) * 2.0
}

const RETRIES: usize = 4;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real symmetric
/// matrix.
pub fn symmetric_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    let n = a.nrows();
    let finite = |e: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>| {
        e.eigenvalues
            .iter()
            .chain(e.eigenvectors.iter())
            .all(|x| x.is_finite())
    };
    let mut eig = a.clone().symmetric_eigen();
    let mut attempt = 0;
    while !finite(&eig) && attempt < RETRIES {
        attempt += 1;
        let h = reflector(n, attempt);
        let mut b = &h * a * &h;
        symmetrize(&mut b);
        eig = b.symmetric_eigen();
        eig.eigenvectors = &h * &eig.eigenvectors;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (
        values,
        RMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
    )
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian
/// matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let finite = |e: &nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>| {
        e.eigenvalues.iter().all(|x| x.is_finite())
            && e.eigenvectors
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    };
    let mut eig = a.clone().symmetric_eigen();
    let mut attempt = 0;
    while !finite(&eig) && attempt < RETRIES {
        attempt += 1;
        let h = reflector(n, attempt).map(|x| Complex64::new(x, 0.0));
        let b = &h * a * &h;
        let b = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
        eig = b.symmetric_eigen();
        eig.eigenvectors = &h * &eig.eigenvectors;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (
        values,
        CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
    )
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    if v.iter().all(|x| x.is_finite()) {
        let mut v = v;
        v.sort_by(f64::total_cmp);
        return v;
    }
    hermitian_eigen(a).0
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

pub fn symmetric_min_eigenvalue(a: &RMat) -> f64 {
    let v = a.clone().symmetric_eigenvalues();
    if v.iter().all(|x| x.is_finite()) {
        return v.iter().copied().fold(f64::INFINITY, f64::min);
    }
    symmetric_eigen(a)
        .0
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `C = A^T B` for column-major real matrices, using the blocked kernel.
pub fn gemm_tn(a: &RMat, b: &RMat) -> RMat {
    assert_eq!(a.nrows(), b.nrows());
    let (k, m, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = RMat::zeros(m, n);
    if m == 0 || n == 0 {
        return c;
    }
    // a^T viewed with swapped strides: element (i, p) of a^T lives at a[p + i*k].
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// `C = A B` for column-major real matrices, using the blocked kernel.
pub fn gemm(a: &RMat, b: &RMat) -> RMat {
    assert_eq!(a.ncols(), b.nrows());
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = RMat::zeros(m, n);
    if m == 0 || n == 0 {
        return c;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

pub fn symmetrize(a: &mut RMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(a: &CMat, values: &[f64], q: &CMat) {
        let n = a.nrows();
        let d = CMat::from_diagonal(&DVector::from_iterator(
            n,
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        assert!((q.adjoint() * q - CMat::identity(n, n)).norm() < 1e-10);
        assert!((q * d * q.adjoint() - a).norm() < 1e-10);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn structured_rank_one_spectra_are_finite() {
        // Large exactly-structured 0/1 rank-one matrices make the plain QR iteration
        // return NaN.
        let n = 127;
        let v = RVec::from_fn(n, |i, _| if i % 4 == 0 || i < 3 { 1.0 } else { 0.0 });
        let a = &v * v.transpose();
        let (values, q) = symmetric_eigen(&a);
        assert!(values.iter().all(|x| x.is_finite()));
        assert!((q.transpose() * &q - RMat::identity(n, n)).norm() < 1e-10);
        let d = RMat::from_diagonal(&RVec::from_vec(values.clone()));
        assert!((&q * d * q.transpose() - &a).norm() < 1e-10);
        assert!((values[n - 1] - v.norm_squared()).abs() < 1e-10);
        assert!(symmetric_min_eigenvalue(&a).abs() < 1e-10);

        let c = a.map(|x| Complex64::new(x, 0.0));
        let (values, q) = hermitian_eigen(&c);
        check_decomposition(&c, &values, &q);
        assert!(min_eigenvalue(&c).abs() < 1e-10);
    }

    #[test]
    fn hermitian_eigen_matches_definition() {
        let n = 6;
        let a = CMat::from_fn(n, n, |i, j| {
            Complex64::new((i * j) as f64 * 0.3 - 1.0, (i as f64) - (j as f64))
        });
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let (values, q) = hermitian_eigen(&h);
        check_decomposition(&h, &values, &q);
    }

    #[test]
    fn gemm_matches_naive() {
        let a = RMat::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        let b = RMat::from_fn(4, 5, |i, j| ((i + 2 * j) % 7) as f64);
        let c = gemm_tn(&a, &b);
        let expect = a.transpose() * &b;
        assert!((c - expect).norm() < 1e-12);
        let d = RMat::from_fn(3, 2, |i, j| (i as f64) - (j as f64) * 0.5);
        assert!((gemm(&a, &d) - &a * &d).norm() < 1e-12);
    }

    #[test]
    fn hs_inner_is_real_part() {
        let a = CMat::from_fn(2, 2, |i, j| Complex64::new(i as f64, j as f64));
        let b = CMat::from_fn(2, 2, |i, j| Complex64::new(1.0 + j as f64, i as f64));
        let direct = (a.adjoint() * &b).trace().re;
        assert!((hs_inner(&a, &b) - direct).abs() < 1e-12);
    }
}
