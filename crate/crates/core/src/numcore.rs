//! Small dense complex/real matrices and the handful of kernels the code needs:
//! real interleaving (`vec_real`), the check operator, Kronecker products,
//! Gram–Schmidt QR, complex determinants and singular values.
//!
//! Both matrix types store entries in **row-major** order. Sizes never exceed
//! 32×16, so everything is plain loops over a `Vec`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Relative residual below which Gram–Schmidt declares a column dependent.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealMat<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

macro_rules! shared_mat_impl {
    ($ty:ident, $elem:ty) => {
        impl<T: Scalar> $ty<T> {
            pub fn zeros(rows: usize, cols: usize) -> Self {
                Self { rows, cols, data: vec![<$elem>::zero(); rows * cols] }
            }

            pub fn identity(n: usize) -> Self {
                let mut m = Self::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = <$elem>::one();
                }
                m
            }

            /// Panics if `data.len() != rows * cols`.
            pub fn from_row_major(rows: usize, cols: usize, data: Vec<$elem>) -> Self {
                assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
                Self { rows, cols, data }
            }

            pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> $elem) -> Self {
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        data.push(f(r, c));
                    }
                }
                Self { rows, cols, data }
            }

            pub fn from_rows<R: AsRef<[$elem]>>(rows: &[R]) -> Self {
                let cols = rows.first().map_or(0, |r| r.as_ref().len());
                let mut data = Vec::with_capacity(rows.len() * cols);
                for r in rows {
                    let r = r.as_ref();
                    assert_eq!(r.len(), cols, "ragged rows");
                    data.extend_from_slice(r);
                }
                Self { rows: rows.len(), cols, data }
            }

            #[inline]
            pub fn rows(&self) -> usize {
                self.rows
            }

            #[inline]
            pub fn cols(&self) -> usize {
                self.cols
            }

            #[inline]
            pub fn as_slice(&self) -> &[$elem] {
                &self.data
            }

            pub fn is_square(&self) -> bool {
                self.rows == self.cols
            }

            pub fn transpose(&self) -> Self {
                Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
            }

            pub fn scale(&self, k: $elem) -> Self {
                Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * k).collect() }
            }

            /// Entrywise product.
            pub fn hadamard(&self, other: &Self) -> Self {
                assert_eq!((self.rows, self.cols), (other.rows, other.cols));
                let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect();
                Self { rows: self.rows, cols: self.cols, data }
            }

            pub fn matmul(&self, rhs: &Self) -> Self {
                assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
                let mut out = Self::zeros(self.rows, rhs.cols);
                for i in 0..self.rows {
                    for k in 0..self.cols {
                        let a = self[(i, k)];
                        if a.is_zero() {
                            continue;
                        }
                        for j in 0..rhs.cols {
                            let b = rhs[(k, j)];
                            out[(i, j)] += a * b;
                        }
                    }
                }
                out
            }
        }

        impl<T: Scalar> Index<(usize, usize)> for $ty<T> {
            type Output = $elem;
            #[inline]
            fn index(&self, (r, c): (usize, usize)) -> &$elem {
                debug_assert!(r < self.rows && c < self.cols);
                &self.data[r * self.cols + c]
            }
        }

        impl<T: Scalar> IndexMut<(usize, usize)> for $ty<T> {
            #[inline]
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut $elem {
                debug_assert!(r < self.rows && c < self.cols);
                &mut self.data[r * self.cols + c]
            }
        }

        impl<'a, T: Scalar> Add<&'a $ty<T>> for &'a $ty<T> {
            type Output = $ty<T>;
            fn add(self, rhs: &'a $ty<T>) -> $ty<T> {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
                let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect();
                $ty { rows: self.rows, cols: self.cols, data }
            }
        }

        impl<'a, T: Scalar> Sub<&'a $ty<T>> for &'a $ty<T> {
            type Output = $ty<T>;
            fn sub(self, rhs: &'a $ty<T>) -> $ty<T> {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
                let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
                $ty { rows: self.rows, cols: self.cols, data }
            }
        }

        impl<'a, T: Scalar> Mul<&'a $ty<T>> for &'a $ty<T> {
            type Output = $ty<T>;
            fn mul(self, rhs: &'a $ty<T>) -> $ty<T> {
                self.matmul(rhs)
            }
        }

        impl<T: Scalar> Neg for &$ty<T> {
            type Output = $ty<T>;
            fn neg(self) -> $ty<T> {
                $ty { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| -v).collect() }
            }
        }
    };
}

shared_mat_impl!(ComplexMat, Cx<T>);
shared_mat_impl!(RealMat, T);

impl<T: Scalar> ComplexMat<T> {
    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn frobenius_sqr(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn frobenius(&self) -> T {
        self.frobenius_sqr().sqrt()
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Cx::zero(), |a, b| a + b)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }
}

impl<T: Scalar> RealMat<T> {
    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "vector length must equal column count");
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · v` without materializing the transpose.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] += self[(r, c)] * v[r];
            }
        }
        out
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[T]) {
        assert_eq!(v.len(), self.rows);
        for (r, &x) in v.iter().enumerate() {
            self[(r, c)] = x;
        }
    }

    /// Columns re-ordered so that output column `j` is input column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, order[c])])
    }

    /// Block-diagonal matrix with the given blocks on the diagonal.
    pub fn block_diag(blocks: &[Self]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for r in 0..b.rows {
                for c in 0..b.cols {
                    out[(r0 + r, c0 + c)] = b[(r, c)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max)
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Column-major traversal with each entry contributing `(re, im)` consecutively.
pub fn vec_real<T: Scalar>(m: &ComplexMat<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * m.rows * m.cols);
    for c in 0..m.cols {
        for r in 0..m.rows {
            let v = m[(r, c)];
            out.push(v.re);
            out.push(v.im);
        }
    }
    out
}

/// Real vector `[re(x1), im(x1), re(x2), ...]` of a complex vector.
pub fn interleave<T: Scalar>(x: &[Cx<T>]) -> Vec<T> {
    x.iter().flat_map(|v| [v.re, v.im]).collect()
}

/// Inverse of [`interleave`]. Panics on odd length.
pub fn deinterleave<T: Scalar>(v: &[T]) -> Vec<Cx<T>> {
    assert!(v.len().is_multiple_of(2), "interleaved vector must have even length");
    v.chunks_exact(2).map(|p| Cx::new(p[0], p[1])).collect()
}

/// Replace each complex entry `s` with the real block `[[re s, -im s], [im s, re s]]`.
pub fn check_op<T: Scalar>(m: &ComplexMat<T>) -> RealMat<T> {
    let mut out = RealMat::zeros(2 * m.rows, 2 * m.cols);
    for r in 0..m.rows {
        for c in 0..m.cols {
            let s = m[(r, c)];
            out[(2 * r, 2 * c)] = s.re;
            out[(2 * r, 2 * c + 1)] = -s.im;
            out[(2 * r + 1, 2 * c)] = s.im;
            out[(2 * r + 1, 2 * c + 1)] = s.re;
        }
    }
    out
}

pub fn kron<T: Scalar>(a: &RealMat<T>, b: &RealMat<T>) -> RealMat<T> {
    RealMat::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

#[derive(Debug, Clone)]
pub struct Qr<T: Scalar> {
    pub q: RealMat<T>,
    pub r: RealMat<T>,
}

/// QR of a square matrix by classical Gram–Schmidt, `r_i = h_i - Σ⟨h_i, q_j⟩ q_j`.
///
/// A second orthogonalization sweep is applied to every column and folded into `R`,
/// which keeps `Q` orthonormal to working precision. The diagonal of `R` is the
/// residual norm and is therefore strictly positive.
pub fn gram_schmidt_qr<T: Scalar>(a: &RealMat<T>) -> Result<Qr<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("QR expects a square matrix, got {}x{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let tol = T::lit(RANK_TOL);
    let mut q = RealMat::zeros(n, n);
    let mut r = RealMat::zeros(n, n);
    let mut qcols: Vec<Vec<T>> = Vec::with_capacity(n);

    for i in 0..n {
        let h = a.column(i);
        let hnorm = norm(&h);
        let mut resid = h.clone();
        for _pass in 0..2 {
            let coeffs: Vec<T> = qcols.iter().map(|qj| dot(&resid, qj)).collect();
            for (j, (qj, &cj)) in qcols.iter().zip(&coeffs).enumerate() {
                r[(j, i)] += cj;
                for (x, &y) in resid.iter_mut().zip(qj) {
                    *x -= cj * y;
                }
            }
        }
        let rn = norm(&resid);
        if !(rn > tol * hnorm) || rn.is_zero() {
            return Err(Error::RankDeficient { column: i, residual: rn.to_f64_lossy() });
        }
        r[(i, i)] = rn;
        let qi: Vec<T> = resid.iter().map(|&x| x / rn).collect();
        q.set_column(i, &qi);
        qcols.push(qi);
    }
    Ok(Qr { q, r })
}

/// Determinant by LU with partial pivoting.
pub fn det_complex<T: Scalar>(a: &ComplexMat<T>) -> Cx<T> {
    assert!(a.is_square(), "determinant needs a square matrix");
    let mut m = a.data.clone();
    det_in_place(&mut m, a.rows)
}

/// Determinant of the row-major `n×n` matrix in `m`, destroying it.
pub fn det_in_place<T: Scalar>(m: &mut [Cx<T>], n: usize) -> Cx<T> {
    debug_assert_eq!(m.len(), n * n);
    let mut det = Cx::<T>::one();
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].norm_sqr();
        for i in k + 1..n {
            let v = m[i * n + k].norm_sqr();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best.is_zero() {
            return Cx::zero();
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            det = -det;
        }
        let d = m[k * n + k];
        det *= d;
        let inv = d.inv();
        for i in k + 1..n {
            let f = m[i * n + k] * inv;
            if f.is_zero() {
                continue;
            }
            for c in k + 1..n {
                let t = m[k * n + c];
                m[i * n + c] -= f * t;
            }
        }
    }
    det
}

/// Singular values in descending order.
///
/// One-sided Jacobi on the check-operator image, whose spectrum is that of `a`
/// with every value repeated twice; every other value is kept.
pub fn singular_values<T: Scalar>(a: &ComplexMat<T>) -> Vec<T> {
    let mut sv = real_singular_values(&check_op(a));
    sv = sv.into_iter().step_by(2).collect();
    sv.truncate(a.rows.min(a.cols));
    sv
}

/// Singular values of a real matrix, descending, via one-sided (Hestenes) Jacobi.
pub fn real_singular_values<T: Scalar>(a: &RealMat<T>) -> Vec<T> {
    let work = if a.rows >= a.cols { a.clone() } else { a.transpose() };
    let (m, n) = (work.rows, work.cols);
    let mut cols: Vec<Vec<T>> = (0..n).map(|c| work.column(c)).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma.is_zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let xp = cols[p][i];
                    let xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn rand_cmat(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMat<f64> {
        ComplexMat::from_fn(rows, cols, |_, _| Cx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    pub fn rand_rmat(rng: &mut impl Rng, rows: usize, cols: usize) -> RealMat<f64> {
        RealMat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn vec_real_small_cases() {
        let m = ComplexMat::from_rows(&[[c(3.0, 4.0)]]);
        assert_eq!(vec_real(&m), vec![3.0, 4.0]);
        let id = ComplexMat::<f64>::identity(2);
        assert_eq!(vec_real(&id), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn vec_real_is_column_major() {
        let m = ComplexMat::from_rows(&[[c(1.0, 2.0), c(5.0, 6.0)], [c(3.0, 4.0), c(7.0, 8.0)]]);
        assert_eq!(vec_real(&m), (1..=8).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn vec_real_preserves_frobenius_norm() {
        let mut g = rng(1);
        for _ in 0..20 {
            let m = rand_cmat(&mut g, 4, 4);
            assert!((norm(&vec_real(&m)) - m.frobenius()).abs() < 1e-12);
        }
    }

    #[test]
    fn check_op_of_j_and_identity() {
        let j = ComplexMat::from_rows(&[[c(0.0, 1.0)]]);
        assert_eq!(check_op(&j), RealMat::from_rows(&[[0.0, -1.0], [1.0, 0.0]]));
        assert_eq!(check_op(&ComplexMat::<f64>::identity(2)), RealMat::identity(4));
    }

    #[test]
    fn check_op_is_ring_homomorphism() {
        let mut g = rng(2);
        for _ in 0..50 {
            let a = rand_cmat(&mut g, 2, 2);
            let b = rand_cmat(&mut g, 2, 2);
            let lhs = check_op(&(&a * &b));
            let rhs = &check_op(&a) * &check_op(&b);
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let sum = check_op(&(&a + &b));
            assert!(sum.max_abs_diff(&(&check_op(&a) + &check_op(&b))) < 1e-15);
            assert!(check_op(&a.hermitian()).max_abs_diff(&check_op(&a).transpose()) < 1e-15);
        }
    }

    #[test]
    fn kron_examples() {
        let i2 = RealMat::<f64>::identity(2);
        let five = RealMat::from_rows(&[[5.0]]);
        assert_eq!(kron(&i2, &five), RealMat::from_rows(&[[5.0, 0.0], [0.0, 5.0]]));
        let e1 = RealMat::from_rows(&[[1.0], [0.0]]);
        let e2 = RealMat::from_rows(&[[0.0], [1.0]]);
        assert_eq!(kron(&e1, &e2), RealMat::from_rows(&[[0.0], [1.0], [0.0], [0.0]]));
    }

    #[test]
    fn kron_mixed_product() {
        let mut g = rng(3);
        for _ in 0..20 {
            let (a, b, cm, d) =
                (rand_rmat(&mut g, 2, 2), rand_rmat(&mut g, 2, 2), rand_rmat(&mut g, 2, 2), rand_rmat(&mut g, 2, 2));
            let lhs = &kron(&a, &b) * &kron(&cm, &d);
            let rhs = kron(&(&a * &cm), &(&b * &d));
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn vec_of_product_matches_kron_form() {
        let mut g = rng(4);
        for _ in 0..20 {
            let h = rand_cmat(&mut g, 2, 4);
            let s = rand_cmat(&mut g, 4, 4);
            let lhs = vec_real(&(&h * &s));
            let rhs = kron(&RealMat::identity(4), &check_op(&h)).mul_vec(&vec_real(&s));
            let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn qr_trivial_inputs() {
        let qr = gram_schmidt_qr(&RealMat::<f64>::identity(3)).unwrap();
        assert_eq!(qr.q, RealMat::identity(3));
        assert_eq!(qr.r, RealMat::identity(3));
        let d = RealMat::from_rows(&[[2.0, 0.0], [0.0, 3.0]]);
        let qr = gram_schmidt_qr(&d).unwrap();
        assert_eq!(qr.q, RealMat::identity(2));
        assert_eq!(qr.r, d);
    }

    #[test]
    fn qr_random_16x16_reconstructs() {
        let mut g = rng(5);
        for _ in 0..10 {
            let a = rand_rmat(&mut g, 16, 16);
            let Qr { q, r } = gram_schmidt_qr(&a).unwrap();
            let qtq = &q.transpose() * &q;
            assert!((&qtq - &RealMat::identity(16)).frobenius() < 1e-10);
            assert!((&(&q * &r) - &a).frobenius() < 1e-10 * a.frobenius());
            for i in 0..16 {
                assert!(r[(i, i)] > 0.0);
                for j in 0..i {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn qr_rank_deficient() {
        let a = RealMat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(gram_schmidt_qr(&a), Err(Error::RankDeficient { column: 1, .. })));
        assert!(matches!(gram_schmidt_qr(&RealMat::<f64>::zeros(3, 3)), Err(Error::RankDeficient { column: 0, .. })));
    }

    #[test]
    fn det_examples() {
        assert_eq!(det_complex(&ComplexMat::<f64>::identity(4)), c(1.0, 0.0));
        let vals = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(2.0, -1.0)];
        let d = ComplexMat::from_fn(4, 4, |r, cc| if r == cc { vals[r] } else { Cx::new(0.0, 0.0) });
        let expect = vals.iter().fold(c(1.0, 0.0), |a, &b| a * b);
        assert!((det_complex(&d) - expect).norm() < 1e-14);
    }

    #[test]
    fn det_multiplicative_and_gram_real() {
        let mut g = rng(6);
        for _ in 0..50 {
            let a = rand_cmat(&mut g, 4, 4);
            let b = rand_cmat(&mut g, 4, 4);
            let lhs = det_complex(&(&a * &b));
            let rhs = det_complex(&a) * det_complex(&b);
            assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1e-300));
            let gram = det_complex(&(&a * &a.hermitian()));
            assert!(gram.im.abs() < 1e-9);
            assert!(gram.re >= 0.0);
        }
    }

    #[test]
    fn singular_values_match_determinant() {
        let mut g = rng(7);
        for _ in 0..20 {
            let a = rand_cmat(&mut g, 4, 4);
            let sv = singular_values(&a);
            assert_eq!(sv.len(), 4);
            let prod: f64 = sv.iter().product();
            assert!((prod - det_complex(&a).norm()).abs() < 1e-10);
            assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        }
        let rank2 = ComplexMat::from_fn(4, 4, |r, cc| if r == cc && r < 2 { c(2.0, 0.0) } else { c(0.0, 0.0) });
        let sv = singular_values(&rank2);
        assert!((sv[0] - 2.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        assert!(sv[2].abs() < 1e-14 && sv[3].abs() < 1e-14);
    }

    #[test]
    fn generic_over_f32() {
        let a = ComplexMat::<f32>::from_rows(&[[Cx::new(1.0, 1.0), Cx::new(0.0, 0.0)], [Cx::new(0.0, 0.0), Cx::new(2.0, 0.0)]]);
        let d = det_complex(&a);
        assert!((d - Cx::new(2.0f32, 2.0)).norm() < 1e-6);
        let qr = gram_schmidt_qr(&check_op(&a)).unwrap();
        assert!((&(&qr.q * &qr.r) - &check_op(&a)).frobenius() < 1e-5);
    }
}
