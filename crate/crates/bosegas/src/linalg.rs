//! Dense complex linear algebra used by the kernel and Fock-space layers.
//!
//! Matrices are plain `ndarray::Array2<Complex<T>>`. Everything here is
//! self-contained (no BLAS/LAPACK): the problem sizes are a few hundred at
//! most, and keeping the routines generic over the scalar type matters more
//! than peak throughput.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::real::{c_one, c_zero, Cplx, Real};

pub type CMat<T> = Array2<Cplx<T>>;
pub type CVec<T> = Array1<Cplx<T>>;

/// `a * b` with the inner loop over contiguous rows of `b` (ikj order).
pub fn matmul<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let (n, k) = a.dim();
    let (kb, m) = b.dim();
    assert_eq!(k, kb, "matmul shape mismatch: {n}x{k} * {kb}x{m}");
    let mut out = Array2::from_elem((n, m), c_zero::<T>());
    let bs = b.as_standard_layout();
    let bsl = bs.as_slice().unwrap();
    for i in 0..n {
        let mut row = out.row_mut(i);
        let rout = row.as_slice_mut().unwrap();
        for l in 0..k {
            let alk = a[(i, l)];
            if alk.re == T::zero() && alk.im == T::zero() {
                continue;
            }
            let brow = &bsl[l * m..(l + 1) * m];
            for (o, &bv) in rout.iter_mut().zip(brow) {
                *o += alk * bv;
            }
        }
    }
    out
}

pub fn matvec<T: Real>(a: &CMat<T>, x: &CVec<T>) -> CVec<T> {
    let (n, k) = a.dim();
    assert_eq!(k, x.len());
    let mut out = Array1::from_elem(n, c_zero::<T>());
    for i in 0..n {
        let mut acc = c_zero::<T>();
        for l in 0..k {
            acc += a[(i, l)] * x[l];
        }
        out[i] = acc;
    }
    out
}

pub fn adjoint<T: Real>(a: &CMat<T>) -> CMat<T> {
    let (n, m) = a.dim();
    Array2::from_shape_fn((m, n), |(i, j)| a[(j, i)].conj())
}

pub fn transpose<T: Real>(a: &CMat<T>) -> CMat<T> {
    let (n, m) = a.dim();
    Array2::from_shape_fn((m, n), |(i, j)| a[(j, i)])
}

pub fn conjugate<T: Real>(a: &CMat<T>) -> CMat<T> {
    a.mapv(|z| z.conj())
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    let mut m = Array2::from_elem((n, n), c_zero::<T>());
    for i in 0..n {
        m[(i, i)] = c_one::<T>();
    }
    m
}

pub fn frobenius<T: Real>(a: &CMat<T>) -> T {
    a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn vec_norm<T: Real>(x: &CVec<T>) -> T {
    x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Largest singular value by power iteration on `a* a`.
///
/// Deterministic: starts from a fixed seed vector. Accurate to ~1e-12
/// relative for the well-separated spectra encountered here; the dense Jacobi
/// route ([`hermitian_eigen`] on `a* a`) serves as the test oracle.
pub fn spectral_norm<T: Real>(a: &CMat<T>) -> T {
    let (n, m) = a.dim();
    if n == 0 || m == 0 {
        return T::zero();
    }
    let mut x: CVec<T> = Array1::from_shape_fn(m, |i| {
        Complex::new(T::one() + T::of(0.01) * T::of(i as f64 + 1.0).sin(), T::of(0.003) * T::of(i as f64).cos())
    });
    let nx = vec_norm(&x);
    x.mapv_inplace(|z| z / nx);
    let mut sigma = T::zero();
    for _ in 0..300 {
        // y = a* (a x)
        let ax = matvec(a, &x);
        let mut y = Array1::from_elem(m, c_zero::<T>());
        for j in 0..m {
            let mut acc = c_zero::<T>();
            for i in 0..n {
                acc += a[(i, j)].conj() * ax[i];
            }
            y[j] = acc;
        }
        let ny = vec_norm(&y);
        if ny == T::zero() {
            return T::zero();
        }
        let new_sigma = ny.sqrt();
        y.mapv_inplace(|z| z / ny);
        let done = (new_sigma - sigma).abs() <= T::of(1e-13) * new_sigma.max(T::one());
        sigma = new_sigma;
        x = y;
        if done {
            break;
        }
    }
    sigma
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns (eigenvalues ascending, column eigenvectors).
pub fn hermitian_eigen<T: Real>(a: &CMat<T>) -> (Array1<T>, CMat<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigen: square matrix required");
    let mut m = a.clone();
    let mut q = identity::<T>(n);
    let scale = frobenius(&m).max(T::min_positive_value());
    let tol = T::epsilon() * scale;
    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..n {
            for r in (p + 1)..n {
                off = off + m[(p, r)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[(p, r)];
                if apq.norm() <= T::epsilon() * scale {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(r, r)].re;
                // Unitary 2x2 rotation [[c, -s e^{i phi}], [s e^{-i phi}, c]]
                // with phi = arg(apq) diagonalizing the (p, r) block.
                let phi = apq.im.atan2(apq.re);
                let abs_apq = apq.norm();
                let theta = (T::of(2.0) * abs_apq).atan2(aqq - app) / T::of(2.0);
                let (s, c) = theta.sin_cos();
                let e_pos = Complex::from_polar(T::one(), phi);
                let e_neg = e_pos.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, r)];
                    m[(k, p)] = mkp * c - mkq * e_neg * s;
                    m[(k, r)] = mkp * e_pos * s + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(r, k)];
                    m[(p, k)] = mpk * c - mqk * e_pos * s;
                    m[(r, k)] = mpk * e_neg * s + mqk * c;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = qkp * c - qkq * e_neg * s;
                    q[(k, r)] = qkp * e_pos * s + qkq * c;
                }
            }
        }
    }
    let mut vals: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)].re, i)).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eig = Array1::from_iter(vals.iter().map(|v| v.0));
    let mut vecs = Array2::from_elem((n, n), c_zero::<T>());
    for (col, &(_, src)) in vals.iter().enumerate() {
        for k in 0..n {
            vecs[(k, col)] = q[(k, src)];
        }
    }
    (eig, vecs)
}

/// exp(-i t H) for Hermitian `h`, built from its eigendecomposition.
pub fn unitary_exp<T: Real>(eig: &Array1<T>, vecs: &CMat<T>, t: T) -> CMat<T> {
    let n = eig.len();
    let mut phased = vecs.clone();
    for j in 0..n {
        let ph = Complex::from_polar(T::one(), -eig[j] * t);
        for i in 0..n {
            phased[(i, j)] *= ph;
        }
    }
    matmul(&phased, &adjoint(vecs))
}

/// Determinant and inverse of a small complex matrix by partial-pivot
/// Gaussian elimination. Returns `None` when singular to working precision.
pub fn det_inverse<T: Real>(a: &CMat<T>) -> (Cplx<T>, Option<CMat<T>>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut inv = identity::<T>(n);
    let mut det = c_one::<T>();
    let scale = frobenius(a).max(T::min_positive_value());
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].norm();
        for r in (col + 1)..n {
            let v = m[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= T::epsilon() * scale * T::of(n as f64) {
            return (c_zero::<T>(), None);
        }
        if piv != col {
            for j in 0..n {
                m.swap((col, j), (piv, j));
                inv.swap((col, j), (piv, j));
            }
            det = -det;
        }
        let d = m[(col, col)];
        det *= d;
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f.norm() == T::zero() {
                continue;
            }
            for j in 0..n {
                let mcj = m[(col, j)];
                let icj = inv[(col, j)];
                m[(r, j)] -= f * mcj;
                inv[(r, j)] -= f * icj;
            }
        }
    }
    (det, Some(inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matmul_small() {
        let a = ndarray::array![[c(1.0, 0.0), c(0.0, 1.0)], [c(2.0, 0.0), c(0.0, 0.0)]];
        let b = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, -1.0)]];
        let p = matmul(&a, &b);
        assert_eq!(p[(0, 0)], c(0.0, 1.0));
        assert_eq!(p[(0, 1)], c(2.0, 0.0));
        assert_eq!(p[(1, 0)], c(0.0, 0.0));
        assert_eq!(p[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn jacobi_reconstructs_hermitian() {
        // Fixed pseudo-random Hermitian matrix.
        let n = 12;
        let mut a = Array2::from_elem((n, n), c(0.0, 0.0));
        let mut state = 0x12345u64;
        let mut rng = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let z = if i == j { c(rng(), 0.0) } else { c(rng(), rng()) };
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        let (eig, vecs) = hermitian_eigen(&a);
        // Q Lambda Q^dag == A
        let mut lam = Array2::from_elem((n, n), c(0.0, 0.0));
        for i in 0..n {
            lam[(i, i)] = c(eig[i], 0.0);
        }
        let rec = matmul(&matmul(&vecs, &lam), &adjoint(&vecs));
        let err = frobenius(&(&rec - &a));
        assert!(err < 1e-12 * frobenius(&a), "reconstruction error {err}");
        // Orthonormality
        let qq = matmul(&adjoint(&vecs), &vecs);
        let dev = frobenius(&(&qq - &identity::<f64>(n)));
        assert!(dev < 1e-12, "orthonormality defect {dev}");
        // Ascending
        for w in eig.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn spectral_norm_matches_jacobi() {
        let a = ndarray::array![
            [c(0.3, 0.1), c(-1.2, 0.4), c(0.0, 0.9)],
            [c(2.0, 0.0), c(0.5, -0.3), c(0.1, 0.1)],
        ];
        let ata = matmul(&adjoint(&a), &a);
        let (eig, _) = hermitian_eigen(&ata);
        let want = eig[eig.len() - 1].sqrt();
        let got = spectral_norm(&a);
        assert!((got - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let a = ndarray::array![
            [c(1.0, 0.0), c(0.2, 0.5)],
            [c(0.2, -0.5), c(-0.4, 0.0)],
        ];
        let (eig, vecs) = hermitian_eigen(&a);
        let u = unitary_exp(&eig, &vecs, 0.7);
        let uu = matmul(&adjoint(&u), &u);
        assert!(frobenius(&(&uu - &identity::<f64>(2))) < 1e-13);
    }

    #[test]
    fn det_inverse_roundtrip() {
        let a = ndarray::array![
            [c(2.0, 1.0), c(0.3, 0.0)],
            [c(-0.1, 0.2), c(1.5, -0.5)],
        ];
        let (det, inv) = det_inverse(&a);
        let inv = inv.unwrap();
        let prod = matmul(&a, &inv);
        assert!(frobenius(&(&prod - &identity::<f64>(2))) < 1e-13);
        // det of 2x2 by hand
        let want = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((det - want).norm() < 1e-13);
        // singular case
        let s = ndarray::array![
            [c(1.0, 0.0), c(2.0, 0.0)],
            [c(2.0, 0.0), c(4.0, 0.0)],
        ];
        assert!(det_inverse(&s).1.is_none());
    }
}
