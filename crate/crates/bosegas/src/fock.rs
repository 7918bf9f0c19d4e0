//! Exact finite-dimensional quantum mechanics on a truncated bosonic Fock
//! space: M abstract orthonormal modes with a total-occupancy cutoff. This is
//! the brute-force oracle that validates every second-quantized identity the
//! Bogoliubov layer relies on.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::FockError;
use crate::linalg::{self, CMat, CVec};
use crate::real::{c_re, c_zero, Cplx, Real};

/// Truncated Fock basis: occupation tuples (n_1, ..., n_M) with sum <= n_max,
/// ordered by total occupation then lexicographically.
#[derive(Clone, Debug)]
pub struct FockBasis<T: Real> {
    pub modes: usize,
    pub n_max: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    annihilators: Vec<CMat<T>>,
}

fn enumerate_sector(modes: usize, total: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, remaining: usize, slots: usize, out: &mut Vec<Vec<u8>>) {
        if slots == 1 {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k as u8);
            rec(prefix, remaining - k, slots - 1, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::new(), total, modes, out);
}

impl<T: Real> FockBasis<T> {
    pub const DEFAULT_DIMENSION_LIMIT: usize = 20_000;

    pub fn new(modes: usize, n_max: usize, dimension_limit: usize) -> Result<Self, FockError> {
        assert!(modes >= 1);
        let mut states = Vec::new();
        for total in 0..=n_max {
            enumerate_sector(modes, total, &mut states);
        }
        let dim = states.len();
        if dim > dimension_limit {
            return Err(FockError::DimensionOverflow {
                dim,
                limit: dimension_limit,
            });
        }
        let index: HashMap<Vec<u8>, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        // Mode annihilators: <m| a_i |n> = sqrt(n_i) delta_{m, n - e_i}.
        let mut annihilators = Vec::with_capacity(modes);
        for mode in 0..modes {
            let mut a = Array2::from_elem((dim, dim), c_zero::<T>());
            for (col, st) in states.iter().enumerate() {
                if st[mode] == 0 {
                    continue;
                }
                let mut target = st.clone();
                target[mode] -= 1;
                let row = index[&target];
                a[(row, col)] = c_re(T::of(st[mode] as f64).sqrt());
            }
            annihilators.push(a);
        }
        Ok(Self {
            modes,
            n_max,
            states,
            index,
            annihilators,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Basis index of an occupation tuple, if below the cutoff.
    pub fn index_of(&self, state: &[u8]) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn vacuum(&self) -> CVec<T> {
        let mut v = Array1::from_elem(self.dim(), c_zero::<T>());
        v[0] = Complex::new(T::one(), T::zero());
        v
    }

    /// Matrices of the mode annihilation operators a_1, ..., a_M.
    pub fn annihilators(&self) -> &[CMat<T>] {
        &self.annihilators
    }

    pub fn creator(&self, mode: usize) -> CMat<T> {
        linalg::adjoint(&self.annihilators[mode])
    }

    /// Smeared annihilator a(f) = sum_i conj(f_i) a_i.
    pub fn annihilator(&self, f: &CVec<T>) -> CMat<T> {
        assert_eq!(f.len(), self.modes);
        let dim = self.dim();
        let mut out = Array2::from_elem((dim, dim), c_zero::<T>());
        for (i, a) in self.annihilators.iter().enumerate() {
            let w = f[i].conj();
            if w.norm_sqr() == T::zero() {
                continue;
            }
            out.zip_mut_with(a, |o, &v| *o += w * v);
        }
        out
    }

    /// Smeared creator a*(f) = sum_i f_i a_i^dag.
    pub fn creator_smeared(&self, f: &CVec<T>) -> CMat<T> {
        linalg::adjoint(&self.annihilator(f))
    }

    /// Field operator phi_a(f) = a*(f) + a(f).
    pub fn field(&self, f: &CVec<T>) -> CMat<T> {
        let a = self.annihilator(f);
        &linalg::adjoint(&a) + &a
    }

    /// Pair operator A(f, g) = a*(f) + a(conj g).
    pub fn pair_operator(&self, f: &CVec<T>, g: &CVec<T>) -> CMat<T> {
        let gbar = g.mapv(|z| z.conj());
        &self.creator_smeared(f) + &self.annihilator(&gbar)
    }

    /// Total number operator.
    pub fn number_operator(&self) -> CMat<T> {
        let dim = self.dim();
        let mut n = Array2::from_elem((dim, dim), c_zero::<T>());
        for (i, st) in self.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            n[(i, i)] = c_re(T::of(total as f64));
        }
        n
    }

    /// Occupation-sector weights |P_s psi|^2 for s = 0..=n_max.
    pub fn sector_weights(&self, psi: &CVec<T>) -> Vec<T> {
        let mut w = vec![T::zero(); self.n_max + 1];
        for (i, st) in self.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            w[total] = w[total] + psi[i].norm_sqr();
        }
        w
    }

    /// Weight in the top two sectors: the truncation-leakage monitor.
    pub fn leakage(&self, psi: &CVec<T>) -> T {
        let w = self.sector_weights(psi);
        let n = w.len();
        if n >= 2 {
            w[n - 1] + w[n - 2]
        } else {
            w[n - 1]
        }
    }

    /// Restrict rows and columns to sectors with total occupation <= cut.
    pub fn restrict_below(&self, op: &CMat<T>, cut: usize) -> CMat<T> {
        let mut out = op.clone();
        for (i, st) in self.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            if total > cut {
                for j in 0..self.dim() {
                    out[(i, j)] = c_zero::<T>();
                    out[(j, i)] = c_zero::<T>();
                }
            }
        }
        out
    }
}

/// Second-quantize mode-basis coefficient matrices:
/// `sum_ij H1_ij a_i^dag a_j + sum_ij (H2_ij a_i^dag a_j^dag + conj(H2)_ij a_i a_j) + c`.
pub fn second_quantize<T: Real>(
    basis: &FockBasis<T>,
    h1: &CMat<T>,
    h2: &CMat<T>,
    c: Cplx<T>,
) -> Result<CMat<T>, FockError> {
    let aa = h2.mapv(|z| z.conj());
    second_quantize_full(basis, h1, h2, &aa, c)
}

/// Second-quantization with independent a a coefficients (used to compare
/// raw, un-hermitized assemblies against literally built operators).
pub fn second_quantize_full<T: Real>(
    basis: &FockBasis<T>,
    h1: &CMat<T>,
    h2: &CMat<T>,
    aa: &CMat<T>,
    c: Cplx<T>,
) -> Result<CMat<T>, FockError> {
    let m = basis.modes;
    if h1.dim() != (m, m) || h2.dim() != (m, m) || aa.dim() != (m, m) {
        return Err(FockError::ShapeMismatch);
    }
    let dim = basis.dim();
    let mut out = Array2::from_elem((dim, dim), c_zero::<T>());
    for i in 0..m {
        let adag_i = basis.creator(i);
        for j in 0..m {
            let w1 = h1[(i, j)];
            let w2 = h2[(i, j)];
            let w3 = aa[(i, j)];
            if w1.norm_sqr() != T::zero() {
                let prod = linalg::matmul(&adag_i, &basis.annihilators[j]);
                out.zip_mut_with(&prod, |o, &v| *o += w1 * v);
            }
            if w2.norm_sqr() != T::zero() {
                let adag_j = basis.creator(j);
                let prod = linalg::matmul(&adag_i, &adag_j);
                out.zip_mut_with(&prod, |o, &v| *o += w2 * v);
            }
            if w3.norm_sqr() != T::zero() {
                let prod = linalg::matmul(&basis.annihilators[i], &basis.annihilators[j]);
                out.zip_mut_with(&prod, |o, &v| *o += w3 * v);
            }
        }
    }
    for i in 0..dim {
        out[(i, i)] += c;
    }
    Ok(out)
}

/// Cached eigendecomposition of a hermitian generator; produces the exact
/// unitary exp(-i G t) at any time.
pub struct ExactEvolution<T: Real> {
    eig: Array1<T>,
    vecs: CMat<T>,
}

impl<T: Real> ExactEvolution<T> {
    pub fn new(generator: &CMat<T>) -> Result<Self, FockError> {
        let defect = linalg::frobenius(&(&linalg::adjoint(generator) - generator));
        let scale = linalg::frobenius(generator).max(T::one());
        if defect > T::of(1e-10) * scale {
            return Err(FockError::NonHermitianGenerator {
                defect: defect.to_f64_lossy(),
            });
        }
        let (eig, vecs) = linalg::hermitian_eigen(generator);
        Ok(Self { eig, vecs })
    }

    pub fn unitary(&self, t: T) -> CMat<T> {
        linalg::unitary_exp(&self.eig, &self.vecs, t)
    }

    pub fn apply(&self, psi: &CVec<T>, t: T) -> CVec<T> {
        let mut coeffs = linalg::matvec(&linalg::adjoint(&self.vecs), psi);
        for (j, z) in coeffs.iter_mut().enumerate() {
            *z = *z * Complex::from_polar(T::one(), -self.eig[j] * t);
        }
        linalg::matvec(&self.vecs, &coeffs)
    }
}

/// Step a state through a time-dependent hermitian generator family by exact
/// midpoint exponentials (one eigendecomposition per step).
pub fn evolve_time_dependent<T: Real>(
    generator_at: &dyn Fn(T) -> CMat<T>,
    psi0: &CVec<T>,
    t_final: T,
    dt: T,
) -> Result<CVec<T>, FockError> {
    let steps = (t_final / dt).round().to_f64_lossy() as usize;
    let mut psi = psi0.clone();
    for k in 0..steps {
        let t_mid = (T::of(k as f64) + T::of(0.5)) * dt;
        let g = generator_at(t_mid);
        let ev = ExactEvolution::new(&g)?;
        psi = ev.apply(&psi, dt);
    }
    Ok(psi)
}

/// Defect of the Bogoliubov conjugation identity on the oracle.
///
/// The operator difference `U_fock^dag A(f,g) U_fock - A(Theta(f,g))` is
/// measured with output sectors below the cutoff boundary (<= n_max - 2) and
/// input sectors restricted to <= probe_sector. Probing from low sectors is
/// what makes the norm meaningful: the truncated evolution of states near
/// the cutoff is order-one wrong no matter how large n_max is, while for
/// states far below it the error shrinks with the cutoff leakage.
pub struct ConjugationCheck<T: Real> {
    pub defect: T,
    pub leakage: T,
}

#[allow(clippy::too_many_arguments)]
pub fn verify_bogoliubov_conjugation<T: Real>(
    basis: &FockBasis<T>,
    fock_unitary: &CMat<T>,
    f: &CVec<T>,
    g: &CVec<T>,
    theta_f: &CVec<T>,
    theta_g: &CVec<T>,
    leakage_limit: T,
    probe_sector: usize,
) -> Result<ConjugationCheck<T>, FockError> {
    let evolved_vac = linalg::matvec(fock_unitary, &basis.vacuum());
    let leakage = basis.leakage(&evolved_vac);
    if leakage > leakage_limit {
        return Err(FockError::Inconclusive {
            leakage: leakage.to_f64_lossy(),
            limit: leakage_limit.to_f64_lossy(),
        });
    }
    let a_fg = basis.pair_operator(f, g);
    let conjugated = linalg::matmul(
        &linalg::adjoint(fock_unitary),
        &linalg::matmul(&a_fg, fock_unitary),
    );
    let expected = basis.pair_operator(theta_f, theta_g);
    let mut diff = &conjugated - &expected;
    let row_cut = basis.n_max.saturating_sub(2);
    for (idx, st) in basis.states.iter().enumerate() {
        let total: usize = st.iter().map(|&x| x as usize).sum();
        if total > row_cut {
            for j in 0..basis.dim() {
                diff[(idx, j)] = crate::real::c_zero::<T>();
            }
        }
        if total > probe_sector {
            for i in 0..basis.dim() {
                diff[(i, idx)] = crate::real::c_zero::<T>();
            }
        }
    }
    Ok(ConjugationCheck {
        defect: linalg::spectral_norm(&diff),
        leakage,
    })
}

/// Exact characteristic function `<psi, exp(i s phi_a(h)) psi>`; the field
/// operator is eigendecomposed once and reused across s values.
pub struct FieldExponential<T: Real> {
    ev: ExactEvolution<T>,
}

impl<T: Real> FieldExponential<T> {
    pub fn new(basis: &FockBasis<T>, h: &CVec<T>) -> Result<Self, FockError> {
        let op = basis.field(h);
        Ok(Self {
            ev: ExactEvolution::new(&op)?,
        })
    }

    /// Apply `exp(i s phi_a(h))` to a state.
    pub fn apply_exponential(&self, psi: &CVec<T>, s: T) -> CVec<T> {
        // exp(i s Phi) = exp(-i Phi (-s))
        self.ev.apply(psi, -s)
    }

    /// `<psi, exp(i s phi_a(h)) psi>`.
    pub fn expectation(&self, psi: &CVec<T>, s: T) -> Cplx<T> {
        let rotated = self.apply_exponential(psi, s);
        let mut acc = c_zero::<T>();
        for (a, b) in psi.iter().zip(rotated.iter()) {
            acc += a.conj() * b;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_dimension_and_order() {
        let b = FockBasis::<f64>::new(2, 3, 20_000).unwrap();
        // C(3 + 2, 2) = 10 states
        assert_eq!(b.dim(), 10);
        assert_eq!(b.states[0], vec![0, 0]);
        // graded: totals ascend
        let totals: Vec<usize> = b
            .states
            .iter()
            .map(|s| s.iter().map(|&x| x as usize).sum())
            .collect();
        for w in totals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(FockBasis::<f64>::new(3, 30, 100).is_err());
    }

    #[test]
    fn textbook_single_mode_annihilator() {
        let b = FockBasis::<f64>::new(1, 2, 20_000).unwrap();
        let a = &b.annihilators()[0];
        let want = ndarray::array![
            [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(2.0f64.sqrt(), 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        assert!(linalg::frobenius(&(a - &want)) < 1e-15);
    }

    #[test]
    fn ccr_below_cutoff() {
        let b = FockBasis::<f64>::new(2, 6, 20_000).unwrap();
        let f = ndarray::array![c(0.3, 0.4), c(-0.2, 0.9)];
        let g = ndarray::array![c(1.0, -0.5), c(0.7, 0.1)];
        let af = b.annihilator(&f);
        let adg = b.creator_smeared(&g);
        let comm = &linalg::matmul(&af, &adg) - &linalg::matmul(&adg, &af);
        // <f, g> = sum conj(f_i) g_i
        let want: C64 = f.iter().zip(g.iter()).map(|(a, b)| a.conj() * b).sum();
        // check on states with total < n_max
        for (i, st) in b.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            if total >= b.n_max {
                continue;
            }
            for (j, st2) in b.states.iter().enumerate() {
                let total2: usize = st2.iter().map(|&x| x as usize).sum();
                if total2 >= b.n_max {
                    continue;
                }
                let expect = if i == j { want } else { c(0.0, 0.0) };
                assert!(
                    (comm[(i, j)] - expect).norm() < 1e-13,
                    "CCR fails at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn number_operator_is_total_occupation() {
        let b = FockBasis::<f64>::new(3, 4, 20_000).unwrap();
        // N = sum_i a_i^dag a_i below the cutoff boundary
        let dim = b.dim();
        let mut n_sum = Array2::from_elem((dim, dim), c(0.0, 0.0));
        for i in 0..3 {
            let prod = linalg::matmul(&b.creator(i), &b.annihilators()[i]);
            n_sum = &n_sum + &prod;
        }
        let n_op = b.number_operator();
        assert!(linalg::frobenius(&(&n_sum - &n_op)) < 1e-13);
        for (i, st) in b.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            assert!((n_op[(i, i)].re - total as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn second_quantize_structure() {
        let b = FockBasis::<f64>::new(2, 5, 20_000).unwrap();
        let id2 = linalg::identity::<f64>(2);
        let zero2 = Array2::from_elem((2, 2), c(0.0, 0.0));
        // H1 = I, H2 = 0 -> N
        let n = second_quantize(&b, &id2, &zero2, c(0.0, 0.0)).unwrap();
        assert!(linalg::frobenius(&(&n - &b.number_operator())) < 1e-13);
        // H2 != 0 couples sectors n and n +/- 2 only; output hermitian
        let h1 = ndarray::array![[c(0.5, 0.0), c(0.1, 0.2)], [c(0.1, -0.2), c(0.8, 0.0)]];
        let h2 = ndarray::array![[c(0.2, 0.1), c(0.05, -0.03)], [c(0.05, -0.03), c(0.3, 0.0)]];
        let g = second_quantize(&b, &h1, &h2, c(0.0, 0.0)).unwrap();
        let herm = linalg::frobenius(&(&linalg::adjoint(&g) - &g));
        assert!(herm < 1e-13, "second-quantized operator not hermitian: {herm}");
        for (i, si) in b.states.iter().enumerate() {
            let ti: i64 = si.iter().map(|&x| x as i64).sum();
            for (j, sj) in b.states.iter().enumerate() {
                let tj: i64 = sj.iter().map(|&x| x as i64).sum();
                if g[(i, j)].norm() > 1e-14 {
                    let d = (ti - tj).abs();
                    assert!(d == 0 || d == 2, "sector jump {d} at ({i},{j})");
                }
            }
        }
        assert!(second_quantize(&b, &linalg::identity::<f64>(3), &zero2, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn exact_evolution_unitary_and_vacuum_fixed() {
        let b = FockBasis::<f64>::new(2, 6, 20_000).unwrap();
        let n_op = b.number_operator();
        let ev = ExactEvolution::new(&n_op).unwrap();
        // vacuum is an eigenvector with eigenvalue 0: stays put exactly
        let vac = b.vacuum();
        let out = ev.apply(&vac, 1.3);
        let dev: f64 = out
            .iter()
            .zip(vac.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dev < 1e-13);
        // norm preservation on a pseudo-random state
        let mut state = 1u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let psi = Array1::from_shape_fn(b.dim(), |_| c(rng(), rng()));
        let psi_t = ev.apply(&psi, 0.77);
        let n0 = linalg::vec_norm(&psi);
        let n1 = linalg::vec_norm(&psi_t);
        assert!((n0 - n1).abs() < 1e-12 * n0);
        // unitary matrix route agrees
        let u = ev.unitary(0.77);
        let via_mat = linalg::matvec(&u, &psi);
        let dev2: f64 = via_mat
            .iter()
            .zip(psi_t.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dev2 < 1e-12);
        // non-hermitian generator rejected
        let mut bad = n_op.clone();
        bad[(0, 1)] = c(0.3, 0.0);
        assert!(ExactEvolution::new(&bad).is_err());
    }

    #[test]
    fn vacuum_characteristic_function_is_gaussian() {
        let b = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
        let h = ndarray::array![c(0.5, 0.2), c(-0.3, 0.4)];
        let h_norm_sq: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let fe = FieldExponential::new(&b, &h).unwrap();
        let vac = b.vacuum();
        for s in [-2.0, -1.0, -0.3, 0.0, 0.4, 1.1, 2.0f64] {
            let got = fe.expectation(&vac, s);
            let want = (-s * s * h_norm_sq / 2.0).exp();
            assert!(
                (got - c(want, 0.0)).norm() < 1e-8,
                "vacuum characteristic function off at s={s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn multivariate_bch_for_orthogonal_real_vectors() {
        let b = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
        let h1 = ndarray::array![c(0.6, 0.0), c(0.0, 0.0)];
        let h2 = ndarray::array![c(0.0, 0.0), c(0.45, 0.0)];
        let f1 = FieldExponential::new(&b, &h1).unwrap();
        let f2 = FieldExponential::new(&b, &h2).unwrap();
        let vac = b.vacuum();
        let (s1, s2) = (0.8, -1.1);
        // <Omega, e^{i s1 phi(h1)} e^{i s2 phi(h2)} Omega>
        let mid = f2.ev.apply(&vac, -s2);
        let rotated = f1.ev.apply(&mid, -s1);
        let mut acc = c(0.0, 0.0);
        for (a, bq) in vac.iter().zip(rotated.iter()) {
            acc += a.conj() * bq;
        }
        let want = (-(s1 * s1 * 0.36 + s2 * s2 * 0.2025) / 2.0).exp();
        assert!(
            (acc - c(want, 0.0)).norm() < 1e-8,
            "multivariate BCH failed: {acc} vs {want}"
        );
    }

    #[test]
    fn restrict_and_leakage() {
        let b = FockBasis::<f64>::new(1, 4, 20_000).unwrap();
        let mut psi = b.vacuum();
        psi[4] = c(0.1, 0.0); // n = 4 top sector
        psi[3] = c(0.05, 0.0);
        let leak = b.leakage(&psi);
        assert!((leak - (0.01 + 0.0025)).abs() < 1e-15);
        let op = linalg::identity::<f64>(b.dim());
        let r = b.restrict_below(&op, 2);
        for (i, st) in b.states.iter().enumerate() {
            let total: usize = st.iter().map(|&x| x as usize).sum();
            let want = if total <= 2 { 1.0 } else { 0.0 };
            assert!((r[(i, i)].re - want).abs() < 1e-15);
        }
    }
}
