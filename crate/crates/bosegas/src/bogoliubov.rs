//! Quadratic fluctuation generator and the Bogoliubov pair it propagates.
//!
//! The generator is assembled by normal-ordering every displayed term of the
//! quadratic form into canonical coefficients (H1, H2, c). The term list is
//! emitted once, through [`TermSink`]; the production sink performs the
//! finite-kernel algebra, while the Fock-space sink in [`literal`] rebuilds
//! each term literally on the truncated oracle so the normal-ordering can be
//! compared matrix-by-matrix.
//!
//! Sign and ordering conventions of the pair evolution are fixed against the
//! oracle (see the `bdg_oracle` tests) and frozen here:
//!
//! d/dt U = i (U h + 2 conj(V) conj(H2)),
//! d/dt V = i (V h + 2 conj(U) conj(H2)),  h = -Lap + H1,
//!
//! with the kinetic part applied exactly as a spectral half-step.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::BogoliubovError;
use crate::grid::{GridFunction, Lattice};
use crate::kernels::{
    omega_midpoint_kernel, windowed_midpoint_kernel, BogoliubovKernels, DisplacementField,
    FamilyBuilder,
};
use crate::linalg::{self, CMat, CVec};
use crate::real::{c_i, c_re, c_zero, Cplx, Real};

/// One slot of a normal-ordered term: the identity kernel, a dense kernel
/// matrix, or a diagonal (multiplication) kernel given by its values.
#[derive(Clone, Copy)]
pub enum Factor<'a, T: Real> {
    Id,
    Mat(&'a CMat<T>),
    Diag(&'a CVec<T>),
}

/// Receiver of the generator's term stream. Terms are
/// `coef * int M(x;y) a^#(A_x) a^#(B_y)` with the slots given by kernels, and
/// `hc` appends the hermitian conjugate of the whole term.
pub trait TermSink<T: Real> {
    fn astar_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool);
    fn astar_astar(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool);
    fn a_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool);
    /// `coef * a*(f) a(g)` for plain vectors f, g.
    fn astar_a_vectors(&mut self, f: &CVec<T>, g: &CVec<T>, coef: Cplx<T>);
    fn scalar(&mut self, c: Cplx<T>);
}

fn factor_matrix<T: Real>(f: &Factor<T>, n: usize, w: T) -> CMat<T> {
    match f {
        Factor::Id => {
            let mut m = Array2::from_elem((n, n), c_zero::<T>());
            let inv = c_re(T::one() / w);
            for i in 0..n {
                m[(i, i)] = inv;
            }
            m
        }
        Factor::Mat(m) => (*m).clone(),
        Factor::Diag(d) => {
            let mut m = Array2::from_elem((n, n), c_zero::<T>());
            let inv = c_re(T::one() / w);
            for i in 0..n {
                m[(i, i)] = d[i] * inv;
            }
            m
        }
    }
}

/// Kernel composition of two factors (quadrature weight w), with fast paths
/// for identity and diagonal slots.
fn compose_factors<T: Real>(a: &Factor<T>, b: &Factor<T>, n: usize, w: T) -> CMat<T> {
    match (a, b) {
        (Factor::Id, other) => factor_matrix(other, n, w),
        (other, Factor::Id) => factor_matrix(other, n, w),
        (Factor::Diag(d), Factor::Mat(m)) => {
            let mut out = (*m).clone();
            for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                let s = d[i];
                for z in row.iter_mut() {
                    *z = *z * s;
                }
            }
            out
        }
        (Factor::Mat(m), Factor::Diag(d)) => {
            let mut out = (*m).clone();
            for mut row in out.rows_mut() {
                for (j, z) in row.iter_mut().enumerate() {
                    *z = *z * d[j];
                }
            }
            out
        }
        (Factor::Diag(d1), Factor::Diag(d2)) => {
            let mut m = Array2::from_elem((n, n), c_zero::<T>());
            let inv = c_re(T::one() / w);
            for i in 0..n {
                m[(i, i)] = d1[i] * d2[i] * inv;
            }
            m
        }
        (Factor::Mat(m1), Factor::Mat(m2)) => {
            let mut p = linalg::matmul(m1, m2);
            let cw = c_re(w);
            p.mapv_inplace(|z| z * cw);
            p
        }
    }
}

fn compose_mat_factor<T: Real>(x: &CMat<T>, b: &Factor<T>, w: T) -> CMat<T> {
    match b {
        Factor::Id => x.clone(),
        Factor::Diag(d) => {
            let mut out = x.clone();
            for mut row in out.rows_mut() {
                for (j, z) in row.iter_mut().enumerate() {
                    *z = *z * d[j];
                }
            }
            out
        }
        Factor::Mat(m) => {
            let mut p = linalg::matmul(x, m);
            let cw = c_re(w);
            p.mapv_inplace(|z| z * cw);
            p
        }
    }
}

fn factor_adjoint<T: Real>(f: &Factor<T>) -> OwnedFactor<T> {
    match f {
        Factor::Id => OwnedFactor::Id,
        Factor::Mat(m) => OwnedFactor::Mat(linalg::adjoint(m)),
        Factor::Diag(d) => OwnedFactor::Diag(d.mapv(|z| z.conj())),
    }
}

fn factor_transpose<T: Real>(f: &Factor<T>) -> OwnedFactor<T> {
    match f {
        Factor::Id => OwnedFactor::Id,
        Factor::Mat(m) => OwnedFactor::Mat(linalg::transpose(m)),
        Factor::Diag(d) => OwnedFactor::Diag((*d).clone()),
    }
}

fn factor_conj<T: Real>(f: &Factor<T>) -> OwnedFactor<T> {
    match f {
        Factor::Id => OwnedFactor::Id,
        Factor::Mat(m) => OwnedFactor::Mat(linalg::conjugate(m)),
        Factor::Diag(d) => OwnedFactor::Diag(d.mapv(|z| z.conj())),
    }
}

enum OwnedFactor<T: Real> {
    Id,
    Mat(CMat<T>),
    Diag(CVec<T>),
}

impl<T: Real> OwnedFactor<T> {
    fn as_factor(&self) -> Factor<'_, T> {
        match self {
            OwnedFactor::Id => Factor::Id,
            OwnedFactor::Mat(m) => Factor::Mat(m),
            OwnedFactor::Diag(d) => Factor::Diag(d),
        }
    }
}

/// Canonical quadratic coefficients, kernel convention: the operator is
/// `K + int w^2 H1(u;v) a*_u a_v + int w^2 (H2 a*a* + conj H2 a a) + c`.
#[derive(Clone, Debug)]
pub struct QuadraticGenerator<T: Real> {
    pub time: T,
    pub h1: CMat<T>,
    pub h2: CMat<T>,
    pub scalar: Cplx<T>,
    /// Quadrature weight of the underlying basis (cell volume, or 1 for
    /// abstract modes).
    pub weight: T,
    /// HS norm of the skew part removed from H1.
    pub hermitize_defect: T,
    /// HS distance between the accumulated a a coefficients and conj(H2).
    pub pairing_conjugate_defect: T,
}

impl<T: Real> QuadraticGenerator<T> {
    pub fn zero(n: usize, weight: T, time: T) -> Self {
        Self {
            time,
            h1: Array2::from_elem((n, n), c_zero::<T>()),
            h2: Array2::from_elem((n, n), c_zero::<T>()),
            scalar: c_zero::<T>(),
            weight,
            hermitize_defect: T::zero(),
            pairing_conjugate_defect: T::zero(),
        }
    }

    pub fn h1_op_norm(&self) -> T {
        self.weight * linalg::spectral_norm(&self.h1)
    }

    pub fn h2_hs_norm(&self) -> T {
        self.weight * linalg::frobenius(&self.h2)
    }
}

/// Raw normal-ordering accumulator (the production [`TermSink`]).
pub struct KernelAssembler<T: Real> {
    n: usize,
    weight: T,
    pub h1: CMat<T>,
    pub h2_raw: CMat<T>,
    pub aa_raw: CMat<T>,
    pub scalar: Cplx<T>,
}

impl<T: Real> KernelAssembler<T> {
    pub fn new(n: usize, weight: T) -> Self {
        Self {
            n,
            weight,
            h1: Array2::from_elem((n, n), c_zero::<T>()),
            h2_raw: Array2::from_elem((n, n), c_zero::<T>()),
            aa_raw: Array2::from_elem((n, n), c_zero::<T>()),
            scalar: c_zero::<T>(),
        }
    }

    /// Symmetrized raw coefficients `(h1, h2_sym, aa_sym, c)`; exact because
    /// the operators a* a* (resp. a a) commute.
    pub fn symmetrized(&self) -> (CMat<T>, CMat<T>, CMat<T>, Cplx<T>) {
        let half = c_re(T::of(0.5));
        let h2t = linalg::transpose(&self.h2_raw);
        let aat = linalg::transpose(&self.aa_raw);
        let h2 = (&self.h2_raw + &h2t).mapv(|z| z * half);
        let aa = (&self.aa_raw + &aat).mapv(|z| z * half);
        (self.h1.clone(), h2, aa, self.scalar)
    }

    /// Hermitize H1, check the a a block against conj(H2), and package the
    /// generator. The removed defects are recorded, not silently dropped.
    pub fn finalize(&self, time: T) -> QuadraticGenerator<T> {
        let (h1_raw, h2, aa, scalar) = self.symmetrized();
        let h1_adj = linalg::adjoint(&h1_raw);
        let half = c_re(T::of(0.5));
        let h1 = (&h1_raw + &h1_adj).mapv(|z| z * half);
        let skew = (&h1_raw - &h1_adj).mapv(|z| z * half);
        let hermitize_defect = self.weight * linalg::frobenius(&skew);
        let conj_h2 = linalg::conjugate(&h2);
        let pairing_conjugate_defect = self.weight * linalg::frobenius(&(&aa - &conj_h2));
        QuadraticGenerator {
            time,
            h1,
            h2,
            scalar,
            weight: self.weight,
            hermitize_defect,
            pairing_conjugate_defect,
        }
    }
}

impl<T: Real> TermSink<T> for KernelAssembler<T> {
    fn astar_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
        let left = compose_factors(&a, &m, self.n, self.weight);
        let bd = factor_adjoint(&b);
        let mut p = compose_mat_factor(&left, &bd.as_factor(), self.weight);
        p.mapv_inplace(|z| z * coef);
        self.h1 = &self.h1 + &p;
        if hc {
            self.h1 = &self.h1 + &linalg::adjoint(&p);
        }
    }

    fn astar_astar(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
        let left = compose_factors(&a, &m, self.n, self.weight);
        let bt = factor_transpose(&b);
        let mut p = compose_mat_factor(&left, &bt.as_factor(), self.weight);
        p.mapv_inplace(|z| z * coef);
        self.h2_raw = &self.h2_raw + &p;
        if hc {
            self.aa_raw = &self.aa_raw + &linalg::conjugate(&p);
        }
    }

    fn a_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
        let mbar = factor_conj(&m);
        let left = compose_factors(&a, &mbar.as_factor(), self.n, self.weight);
        let bt = factor_transpose(&b);
        let inner = compose_mat_factor(&left, &bt.as_factor(), self.weight);
        let mut q = linalg::conjugate(&inner);
        q.mapv_inplace(|z| z * coef);
        self.aa_raw = &self.aa_raw + &q;
        if hc {
            self.h2_raw = &self.h2_raw + &linalg::conjugate(&q);
        }
    }

    fn astar_a_vectors(&mut self, f: &CVec<T>, g: &CVec<T>, coef: Cplx<T>) {
        for u in 0..self.n {
            let fu = f[u] * coef;
            for v in 0..self.n {
                self.h1[(u, v)] += fu * g[v].conj();
            }
        }
    }

    fn scalar(&mut self, c: Cplx<T>) {
        self.scalar += c;
    }
}

/// Static data of the generator assembly that does not change along the run.
#[derive(Clone, Debug)]
pub struct GeneratorContext<T: Real> {
    pub b0: T,
    pub ell: T,
    /// Large-N limit of N lambda_N in the run's dimension.
    pub lambda_inf: T,
}

/// Emit every term of the quadratic generator at one time into a sink.
///
/// The stream covers: the time-derivative of the pair transformation
/// (hermitian reading), the four interaction groups, the eigenvalue
/// counterterm, and the kinetic remainder built from the slot derivatives of
/// the decomposition.
pub fn emit_generator_terms<T: Real, S: TermSink<T>>(
    family: &BogoliubovKernels<T>,
    phi: &GridFunction<T>,
    omega: &DisplacementField<T>,
    ctx: &GeneratorContext<T>,
    sink: &mut S,
) {
    let lattice = family.lattice();
    let w = lattice.cell_volume();
    let i = c_i::<T>();
    let one = c_re(T::one());

    let ch = &family.cosh.mat;
    let sh = &family.sinh.mat;
    let eta_dot = &family.pairing_dot.mat;
    let eta_dot_t = linalg::transpose(eta_dot);

    // (i dT/dt) T*: the displayed expansion, read so the total is hermitian.
    sink.astar_astar(Factor::Mat(ch), Factor::Mat(eta_dot), Factor::Mat(ch), i, true);
    sink.a_a(Factor::Mat(sh), Factor::Mat(eta_dot), Factor::Mat(sh), i, true);
    sink.astar_a(Factor::Mat(ch), Factor::Mat(eta_dot), Factor::Mat(sh), i, true);
    sink.astar_a(Factor::Mat(ch), Factor::Mat(&eta_dot_t), Factor::Mat(sh), i, true);
    {
        // scalar trace term: i int eta_dot(x;y) (sh^T o ch)(x;y) + conj
        let shc = family.sinh.transpose().compose(&family.cosh).expect("lattice");
        let mut acc = c_zero::<T>();
        for (a, b) in eta_dot.iter().zip(shc.mat.iter()) {
            acc += *a * *b;
        }
        let val = acc * c_re(w * w) * i;
        sink.scalar(val + val.conj());
    }

    // Interaction group 1: weight b0 |phi|^2.
    let w1: CVec<T> = phi.values.mapv(|z| c_re::<T>(z.norm_sqr() * ctx.b0));
    sink.astar_a(Factor::Mat(ch), Factor::Diag(&w1), Factor::Mat(ch), one, false);
    sink.astar_a(Factor::Mat(sh), Factor::Diag(&w1), Factor::Mat(sh), one, false);
    sink.astar_astar(Factor::Mat(ch), Factor::Diag(&w1), Factor::Mat(sh), one, false);
    sink.a_a(Factor::Mat(ch), Factor::Diag(&w1), Factor::Mat(sh), one, false);

    // Interaction groups 2 and 3: projected multiplication kernels.
    let (k1, k2) = crate::kernels::build_quadratic_coefficients(phi, ctx.b0)
        .expect("normalized orbital supplied to assembly");
    let k1t = linalg::transpose(&k1.mat);
    let k2t = linalg::transpose(&k2.mat);
    sink.astar_a(Factor::Mat(ch), Factor::Mat(&k1.mat), Factor::Mat(ch), one, false);
    sink.astar_a(Factor::Mat(sh), Factor::Mat(&k1.mat), Factor::Mat(sh), one, false);
    sink.astar_astar(Factor::Mat(ch), Factor::Mat(&k1.mat), Factor::Mat(sh), one, false);
    sink.a_a(Factor::Mat(ch), Factor::Mat(&k1t), Factor::Mat(sh), one, false);

    sink.astar_a(Factor::Mat(ch), Factor::Mat(&k2.mat), Factor::Mat(sh), one, true);
    sink.astar_a(Factor::Mat(ch), Factor::Mat(&k2t), Factor::Mat(sh), one, true);
    sink.astar_astar(Factor::Mat(ch), Factor::Mat(&k2.mat), Factor::Mat(ch), one, true);
    // The bare delta-pairing inside ch K2 ch^T cancels against the kinetic
    // counterterm whose regular remnants are the eigenvalue and
    // omega-midpoint terms below; only the tail-dressed products
    // p K2 + K2 p^T + p K2 p^T survive, which keeps the pairing coefficient
    // Hilbert-Schmidt (the standing assumption on the generic quadratic
    // form). Subtracting K2 here implements that cancellation.
    sink.astar_astar(Factor::Id, Factor::Mat(&k2.mat), Factor::Id, -one, true);
    sink.a_a(Factor::Mat(sh), Factor::Mat(&k2.mat), Factor::Mat(sh), one, true);

    // Interaction group 4: rank-<=2 condensate terms,
    // (b0/2) [ ||phi^2||^2 a*(phi)a(phi) - 2 a*(phi) a(|phi|^2 phi) + h.c. ].
    let phi2_l2_sq = phi.values.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<T>() * w;
    let g: CVec<T> = phi.values.mapv(|z| z * c_re::<T>(z.norm_sqr()));
    sink.astar_a_vectors(&phi.values, &phi.values, c_re(ctx.b0 * phi2_l2_sq));
    sink.astar_a_vectors(&phi.values, &g, c_re(-ctx.b0));
    sink.astar_a_vectors(&g, &phi.values, c_re(-ctx.b0));

    // Eigenvalue counterterm: lambda_inf chi(|x-y| <= ell) phi^2(mid) a*a* + h.c.
    let phi_half = phi.upsample2();
    let phi_sq_half = GridFunction::new(phi_half.lattice.clone(), phi_half.values.mapv(|z| z * z));
    let lam_kernel = windowed_midpoint_kernel(lattice, &phi_sq_half, omega, ctx.ell);
    sink.astar_astar(
        Factor::Id,
        Factor::Mat(&lam_kernel.mat),
        Factor::Id,
        c_re(ctx.lambda_inf),
        true,
    );

    // Kinetic remainder: slot derivatives of the decomposition.
    let d2p = family.cosh_tail.laplacian_slot2().scaled(-one);
    let d2r = family.sinh_tail.laplacian_slot2().scaled(-one);
    let d2mu = family.smooth.laplacian_slot2().scaled(-one);
    sink.astar_a(Factor::Id, Factor::Id, Factor::Mat(&d2p.mat), one, false);
    sink.astar_a(Factor::Mat(&d2p.mat), Factor::Id, Factor::Mat(ch), one, false);
    sink.astar_a(
        Factor::Mat(&family.singular.mat),
        Factor::Id,
        Factor::Mat(&d2r.mat),
        one,
        false,
    );
    for axis in 0..lattice.dim() {
        let gk = family.singular.gradient_axis_slot2(axis);
        sink.astar_a(Factor::Mat(&gk.mat), Factor::Id, Factor::Mat(&gk.mat), one, false);
    }
    sink.astar_a(
        Factor::Mat(&d2r.mat),
        Factor::Id,
        Factor::Mat(&family.sinh_tail.mat),
        one,
        false,
    );
    sink.astar_astar(Factor::Id, Factor::Id, Factor::Mat(&d2mu.mat), one, false);
    sink.astar_astar(Factor::Id, Factor::Id, Factor::Mat(&d2r.mat), one, false);
    sink.astar_astar(Factor::Mat(&d2p.mat), Factor::Id, Factor::Mat(sh), one, false);
    sink.a_a(Factor::Mat(&d2r.mat), Factor::Id, Factor::Id, one, false);
    sink.a_a(Factor::Mat(&d2mu.mat), Factor::Id, Factor::Id, one, false);
    sink.a_a(Factor::Mat(sh), Factor::Id, Factor::Mat(&d2p.mat), one, false);
    sink.astar_a(
        Factor::Mat(&d2r.mat),
        Factor::Id,
        Factor::Mat(&family.singular.mat),
        one,
        false,
    );

    // omega-weighted midpoint sources built from derivatives of phi.
    let lap_phi_half = phi.laplacian().upsample2();
    let lap_field = GridFunction::new(
        phi_half.lattice.clone(),
        Array1::from_shape_fn(phi_half.values.len(), |ix| {
            phi_half.values[ix] * lap_phi_half.values[ix]
        }),
    );
    let mut grad_field = GridFunction::new(
        phi_half.lattice.clone(),
        Array1::from_elem(phi_half.values.len(), c_zero::<T>()),
    );
    for axis in 0..lattice.dim() {
        let gp = phi.gradient_axis(axis).upsample2();
        for (slot, z) in grad_field.values.iter_mut().zip(gp.values.iter()) {
            *slot += *z * *z;
        }
    }
    let half = c_re(T::of(0.5));
    let omega_lap = omega_midpoint_kernel(lattice, &lap_field, omega);
    let omega_grad = omega_midpoint_kernel(lattice, &grad_field, omega);
    sink.astar_astar(Factor::Id, Factor::Mat(&omega_lap.mat), Factor::Id, half, true);
    sink.astar_astar(Factor::Id, Factor::Mat(&omega_grad.mat), Factor::Id, half, true);
}

/// Assemble the canonical quadratic generator at the family's time.
pub fn assemble_generator<T: Real>(
    family: &BogoliubovKernels<T>,
    phi: &GridFunction<T>,
    omega: &DisplacementField<T>,
    ctx: &GeneratorContext<T>,
) -> QuadraticGenerator<T> {
    let n = family.lattice().total_points();
    let mut acc = KernelAssembler::new(n, family.lattice().cell_volume());
    emit_generator_terms(family, phi, omega, ctx, &mut acc);
    acc.finalize(family.time)
}

/// The Bogoliubov pair (U(t;s), V(t;s)) in kernel convention.
#[derive(Clone, Debug)]
pub struct BogoliubovPair<T: Real> {
    pub time: T,
    pub start: T,
    pub u: CMat<T>,
    pub v: CMat<T>,
    pub weight: T,
}

impl<T: Real> BogoliubovPair<T> {
    /// Theta(s;s) = identity.
    pub fn identity(n: usize, weight: T, start: T) -> Self {
        let mut u = Array2::from_elem((n, n), c_zero::<T>());
        let inv = c_re(T::one() / weight);
        for idx in 0..n {
            u[(idx, idx)] = inv;
        }
        Self {
            time: start,
            start,
            u,
            v: Array2::from_elem((n, n), c_zero::<T>()),
            weight,
        }
    }

    fn kernel_mul(&self, a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
        let mut p = linalg::matmul(a, b);
        let cw = c_re(self.weight);
        p.mapv_inplace(|z| z * cw);
        p
    }

    /// || U* U - V* V - 1 ||_HS.
    pub fn symplectic_defect(&self) -> T {
        let uu = self.kernel_mul(&linalg::adjoint(&self.u), &self.u);
        let vv = self.kernel_mul(&linalg::adjoint(&self.v), &self.v);
        let mut diff = &uu - &vv;
        let inv = c_re(T::one() / self.weight);
        for idx in 0..diff.nrows() {
            diff[(idx, idx)] -= inv;
        }
        self.weight * linalg::frobenius(&diff)
    }

    /// || U* (J V J) - V* (J U J) ||_HS = || U* conj(V) - V* conj(U) ||_HS.
    pub fn conjugation_defect(&self) -> T {
        let a = self.kernel_mul(&linalg::adjoint(&self.u), &linalg::conjugate(&self.v));
        let b = self.kernel_mul(&linalg::adjoint(&self.v), &linalg::conjugate(&self.u));
        self.weight * linalg::frobenius(&(&a - &b))
    }

    /// Vacuum expectation of the number operator after the flow: ||V||_HS^2.
    pub fn vacuum_number(&self) -> T {
        let f = self.weight * linalg::frobenius(&self.v);
        f * f
    }

    pub fn u_op_norm(&self) -> T {
        self.weight * linalg::spectral_norm(&self.u)
    }

    /// Map a pair of one-particle vectors through Theta:
    /// (f, g) -> (U f + conj(V) g, V f + conj(U) g).
    pub fn map_pair(&self, f: &CVec<T>, g: &CVec<T>) -> (CVec<T>, CVec<T>) {
        let w = c_re(self.weight);
        let uf = linalg::matvec(&self.u, f).mapv(|z| z * w);
        let vf = linalg::matvec(&self.v, f).mapv(|z| z * w);
        let vbar_g = linalg::matvec(&linalg::conjugate(&self.v), g).mapv(|z| z * w);
        let ubar_g = linalg::matvec(&linalg::conjugate(&self.u), g).mapv(|z| z * w);
        (&uf + &vbar_g, &vf + &ubar_g)
    }

    /// Push a one-particle vector through the field conjugation:
    /// phi_a(h) -> phi_a(U h + conj(V) conj(h)).
    pub fn map_field_vector(&self, h: &CVec<T>) -> CVec<T> {
        let (f, _) = self.map_pair(h, &h.mapv(|z| z.conj()));
        f
    }

    /// Composition law Theta(t;s) = Theta(r;s) o Theta(t;r).
    pub fn compose(later: &Self, earlier: &Self) -> Self {
        assert_eq!(later.weight, earlier.weight);
        let w = later.weight;
        let mul = |a: &CMat<T>, b: &CMat<T>| {
            let mut p = linalg::matmul(a, b);
            let cw = c_re(w);
            p.mapv_inplace(|z| z * cw);
            p
        };
        let u = &mul(&earlier.u, &later.u) + &mul(&linalg::conjugate(&earlier.v), &later.v);
        let v = &mul(&earlier.v, &later.u) + &mul(&linalg::conjugate(&earlier.u), &later.v);
        Self {
            time: later.time,
            start: earlier.start,
            u,
            v,
            weight: w,
        }
    }
}

/// Supplies generator coefficients along the run.
pub trait GeneratorSource<T: Real> {
    fn coefficients(&mut self, t: T) -> QuadraticGenerator<T>;
    /// Lattice for the exact spectral kinetic substep; None for abstract
    /// modes whose kinetic part is folded into H1.
    fn kinetic_lattice(&self) -> Option<&Lattice<T>>;
}

/// Constant-coefficient source (matched oracle instances).
pub struct ConstantGenerator<T: Real> {
    pub gen: QuadraticGenerator<T>,
}

impl<T: Real> GeneratorSource<T> for ConstantGenerator<T> {
    fn coefficients(&mut self, t: T) -> QuadraticGenerator<T> {
        let mut g = self.gen.clone();
        g.time = t;
        g
    }
    fn kinetic_lattice(&self) -> Option<&Lattice<T>> {
        None
    }
}

/// Source assembling the full generator from a condensate trajectory; the
/// requested times must sit on the trajectory grid.
pub struct AssembledGenerator<'a, T: Real> {
    pub builder: &'a FamilyBuilder<'a, T>,
    pub ctx: GeneratorContext<T>,
}

impl<'a, T: Real> GeneratorSource<T> for AssembledGenerator<'a, T> {
    fn coefficients(&mut self, t: T) -> QuadraticGenerator<T> {
        let dt = self.builder.trajectory.dt;
        let step_f = (t / dt).round();
        let step = step_f.to_f64_lossy() as usize;
        assert!(
            (t - step_f * dt).abs() <= dt * T::of(1e-6),
            "generator requested off the trajectory grid"
        );
        let family = self
            .builder
            .family_at_step(step)
            .expect("family assembly failed");
        let phi = self
            .builder
            .trajectory
            .at_step(step)
            .normalized()
            .expect("nonzero orbital");
        assemble_generator(&family, &phi, &self.builder.omega, &self.ctx)
    }

    fn kinetic_lattice(&self) -> Option<&Lattice<T>> {
        Some(&self.builder.trajectory.lattice)
    }
}

fn free_flow_right<T: Real>(mat: &mut CMat<T>, lattice: &Lattice<T>, delta: T) {
    for mut row in mat.rows_mut() {
        let slice = row.as_slice_mut().unwrap();
        lattice.fft_raw(slice, true);
        for (flat, z) in slice.iter_mut().enumerate() {
            *z = *z * Complex::from_polar(T::one(), lattice.k_squared(flat) * delta);
        }
        lattice.fft_raw(slice, false);
    }
}

/// One step of the pair evolution: exact kinetic half-steps around an
/// explicit-midpoint update of the interaction part (second order overall).
pub fn bdg_step<T: Real>(
    pair: &mut BogoliubovPair<T>,
    source: &mut dyn GeneratorSource<T>,
    dt: T,
) {
    let half = dt / T::of(2.0);
    if let Some(lattice) = source.kinetic_lattice() {
        let lattice = lattice.clone();
        free_flow_right(&mut pair.u, &lattice, half);
        free_flow_right(&mut pair.v, &lattice, half);
    }
    let gen = source.coefficients(pair.time + half);
    let w = c_re(pair.weight);
    let two_i = c_i::<T>() * c_re(T::of(2.0));
    let i = c_i::<T>();
    let h2_bar = linalg::conjugate(&gen.h2);
    let rhs = |u: &CMat<T>, v: &CMat<T>| {
        let ubar = linalg::conjugate(u);
        let vbar = linalg::conjugate(v);
        let mut du = linalg::matmul(u, &gen.h1);
        du.mapv_inplace(|z| z * w * i);
        let mut cross_u = linalg::matmul(&vbar, &h2_bar);
        cross_u.mapv_inplace(|z| z * w * two_i);
        du = &du + &cross_u;
        let mut dv = linalg::matmul(v, &gen.h1);
        dv.mapv_inplace(|z| z * w * i);
        let mut cross_v = linalg::matmul(&ubar, &h2_bar);
        cross_v.mapv_inplace(|z| z * w * two_i);
        dv = &dv + &cross_v;
        (du, dv)
    };
    let (k1u, k1v) = rhs(&pair.u, &pair.v);
    let hdt = c_re(half);
    let um = &pair.u + &k1u.mapv(|z| z * hdt);
    let vm = &pair.v + &k1v.mapv(|z| z * hdt);
    let (k2u, k2v) = rhs(&um, &vm);
    let fdt = c_re(dt);
    pair.u = &pair.u + &k2u.mapv(|z| z * fdt);
    pair.v = &pair.v + &k2v.mapv(|z| z * fdt);
    if let Some(lattice) = source.kinetic_lattice() {
        let lattice = lattice.clone();
        free_flow_right(&mut pair.u, &lattice, half);
        free_flow_right(&mut pair.v, &lattice, half);
    }
    pair.time = pair.time + dt;
}

/// Diagnostics captured along a propagation.
#[derive(Clone, Copy, Debug)]
pub struct PropagationRow<T: Real> {
    pub time: T,
    pub vacuum_number: T,
    pub symplectic_defect: T,
    pub conjugation_defect: T,
    pub u_op_norm: T,
}

#[derive(Clone, Copy, Debug)]
pub struct PropagationOptions<T: Real> {
    /// Abort when the symplectic defect exceeds this bound.
    pub defect_limit: T,
    /// Record diagnostics every this many steps (>= 1).
    pub record_stride: usize,
}

impl<T: Real> Default for PropagationOptions<T> {
    fn default() -> Self {
        Self {
            defect_limit: T::of(1e-6),
            record_stride: 1,
        }
    }
}

/// Propagate the pair from `s` to `t` and collect diagnostics.
pub fn propagate<T: Real>(
    source: &mut dyn GeneratorSource<T>,
    n: usize,
    weight: T,
    s: T,
    t: T,
    dt: T,
    opts: PropagationOptions<T>,
) -> Result<(BogoliubovPair<T>, Vec<PropagationRow<T>>), BogoliubovError> {
    let steps = ((t - s) / dt).round().to_f64_lossy() as usize;
    let mut pair = BogoliubovPair::identity(n, weight, s);
    let mut rows = Vec::new();
    let record = |pair: &BogoliubovPair<T>, rows: &mut Vec<PropagationRow<T>>| {
        rows.push(PropagationRow {
            time: pair.time,
            vacuum_number: pair.vacuum_number(),
            symplectic_defect: pair.symplectic_defect(),
            conjugation_defect: pair.conjugation_defect(),
            u_op_norm: pair.u_op_norm(),
        });
    };
    record(&pair, &mut rows);
    for k in 0..steps {
        bdg_step(&mut pair, source, dt);
        if (k + 1) % opts.record_stride == 0 || k + 1 == steps {
            record(&pair, &mut rows);
            let defect = rows.last().unwrap().symplectic_defect;
            if defect > opts.defect_limit {
                return Err(BogoliubovError::PropagationFailure {
                    defect: defect.to_f64_lossy(),
                    limit: opts.defect_limit.to_f64_lossy(),
                });
            }
        }
    }
    Ok((pair, rows))
}

/// Closed-form single-mode pair for a constant generator with H1 = omega,
/// H2 = kappa (both real): the hand-diagonalized two-by-two flow.
pub fn single_mode_closed_form<T: Real>(omega: T, kappa: T, t: T) -> (Cplx<T>, Cplx<T>) {
    let disc = omega * omega - T::of(4.0) * kappa * kappa;
    let (cos_lt, sinc_lt) = if disc >= T::zero() {
        let l = disc.sqrt();
        let x = l * t;
        let sinc = if l.abs() < T::epsilon() { t } else { x.sin() / l };
        (x.cos(), sinc)
    } else {
        let m = (-disc).sqrt();
        let x = m * t;
        (x.cosh(), x.sinh() / m)
    };
    let u = Complex::new(cos_lt, omega * sinc_lt);
    let v = Complex::new(T::zero(), T::of(2.0) * kappa * sinc_lt);
    (u, v)
}

pub mod literal {
    //! Fock-space term sink: rebuilds each emitted generator term literally
    //! from smeared creation/annihilation matrices on the truncated oracle,
    //! with lattice fields mapped to modes by `a_x = a_mode / sqrt(dV)`.

    use super::*;
    use crate::fock::FockBasis;

    pub struct FockTermSink<'a, T: Real> {
        pub basis: &'a FockBasis<T>,
        pub weight: T,
        pub matrix: CMat<T>,
    }

    impl<'a, T: Real> FockTermSink<'a, T> {
        pub fn new(basis: &'a FockBasis<T>, weight: T) -> Self {
            let d = basis.dim();
            Self {
                basis,
                weight,
                matrix: Array2::from_elem((d, d), c_zero::<T>()),
            }
        }

        /// Mode-space smearing vector of the continuum column j(.; x).
        fn column(&self, f: &Factor<T>, x: usize) -> CVec<T> {
            let n = self.basis.modes;
            let sqrt_w = self.weight.sqrt();
            match f {
                Factor::Id => {
                    let mut v = Array1::from_elem(n, c_zero::<T>());
                    v[x] = c_re(T::one() / sqrt_w);
                    v
                }
                Factor::Diag(d) => {
                    let mut v = Array1::from_elem(n, c_zero::<T>());
                    v[x] = d[x] * c_re(T::one() / sqrt_w);
                    v
                }
                Factor::Mat(m) => Array1::from_shape_fn(n, |u| m[(u, x)] * c_re(sqrt_w)),
            }
        }

        fn middle_entry(&self, m: &Factor<T>, x: usize, y: usize) -> Cplx<T> {
            match m {
                Factor::Id => {
                    if x == y {
                        c_re(T::one() / self.weight)
                    } else {
                        c_zero::<T>()
                    }
                }
                Factor::Diag(d) => {
                    if x == y {
                        d[x] * c_re(T::one() / self.weight)
                    } else {
                        c_zero::<T>()
                    }
                }
                Factor::Mat(mat) => mat[(x, y)],
            }
        }

        fn add_term(
            &mut self,
            a: &Factor<T>,
            m: &Factor<T>,
            b: &Factor<T>,
            coef: Cplx<T>,
            hc: bool,
            kind: TermKind,
        ) {
            let n = self.basis.modes;
            let w2 = c_re(self.weight * self.weight);
            let d = self.basis.dim();
            let mut term = Array2::from_elem((d, d), c_zero::<T>());
            for x in 0..n {
                let col_a = self.column(a, x);
                let left = match kind {
                    TermKind::AstarA | TermKind::AstarAstar => self.basis.creator_smeared(&col_a),
                    TermKind::AA => self.basis.annihilator(&col_a),
                };
                for y in 0..n {
                    let mw = self.middle_entry(m, x, y);
                    if mw.norm_sqr() == T::zero() {
                        continue;
                    }
                    let col_b = self.column(b, y);
                    let right = match kind {
                        TermKind::AstarA | TermKind::AA => self.basis.annihilator(&col_b),
                        TermKind::AstarAstar => self.basis.creator_smeared(&col_b),
                    };
                    let prod = linalg::matmul(&left, &right);
                    let s = mw * w2 * coef;
                    term.zip_mut_with(&prod, |o, &v| *o += s * v);
                }
            }
            if hc {
                let adj = linalg::adjoint(&term);
                term = &term + &adj;
            }
            self.matrix = &self.matrix + &term;
        }
    }

    #[derive(Clone, Copy)]
    enum TermKind {
        AstarA,
        AstarAstar,
        AA,
    }

    impl<'a, T: Real> TermSink<T> for FockTermSink<'a, T> {
        fn astar_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
            self.add_term(&a, &m, &b, coef, hc, TermKind::AstarA);
        }

        fn astar_astar(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
            self.add_term(&a, &m, &b, coef, hc, TermKind::AstarAstar);
        }

        fn a_a(&mut self, a: Factor<T>, m: Factor<T>, b: Factor<T>, coef: Cplx<T>, hc: bool) {
            self.add_term(&a, &m, &b, coef, hc, TermKind::AA);
        }

        fn astar_a_vectors(&mut self, f: &CVec<T>, g: &CVec<T>, coef: Cplx<T>) {
            let sqrt_w = c_re(self.weight.sqrt());
            let fw = f.mapv(|z| z * sqrt_w);
            let gw = g.mapv(|z| z * sqrt_w);
            let prod = linalg::matmul(&self.basis.creator_smeared(&fw), &self.basis.annihilator(&gw));
            self.matrix.zip_mut_with(&prod, |o, &v| *o += coef * v);
        }

        fn scalar(&mut self, c: Cplx<T>) {
            for idx in 0..self.basis.dim() {
                self.matrix[(idx, idx)] += c;
            }
        }
    }
}
