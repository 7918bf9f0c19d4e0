//! Short-range correlation kernels: the pairing kernel built from the
//! scattering deficit and the condensate orbital, its hyperbolic functions,
//! the tail/singular decomposition, and the time derivative. These are the
//! inputs of the quadratic fluctuation generator.

use ndarray::Array2;

use crate::condensate::{projector_q, CondensateTrajectory};
use crate::error::KernelFamilyError;
use crate::grid::{GridFunction, Kernel, Lattice};
use crate::real::{c_re, c_zero, Real};
use crate::scattering::{FiniteNProfile, OmegaProfile};

/// Radial profile of a displacement kernel plus its origin regularization.
pub trait RadialKernelProfile<T: Real> {
    fn eval(&self, r: T) -> T;
    fn origin_cell_average(&self, cell_volume: T) -> T;
}

impl<T: Real> RadialKernelProfile<T> for OmegaProfile<T> {
    fn eval(&self, r: T) -> T {
        OmegaProfile::eval(self, r)
    }
    fn origin_cell_average(&self, cell_volume: T) -> T {
        OmegaProfile::origin_cell_average(self, cell_volume)
    }
}

impl<T: Real> RadialKernelProfile<T> for FiniteNProfile<T> {
    fn eval(&self, r: T) -> T {
        FiniteNProfile::eval(self, r)
    }
    fn origin_cell_average(&self, cell_volume: T) -> T {
        FiniteNProfile::origin_cell_average(self, cell_volume)
    }
}

/// Tabulated radial profile over lattice displacements (minimal image), with
/// the on-diagonal entry replaced by the cell average.
#[derive(Clone, Debug)]
pub struct DisplacementField<T: Real> {
    pub lattice: Lattice<T>,
    pub values: Vec<T>,
    /// Minimal-image distance per displacement index.
    pub distance: Vec<T>,
}

impl<T: Real> DisplacementField<T> {
    pub fn build(lattice: &Lattice<T>, profile: &dyn RadialKernelProfile<T>) -> Self {
        let n = lattice.total_points();
        let mut values = Vec::with_capacity(n);
        let mut distance = Vec::with_capacity(n);
        for j in 0..n {
            let r = lattice.min_image_distance(j, 0);
            distance.push(r);
            if j == 0 {
                values.push(profile.origin_cell_average(lattice.cell_volume()));
            } else {
                values.push(profile.eval(r));
            }
        }
        Self {
            lattice: lattice.clone(),
            values,
            distance,
        }
    }
}

/// Index helper mapping site pairs to displacement and midpoint indices.
struct PairIndexer {
    dim: usize,
    m: usize,
    coords: Vec<[usize; 3]>,
}

impl PairIndexer {
    fn new<T: Real>(lattice: &Lattice<T>) -> Self {
        let coords = (0..lattice.total_points()).map(|f| lattice.coords(f)).collect();
        Self {
            dim: lattice.dim(),
            m: lattice.points_per_axis(),
            coords,
        }
    }

    /// Flat index of (i - j) mod m on the original lattice.
    fn displacement(&self, i: usize, j: usize) -> usize {
        let ci = &self.coords[i];
        let cj = &self.coords[j];
        let mut f = 0usize;
        for axis in 0..self.dim {
            let d = (ci[axis] + self.m - cj[axis]) % self.m;
            f = f * self.m + d;
        }
        f
    }

    /// Flat index on the doubled lattice of the midpoint between sites i and
    /// j along their minimal-image separation (the short arc on the torus,
    /// which is where the displacement-windowed kernels are supported).
    fn midpoint(&self, i: usize, j: usize) -> usize {
        let ci = &self.coords[i];
        let cj = &self.coords[j];
        let two_m = 2 * self.m as isize;
        let m = self.m as isize;
        let mut f = 0usize;
        for axis in 0..self.dim {
            let mut off = (ci[axis] as isize - cj[axis] as isize).rem_euclid(m);
            if off >= m / 2 {
                off -= m;
            }
            let half = (2 * cj[axis] as isize + off).rem_euclid(two_m);
            f = f * (2 * self.m) + half as usize;
        }
        f
    }
}

/// Unprojected singular kernel `-omega(x - y) phi^2((x+y)/2)`, with the
/// midpoint evaluated by trigonometric interpolation on the half lattice.
pub fn singular_base_kernel<T: Real>(phi: &GridFunction<T>, omega: &DisplacementField<T>) -> Kernel<T> {
    let lattice = &phi.lattice;
    assert_eq!(*lattice, omega.lattice);
    let half = phi.upsample2();
    let sq = half.values.mapv(|z| z * z);
    let idx = PairIndexer::new(lattice);
    let n = lattice.total_points();
    let mat = Array2::from_shape_fn((n, n), |(i, j)| {
        sq[idx.midpoint(i, j)] * c_re(-omega.values[idx.displacement(i, j)])
    });
    Kernel::new(lattice.clone(), mat)
}

/// Two-point kernel `g((x+y)/2) chi(|x-y| <= ell)` for a midpoint field g
/// given on the doubled lattice.
pub fn windowed_midpoint_kernel<T: Real>(
    lattice: &Lattice<T>,
    midpoint_field: &GridFunction<T>,
    omega: &DisplacementField<T>,
    ell: T,
) -> Kernel<T> {
    assert_eq!(midpoint_field.lattice.points_per_axis(), 2 * lattice.points_per_axis());
    let idx = PairIndexer::new(lattice);
    let n = lattice.total_points();
    let mat = Array2::from_shape_fn((n, n), |(i, j)| {
        if omega.distance[idx.displacement(i, j)] <= ell {
            midpoint_field.values[idx.midpoint(i, j)]
        } else {
            c_zero::<T>()
        }
    });
    Kernel::new(lattice.clone(), mat)
}

/// Midpoint-weighted kernel `omega(x-y) g((x+y)/2)` for a field g on the
/// doubled lattice.
pub fn omega_midpoint_kernel<T: Real>(
    lattice: &Lattice<T>,
    midpoint_field: &GridFunction<T>,
    omega: &DisplacementField<T>,
) -> Kernel<T> {
    assert_eq!(midpoint_field.lattice.points_per_axis(), 2 * lattice.points_per_axis());
    let idx = PairIndexer::new(lattice);
    let n = lattice.total_points();
    let mat = Array2::from_shape_fn((n, n), |(i, j)| {
        midpoint_field.values[idx.midpoint(i, j)] * c_re(omega.values[idx.displacement(i, j)])
    });
    Kernel::new(lattice.clone(), mat)
}

/// Project both slots of a two-point kernel onto the range of q:
/// `(q (x) q) K = q o K o q^T`, using the rank-one structure of q.
pub fn project_both_slots<T: Real>(base: &Kernel<T>, phi: &GridFunction<T>) -> Kernel<T> {
    let lattice = &base.lattice;
    let dv = lattice.cell_volume();
    let n = lattice.total_points();
    // left: A <- A - |phi> (phi^dag A)
    let mut row = vec![c_zero::<T>(); n];
    for y in 0..n {
        let mut acc = c_zero::<T>();
        for x in 0..n {
            acc += phi.values[x].conj() * base.mat[(x, y)];
        }
        row[y] = acc * c_re(dv);
    }
    let mut mat = base.mat.clone();
    for x in 0..n {
        let px = phi.values[x];
        for y in 0..n {
            mat[(x, y)] -= px * row[y];
        }
    }
    // right: A <- A - (A phi-bar) phi(y), i.e. subtract A |conj phi><conj phi|
    let mut col = vec![c_zero::<T>(); n];
    for x in 0..n {
        let mut acc = c_zero::<T>();
        for y in 0..n {
            acc += mat[(x, y)] * phi.values[y].conj();
        }
        col[x] = acc * c_re(dv);
    }
    for x in 0..n {
        let cx = col[x];
        for y in 0..n {
            mat[(x, y)] -= cx * phi.values[y];
        }
    }
    Kernel::new(lattice.clone(), mat)
}

/// Pairing kernel `-(q (x) q) omega(x-y) phi^2((x+y)/2)`.
///
/// `phi` must be L2-normalized; `omega` is either the limiting profile or
/// N times the finite-N deficit.
pub fn build_pairing_kernel<T: Real>(
    phi: &GridFunction<T>,
    omega: &DisplacementField<T>,
) -> Result<Kernel<T>, KernelFamilyError> {
    let norm = phi.norm_l2();
    if (norm - T::one()).abs() > T::of(1e-8) {
        return Err(KernelFamilyError::UnnormalizedOrbital {
            norm: norm.to_f64_lossy(),
        });
    }
    let base = singular_base_kernel(phi, omega);
    Ok(project_both_slots(&base, phi))
}

/// cosh and sinh of a Hilbert-Schmidt kernel through the absolutely
/// convergent series in (eta conj-eta), truncated when the next term's HS
/// norm drops below 1e-14. Returns (sinh, cosh).
pub fn hyperbolic_functions<T: Real>(eta: &Kernel<T>) -> (Kernel<T>, Kernel<T>) {
    let g = eta.compose(&eta.conjugate()).expect("same lattice");
    let id = Kernel::identity(&eta.lattice);
    let mut cosh_acc = id.clone();
    // sinh = (sum_n G^n / (2n+1)!) o eta
    let mut sinh_prefactor = id;
    let mut power = Kernel::identity(&eta.lattice);
    let mut fact_even = T::one(); // (2n)!
    let mut fact_odd = T::one(); // (2n+1)!
    let tol = T::of(1e-14);
    for n in 1..250usize {
        power = power.compose(&g).expect("same lattice");
        let two_n = T::of(2.0 * n as f64);
        fact_even = fact_even * (two_n - T::one()) * two_n;
        fact_odd = fact_odd * two_n * (two_n + T::one());
        let even_term = power.scaled(c_re(T::one() / fact_even));
        let odd_term = power.scaled(c_re(T::one() / fact_odd));
        cosh_acc = cosh_acc.add(&even_term);
        sinh_prefactor = sinh_prefactor.add(&odd_term);
        if even_term.hs_norm() < tol {
            break;
        }
    }
    let sinh = sinh_prefactor.compose(eta).expect("same lattice");
    (sinh, cosh_acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelProvenance<T: Real> {
    Limiting,
    FiniteN { particle_number: T },
}

/// How the time derivative of the pairing kernel was formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeScheme {
    Centered,
    OneSidedForward,
    OneSidedBackward,
}

/// Hilbert-Schmidt (and one operator) norms recorded by [`decompose`].
#[derive(Clone, Copy, Debug)]
pub struct KernelNorms<T: Real> {
    pub pairing: T,
    pub sinh: T,
    pub cosh_op: T,
    pub cosh_tail: T,
    pub sinh_tail: T,
    pub singular: T,
    pub smooth: T,
}

/// The pairing kernel at one time together with every derived object the
/// quadratic generator needs.
#[derive(Clone, Debug)]
pub struct BogoliubovKernels<T: Real> {
    pub time: T,
    pub provenance: KernelProvenance<T>,
    /// The (projected) pairing kernel eta.
    pub pairing: Kernel<T>,
    pub sinh: Kernel<T>,
    pub cosh: Kernel<T>,
    /// p = cosh - 1.
    pub cosh_tail: Kernel<T>,
    /// r = sinh - eta.
    pub sinh_tail: Kernel<T>,
    /// k: the unprojected singular product -omega(x-y) phi^2(mid).
    pub singular: Kernel<T>,
    /// mu = eta - k.
    pub smooth: Kernel<T>,
    /// d/dt of the pairing kernel by finite differences of snapshots.
    pub pairing_dot: Kernel<T>,
    pub derivative_scheme: DerivativeScheme,
    pub norms: KernelNorms<T>,
}

impl<T: Real> BogoliubovKernels<T> {
    pub fn lattice(&self) -> &Lattice<T> {
        &self.pairing.lattice
    }
}

/// Fill the derived members (tails, singular/smooth split, norms) from the
/// pairing kernel and its hyperbolic functions.
#[allow(clippy::too_many_arguments)]
pub fn decompose<T: Real>(
    time: T,
    provenance: KernelProvenance<T>,
    pairing: Kernel<T>,
    sinh: Kernel<T>,
    cosh: Kernel<T>,
    singular: Kernel<T>,
    pairing_dot: Kernel<T>,
    derivative_scheme: DerivativeScheme,
) -> BogoliubovKernels<T> {
    let id = Kernel::identity(&pairing.lattice);
    let cosh_tail = cosh.sub(&id);
    let sinh_tail = sinh.sub(&pairing);
    let smooth = pairing.sub(&singular);
    let norms = KernelNorms {
        pairing: pairing.hs_norm(),
        sinh: sinh.hs_norm(),
        cosh_op: cosh.op_norm(),
        cosh_tail: cosh_tail.hs_norm(),
        sinh_tail: sinh_tail.hs_norm(),
        singular: singular.hs_norm(),
        smooth: smooth.hs_norm(),
    };
    BogoliubovKernels {
        time,
        provenance,
        pairing,
        sinh,
        cosh,
        cosh_tail,
        sinh_tail,
        singular,
        smooth,
        pairing_dot,
        derivative_scheme,
        norms,
    }
}

/// Multiplicative coefficient kernels of the generator:
/// K1 = q (b0 |phi|^2 .) q as an operator, and K2 = (q (x) q) b0 phi^2 delta
/// as a two-point function.
pub fn build_quadratic_coefficients<T: Real>(
    phi: &GridFunction<T>,
    b0: T,
) -> Result<(Kernel<T>, Kernel<T>), KernelFamilyError> {
    let norm = phi.norm_l2();
    if (norm - T::one()).abs() > T::of(1e-8) {
        return Err(KernelFamilyError::UnnormalizedOrbital {
            norm: norm.to_f64_lossy(),
        });
    }
    let q = projector_q(phi).expect("normalized orbital");
    let dens = GridFunction::new(
        phi.lattice.clone(),
        phi.values.mapv(|z| c_re::<T>(z.norm_sqr() * b0)),
    );
    let k1_tilde = Kernel::multiplication(&dens);
    let k1 = q.compose(&k1_tilde).expect("lattice").compose(&q).expect("lattice");
    let sq = GridFunction::new(phi.lattice.clone(), phi.values.mapv(|z| z * z * c_re::<T>(b0)));
    let k2_tilde = Kernel::multiplication(&sq);
    let k2 = project_both_slots(&k2_tilde, phi);
    Ok((k1, k2))
}

/// Builder that assembles the kernel family at trajectory steps.
pub struct FamilyBuilder<'a, T: Real> {
    pub trajectory: &'a CondensateTrajectory<T>,
    pub omega: DisplacementField<T>,
    pub provenance: KernelProvenance<T>,
}

impl<'a, T: Real> FamilyBuilder<'a, T> {
    pub fn new(
        trajectory: &'a CondensateTrajectory<T>,
        omega: DisplacementField<T>,
        provenance: KernelProvenance<T>,
    ) -> Self {
        Self {
            trajectory,
            omega,
            provenance,
        }
    }

    fn orbital(&self, step: usize) -> Result<GridFunction<T>, KernelFamilyError> {
        let phi = self.trajectory.at_step(step);
        let n = phi.norm_l2();
        if !(n > T::zero()) {
            return Err(KernelFamilyError::UnnormalizedOrbital { norm: 0.0 });
        }
        Ok(phi.scaled(c_re(T::one() / n)))
    }

    pub fn pairing_at_step(&self, step: usize) -> Result<Kernel<T>, KernelFamilyError> {
        let phi = self.orbital(step)?;
        build_pairing_kernel(&phi, &self.omega)
    }

    /// Centered (or one-sided at the trajectory ends) time derivative of the
    /// pairing kernel.
    pub fn pairing_dot_at_step(
        &self,
        step: usize,
    ) -> Result<(Kernel<T>, DerivativeScheme), KernelFamilyError> {
        let last = self.trajectory.steps();
        let dt = self.trajectory.dt;
        if last == 0 {
            return Ok((
                Kernel::zeros(&self.trajectory.lattice),
                DerivativeScheme::Centered,
            ));
        }
        if step == 0 {
            let e0 = self.pairing_at_step(0)?;
            let e1 = self.pairing_at_step(1)?;
            Ok((
                e1.sub(&e0).scaled(c_re(T::one() / dt)),
                DerivativeScheme::OneSidedForward,
            ))
        } else if step == last {
            let e0 = self.pairing_at_step(last - 1)?;
            let e1 = self.pairing_at_step(last)?;
            Ok((
                e1.sub(&e0).scaled(c_re(T::one() / dt)),
                DerivativeScheme::OneSidedBackward,
            ))
        } else {
            let em = self.pairing_at_step(step - 1)?;
            let ep = self.pairing_at_step(step + 1)?;
            Ok((
                ep.sub(&em).scaled(c_re(T::one() / (T::of(2.0) * dt))),
                DerivativeScheme::Centered,
            ))
        }
    }

    /// Full kernel family at a trajectory step.
    pub fn family_at_step(&self, step: usize) -> Result<BogoliubovKernels<T>, KernelFamilyError> {
        let phi = self.orbital(step)?;
        let singular = singular_base_kernel(&phi, &self.omega);
        let pairing = project_both_slots(&singular, &phi);
        let (sinh, cosh) = hyperbolic_functions(&pairing);
        let (pairing_dot, scheme) = self.pairing_dot_at_step(step)?;
        let time = self.trajectory.dt * T::of(step as f64);
        Ok(decompose(
            time,
            self.provenance,
            pairing,
            sinh,
            cosh,
            singular,
            pairing_dot,
            scheme,
        ))
    }
}
