//! Condensate flows: the limiting cubic NLS and the N-dependent Hartree
//! equation with the scattering-corrected interaction, both evolved by
//! second-order Strang splitting with an exact spectral kinetic substep.

use ndarray::Array1;
use num_complex::Complex;

use crate::error::{CondensateError, GridError};
use crate::grid::{GridFunction, Kernel, Lattice};
use crate::real::{c_re, c_zero, Cplx, Real};
use crate::scattering::{transverse_reduced_interaction, Potential, ScatteringSolution};

/// How the sigma coefficient of the limiting equation multiplies the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaMode {
    /// i d/dt phi = -Lap phi + sigma |phi|^2 phi (the intended cubic flow).
    Cubic,
    /// i d/dt phi = -Lap phi + sigma phi, the literal linear reading; kept
    /// behind this switch for comparison runs.
    LinearAsPrinted,
}

#[derive(Clone, Debug)]
enum NonlinearTerm<T: Real> {
    Cubic { sigma: T },
    Linear { sigma: T },
    /// Displacement samples of the effective interaction; the Hartree field
    /// is the circular convolution with |phi|^2.
    Convolution { displacement: Array1<Cplx<T>> },
}

/// Identifies which flow produced a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum FlavorTag<T: Real> {
    LimitingNls {
        sigma: T,
        mode: SigmaMode,
    },
    ModifiedHartree {
        particle_number: T,
        beta: T,
        /// Displacement samples of V_N f_N used by the convolution.
        displacement: Array1<Cplx<T>>,
    },
}

/// Time-ordered snapshots of a condensate evolution at t_n = n dt.
#[derive(Clone, Debug)]
pub struct CondensateTrajectory<T: Real> {
    pub lattice: Lattice<T>,
    pub dt: T,
    pub snapshots: Vec<GridFunction<T>>,
    pub flavor: FlavorTag<T>,
    /// Set when the lattice under-resolves the scaled interaction (fewer
    /// than 4 points across its support); the run proceeds on cell averages.
    pub resolution_warning: bool,
}

impl<T: Real> CondensateTrajectory<T> {
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn horizon(&self) -> T {
        self.dt * T::of(self.steps() as f64)
    }

    pub fn at_step(&self, k: usize) -> &GridFunction<T> {
        &self.snapshots[k]
    }

    /// Snapshot at time t, which must sit on the stored grid.
    pub fn at_time(&self, t: T) -> Result<&GridFunction<T>, CondensateError> {
        let k = (t / self.dt).round();
        let idx = k.to_f64_lossy() as usize;
        if (t - k * self.dt).abs() > self.dt * T::of(1e-6) || idx >= self.snapshots.len() {
            return Err(CondensateError::TimeNotOnGrid { t: t.to_f64_lossy() });
        }
        Ok(&self.snapshots[idx])
    }
}

fn phase_step<T: Real>(phi: &mut GridFunction<T>, term: &NonlinearTerm<T>, dt_half: T) {
    match term {
        NonlinearTerm::Cubic { sigma } => {
            for z in phi.values.iter_mut() {
                let phase = -*sigma * z.norm_sqr() * dt_half;
                *z = *z * Complex::from_polar(T::one(), phase);
            }
        }
        NonlinearTerm::Linear { sigma } => {
            let rot = Complex::from_polar(T::one(), -*sigma * dt_half);
            for z in phi.values.iter_mut() {
                *z = *z * rot;
            }
        }
        NonlinearTerm::Convolution { displacement } => {
            let field = convolve_displacement(&phi.lattice, displacement, &density(phi));
            for (z, u) in phi.values.iter_mut().zip(field.iter()) {
                *z = *z * Complex::from_polar(T::one(), -u.re * dt_half);
            }
        }
    }
}

fn density<T: Real>(phi: &GridFunction<T>) -> Array1<Cplx<T>> {
    phi.values.mapv(|z| c_re(z.norm_sqr()))
}

/// Circular convolution (K * rho)(x) = dV sum_y K(x - y) rho(y) via FFT.
pub fn convolve_displacement<T: Real>(
    lattice: &Lattice<T>,
    displacement: &Array1<Cplx<T>>,
    rho: &Array1<Cplx<T>>,
) -> Array1<Cplx<T>> {
    let mut k = displacement.to_vec();
    let mut r = rho.to_vec();
    lattice.fft_raw(&mut k, true);
    lattice.fft_raw(&mut r, true);
    for (a, b) in k.iter_mut().zip(r.iter()) {
        *a = *a * *b;
    }
    lattice.fft_raw(&mut k, false);
    let dv = c_re(lattice.cell_volume());
    Array1::from_vec(k).mapv(|z| z * dv)
}

fn run_strang<T: Real>(
    phi0: &GridFunction<T>,
    term: NonlinearTerm<T>,
    t_final: T,
    dt: T,
    flavor: FlavorTag<T>,
    resolution_warning: bool,
) -> Result<CondensateTrajectory<T>, CondensateError> {
    if !(dt > T::zero()) || t_final < T::zero() {
        return Err(CondensateError::InvalidTimeGrid);
    }
    if !(phi0.norm_l2() > T::zero()) {
        return Err(CondensateError::ZeroInitialState);
    }
    let steps = (t_final / dt).round().to_f64_lossy() as usize;
    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(phi0.clone());
    let mut phi = phi0.clone();
    let half = dt / T::of(2.0);
    for _ in 0..steps {
        phase_step(&mut phi, &term, half);
        phi = phi.free_evolution(dt);
        phase_step(&mut phi, &term, half);
        snapshots.push(phi.clone());
    }
    Ok(CondensateTrajectory {
        lattice: phi0.lattice.clone(),
        dt,
        snapshots,
        flavor,
        resolution_warning,
    })
}

/// Evolve the limiting equation i d/dt phi = -Lap phi + sigma |phi|^2 phi
/// (or the linear-as-printed variant).
pub fn evolve_nls<T: Real>(
    phi0: &GridFunction<T>,
    sigma: T,
    mode: SigmaMode,
    t_final: T,
    dt: T,
) -> Result<CondensateTrajectory<T>, CondensateError> {
    let term = match mode {
        SigmaMode::Cubic => NonlinearTerm::Cubic { sigma },
        SigmaMode::LinearAsPrinted => NonlinearTerm::Linear { sigma },
    };
    run_strang(phi0, term, t_final, dt, FlavorTag::LimitingNls { sigma, mode }, false)
}

/// Displacement samples of the effective interaction V_N f_N on the lattice.
///
/// In d = 1 the 3d profile is reduced by transverse integration and averaged
/// over cells, which keeps `int W` exact however narrow the core is. In
/// d >= 2 the radial profile is point-sampled with a cell-averaged origin and
/// rescaled so the lattice sum reproduces `int V_N f_N` exactly.
///
/// Returns the samples plus an under-resolution flag (support narrower than
/// 4 lattice spacings).
pub fn interaction_displacement<T: Real>(
    lattice: &Lattice<T>,
    pot: &Potential<T>,
    sol: &ScatteringSolution<T>,
) -> (Array1<Cplx<T>>, bool) {
    let n = lattice.total_points();
    let a = lattice.spacing();
    let warn = pot.scaled_support() < T::of(4.0) * a && !pot.is_zero();
    let mut vals = Array1::from_elem(n, c_zero::<T>());
    if pot.is_zero() {
        return (vals, false);
    }
    match lattice.dim() {
        1 => {
            let w = transverse_reduced_interaction(sol);
            for j in 0..n {
                let off = lattice.signed_offset(j as isize);
                let center = T::of(off as f64) * a;
                let half = a / T::of(2.0);
                // cell average of W(|x|) over [center - a/2, center + a/2]
                let (lo, hi) = (center - half, center + half);
                let integral = if lo < T::zero() && hi > T::zero() {
                    w.moment_integral(T::zero(), -lo, 0) + w.moment_integral(T::zero(), hi, 0)
                } else {
                    let (l, h) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
                    w.moment_integral(l, h, 0)
                };
                vals[j] = c_re(integral / a);
            }
            // The cell averages integrate the piecewise-linear interpolant of
            // W; rescale so the lattice sum reproduces int V_N f_N exactly.
            let target = sol.interaction_integral();
            let got: T = vals.iter().map(|z| z.re).sum::<T>() * a;
            if got > T::zero() {
                let s = c_re(target / got);
                vals.mapv_inplace(|z| z * s);
            }
        }
        _ => {
            let tab = &sol.interaction_profile;
            for j in 0..n {
                let r = lattice.min_image_distance(j, 0);
                if j == 0 {
                    let rc = match lattice.dim() {
                        3 => (T::of(3.0) * lattice.cell_volume() / (T::of(4.0) * T::PI()))
                            .powf(T::one() / T::of(3.0)),
                        _ => (lattice.cell_volume() / T::PI()).sqrt(),
                    };
                    let q = lattice.dim() as u32 - 1;
                    let surf = if lattice.dim() == 3 {
                        T::of(4.0) * T::PI()
                    } else {
                        T::of(2.0) * T::PI()
                    };
                    vals[j] = c_re(surf * tab.moment_integral(T::zero(), rc, q) / lattice.cell_volume());
                } else {
                    vals[j] = c_re(tab.eval(r));
                }
            }
            // Rescale so dV * sum vals = int_{R^3} V_N f_N exactly.
            let target = sol.interaction_integral();
            let got: T = vals.iter().map(|z| z.re).sum::<T>() * lattice.cell_volume();
            if got > T::zero() {
                let s = c_re(target / got);
                vals.mapv_inplace(|z| z * s);
            }
        }
    }
    (vals, warn)
}

/// Evolve the N-dependent Hartree equation
/// i d/dt phi = -Lap phi + (V_N f_N * |phi|^2) phi.
pub fn evolve_modified_hartree<T: Real>(
    phi0: &GridFunction<T>,
    pot: &Potential<T>,
    sol: &ScatteringSolution<T>,
    t_final: T,
    dt: T,
) -> Result<CondensateTrajectory<T>, CondensateError> {
    let (displacement, warn) = interaction_displacement(&phi0.lattice, pot, sol);
    run_strang(
        phi0,
        NonlinearTerm::Convolution {
            displacement: displacement.clone(),
        },
        t_final,
        dt,
        FlavorTag::ModifiedHartree {
            particle_number: pot.particle_number,
            beta: pot.beta,
            displacement,
        },
        warn,
    )
}

/// Conserved energy of a trajectory snapshot.
pub fn energy<T: Real>(traj: &CondensateTrajectory<T>, phi: &GridFunction<T>) -> T {
    let dv = phi.lattice.cell_volume();
    let mut spec = phi.values.to_vec();
    phi.lattice.fft_raw(&mut spec, true);
    let m_total = T::of(phi.lattice.total_points() as f64);
    let kinetic: T = spec
        .iter()
        .enumerate()
        .map(|(flat, z)| phi.lattice.k_squared(flat) * z.norm_sqr())
        .sum::<T>()
        * dv
        / m_total;
    let interaction = match &traj.flavor {
        FlavorTag::LimitingNls { sigma, mode } => match mode {
            SigmaMode::Cubic => {
                *sigma / T::of(2.0) * phi.values.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<T>() * dv
            }
            SigmaMode::LinearAsPrinted => *sigma * phi.values.iter().map(|z| z.norm_sqr()).sum::<T>() * dv,
        },
        FlavorTag::ModifiedHartree { displacement, .. } => {
            let rho = density(phi);
            let field = convolve_displacement(&phi.lattice, displacement, &rho);
            rho.iter().zip(field.iter()).map(|(r, u)| r.re * u.re).sum::<T>() * dv / T::of(2.0)
        }
    };
    kinetic + interaction
}

/// Projector q = 1 - |phi><phi| onto the orthogonal complement of the
/// condensate orbital. The input must be normalized.
pub fn projector_q<T: Real>(phi: &GridFunction<T>) -> Result<Kernel<T>, GridError> {
    let n = phi.norm_l2();
    if !(n > T::zero()) {
        return Err(GridError::ZeroFunction);
    }
    let phin = phi.scaled(c_re(T::one() / n));
    Ok(Kernel::identity(&phi.lattice).sub(&Kernel::outer(&phin, &phin)))
}

/// Normalized single-hump initial datum: periodized Gaussian of the given
/// width centered in the box.
pub fn periodized_gaussian<T: Real>(lattice: &Lattice<T>, width: T) -> GridFunction<T> {
    let len = lattice.box_length();
    let center = len / T::of(2.0);
    let d = lattice.dim();
    let f = GridFunction::from_fn(lattice, |x| {
        let mut v = T::zero();
        // Sum over periodic images; the tails beyond +-2 boxes are below
        // machine precision for any width < L/2.
        let mut images = [[T::zero(); 5]; 3];
        for axis in 0..d {
            for (slot, img) in (-2..=2).zip(images[axis].iter_mut()) {
                let dx = x[axis] - center + T::of(slot as f64) * len;
                *img = dx;
            }
        }
        // Cartesian product over axes.
        let mut idx = [0usize; 3];
        loop {
            let mut r2 = T::zero();
            for axis in 0..d {
                let dx = images[axis][idx[axis]];
                r2 = r2 + dx * dx;
            }
            v = v + (-r2 / (T::of(2.0) * width * width)).exp();
            let mut axis = 0;
            loop {
                if axis == d {
                    break;
                }
                idx[axis] += 1;
                if idx[axis] < 5 {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
        c_re(v)
    });
    f.normalized().expect("gaussian hump has positive norm")
}
