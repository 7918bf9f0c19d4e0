//! Two-body scattering layer: the Neumann problem for the scaled potential on
//! a ball, the zero-energy scattering length, and the closed-form limiting
//! short-range kernel together with its lattice regularization.
//!
//! Everything radial happens in the 3d variable u(r) = r f(r); the reduction
//! is exact for spherically symmetric potentials.

use crate::error::ScatteringError;
use crate::real::Real;

/// Radial shape of the (unscaled) two-body potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialShape {
    /// V identically zero.
    Zero,
    /// Smooth compactly supported bump `A exp(-r^2 / (R^2 - r^2))` for r < R.
    CompactBump,
}

/// Nonnegative, spherically symmetric, compactly supported potential with the
/// singular scaling `V_N(x) = N^(3 beta) V(N^beta x)`.
#[derive(Clone, Debug)]
pub struct Potential<T: Real> {
    pub shape: PotentialShape,
    pub amplitude: T,
    pub support_radius: T,
    pub beta: T,
    pub particle_number: T,
    integral: T,
}

impl<T: Real> Potential<T> {
    pub fn new(shape: PotentialShape, amplitude: T, support_radius: T, beta: T, particle_number: T) -> Self {
        let mut p = Self {
            shape,
            amplitude,
            support_radius,
            beta,
            particle_number,
            integral: T::zero(),
        };
        p.integral = p.compute_integral();
        p
    }

    pub fn zero() -> Self {
        Self::new(PotentialShape::Zero, T::zero(), T::one(), T::of(0.5), T::of(100.0))
    }

    pub fn with_particle_number(&self, n: T) -> Self {
        let mut p = self.clone();
        p.particle_number = n;
        p
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, PotentialShape::Zero) || self.amplitude == T::zero()
    }

    /// Unscaled radial profile V(r).
    pub fn v(&self, r: T) -> T {
        match self.shape {
            PotentialShape::Zero => T::zero(),
            PotentialShape::CompactBump => {
                let rr = self.support_radius;
                if r >= rr {
                    T::zero()
                } else {
                    let den = rr * rr - r * r;
                    self.amplitude * (-(r * r) / den).exp()
                }
            }
        }
    }

    /// Scaled profile V_N(r) = N^(3 beta) V(N^beta r).
    pub fn v_scaled(&self, r: T) -> T {
        let nb = self.particle_number.powf(self.beta);
        nb * nb * nb * self.v(nb * r)
    }

    /// Support radius of V_N.
    pub fn scaled_support(&self) -> T {
        self.support_radius / self.particle_number.powf(self.beta)
    }

    /// b0 = integral of V over R^3.
    pub fn b0(&self) -> T {
        self.integral
    }

    fn compute_integral(&self) -> T {
        if self.is_zero() {
            return T::zero();
        }
        // 4 pi int_0^R V(r) r^2 dr by composite Simpson on a fine grid; the
        // integrand is smooth and vanishes to all orders at R.
        let n = 8192usize;
        let h = self.support_radius / T::of(n as f64);
        let mut acc = T::zero();
        for i in 0..n {
            let a = T::of(i as f64) * h;
            let m = a + h / T::of(2.0);
            let b = a + h;
            let f = |r: T| self.v(r) * r * r;
            acc = acc + (f(a) + T::of(4.0) * f(m) + f(b)) * h / T::of(6.0);
        }
        T::of(4.0) * T::PI() * acc
    }
}

/// Sampled radial profile with linear interpolation and exact segmentwise
/// moment integrals against r^q.
#[derive(Clone, Debug)]
pub struct RadialTable<T: Real> {
    pub r: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> RadialTable<T> {
    pub fn eval(&self, r: T) -> T {
        let n = self.r.len();
        if n == 0 {
            return T::zero();
        }
        if r <= self.r[0] {
            return self.v[0];
        }
        if r >= self.r[n - 1] {
            return self.v[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.r[mid] <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (r0, r1) = (self.r[lo], self.r[hi]);
        let (v0, v1) = (self.v[lo], self.v[hi]);
        let w = (r - r0) / (r1 - r0);
        v0 + (v1 - v0) * w
    }

    /// Exact integral of the interpolant times r^q over [a, b] (q <= 4).
    pub fn moment_integral(&self, a: T, b: T, q: u32) -> T {
        if b <= a {
            return T::zero();
        }
        let n = self.r.len();
        let mut acc = T::zero();
        // Tail pieces outside the table use the boundary values (constant).
        let table_lo = self.r[0];
        let table_hi = self.r[n - 1];
        let poly = |lo: T, hi: T, c0: T, c1: T| {
            // integral of (c0 + c1 r) r^q over [lo, hi]
            let q1 = T::of(q as f64 + 1.0);
            let q2 = T::of(q as f64 + 2.0);
            c0 * (hi.powi(q as i32 + 1) - lo.powi(q as i32 + 1)) / q1
                + c1 * (hi.powi(q as i32 + 2) - lo.powi(q as i32 + 2)) / q2
        };
        if a < table_lo {
            let hi = b.min(table_lo);
            acc = acc + poly(a, hi, self.v[0], T::zero());
        }
        if b > table_hi {
            let lo = a.max(table_hi);
            acc = acc + poly(lo, b, self.v[n - 1], T::zero());
        }
        for i in 0..n - 1 {
            let (r0, r1) = (self.r[i], self.r[i + 1]);
            if r1 <= a || r0 >= b || r1 <= r0 {
                continue;
            }
            let lo = r0.max(a);
            let hi = r1.min(b);
            let slope = (self.v[i + 1] - self.v[i]) / (r1 - r0);
            let c0 = self.v[i] - slope * r0;
            acc = acc + poly(lo, hi, c0, slope);
        }
        acc
    }
}

/// Neumann ground state of the scaled two-body problem on the ball of radius
/// `ell`, normalized to f(ell) = 1, plus the derived deficit and diagnostics.
#[derive(Clone, Debug)]
pub struct ScatteringSolution<T: Real> {
    pub ell: T,
    pub eigenvalue: T,
    /// Radial samples of f_N on [0, ell] (f_N = 1 outside by extension).
    pub profile: RadialTable<T>,
    /// N (1 - f_N) on the same grid, 0 outside [0, ell].
    pub scaled_deficit: RadialTable<T>,
    /// V_N f_N on the same grid (enters the Hartree convolution).
    pub interaction_profile: RadialTable<T>,
    /// Relative residual of the integral identity
    /// lambda int_{B_ell} f = (1/2N) int V_N f.
    pub identity_residual: T,
    pub b0: T,
    pub particle_number: T,
    pub beta: T,
}

impl<T: Real> ScatteringSolution<T> {
    /// N omega_N(r), extended by zero outside the ball.
    pub fn n_deficit(&self, r: T) -> T {
        if r >= self.ell {
            T::zero()
        } else {
            self.scaled_deficit.eval(r)
        }
    }

    /// integral over R^3 of V_N f_N (converges to b0 as N grows).
    pub fn interaction_integral(&self) -> T {
        T::of(4.0) * T::PI()
            * self
                .interaction_profile
                .moment_integral(T::zero(), self.profile.r[self.profile.r.len() - 1], 2)
    }
}

/// Radial grid on [0, r_max]: quadratically graded points on [0, core] (the
/// scaled-potential support) followed by uniform points up to r_max.
fn radial_grid<T: Real>(core: T, r_max: T, min_points: usize) -> Vec<T> {
    let n = min_points.max(10_000);
    let core = core.min(r_max);
    let mut r = Vec::with_capacity(n + 1);
    if core > T::zero() && core < r_max {
        let n1 = n / 2;
        let n2 = n - n1;
        for i in 0..n1 {
            let s = T::of(i as f64) / T::of(n1 as f64);
            r.push(core * s * s);
        }
        for i in 0..=n2 {
            let s = T::of(i as f64) / T::of(n2 as f64);
            r.push(core + (r_max - core) * s);
        }
    } else {
        for i in 0..=n {
            let s = T::of(i as f64) / T::of(n as f64);
            r.push(r_max * s * s);
        }
    }
    r
}

/// One RK4 pass of u'' = c(r) u from r=0 with u(0)=0, u'(0)=1, accumulating
/// the quadratures I1 = int u r dr and I2 = int w(r) u r dr.
/// Returns (u(end), u'(end), I1, I2) plus the trace of u if requested.
fn integrate_radial<T: Real>(
    grid: &[T],
    c: &impl Fn(T) -> T,
    w: &impl Fn(T) -> T,
    mut trace: Option<&mut Vec<T>>,
) -> (T, T, T, T) {
    let mut u = T::zero();
    let mut du = T::one();
    let mut i1 = T::zero();
    let mut i2 = T::zero();
    if let Some(tr) = trace.as_deref_mut() {
        tr.clear();
        tr.push(u);
    }
    for k in 0..grid.len() - 1 {
        let r0 = grid[k];
        let h = grid[k + 1] - r0;
        let f = |r: T, u: T, du: T| (du, c(r) * u, u * r, w(r) * u * r);
        let (k1u, k1d, k1a, k1b) = f(r0, u, du);
        let h2 = h / T::of(2.0);
        let (k2u, k2d, k2a, k2b) = f(r0 + h2, u + h2 * k1u, du + h2 * k1d);
        let (k3u, k3d, k3a, k3b) = f(r0 + h2, u + h2 * k2u, du + h2 * k2d);
        let (k4u, k4d, k4a, k4b) = f(r0 + h, u + h * k3u, du + h * k3d);
        let six = T::of(6.0);
        u = u + h * (k1u + T::of(2.0) * k2u + T::of(2.0) * k3u + k4u) / six;
        du = du + h * (k1d + T::of(2.0) * k2d + T::of(2.0) * k3d + k4d) / six;
        i1 = i1 + h * (k1a + T::of(2.0) * k2a + T::of(2.0) * k3a + k4a) / six;
        i2 = i2 + h * (k1b + T::of(2.0) * k2b + T::of(2.0) * k3b + k4b) / six;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(u);
        }
    }
    (u, du, i1, i2)
}

/// Solve the Neumann scattering problem: lowest eigenpair of
/// `[-Lap + V_N/(2N)] f = lambda f` on the ball B_ell with f(ell) = 1,
/// f'(ell) = 0, by shooting in u(r) = r f(r) and bisecting on lambda.
pub fn solve_neumann_scattering<T: Real>(
    pot: &Potential<T>,
    ell: T,
    min_radial_points: usize,
) -> Result<ScatteringSolution<T>, ScatteringError> {
    let n = pot.particle_number;
    let support = pot.scaled_support();
    if !pot.is_zero() && ell <= support {
        return Err(ScatteringError::EllTooSmall {
            ell: ell.to_f64_lossy(),
            support: support.to_f64_lossy(),
        });
    }
    let grid = radial_grid(support, ell, min_radial_points);

    if pot.is_zero() {
        let r = grid.clone();
        let ones = vec![T::one(); r.len()];
        let zeros = vec![T::zero(); r.len()];
        return Ok(ScatteringSolution {
            ell,
            eigenvalue: T::zero(),
            profile: RadialTable { r: r.clone(), v: ones },
            scaled_deficit: RadialTable { r: r.clone(), v: zeros.clone() },
            interaction_profile: RadialTable { r, v: zeros },
            identity_residual: T::zero(),
            b0: T::zero(),
            particle_number: n,
            beta: pot.beta,
        });
    }

    let w = |r: T| pot.v_scaled(r) / (T::of(2.0) * n);
    // Neumann mismatch at ell, proportional to f'(ell).
    let shoot = |lambda: T| {
        let c = |r: T| w(r) - lambda;
        let (u, du, _, _) = integrate_radial(&grid, &c, &w, None);
        du * ell - u
    };

    let g0 = shoot(T::zero());
    let lambda_est = T::of(3.0) * pot.b0() / (T::of(8.0) * T::PI() * ell * ell * ell * n);
    let mut hi = (T::of(4.0) * lambda_est).max(T::of(1e-12));
    let mut lo = T::zero();
    let mut ghi = shoot(hi);
    let mut doubled = 0usize;
    while ghi.signum() == g0.signum() {
        lo = hi;
        hi = hi * T::of(2.0);
        ghi = shoot(hi);
        doubled += 1;
        if doubled > 80 {
            return Err(ScatteringError::BracketNotFound {
                lambda_max: hi.to_f64_lossy(),
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if mid == lo || mid == hi {
            break;
        }
        let gm = shoot(mid);
        if gm.signum() == g0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= T::epsilon() * hi {
            break;
        }
    }
    let lambda = (lo + hi) / T::of(2.0);

    let c = |r: T| w(r) - lambda;
    let mut utrace = Vec::new();
    let (u_end, _du_end, i1, i2) = integrate_radial(&grid, &c, &w, Some(&mut utrace));
    // Normalize to f(ell) = 1, i.e. u(ell) = ell.
    let scale = ell / u_end;
    let mut f_vals = Vec::with_capacity(grid.len());
    for (k, &r) in grid.iter().enumerate() {
        let f = if r == T::zero() {
            // u(r) ~ u'(0) r near zero.
            scale
        } else {
            scale * utrace[k] / r
        };
        f_vals.push(f);
    }
    let deficit: Vec<T> = f_vals.iter().map(|&f| n * (T::one() - f)).collect();
    let vf: Vec<T> = grid.iter().zip(&f_vals).map(|(&r, &f)| pot.v_scaled(r) * f).collect();

    let identity_residual = {
        let lhs = lambda * i1;
        let rhs = i2;
        let denom = rhs.abs().max(T::min_positive_value());
        ((lhs - rhs) / denom).abs()
    };

    Ok(ScatteringSolution {
        ell,
        eigenvalue: lambda,
        profile: RadialTable { r: grid.clone(), v: f_vals },
        scaled_deficit: RadialTable { r: grid.clone(), v: deficit },
        interaction_profile: RadialTable { r: grid, v: vf },
        identity_residual,
        b0: pot.b0(),
        particle_number: n,
        beta: pot.beta,
    })
}

/// Zero-energy scattering length of the unscaled potential: integrate
/// `-u'' + (V/2) u = 0` outward and match u = c (r - a0) at the support edge.
pub fn scattering_length<T: Real>(pot: &Potential<T>, min_radial_points: usize) -> T {
    if pot.is_zero() {
        return T::zero();
    }
    let r_v = pot.support_radius;
    let grid = radial_grid(r_v, r_v, min_radial_points.max(2000));
    let c = |r: T| pot.v(r) / T::of(2.0);
    let w = |_r: T| T::zero();
    let (u, du, _, _) = integrate_radial(&grid, &c, &w, None);
    r_v - u / du
}

/// Which reading of the limiting deficit kernel to use; see
/// [`omega_infinity`] for the printed 3d formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaVariant {
    /// The quadratic coefficient x^2/(3 ell^3); does not vanish at |x| = ell.
    AsPrinted,
    /// The quadratic coefficient x^2/(2 ell^3): the profile solving
    /// -Lap w = (b0/2) delta - lambda_inf on B_ell with w(ell) = w'(ell) = 0,
    /// i.e. the actual pointwise limit of N omega_N. Continuous at ell.
    NeumannLimit,
}

/// The printed limiting kernel
/// `omega_inf(x) = b0/(8 pi) [1/|x| - 3/(2 ell) + x^2/(3 ell^3)]` on the ball,
/// 0 outside. Errors at x = 0; lattice builds use the cell-average
/// regularization instead.
pub fn omega_infinity<T: Real>(ell: T, b0: T, r: T) -> Result<T, ScatteringError> {
    let r = r.abs();
    if r > ell {
        return Ok(T::zero());
    }
    if r == T::zero() {
        return Err(ScatteringError::OmegaSingularity);
    }
    let c8pi = b0 / (T::of(8.0) * T::PI());
    Ok(c8pi * (T::one() / r - T::of(1.5) / ell + r * r / (T::of(3.0) * ell * ell * ell)))
}

/// Large-N limit of N lambda_N for the d-dimensional Neumann problem.
pub fn lambda_infinity<T: Real>(dim: usize, b0: T, ell: T) -> T {
    match dim {
        3 => T::of(3.0) * b0 / (T::of(8.0) * T::PI() * ell * ell * ell),
        2 => b0 / (T::of(2.0) * T::PI() * ell * ell),
        1 => b0 / (T::of(4.0) * ell),
        _ => panic!("dimension {dim} not supported"),
    }
}

/// Radial profile of the limiting short-range kernel in dimension d.
///
/// d = 3 uses [`omega_infinity`] (variant-dependent quadratic coefficient);
/// d = 2 and d = 1 use the analogous Neumann Green's functions of the
/// respective dimension (log resp. bounded profile).
#[derive(Clone, Copy, Debug)]
pub struct OmegaProfile<T: Real> {
    pub dim: usize,
    pub variant: OmegaVariant,
    pub ell: T,
    pub b0: T,
}

impl<T: Real> OmegaProfile<T> {
    pub fn new(dim: usize, variant: OmegaVariant, ell: T, b0: T) -> Self {
        Self { dim, variant, ell, b0 }
    }

    /// Pointwise value at r > 0 (0 outside the ball).
    pub fn eval(&self, r: T) -> T {
        let r = r.abs();
        let ell = self.ell;
        if r > ell || self.b0 == T::zero() {
            return T::zero();
        }
        match self.dim {
            3 => {
                let c = match self.variant {
                    OmegaVariant::AsPrinted => T::of(3.0),
                    OmegaVariant::NeumannLimit => T::of(2.0),
                };
                self.b0 / (T::of(8.0) * T::PI())
                    * (T::one() / r - T::of(1.5) / ell + r * r / (c * ell * ell * ell))
            }
            2 => {
                self.b0 / (T::of(4.0) * T::PI()) * (ell / r).ln()
                    + self.b0 / (T::of(8.0) * T::PI()) * (r * r / (ell * ell) - T::one())
            }
            1 => {
                let d = ell - r;
                self.b0 / (T::of(8.0) * ell) * d * d
            }
            _ => panic!("dimension {} not supported", self.dim),
        }
    }

    /// Average over the equal-volume ball of one lattice cell, used as the
    /// on-diagonal value so the kernel's HS norm is stable under refinement.
    pub fn origin_cell_average(&self, cell_volume: T) -> T {
        let ell = self.ell;
        let b0 = self.b0;
        match self.dim {
            3 => {
                let rc = (T::of(3.0) * cell_volume / (T::of(4.0) * T::PI()))
                    .powf(T::one() / T::of(3.0))
                    .min(ell);
                let c = match self.variant {
                    OmegaVariant::AsPrinted => T::of(3.0),
                    OmegaVariant::NeumannLimit => T::of(2.0),
                };
                // (1/dV) 4 pi int_0^rc omega r^2 dr with omega as above.
                let int = rc * rc / T::of(2.0) - rc * rc * rc / (T::of(2.0) * ell)
                    + rc.powi(5) / (T::of(5.0) * c * ell * ell * ell);
                b0 / T::of(2.0) * int / cell_volume
            }
            2 => {
                let rc = (cell_volume / T::PI()).sqrt().min(ell);
                let log_part = rc * rc / T::of(2.0) * (ell / rc).ln() + rc * rc / T::of(4.0);
                let poly_part = rc.powi(4) / (T::of(4.0) * ell * ell) - rc * rc / T::of(2.0);
                (b0 / (T::of(4.0) * T::PI()) * T::of(2.0) * T::PI() * log_part
                    + b0 / (T::of(8.0) * T::PI()) * T::of(2.0) * T::PI() * poly_part)
                    / cell_volume
            }
            1 => {
                let half = (cell_volume / T::of(2.0)).min(ell);
                // (2/a) int_0^{a/2} (b0 / 8 ell) (ell - r)^2 dr
                let int = (ell.powi(3) - (ell - half).powi(3)) / T::of(3.0);
                b0 / (T::of(8.0) * ell) * T::of(2.0) * int / cell_volume
            }
            _ => panic!("dimension {} not supported", self.dim),
        }
    }
}

/// Piecewise profile backed by the finite-N radial solution, with an exact
/// cell average computed from the interpolant.
#[derive(Clone, Debug)]
pub struct FiniteNProfile<T: Real> {
    pub table: RadialTable<T>,
    pub ell: T,
    pub dim: usize,
}

impl<T: Real> FiniteNProfile<T> {
    pub fn from_solution(sol: &ScatteringSolution<T>, dim: usize) -> Self {
        Self { table: sol.scaled_deficit.clone(), ell: sol.ell, dim }
    }

    pub fn eval(&self, r: T) -> T {
        if r.abs() >= self.ell {
            T::zero()
        } else {
            self.table.eval(r.abs())
        }
    }

    pub fn origin_cell_average(&self, cell_volume: T) -> T {
        match self.dim {
            3 => {
                let rc = (T::of(3.0) * cell_volume / (T::of(4.0) * T::PI()))
                    .powf(T::one() / T::of(3.0))
                    .min(self.ell);
                T::of(4.0) * T::PI() * self.table.moment_integral(T::zero(), rc, 2) / cell_volume
            }
            2 => {
                let rc = (cell_volume / T::PI()).sqrt().min(self.ell);
                T::of(2.0) * T::PI() * self.table.moment_integral(T::zero(), rc, 1) / cell_volume
            }
            1 => {
                let half = (cell_volume / T::of(2.0)).min(self.ell);
                T::of(2.0) * self.table.moment_integral(T::zero(), half, 0) / cell_volume
            }
            _ => panic!("dimension {} not supported", self.dim),
        }
    }
}

/// Transverse integral of V_N f_N: the effective 1d interaction profile
/// `W(x) = 2 pi int_{|x|}^{inf} (V_N f_N)(r) r dr`, which preserves
/// `int_R W = int_{R^3} V_N f_N`.
pub fn transverse_reduced_interaction<T: Real>(sol: &ScatteringSolution<T>) -> RadialTable<T> {
    let tab = &sol.interaction_profile;
    let n = tab.r.len();
    let r_max = tab.r[n - 1];
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let g = tab.moment_integral(tab.r[i], r_max, 1);
        w.push(T::of(2.0) * T::PI() * g);
    }
    RadialTable { r: tab.r.clone(), v: w }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(amplitude: f64, n: f64, beta: f64) -> Potential<f64> {
        Potential::new(PotentialShape::CompactBump, amplitude, 0.5, beta, n)
    }

    #[test]
    fn zero_potential_trivial_solution() {
        let pot = Potential::<f64>::zero();
        let sol = solve_neumann_scattering(&pot, 1.0, 2000).unwrap();
        assert_eq!(sol.eigenvalue, 0.0);
        assert!(sol.profile.v.iter().all(|&f| f == 1.0));
        assert!(sol.scaled_deficit.v.iter().all(|&w| w == 0.0));
        assert_eq!(scattering_length(&pot, 2000), 0.0);
    }

    #[test]
    fn ell_too_small_rejected() {
        let pot = bump(2.0, 4.0, 0.5);
        // scaled support = 0.5 / 4^0.5 = 0.25; ask for ell below it
        assert!(solve_neumann_scattering(&pot, 0.2, 2000).is_err());
    }

    #[test]
    fn eigenvalue_identity_and_positivity() {
        for n in [100.0, 1000.0] {
            let pot = bump(2.0, n, 0.5);
            let sol = solve_neumann_scattering(&pot, 1.0, 10_000).unwrap();
            assert!(sol.eigenvalue > 0.0);
            assert!(
                sol.identity_residual < 1e-10,
                "identity residual {} at N={n}",
                sol.identity_residual
            );
        }
    }

    #[test]
    fn profile_nondecreasing_for_nonnegative_potential() {
        let pot = bump(3.0, 500.0, 0.5);
        let sol = solve_neumann_scattering(&pot, 1.0, 10_000).unwrap();
        for w in sol.profile.v.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "profile decreased: {} -> {}", w[0], w[1]);
        }
        assert!(sol.profile.v.iter().all(|&f| (0.0..=1.0 + 1e-12).contains(&f)));
    }

    #[test]
    fn eigenvalue_scaling_limit() {
        // N lambda_N -> 3 b0 / (8 pi ell^3); derived from the integral
        // identity with int f -> |B_ell|.
        let ell = 1.0;
        let mut prev_err = f64::INFINITY;
        for n in [100.0, 1000.0, 10_000.0] {
            let pot = bump(2.0, n, 0.5);
            let sol = solve_neumann_scattering(&pot, ell, 10_000).unwrap();
            let target = lambda_infinity(3, pot.b0(), ell);
            let rel = ((n * sol.eigenvalue - target) / target).abs();
            assert!(rel < prev_err, "relative error not decreasing: {rel} vs {prev_err}");
            prev_err = rel;
        }
        assert!(prev_err < 0.03, "final relative error {prev_err}");
    }

    #[test]
    fn born_limit_of_scattering_length() {
        // a0 -> eps b0 / (8 pi) as the coupling eps -> 0.
        let mut prev_ratio_err = f64::INFINITY;
        for eps in [0.5, 0.1, 0.02] {
            let pot = bump(eps, 100.0, 0.5);
            let a0 = scattering_length(&pot, 20_000);
            let born = pot.b0() / (8.0 * std::f64::consts::PI);
            let ratio = a0 / born;
            let err = (ratio - 1.0).abs();
            assert!(err < prev_ratio_err, "ratio error not shrinking: {err}");
            prev_ratio_err = err;
        }
        assert!(prev_ratio_err < 0.01);
    }

    #[test]
    fn hard_core_bound_and_monotonicity() {
        let mut prev = 0.0;
        for amp in [5.0, 50.0, 500.0, 5000.0] {
            let pot = bump(amp, 100.0, 0.5);
            let a0 = scattering_length(&pot, 20_000);
            assert!(a0 > prev, "a0 not increasing in coupling");
            assert!(a0 < pot.support_radius, "a0 = {a0} exceeds the support radius");
            prev = a0;
        }
    }

    #[test]
    fn scattering_length_step_refinement() {
        let pot = bump(4.0, 100.0, 0.5);
        let coarse = scattering_length(&pot, 10_000);
        let fine = scattering_length(&pot, 20_000);
        assert!((coarse - fine).abs() < 1e-9, "step halving moved a0 by {}", (coarse - fine).abs());
    }

    #[test]
    fn omega_infinity_reference_points() {
        let ell = 0.8;
        let b0 = 2.3;
        let c = b0 / (8.0 * std::f64::consts::PI);
        let at_half = omega_infinity(ell, b0, ell / 2.0).unwrap();
        assert!((at_half - c * 7.0 / (12.0 * ell)).abs() < 1e-14);
        let at_ell = omega_infinity(ell, b0, ell).unwrap();
        assert!((at_ell + c / (6.0 * ell)).abs() < 1e-14);
        assert_eq!(omega_infinity(ell, b0, 2.0 * ell).unwrap(), 0.0);
        assert!(omega_infinity(ell, b0, 0.0).is_err());
    }

    #[test]
    fn neumann_limit_variant_vanishes_at_ell() {
        let p = OmegaProfile::<f64>::new(3, OmegaVariant::NeumannLimit, 0.8, 2.3);
        assert!(p.eval(0.8).abs() < 1e-14);
        let q = OmegaProfile::<f64>::new(3, OmegaVariant::AsPrinted, 0.8, 2.3);
        assert!(q.eval(0.8).abs() > 1e-3);
        // 1d analog: bounded with C1 contact at ell
        let p1 = OmegaProfile::<f64>::new(1, OmegaVariant::NeumannLimit, 0.8, 2.3);
        assert!(p1.eval(1e-12).is_finite());
        assert!(p1.eval(0.8).abs() < 1e-14);
    }

    #[test]
    fn scaled_deficit_converges_to_limit_profile() {
        let ell = 1.0;
        let delta = 0.05;
        let mut prev = f64::INFINITY;
        for n in [100.0, 1000.0, 10_000.0] {
            let pot = bump(2.0, n, 0.5);
            let sol = solve_neumann_scattering(&pot, ell, 10_000).unwrap();
            let limit = OmegaProfile::new(3, OmegaVariant::NeumannLimit, ell, pot.b0());
            let mut sup = 0.0f64;
            for (&r, &w) in sol.scaled_deficit.r.iter().zip(&sol.scaled_deficit.v) {
                if r >= delta && r <= ell {
                    sup = sup.max((w - limit.eval(r)).abs());
                }
            }
            assert!(sup < prev, "sup error not decreasing at N={n}: {sup} vs {prev}");
            prev = sup;
        }
    }

    #[test]
    fn transverse_reduction_preserves_integral() {
        let pot = bump(2.0, 400.0, 0.5);
        let sol = solve_neumann_scattering(&pot, 1.0, 10_000).unwrap();
        let w = transverse_reduced_interaction(&sol);
        // int_R W = 2 int_0^inf W(x) dx should equal int_{R^3} V_N f_N.
        let int_w = 2.0 * w.moment_integral(0.0, 1.0, 0);
        let int_vf = sol.interaction_integral();
        assert!(
            ((int_w - int_vf) / int_vf).abs() < 1e-6,
            "transverse reduction integral mismatch: {int_w} vs {int_vf}"
        );
    }
}
