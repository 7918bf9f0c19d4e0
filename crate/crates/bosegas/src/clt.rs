//! Central-limit outputs: fluctuation vectors of bounded one-body
//! observables, their covariance matrix, and the limiting Gaussian
//! functionals (probabilities, characteristic function, multivariate
//! expectations).
//!
//! Transform convention: `g(x) = int ghat(s) e^{isx} ds`, so that
//! `E[prod g_j(X_j)] = int prod ghat_j(s_j) E[e^{i sum s_j X_j}] ds`.

use ndarray::Array2;
use num_complex::Complex;

use crate::bogoliubov::BogoliubovPair;
use crate::error::CltError;
use crate::grid::{GridFunction, Kernel, Lattice};
use crate::kernels::BogoliubovKernels;
use crate::linalg::{self, CMat};
use crate::real::{c_re, c_zero, normal_cdf, Cplx, Real};

/// Bounded one-particle observable with a norm estimate.
#[derive(Clone, Debug)]
pub struct Observable<T: Real> {
    pub name: String,
    pub kernel: Kernel<T>,
    pub op_norm_estimate: T,
}

impl<T: Real> Observable<T> {
    pub fn from_kernel(name: impl Into<String>, kernel: Kernel<T>) -> Self {
        let op_norm_estimate = kernel.op_norm();
        Self {
            name: name.into(),
            kernel,
            op_norm_estimate,
        }
    }

    /// Smoothed indicator of a position window: multiplication by
    /// `1/2 [tanh((x - c + w/2)/s) - tanh((x - c - w/2)/s)]` per axis
    /// (minimal-image distances).
    pub fn position_window(lattice: &Lattice<T>, center: &[T], width: T, smoothing: T) -> Self {
        let d = lattice.dim();
        assert_eq!(center.len(), d);
        let len = lattice.box_length();
        let half = width / T::of(2.0);
        let window = GridFunction::from_fn(lattice, |x| {
            let mut v = T::one();
            for axis in 0..d {
                let mut dx = x[axis] - center[axis];
                // wrap to [-L/2, L/2)
                while dx >= len / T::of(2.0) {
                    dx = dx - len;
                }
                while dx < -len / T::of(2.0) {
                    dx = dx + len;
                }
                let up = ((dx + half) / smoothing).tanh();
                let dn = ((dx - half) / smoothing).tanh();
                v = v * (up - dn) / T::of(2.0);
            }
            c_re(v)
        });
        let norm = window.norm_linf();
        Self {
            name: "position-window".into(),
            kernel: Kernel::multiplication(&window),
            op_norm_estimate: norm,
        }
    }

    /// Smoothed momentum cutoff: Fourier multiplier
    /// `1 / (1 + exp((|k| - k_cut)/s))`.
    pub fn momentum_window(lattice: &Lattice<T>, k_cut: T, smoothing: T) -> Self {
        let n = lattice.total_points();
        let mut mat = Array2::from_elem((n, n), c_zero::<T>());
        let mult = |flat: usize| {
            let k = lattice.k_squared(flat).sqrt();
            c_re(T::one() / (T::one() + ((k - k_cut) / smoothing).exp()))
        };
        // Columns are the multiplier applied to delta functions.
        for j in 0..n {
            let mut delta = GridFunction::zeros(lattice);
            delta.values[j] = c_re(T::one() / lattice.cell_volume());
            let col = delta.apply_multiplier(mult);
            for i in 0..n {
                mat[(i, j)] = col.values[i];
            }
        }
        let mut max_m = T::zero();
        for flat in 0..n {
            max_m = max_m.max(mult(flat).re);
        }
        Self {
            name: "momentum-window".into(),
            kernel: Kernel::new(lattice.clone(), mat),
            op_norm_estimate: max_m,
        }
    }
}

/// Fluctuation vector at the initial time (identity pair):
/// `sigma_0 = cosh (q O phi) + sinh conj(q O phi)`.
pub fn initial_fluctuation_vector<T: Real>(
    observable: &Observable<T>,
    phi: &GridFunction<T>,
    family: &BogoliubovKernels<T>,
) -> Result<GridFunction<T>, CltError> {
    let w = projected_observable_vector(observable, phi)?;
    let ch_w = family.cosh.apply(&w);
    let sh_wbar = family.sinh.apply(&w.conj());
    Ok(ch_w.add(&sh_wbar))
}

fn projected_observable_vector<T: Real>(
    observable: &Observable<T>,
    phi: &GridFunction<T>,
) -> Result<GridFunction<T>, CltError> {
    let phi = phi.normalized()?;
    let o_phi = observable.kernel.apply(&phi);
    let overlap = phi.inner(&o_phi);
    Ok(o_phi.sub(&phi.scaled(overlap)))
}

/// Fluctuation vector `nu = Theta-push of cosh (qOphi) + sinh conj(qOphi)`.
///
/// The pair acts through the field-operator conjugation
/// `phi_a(h) -> phi_a(U h + conj(V) conj(h))`, which fixes the conjugations
/// unambiguously (and is what the Fock oracle verifies end to end).
pub fn fluctuation_vector<T: Real>(
    observable: &Observable<T>,
    phi: &GridFunction<T>,
    family: &BogoliubovKernels<T>,
    pair: &BogoliubovPair<T>,
) -> Result<GridFunction<T>, CltError> {
    if (family.time - pair.time).abs() > T::of(1e-9) * T::one().max(pair.time.abs()) {
        return Err(CltError::TimeMismatch);
    }
    let w = projected_observable_vector(observable, phi)?;
    let h = family.cosh.apply(&w).add(&family.sinh.apply(&w.conj()));
    let nu = pair.map_field_vector(&h.values);
    Ok(GridFunction::new(phi.lattice.clone(), nu))
}

/// Covariance matrix of the fluctuation vectors in the symmetric-completion
/// convention: upper triangle `<nu_i, nu_j>`, lower and diagonal
/// `<nu_j, nu_i>`.
#[derive(Clone, Debug)]
pub struct CovarianceReport<T: Real> {
    pub time: T,
    pub nu_norms: Vec<T>,
    pub sigma: CMat<T>,
    pub determinant: Cplx<T>,
    pub inverse: Option<CMat<T>>,
    pub condition_number: Option<T>,
    /// Max |Im <nu_i, nu_j>|: the matrix is hermitian iff this vanishes.
    pub hermiticity_defect: T,
}

impl<T: Real> CovarianceReport<T> {
    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    /// k = 1 variance ||sigma_t||^2.
    pub fn variance(&self) -> T {
        self.sigma[(0, 0)].re
    }
}

pub fn covariance_matrix<T: Real>(
    time: T,
    nus: &[GridFunction<T>],
) -> Result<CovarianceReport<T>, CltError> {
    if nus.is_empty() {
        return Err(CltError::EmptyObservables);
    }
    let k = nus.len();
    let mut sigma = Array2::from_elem((k, k), c_zero::<T>());
    let mut herm = T::zero();
    for i in 0..k {
        for j in 0..k {
            let v = if i < j {
                nus[i].inner(&nus[j])
            } else {
                nus[j].inner(&nus[i])
            };
            sigma[(i, j)] = v;
            if i != j {
                herm = herm.max(v.im.abs());
            }
        }
    }
    let nu_norms: Vec<T> = nus.iter().map(|n| n.norm_l2()).collect();
    let (determinant, inverse) = linalg::det_inverse(&sigma);
    let condition_number = inverse
        .as_ref()
        .map(|inv| linalg::spectral_norm(&sigma) * linalg::spectral_norm(inv));
    Ok(CovarianceReport {
        time,
        nu_norms,
        sigma,
        determinant,
        inverse,
        condition_number,
        hermiticity_defect: herm,
    })
}

/// P(G in [a, b]) for a centered Gaussian with the given variance; the
/// degenerate case returns the indicator of 0 in [a, b].
pub fn gaussian_probability<T: Real>(variance: T, a: T, b: T) -> T {
    assert!(a < b, "gaussian_probability requires a < b");
    if variance == T::zero() {
        return if a <= T::zero() && T::zero() <= b {
            T::one()
        } else {
            T::zero()
        };
    }
    let s = variance.sqrt();
    normal_cdf(b / s) - normal_cdf(a / s)
}

/// Characteristic function `exp(-1/2 sum_ij Sigma_ij s_i s_j)` (complex
/// exponent; the imaginary part carries the commutator phases).
pub fn characteristic_function<T: Real>(sigma: &CMat<T>, s: &[T]) -> Cplx<T> {
    let k = sigma.nrows();
    assert_eq!(s.len(), k);
    let mut q = c_zero::<T>();
    for i in 0..k {
        for j in 0..k {
            q += sigma[(i, j)] * c_re(s[i] * s[j]);
        }
    }
    (-q * c_re(T::of(0.5))).exp()
}

/// Test function given by its Fourier transform.
#[derive(Clone, Debug)]
pub enum TestFunction<T: Real> {
    /// g identically 1 (transform is a point mass at s = 0).
    One,
    /// Density of a centered Gaussian with the given variance;
    /// ghat(s) = exp(-v s^2 / 2) / (2 pi).
    GaussianDensity { variance: T },
    /// Tabulated transform on a uniform grid, linearly interpolated and
    /// treated as 0 outside.
    TabulatedTransform { s: Vec<T>, values: Vec<Cplx<T>> },
}

impl<T: Real> TestFunction<T> {
    pub fn transform(&self, s: T) -> Cplx<T> {
        match self {
            TestFunction::One => unreachable!("point mass is handled by reduction"),
            TestFunction::GaussianDensity { variance } => {
                c_re((-*variance * s * s / T::of(2.0)).exp() / (T::of(2.0) * T::PI()))
            }
            TestFunction::TabulatedTransform { s: grid, values } => {
                let n = grid.len();
                if n == 0 || s < grid[0] || s > grid[n - 1] {
                    return c_zero::<T>();
                }
                let mut lo = 0;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if grid[mid] <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let wgt = (s - grid[lo]) / (grid[hi] - grid[lo]);
                values[lo] * c_re(T::one() - wgt) + values[hi] * c_re(wgt)
            }
        }
    }

    /// Pointwise value of g when available in closed form.
    pub fn value(&self, x: T) -> Option<Cplx<T>> {
        match self {
            TestFunction::One => Some(c_re(T::one())),
            TestFunction::GaussianDensity { variance } => Some(c_re(
                (-x * x / (T::of(2.0) * *variance)).exp()
                    / (T::of(2.0) * T::PI() * *variance).sqrt(),
            )),
            TestFunction::TabulatedTransform { .. } => None,
        }
    }

    /// Integrability against the (1 + |s|)^4 weight: finite by construction
    /// for the closed forms; tabulated transforms must decay at the grid
    /// ends.
    fn check_integrable(&self) -> Result<(), CltError> {
        if let TestFunction::TabulatedTransform { s, values } = self {
            if s.len() < 2 {
                return Err(CltError::NonIntegrableTransform(
                    "tabulated transform needs at least two samples".into(),
                ));
            }
            let mut max_weighted = T::min_positive_value();
            for (sv, z) in s.iter().zip(values.iter()) {
                max_weighted = max_weighted.max(z.norm() * (T::one() + sv.abs()).powi(4));
            }
            let edge = values[0].norm().max(values[values.len() - 1].norm());
            let s_max = s[0].abs().max(s[s.len() - 1].abs());
            let weighted_edge = edge * (T::one() + s_max).powi(4);
            if weighted_edge > T::of(0.05) * max_weighted {
                return Err(CltError::NonIntegrableTransform(format!(
                    "transform does not decay at the grid ends (weighted edge {weighted_edge:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Gauss-Hermite nodes and weights (weight function exp(-t^2)) via the
/// Golub-Welsch tridiagonal eigenproblem.
pub fn gauss_hermite<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut j = Array2::from_elem((n, n), c_zero::<T>());
    for k in 1..n {
        let b = (T::of(k as f64) / T::of(2.0)).sqrt();
        j[(k - 1, k)] = c_re(b);
        j[(k, k - 1)] = c_re(b);
    }
    let (eig, vecs) = linalg::hermitian_eigen(&j);
    let nodes: Vec<T> = eig.iter().copied().collect();
    let weights: Vec<T> = (0..n)
        .map(|col| {
            let v0 = vecs[(0, col)].norm();
            T::PI().sqrt() * v0 * v0
        })
        .collect();
    (nodes, weights)
}

fn real_part_psd_rotation<T: Real>(sigma: &CMat<T>) -> Result<(Vec<T>, Vec<Vec<T>>), CltError> {
    let k = sigma.nrows();
    let re: CMat<T> = sigma.mapv(|z| c_re(z.re));
    let (eig, vecs) = linalg::hermitian_eigen(&re);
    let scale = eig.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    for &l in eig.iter() {
        if l <= T::of(1e-12) * scale.max(T::one()) {
            return Err(CltError::SingularCovariance);
        }
    }
    let q: Vec<Vec<T>> = (0..k)
        .map(|row| (0..k).map(|col| vecs[(row, col)].re).collect())
        .collect();
    Ok((eig.to_vec(), q))
}

/// `int prod_j ghat_j(s_j) exp(-1/2 s^T Sigma s) ds` by tensor Gauss-Hermite
/// quadrature in the principal axes of Re Sigma. This is the s-side
/// (characteristic function) form of the multivariate Gaussian expectation.
pub fn multivariate_expectation<T: Real>(
    sigma: &CMat<T>,
    tests: &[TestFunction<T>],
    nodes_per_axis: usize,
) -> Result<Cplx<T>, CltError> {
    let k = sigma.nrows();
    assert_eq!(tests.len(), k);
    for tf in tests {
        tf.check_integrable()?;
    }
    // Dimension reduction over point masses (g = 1 components pin s_j = 0).
    let active: Vec<usize> = (0..k)
        .filter(|&j| !matches!(tests[j], TestFunction::One))
        .collect();
    if active.is_empty() {
        return Ok(c_re(T::one()));
    }
    let ka = active.len();
    let mut sig_a = Array2::from_elem((ka, ka), c_zero::<T>());
    for (ii, &i) in active.iter().enumerate() {
        for (jj, &j) in active.iter().enumerate() {
            sig_a[(ii, jj)] = sigma[(i, j)];
        }
    }
    let (lambda, q) = real_part_psd_rotation(&sig_a)?;
    let im: Vec<Vec<T>> = (0..ka)
        .map(|i| (0..ka).map(|j| sig_a[(i, j)].im).collect())
        .collect();
    let (nodes, weights) = gauss_hermite::<T>(nodes_per_axis);

    // Tensor product over axes in the rotated frame.
    let mut total = c_zero::<T>();
    let mut idx = vec![0usize; ka];
    let mut jac = T::one();
    for &l in &lambda {
        jac = jac * (T::of(2.0) / l).sqrt();
    }
    loop {
        let mut wprod = T::one();
        let mut y = vec![T::zero(); ka];
        for (axis, &i) in idx.iter().enumerate() {
            wprod = wprod * weights[i];
            y[axis] = nodes[i] * (T::of(2.0) / lambda[axis]).sqrt();
        }
        // s = Q y
        let mut s = vec![T::zero(); ka];
        for row in 0..ka {
            let mut acc = T::zero();
            for col in 0..ka {
                acc = acc + q[row][col] * y[col];
            }
            s[row] = acc;
        }
        let mut f = c_re(T::one());
        for (slot, &j) in active.iter().enumerate() {
            f *= tests[j].transform(s[slot]);
        }
        // residual phase from Im Sigma
        let mut quad_im = T::zero();
        for i in 0..ka {
            for j in 0..ka {
                quad_im = quad_im + im[i][j] * s[i] * s[j];
            }
        }
        let phase = Complex::from_polar(T::one(), -quad_im / T::of(2.0));
        total += f * phase * c_re(wprod);
        // advance multi-index
        let mut axis = 0;
        loop {
            if axis == ka {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < nodes_per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == ka {
            break;
        }
    }
    Ok(total * c_re(jac))
}

/// x-side (Gaussian density) form `E[prod g_j(X_j)]`, available when every
/// test function has a closed-form value and Im Sigma vanishes. Used as the
/// cross-check of [`multivariate_expectation`] for small k.
pub fn multivariate_expectation_density<T: Real>(
    sigma: &CMat<T>,
    tests: &[TestFunction<T>],
    nodes_per_axis: usize,
) -> Result<Cplx<T>, CltError> {
    let k = sigma.nrows();
    assert_eq!(tests.len(), k);
    let im_max = sigma.iter().fold(T::zero(), |a, z| a.max(z.im.abs()));
    if im_max > T::of(1e-10) {
        return Err(CltError::NonIntegrableTransform(
            "density form requires a real covariance".into(),
        ));
    }
    let (lambda, q) = real_part_psd_rotation(sigma)?;
    let (nodes, weights) = gauss_hermite::<T>(nodes_per_axis);
    let mut total = c_zero::<T>();
    let mut idx = vec![0usize; k];
    loop {
        let mut wprod = T::one();
        let mut y = vec![T::zero(); k];
        for (axis, &i) in idx.iter().enumerate() {
            wprod = wprod * weights[i];
            // X = Q sqrt(Lambda) Z with Z standard normal; z = sqrt(2) t
            y[axis] = nodes[i] * (T::of(2.0) * lambda[axis]).sqrt();
        }
        let mut x = vec![T::zero(); k];
        for row in 0..k {
            let mut acc = T::zero();
            for col in 0..k {
                acc = acc + q[row][col] * y[col];
            }
            x[row] = acc;
        }
        let mut f = c_re(T::one());
        for j in 0..k {
            let v = tests[j].value(x[j]).ok_or_else(|| {
                CltError::NonIntegrableTransform("density form needs closed-form g".into())
            })?;
            f *= v;
        }
        total += f * c_re(wprod);
        let mut axis = 0;
        loop {
            if axis == k {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < nodes_per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == k {
            break;
        }
    }
    let norm = T::PI().powf(-T::of(k as f64) / T::of(2.0));
    Ok(total * c_re(norm))
}
