//! Scalar abstraction: every numerical routine in this crate is generic over
//! the real floating-point type through [`Real`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Shorthand for lossless conversion of an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("real scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

pub fn c_zero<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn c_one<T: Real>() -> Cplx<T> {
    Complex::new(T::one(), T::zero())
}

pub fn c_i<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), T::one())
}

pub fn c_re<T: Real>(x: T) -> Cplx<T> {
    Complex::new(x, T::zero())
}

/// Error function, accurate to a few ulps in the working precision.
///
/// Uses the Maclaurin series for |x| < 1.5 and a modified-Lentz evaluation of
/// the continued fraction for erfc otherwise; both converge to working
/// precision without table lookups, so the routine stays generic over the
/// scalar type.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x.is_infinite() {
        return x.signum();
    }
    let ax = x.abs();
    if ax < T::of(1.5) {
        // erf(x) = 2/sqrt(pi) * sum_{n>=0} (-1)^n x^{2n+1} / (n! (2n+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = T::one();
        loop {
            term = -term * x2 / n;
            let contrib = term / (T::of(2.0) * n + T::one());
            sum = sum + contrib;
            if contrib.abs() <= sum.abs() * T::epsilon() {
                break;
            }
            n = n + T::one();
        }
        sum * T::of(2.0) / T::PI().sqrt()
    } else {
        x.signum() * (T::one() - erfc_cf(ax))
    }
}

/// Complementary error function for x >= 1.5 via the Laplace continued
/// fraction erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erfc_cf<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    let half = T::of(0.5);
    let mut k = T::zero();
    for _ in 0..200 {
        k = k + half;
        d = x + k * d;
        if d == T::zero() {
            d = tiny;
        }
        c = x + k / c;
        if c == T::zero() {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::of(0.5) * (T::one() + erf(x / T::SQRT_2()))
}
