//! Limiting Gaussian fluctuation statistics of a dilute Bose gas.
//!
//! The crate builds, at desk scale, the objects controlling quantum
//! fluctuations around a Bose-Einstein condensate with a strongly scaled
//! two-body interaction:
//!
//! * the Neumann two-body scattering problem and its large-N limit
//!   ([`scattering`]),
//! * the condensate flows (cubic NLS and the N-dependent Hartree equation,
//!   [`condensate`]),
//! * the short-range pair-correlation kernels and their hyperbolic functions
//!   ([`kernels`]),
//! * the quadratic fluctuation generator and the Bogoliubov pair (U, V) it
//!   propagates ([`bogoliubov`]),
//! * the resulting Gaussian covariance matrix of one-body fluctuation
//!   observables ([`clt`]),
//! * and an exact truncated-Fock-space oracle that verifies every
//!   second-quantized identity at small mode counts ([`fock`]).
//!
//! All numerics are generic over the floating-point scalar via [`real::Real`];
//! concrete `f64` aliases live at the crate root.

pub mod bogoliubov;
pub mod clt;
pub mod condensate;
pub mod error;
pub mod fock;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod real;
pub mod scattering;
pub mod snapshot;

pub use real::{Cplx, Real};

/// f64 lane aliases.
pub type C64 = num_complex::Complex<f64>;
pub type Lattice64 = grid::Lattice<f64>;
pub type GridFunction64 = grid::GridFunction<f64>;
pub type Kernel64 = grid::Kernel<f64>;
pub type Potential64 = scattering::Potential<f64>;
pub type ScatteringSolution64 = scattering::ScatteringSolution<f64>;
pub type CondensateTrajectory64 = condensate::CondensateTrajectory<f64>;
pub type BogoliubovKernels64 = kernels::BogoliubovKernels<f64>;
pub type QuadraticGenerator64 = bogoliubov::QuadraticGenerator<f64>;
pub type BogoliubovPair64 = bogoliubov::BogoliubovPair<f64>;
pub type FockBasis64 = fock::FockBasis<f64>;
pub type Observable64 = clt::Observable<f64>;
pub type CovarianceReport64 = clt::CovarianceReport<f64>;
