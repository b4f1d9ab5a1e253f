//! Numerical laboratory for Beurling generalized prime and integer systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`counting`]: step functions, signed measures, Stieltjes integrals.
//! - [`primes`]: constructors for prime systems and their perturbations.
//! - [`lattice`]: enumeration of generalized integers and density estimates.
//! - [`analytic`]: the transfer chain `a → A → B → C → Z`, the Diamond
//!   integral, line samples and Hölder moduli.
//! - [`smoothing`]: Gaussian-smoothed counting on the Fourier and
//!   convolution sides.

pub mod analytic;
pub mod counting;
pub mod error;
pub mod lattice;
pub mod primes;
pub mod quad;
pub mod rng;
pub mod sieve;
pub mod smoothing;
pub mod tau;

pub use error::{Error, Result};
