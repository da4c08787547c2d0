//! Exact, certificate-producing algorithms for sumset structure on finite
//! abelian groups of bounded exponent.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: finite abelian groups as products of cyclic groups, elements
//!   and characters.
//! * [`set`]: subsets with sumset algebra, subgroup closure and instance
//!   generators.
//! * [`func`]: exact-rational functions on a group: indicators, translation,
//!   convolution and the tuple measures `mu_a`.
//! * [`fourier`]: the Fourier transform, large spectra and annihilators.
//! * [`covering`]: the statistical and Ruzsa covering algorithms and their
//!   verifiers.
//! * [`subproduct`]: generalized sub-product chains and the energy bound.
//! * [`chang`]: the energy-decrement iteration.
//! * [`pipeline`]: Petridis subsets, almost-invariant functions and the
//!   end-to-end structure driver.

pub mod chang;
pub mod covering;
mod error;
pub mod fourier;
pub mod func;
pub mod group;
pub mod pipeline;
pub mod set;
pub mod subproduct;

pub use error::{Error, Result};
pub use group::{Character, GroupElement, GroupSpec};
pub use set::GroupSet;
pub use func::RationalFunc;

/// Exact rational scalar used throughout.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
