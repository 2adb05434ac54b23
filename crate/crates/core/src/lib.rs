//! Spectral dynamics of the two-projection liberation process.
//!
//! The distribution of `X_t = Q U_t P U_t^* Q` is carried as a symmetric
//! measure on the circle through the Szegő substitution `x = cos²(θ/2)`.
//! Its Herglotz transform evolves by a radial Loewner flow, which in turn
//! gives the liberation Fisher information along the flow, the free mutual
//! information `i*`, and the orbital free entropy `χ_orb`.
//!
//! Modules:
//! - [`measures`]: interval/circle measures and the conversions between them.
//! - [`transforms`]: Szegő map, Herglotz/Cauchy transforms, Hilbert transform,
//!   boundary recovery, the Cauchy-transform PDE residual check.
//! - [`loewner`]: subordination and characteristic propagation of the flow.
//! - [`fubm`]: moment recursion of the free unitary Brownian motion.
//! - [`entropy`]: Fisher information, `i*`, `χ_orb` and the identity check.

pub mod entropy;
mod error;
pub mod fourier;
pub mod fubm;
pub mod loewner;
pub mod measures;
pub mod quad;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default number of nodes on the circle grid.
pub const DEFAULT_GRID: usize = 4096;
