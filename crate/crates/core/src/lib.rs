//! Semiclassical spectrum and explicit asymptotic eigenfunctions of the 2-D
//! Dirac operator for graphene in a magnetic field, with a trigonal-warping
//! perturbation.
//!
//! The pipeline is:
//!
//! 1. [`profiles`]: radial potential/mass profiles and dimensionless inputs.
//! 2. [`classical`]: the radial orbit on the zero set of the principal symbol,
//!    action-angle tables and Bohr–Sommerfeld quantization.
//! 3. [`correction`]: the subprincipal symbol on the torus, the spectral
//!    correction `lambda` and the Fourier harmonics of the correction.
//! 4. [`amplitude`]: the truncated exponential-of-Fourier-series amplitude.
//! 5. [`field`]: Airy-uniform canonical-operator representation and spinor
//!    density grids.
//!
//! [`cli_io`] wires these into the `warpspec` command-line tool.

pub mod amplitude;
pub mod classical;
pub mod cli_io;
pub mod correction;
pub mod error;
pub mod field;
pub mod profiles;
pub mod specfun;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Library version echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
