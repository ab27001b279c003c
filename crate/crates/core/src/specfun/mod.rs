//! Special functions and small numerical kernels used across the pipeline.

pub mod airy;
pub mod fourier;
pub mod quadrature;
pub mod roots;

pub use airy::{airy, airy_ai, airy_ai_prime, AiryValue};
pub use fourier::{dft, idft, FourierSeries};
pub use quadrature::{gauss_legendre, QuadratureRule};
