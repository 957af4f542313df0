//! Special functions behind the model's kernel: Γ, the Mittag-Leffler
//! function, the fractional kernel and the Mittag-Leffler density.
//!
//! All routines are pure and may be called concurrently.

pub mod gamma;
mod kernel;
mod mittag_leffler;
pub mod quad;

pub use gamma::{gamma, ln_gamma, rgamma};
pub use kernel::{
    fractional_kernel, ml_cdf, ml_density, ml_density_large_t, ml_density_small_t,
    resolvent_residual, KernelSpec,
};
pub use mittag_leffler::{mittag_leffler, MAX_SERIES_ARG};
