//! Spacetime grids, the discretised operator, grid Weyl quantization,
//! weighted norms, spectral windows and a Gabor phase-space probe.

pub mod assemble;
pub mod fourier;
pub mod gabor;
pub mod grid;
pub mod norms;
pub mod operator;
pub mod weyl;
pub mod window;

pub use assemble::{assemble_p, quarter_density};
pub use fourier::{band_limit, fourier_multiplier, Fft2};
pub use gabor::{gabor_mass, gabor_mass_where, gabor_masses};
pub use grid::{GridError, GridFunction, SpacetimeGrid};
pub use norms::{random_band_limited, weighted_apply, weighted_norm, weighted_norm_with, Taper};
pub use operator::{Csr, GridOperator, OperatorData, OperatorKind};
pub use weyl::quantize_weyl;
pub use window::{chebyshev_window, hermitian_eigen, spectral_window, WindowMethod, WindowSpec, DENSE_LIMIT};
