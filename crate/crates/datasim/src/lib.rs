//! Synthetic hyperspectral scene generation, Wald-protocol degradation
//! (Gaussian blur + downsampling + spectral response projection), and the
//! HSC cube file format.

mod cube;
mod degrade;
mod error;
mod hsc;
mod synth;

pub use cube::HyperCube;
pub use degrade::{apply_srf, default_srf, min_kernel_size, wald_degrade, DegradationSpec, Srf};
pub use error::{DataError, Result};
pub use hsc::{read_hsc, write_hsc};
pub use synth::{synth_cube, voronoi_label, voronoi_seeds, SynthKind};
