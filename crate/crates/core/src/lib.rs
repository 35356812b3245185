//! Elementary information mechanics for small convolution kernels.
//!
//! * [`kernelspace`] splits kernels into dihedrally even and odd parts and
//!   mixes them back at a chosen odd-energy ratio `beta_sq`.
//! * [`dct`] builds the orthonormal DCT basis, classifies each item as
//!   even, odd or mixed, and projects / truncates kernels.
//! * [`propagate`] runs repeated convolution + activation and tracks the
//!   centre of mass and spread of the activation.
//! * [`relativity`] measures propagation speed against `beta` and compares
//!   it with the Lorentz relation.
//! * [`spectra`] reads and writes 4D weight tensors and reports their DCT
//!   energy distribution.

pub mod dct;
pub mod error;
pub mod export;
pub mod kernel;
pub mod kernelspace;
pub mod propagate;
pub mod relativity;
pub mod spectra;

pub use error::{EimError, Result};
pub use kernel::{Kernel1D, Kernel2D};
