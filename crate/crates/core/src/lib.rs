//! Numerical toolbox for the nonlinear Schrödinger equation on truncated
//! periodic lattices `h Z^d` (d = 1, 2): discrete Fourier and Sobolev
//! calculus, Shannon interpolation between the lattice and a fine continuum
//! surrogate, split-step time integration with conservation diagnostics,
//! and the modified energies controlling Sobolev norm growth.

pub mod dynamics;
pub mod energies;
pub mod error;
pub mod grid;
pub mod interp;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{inner_product, GridFunction, LatticeGrid};
pub use spectral::{SobolevIndex, SpectrumFunction};
