//! Fifth-order, Hamiltonian, unidirectional KdV–BBM water-wave model.
//!
//! - [`coeffs`]: modelling parameters to PDE coefficients, admissibility.
//! - [`dispersion`]: model phase speed against `sqrt(tanh k / k)`.
//! - [`spectral`]: periodic grids, Fourier multipliers, `S(t)`, `H^s` norms.
//! - [`solver`]: integrating-factor RK4 solver, invariants, splitting,
//!   velocity reconstruction.

pub mod coeffs;
pub mod dispersion;
pub mod error;
pub mod solver;
pub mod spectral;

pub use coeffs::{EquationCoefficients, ModelParameters};
pub use error::{CoeffError, DispersionError, SolverError, SpectralError};
pub use spectral::{PeriodicGrid, SpectralField, WaveField};
