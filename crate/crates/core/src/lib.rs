//! Simulation of quantum-non-demolition coupling between a signal and a
//! meter mode, and of indirect homodyne tomography of the signal.

pub mod audit;
pub mod checks;
pub mod error;
pub mod fock;
pub mod frft;
pub mod grid;
pub mod hermite;
pub mod io;
pub mod linalg;
pub mod qnd;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod spectral;
pub mod tomography;
pub mod wigner;

pub use error::{Error, Result};
pub use frft::rotate_representation;
pub use grid::QuadratureGrid;
pub use quadrature::{make_fock, make_squeezed_vacuum, make_state, make_vacuum, SqueezedVacuumSpec, StateSpec, Wavefunction};
pub use scalar::Real;

pub type Grid = QuadratureGrid<f64>;
pub type Wave = Wavefunction<f64>;
pub type Grid32 = QuadratureGrid<f32>;
pub type Wave32 = Wavefunction<f32>;
