pub mod dirac;
pub mod eigen;
pub mod error;
pub mod integrals;
pub mod breit_pauli;
pub mod cli;
pub mod nonrel;
pub mod projector;
pub mod system;
