pub mod analysis;
pub mod cli;
pub mod domains;
pub mod error;
pub mod hilbert;
pub mod ideals;
pub mod minimizer;
pub mod odes;
pub mod quadrature;
pub mod weights;
