//! Discrete Riesz potential theory: kernel energies, balayage as cone
//! projection, equilibrium measures and capacity, and weighted
//! minimum-energy (Gauss) problems on finite point clouds.

pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod measure;
pub mod potential;
pub mod qp;
pub mod scenario;
