//! 2D plane-strain FEM substrate: meshes, fields, assembly, sparse solves,
//! and file formats.

pub mod assembly;
pub mod generator;
pub mod mesh;
pub mod meshio;
pub mod sparse;
pub mod vtk;

pub use generator::{generate_sen_plate, SenPlateParams};
pub use mesh::{Field, Mesh, SimState, Slit};
pub use sparse::CsrMatrix;
