//! Phase-field brittle fracture for anisotropic linear elasticity.
//!
//! The library decomposes an arbitrary anisotropic constitutive model into a
//! crack-driving and a persistent part through the energy-preserving map
//! `e ↦ C^{1/2} e`, where the decomposition becomes a Euclidean cone
//! projection and the orthogonality condition `C e_t · e_c = 0` holds by
//! construction. On top of that sit a 2D plane-strain phase-field solver
//! (staggered AT1/AT2) for single-edge-notched plates and a `G_theta`
//! domain-integral post-processor with a tensile-only variant.
//!
//! Modules follow the pipeline:
//! - [`kelvin`]: tensor algebra in Kelvin (normalized Voigt) notation,
//!   spectral decompositions and operator square roots,
//! - [`elasticity`]: validated stiffness tensors with cached roots,
//! - [`split`]: the tension-compression decompositions themselves,
//! - [`phasefield`]: AT1/AT2 energies and the staggered evolution,
//! - [`fem`]: meshes, assembly, sparse solves, file formats,
//! - [`gtheta`]: energy-release-rate fans around the crack tip,
//! - [`config`] / [`runner`]: TOML-driven benchmark execution,
//! - [`verify`]: seeded property suites exposed to the CLI.

pub mod config;
pub mod elasticity;
pub mod error;
pub mod fem;
pub mod gtheta;
pub mod kelvin;
pub mod phasefield;
pub mod runner;
pub mod split;
pub mod verify;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
