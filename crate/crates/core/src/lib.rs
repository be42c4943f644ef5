//! Discrete exterior calculus for abelian Yang-Mills fields on simplicial
//! regions with boundary.
//!
//! The pipeline is layered: [`mesh`] builds oriented complexes, [`dec`] the
//! operators on them, [`hodge`] the harmonic spaces and splittings, [`dn`] the
//! Dirichlet-to-Neumann operator, and [`reduction`] the gauge-reduced
//! symplectic spaces of boundary data. [`verify`] runs the numerical checks.

pub mod config;
pub mod dec;
pub mod dn;
pub mod error;
pub mod hodge;
pub mod linalg;
pub mod mesh;
pub mod reduction;
pub mod topology;
pub mod verify;

pub use config::Tolerances;
pub use dec::{bracket, extend_collar, BoundaryDatum, Cochain, DecOperators};
pub use error::{Error, Result};
pub use mesh::{
    boundary_complex, collar, gen_annulus, gen_circle, gen_disk, glue, load_mesh, GluingMap, SimplicialComplex,
};
