//! Mechanics on general algebroids and special affgebroids.
//!
//! Structures are given by local structure functions written as
//! [`expr::Expression`]s. The crate evaluates the structure maps and
//! tensors, classifies structures as Lie by sampling the Jacobi identity,
//! integrates the Euler-Lagrange and Hamilton equations, and drives all of
//! it from a JSON-configured command line tool.

pub mod affgebroid;
pub mod algebroid;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod hamiltonian;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod sampling;
pub mod structure;
mod tensor;
pub mod vars;

pub use error::{Error, Result};
pub use structure::{PointStructure, Structure};
