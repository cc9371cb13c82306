//! Geometrically nonlinear isogeometric Kirchhoff-Love shell analysis.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod constitutive;
pub mod continuation;
pub mod error;
pub mod kinematics;
pub mod mesh;
pub mod metric;
pub mod model;
pub mod model_file;
pub mod nurbs;
pub mod postprocess;
pub mod presets;
pub mod quadrature;
pub mod registry;
pub mod runner;
pub mod skyline;
pub mod thickness;

pub use error::{Result, ShellError};
