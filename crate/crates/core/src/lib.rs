pub mod cli;
pub mod config;
pub mod error;
pub mod flows;
pub mod io;
pub mod mesh;
pub mod metric;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod sparse;
pub mod spectral;
pub mod stencil;
pub mod thermo;

pub use error::{Error, Result};
