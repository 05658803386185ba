pub mod config;
pub mod dynamics;
pub mod error;
pub mod inversion;
pub mod lattice;
pub mod modes;
pub mod run;
pub mod scattering;
pub mod verify;
mod xfloat;

pub use error::{Error, Result};
