pub mod coeff;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod mlq;
pub mod quad;
pub mod study;
pub mod sum;

pub use error::{Error, Result};
