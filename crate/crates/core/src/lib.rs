pub mod bct;
pub mod classical;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod lct;
pub mod linalg;
pub mod ontic;
pub mod random;
pub mod scalar;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Backend, Rational, Scalar, DEFAULT_TOLERANCE};
