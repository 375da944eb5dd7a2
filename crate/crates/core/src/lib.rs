pub mod error;
pub mod eval;
pub mod hybrid;
pub mod io;
pub mod nn;
pub mod pic;
pub mod qsim;
pub mod training;

pub use error::{Error, Result};
