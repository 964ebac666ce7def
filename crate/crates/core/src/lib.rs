pub mod blowup;
pub mod fourier;
pub mod error;
pub mod expr;
pub mod io;
pub mod lift;
pub mod poisson;
pub mod poly;
pub mod trig;
pub mod verify;

pub use error::{Error, Result};
