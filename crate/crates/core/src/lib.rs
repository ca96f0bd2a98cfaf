pub mod ar;
pub mod diagnostics;
pub mod error;
pub mod io;
mod ols;
pub mod regime;
pub mod series;

pub use error::{Error, Result};
