pub mod diagnostics;
pub mod error;
pub mod field;
pub mod forcing;
pub mod helmholtz;
pub mod inverse_div;
pub mod iteration;
pub mod linsolve;
pub mod model;
pub mod parallel;

pub use error::{Error, Result};
