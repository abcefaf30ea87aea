pub mod error;
pub mod cli;
pub mod collapse;
pub mod hybrid;
pub mod phase_space;
pub mod quantum;

pub use error::{Error, Result};
