pub mod acquisition;
pub mod design;
pub mod error;
pub mod game;
pub mod gp;
pub mod mvn;
pub mod problems;
pub mod sequential;
pub mod util;

pub use error::{Error, Result};
