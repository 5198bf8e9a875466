pub mod cli;
pub mod domain;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod posterior;
pub mod seeds;
pub mod simgen;
pub mod survival;

pub use error::{Error, Result};
