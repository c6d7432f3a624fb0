pub mod analysis;
pub mod cli;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod lp;
pub mod operator;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
