pub mod circulant;
pub mod emit;
pub mod error;
pub mod field;
pub mod folding;
pub mod geometry;
pub mod pipeline;
pub mod report;
pub mod schedule;
pub mod sim;

pub use error::{Error, Result};
