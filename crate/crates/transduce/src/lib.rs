//! Model files and the command-line driver for `transduce-core`.

pub mod cli;
pub mod model_io;

pub use model_io::{load_model, parse_model, serialize_model, IoError};
