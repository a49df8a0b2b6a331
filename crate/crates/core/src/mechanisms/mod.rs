//! Built-in game generators.

pub mod hawk_dove;
pub mod matching;
