//! Instance generators: built-in examples, hardness reductions and random
//! games.

pub mod examples;
pub mod g5;
pub mod random;
pub mod threesat;
