pub mod analysis;
pub mod decider;
pub mod engine;
pub mod fib;
pub mod geometry;
pub mod grid;
pub mod harness;
