//! Coarse cactus geometry on finite weighted graphs: separation checks,
//! cycle fillings, fat theta curves, and cactus approximation.

pub mod builder;
pub mod cycles;
pub mod dijkstra;
pub mod error;
pub mod gen;
pub mod graph;
pub mod num;
pub mod separation;
pub mod theta;

pub use error::Error;
