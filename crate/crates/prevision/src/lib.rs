//! Coherent prevision bounds over finite event partitions.

pub mod asbestos;
pub mod assertions;
pub mod events;
pub mod hull;
pub mod numeric;
pub mod scenario;
pub mod solver;
