pub mod geometry;
pub mod pathfind;
pub mod service;
pub mod tiling;
pub mod walker;
pub mod worldgen;
