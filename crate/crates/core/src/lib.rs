//! Generalized pinwheel substitution tilings built from an arbitrary right
//! triangle: construction, size and orientation classification, population
//! spectra, boundary substitution dynamics, statistics and SVG output.

pub mod boundary;
pub mod classify;
mod dd;
pub mod error;
pub mod geometry;
pub mod render;
pub mod report;
pub mod spectral;
pub mod stats;
pub mod substitution;

pub use error::{Error, Result};
pub use geometry::{
    compose, vertices, Handedness, Motion, Orientation, Placement, Point, Rationality, SizeExp,
    Tile, TileId, TriangleShape,
};
pub use substitution::{build_tn, Tiling};
