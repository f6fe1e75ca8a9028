//! Top-down table structure recovery from table images.
//!
//! The pipeline renders synthetic tables from a latent genotype, derives a
//! skeleton image showing only row and column separators, estimates the
//! genotype back from the skeleton by projection, and optionally refines it
//! with a genetic algorithm. A Hough-based deskew stage and an evaluation
//! harness complete the toolkit.

pub mod cli;
pub mod deskew;
pub mod error;
pub mod eval;
pub mod ga;
pub mod io;
pub mod model;
pub mod render;
pub mod rng;
pub mod skeleton;
pub mod xycut;

pub use error::{Error, GenotypeError, Result};
pub use model::{bounding_box, validate_genotype, Axis, BinaryImage, Canvas, RasterImage, Rect, TableGenotype};
