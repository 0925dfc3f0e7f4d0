//! File formats, the tour pipeline and the command-line front end for
//! [`panotour_core`].

pub mod cachefile;
pub mod cli;
mod error;
pub mod pipeline;
pub mod raster;
pub mod scene;
pub mod text;

pub use error::{Error, Result};
pub use panotour_core as core;
pub use pipeline::{run_tour, run_tour_with_scene, TourConfig, TourReport};
