pub mod cli;
pub mod coarsegrain;
pub mod contours;
pub mod disorder;
pub mod error;
pub mod lattice;
pub mod models;
pub mod par;
pub mod polymer;
pub mod sampler;
pub mod seeds;
pub mod stability;
pub mod symmetry;

pub use error::{LabError, Result};
