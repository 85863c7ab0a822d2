//! Self-supervised grasp-by-demonstration on a simulated RGB-D tabletop.
pub mod contrastive;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod grasp;
pub mod pipeline;
pub mod plan;
pub mod protocol;
pub mod scene;

pub use error::{Error, Result};
