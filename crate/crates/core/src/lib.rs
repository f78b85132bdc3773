//! Silhouette topology toolkit.
//!
//! Binary silhouettes are turned into L∞ distance maps by recursive 3x3
//! erosion ([`distance`]), ridge skeletons are read off those maps
//! ([`topology`]), and the two are compared with a spatial Chamfer loss that
//! never leaves the image grid ([`losses`]). On top of that sits a 2D capsule
//! body model ([`body`]), silhouette fitting ([`fitting`]), a small image
//! regressor with silhouette-only adaptation ([`regressor`], [`adaptation`])
//! and a synthetic benchmark harness ([`bench`]).

pub mod adaptation;
pub mod bench;
pub mod body;
pub mod distance;
pub mod error;
pub mod fitting;
pub mod losses;
pub mod mask;
pub mod regressor;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
