//! Learned generation of dense fluid-mesh node distributions around a 2D
//! airfoil from a sparse closed boundary loop.
//!
//! Pipeline: [`ingest`] reads contour/mesh pairs, [`net`] maps a loop to
//! `N` points, [`loss`] scores predictions, [`train`] fits the network and
//! [`eval`] compares node densities by KDE + KL divergence.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod loss;
pub mod net;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{AirfoilLoop, Frame, Interval, Point2, PointSet, StandardizeTransform};
