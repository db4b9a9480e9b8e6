//! Estimation and cross-validation of the reach of sampled closed sets.
//!
//! The reach of a closed set `S` is computed here through several routes that
//! agree in the continuum and carry different discrete biases:
//!
//! * the tangent-distance formula `inf |p-q|^2 / (2 d(q, p + Tan(p)))`
//!   ([`reach::federer_reach`]),
//! * the metric-distortion characterization comparing intrinsic and chordal
//!   distances ([`reach::distortion_reach`]),
//! * the split into a global part given by bottlenecks
//!   ([`reach::global_reach`]) and a local part given by shrinking balls
//!   ([`reach::local_reach`]).
//!
//! Alongside sit the supporting pieces: subspace geometry ([`linalg`]),
//! polyhedral cones ([`cones`]), neighbourhood graphs and discrete geodesics
//! ([`geodesics`]), local graph patches over tangent spaces ([`patch`]),
//! synthetic shapes with analytic ground truth ([`shapes`]) and the file
//! formats used by the command-line tool ([`io`], [`report`]).

pub mod cloud;
pub mod cones;
pub mod error;
pub mod geodesics;
pub mod io;
pub mod linalg;
pub mod patch;
pub mod reach;
pub mod report;
pub mod shapes;
pub mod spatial;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use linalg::{LinearMap, Subspace};
