//! Hyperbolic fillings of finite metric measure spaces.
//!
//! Builds the multiscale filling graph of a point cloud, uniformizes it so the
//! cloud sits on its metric boundary, lifts the point masses to weighted edge
//! measures, and implements the trace and Poisson-extension operators between
//! boundary Besov functions and graph Dirichlet functions, together with a
//! harness that checks the comparability estimates numerically.

pub mod error;
pub mod filling;
pub mod fit;
pub mod funcspace;
pub mod measure;
pub mod quad;
pub mod report;
pub mod space;
pub mod traceext;
pub mod uniformize;
pub mod verify;

pub use error::{Error, Result};
