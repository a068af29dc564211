//! Reconstruction of a 3D facial landmark set and a deformed generic head
//! mesh from one frontal and one profile photograph.
//!
//! The crate is organised as a stage pipeline:
//!
//! 1. [`imgproc`]: colour conversion, histogram equalization, scale
//!    normalization, thresholding, morphology and Canny edge detection.
//! 2. [`scda`]: sequential density clustering of foreground micro features
//!    and knowledge-based placement of the eye, nose and mouth windows.
//! 3. [`features`]: per-window landmark extraction by average-linkage
//!    agglomerative clustering of edge pixels, plus convex hulls.
//! 4. [`depth`]: depth of visible landmarks by patch matching in the profile
//!    view, and depth of hidden landmarks from facial symmetry.
//! 5. [`mesh`]: the 140-vertex generic model, Delaunay triangulation,
//!    similarity alignment, radial-kernel deformation and OBJ export.
//! 6. [`pipeline`]: configuration, synthetic fixtures, end-to-end runs and
//!    the benchmark harness.

pub mod depth;
pub mod error;
pub mod features;
pub mod imgproc;
pub mod mesh;
pub mod pipeline;
pub mod scda;

pub use error::{Error, Result};
