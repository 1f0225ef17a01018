//! Linear optimal transport (LOT) embeddings of point sets and a
//! nearest-subspace classifier that absorbs affine deformations.

pub mod baselines;
pub mod deform;
pub mod error;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod ot;
pub mod pointset;
pub mod seed;
pub mod subspace;
pub mod svg;
pub mod templates;

pub use error::{Error, ErrorKind, Result};
pub use pointset::{FlatVector, LabeledDataset, PointSet};
