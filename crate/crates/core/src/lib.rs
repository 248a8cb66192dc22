//! Elastic k-means clustering of scalar- and vector-valued functional data.
//!
//! Functions are represented by their square-root velocity functions (SRVFs),
//! under which elastic alignment reduces to L² alignment over warpings of the
//! domain. On top of pairwise dynamic-programming alignment the crate builds
//! Karcher-mean templates, k-means over amplitude orbits with non-empty
//! clusters, and BIC-based selection of the number of clusters from
//! cluster-wise functional PCA.

pub mod alignment;
pub mod clustering;
pub mod error;
pub mod metrics;
pub mod model_selection;
pub mod simulation;
pub mod srvf;
pub mod warping;

pub use error::{Error, Result};
pub use srvf::{from_srvf, l2_distance, to_srvf, warp_func, warp_srvf, Func, FunctionSample, Grid, Srvf};
pub use warping::Warping;
