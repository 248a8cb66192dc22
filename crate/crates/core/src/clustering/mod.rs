//! Elastic k-means with non-empty clusters, and Euclidean k-means baselines.

mod assign;
mod elastic;
mod euclidean;

pub use assign::assign_non_empty;
pub use elastic::{elastic_kmeans, ClusteringResult, KmeansConfig, MONOTONE_RTOL};
pub use euclidean::kmeans_euclidean;
