//! Clustering: harmonic discrepancy clustering plus the K-means and DBSCAN
//! baselines.

mod dbscan;
mod hdc;
mod kmeans;
mod labels;

pub use dbscan::{dbscan_fit, DbscanConfig};
pub use hdc::{
    assign_labels, compute_centroids, detect_peripherals, harmonic_discrepancy, hdc_fit, init_clusters,
    max_link_discrepancy, sim_to_centroids, HdcConfig, HdcFit, HdcState,
};
pub use kmeans::{kmeans_fit, kmeans_pp_seeds, KMeans, KMeansFit};
pub use labels::{dissolve_small, relabel_compact, ClusterAssignment, OUTLIER};

/// Minimum cluster size kept after any clustering.
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 4;
