//! Compositional (log-ratio) analysis of financial and sustainability
//! indicator tables.
//!
//! The workflow maps each entity's strictly positive indicators to centred
//! log-ratio (CLR) coordinates, fits a principal-component biplot, ranks
//! entities along links between ray tips (one link per pairwise ratio such as
//! solvency = assets / liabilities) and groups entities by Aitchison distance.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what ingestion, reports
//! and the command-line tool use.
//!
//! ```
//! use coda_atlas::{clr, pairwise_log_ratio};
//!
//! let row = [1.0f64, 2.0, 4.0];
//! let coords = clr(&row);
//! assert!(coords.sum().abs() < 1e-12);
//! let ln2 = pairwise_log_ratio(&row, 1, 0).unwrap();
//! assert!((coords.coords()[1] - coords.coords()[0] - ln2).abs() < 1e-12);
//! ```

pub mod biplot;
pub mod cluster;
pub mod composition;
pub mod error;
pub mod fixture;
pub mod ingest;
pub mod pipeline;
pub mod render;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod svd;

pub use biplot::{center_columns, fit_biplot, link_for_ratio, make_link, rank_along_link, reconstruct};
pub use cluster::{cluster_profile, distance_matrix, hierarchical_cluster, Cut, Linkage};
pub use composition::{
    aitchison_distance, clr, clr_matrix, geometric_mean, log_ratio_series, named_ratio, pairwise_log_ratio,
    replace_zeros, validate_table, Entity, Part, RatioDefinition, Role, ZeroStrategy,
};
pub use error::Error;
pub use ingest::{default_ratio_catalog, parse_table, write_table, IngestConfig, Locale, UnitRegistry};
pub use pipeline::Analysis;
pub use render::{render_biplot, scale_to_viewport, RenderOptions};
pub use report::{write_reports, Manifest, ReportSet};
pub use scalar::Scalar;
pub use stats::{describe, outlier_count, pathology_report, skewness, PathologyReport};

pub type IndicatorTable = composition::IndicatorTable<f64>;
pub type ClrMatrix = composition::ClrMatrix<f64>;
pub type ClrVector = composition::ClrVector<f64>;
pub type BiplotModel = biplot::BiplotModel<f64>;
pub type Link = biplot::Link<f64>;
pub type RankingResult = biplot::RankingResult<f64>;
pub type DistanceMatrix = cluster::DistanceMatrix<f64>;
pub type ClusterProfile = cluster::ClusterProfile<f64>;
pub type DescriptiveSummary = stats::DescriptiveSummary<f64>;

pub type IndicatorTable32 = composition::IndicatorTable<f32>;
pub type ClrMatrix32 = composition::ClrMatrix<f32>;
pub type BiplotModel32 = biplot::BiplotModel<f32>;
pub type RankingResult32 = biplot::RankingResult<f32>;
