use thiserror::Error;

use crate::biplot::BiplotError;
use crate::cluster::ClusterError;
use crate::composition::CompositionError;
use crate::ingest::IngestError;
use crate::render::RenderError;
use crate::report::ReportError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Biplot(#[from] BiplotError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    UnknownRatio(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Composition(e) => e.kind(),
            Self::Stats(e) => e.kind(),
            Self::Biplot(e) => e.kind(),
            Self::Cluster(e) => e.kind(),
            Self::Ingest(e) => e.kind(),
            Self::Render(e) => e.kind(),
            Self::Report(e) => e.kind(),
            Self::UnknownRatio(_) => "UnknownRatio",
            Self::Io { .. } => "IoFailure",
        }
    }

    /// Single-line `Kind:detail` record for machine consumption.
    pub fn record(&self) -> String {
        let detail = self.to_string().replace(['\n', '\r'], " ");
        format!("{}:{}", self.kind(), detail)
    }
}
