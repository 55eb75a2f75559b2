use std::path::PathBuf;

use crate::bundle::BundleError;
use crate::corpus::CorpusError;
use crate::probe::ProbeError;
use crate::report::ReportError;
use crate::stats::StatsError;
use crate::treebank::TreebankError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Analysis(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by invalid content.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Bundle(BundleError::MissingFile { .. } | BundleError::Io { .. })
                | Error::Report(ReportError::Io { .. })
        )
    }
}
