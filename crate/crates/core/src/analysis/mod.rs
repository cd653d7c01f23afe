//! Scaffold extraction and matching, fingerprint similarity, and the
//! property-descriptor registry used for predictor targets and evaluation.

mod descriptors;
mod fingerprint;
mod scaffold;
mod stats;
mod substructure;

pub use descriptors::{descriptor, descriptor_with_stats, plogp, DescriptorId};
pub use fingerprint::{cosine_similarity, fingerprint, scaffold_similarity, Fingerprint};
pub use scaffold::{extract_scaffold, Scaffold};
pub use stats::{CorpusStats, StatEntry};
pub use substructure::{has_substructure, is_isomorphic};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("molecule has no ring; no scaffold exists")]
    AcyclicMolecule,
    #[error("scaffold is not a valid molecule: {0}")]
    InvalidScaffold(String),
    #[error("unknown descriptor '{0}'")]
    UnknownDescriptor(String),
    #[error("descriptor {0} requires corpus statistics")]
    NeedsStats(&'static str),
    #[error("degenerate statistics: {0}")]
    DegenerateStats(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Optimization sense attached to a property target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Goal {
    Maximize,
    Minimize,
    /// Steer toward a fixed value.
    Approach(f64),
}

/// One requested property constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyTarget {
    pub descriptor: DescriptorId,
    pub goal: Goal,
    /// Per-predictor weight in the guidance sum.
    pub weight: f64,
}

impl PropertyTarget {
    pub fn maximize(descriptor: DescriptorId) -> Self {
        Self {
            descriptor,
            goal: Goal::Maximize,
            weight: 1.0,
        }
    }

    pub fn minimize(descriptor: DescriptorId) -> Self {
        Self {
            descriptor,
            goal: Goal::Minimize,
            weight: 1.0,
        }
    }
}

/// Named property targets, in declaration order.
pub type PropertyVector = Vec<PropertyTarget>;
