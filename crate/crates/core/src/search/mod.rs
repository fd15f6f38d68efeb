//! Near-optimal inspection search over path pairs.
//!
//! The [`Search`] engine owns the OPEN and CLOSED lists and can be kept alive
//! between episodes, in which case the next episode starts from the previous
//! lists after reclassifying them under the tightened bounds.

mod audit;
mod engine;
mod path_pair;

pub use audit::AuditReport;
pub use engine::{AddOutcome, NodeClass, Place, Plan, Search, SearchConfig, SearchStats, Step};
pub use path_pair::{
    extend, is_bounded, subsume, subsume_is_bounded, Hidden, Kind, NodeId, PathPair, PathPairError,
    BOUND_SLACK,
};

/// Ordering of the OPEN list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyOrder {
    /// PAP length ascending, then PAP coverage descending.
    #[default]
    LengthFirst,
    /// PAP coverage descending, then PAP length ascending.
    CoverageFirst,
}
