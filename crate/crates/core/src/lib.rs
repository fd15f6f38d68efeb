//! Inspection planning over incrementally densified, lazily evaluated roadmaps.

pub mod bench;
pub mod coverage;
pub mod cspace;
pub mod graph;
pub mod oracle;
pub mod planner;
pub mod roadmap;
pub mod scene;
pub mod search;
pub mod work;
