//! Deterministic work accounting.
//!
//! Every primitive the planner performs (a collision-checked sample, a POI
//! visibility test, a metric evaluation, a search-node operation) is charged a
//! fixed cost in nanoseconds. Summing those charges gives a clock that is
//! identical across runs and machines; it is used when a trace must be
//! reproducible byte for byte.

use std::time::Duration;

/// Cost table, in nanoseconds per primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkCosts {
    /// One robot-ball test against one obstacle (also charged once for the bounds test).
    pub collision_per_obstacle: u64,
    /// One sensor test of one POI, before occlusion.
    pub visibility_per_poi: u64,
    /// One occlusion test of one segment against one obstacle.
    pub occlusion_per_obstacle: u64,
    /// One configuration-space metric evaluation.
    pub metric: u64,
    /// Registering one roadmap edge.
    pub edge_insert: u64,
    /// One search-node operation (creation, pop, dominance comparison).
    pub search_op: u64,
}

impl Default for WorkCosts {
    fn default() -> Self {
        WorkCosts {
            collision_per_obstacle: 6,
            visibility_per_poi: 3,
            occlusion_per_obstacle: 5,
            metric: 4,
            edge_insert: 250,
            search_op: 100,
        }
    }
}

/// Accumulated work, in estimated nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Work(pub u64);

impl Work {
    pub fn add(&mut self, ns: u64) {
        self.0 += ns;
    }

    pub fn as_duration(self) -> Duration {
        Duration::from_nanos(self.0)
    }

    pub fn since(self, earlier: Work) -> Work {
        Work(self.0 - earlier.0)
    }
}

/// Which clock drives budgets and trace timings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Monotonic wall-clock time.
    #[default]
    Wall,
    /// Deterministic work-based time from [`WorkCosts`].
    Work,
}

impl ClockMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ClockMode::Wall => "wall",
            ClockMode::Work => "work",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wall" => Some(ClockMode::Wall),
            "work" => Some(ClockMode::Work),
            _ => None,
        }
    }
}

/// Formats a duration as seconds with nanosecond digits, without going
/// through floating point.
pub fn format_seconds(d: Duration) -> String {
    format!("{}.{:09}", d.as_secs(), d.subsec_nanos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_format_is_exact() {
        assert_eq!(
            format_seconds(Duration::from_nanos(1_500_000_001)),
            "1.500000001"
        );
        assert_eq!(format_seconds(Duration::ZERO), "0.000000000");
    }
}
