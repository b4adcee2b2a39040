//! Planar collaborative-cell simulator: conveyor, two-link arm, operator,
//! camera with occlusion, surrogate perception and a safety controller.

mod engine;
pub mod geometry;
pub mod perception;
pub mod scenario;
pub mod ssm;
pub mod trace;
pub mod verdict;

pub use engine::{simulate, simulate_metrics};
pub use scenario::{bind_assignment, FeatureAssignment, FeatureValue, Scenario, ScenarioError};
pub use trace::{Metric, Trace, TraceMetrics, TraceStep};
pub use verdict::{evaluate_events, EventOutcome, Label, Verdict, VerdictError};
