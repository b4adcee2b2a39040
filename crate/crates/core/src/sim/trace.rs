use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Point, Real};

/// Trace-level quantities event conditions may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MinMargin,
    MinDistance,
    ObjectsFallen,
    DetectionMissRatio,
    Collision,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::MinMargin,
        Metric::MinDistance,
        Metric::ObjectsFallen,
        Metric::DetectionMissRatio,
        Metric::Collision,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MinMargin => "min_margin",
            Metric::MinDistance => "min_distance",
            Metric::ObjectsFallen => "objects_fallen",
            Metric::DetectionMissRatio => "detection_miss_ratio",
            Metric::Collision => "collision",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric `{0}`")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

/// Distance below which the hand counts as touching the arm, m.
pub const CONTACT_EPSILON: Real = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: Real,
    /// Ground-truth human-robot distance.
    pub d: Real,
    /// Protective separation distance at the current robot speed.
    pub s_p: Real,
    pub v_r: Real,
    pub detected: bool,
    /// Controller executed a protective stop during this step.
    pub protective_stop: bool,
    /// Separation margin: `d - s_p` while the robot runs its task, `d` during a
    /// protective stop.
    pub margin: Real,
    pub ee: Point,
    pub elbow: Point,
    pub hand: Point,
    pub torso: Point,
    pub objects: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMetrics {
    pub min_margin: Real,
    pub min_distance: Real,
    pub objects_fallen: u32,
    pub detection_miss_ratio: Real,
    pub collision: u8,
}

impl TraceMetrics {
    pub fn value(&self, m: Metric) -> Real {
        match m {
            Metric::MinMargin => self.min_margin,
            Metric::MinDistance => self.min_distance,
            Metric::ObjectsFallen => Real::from(self.objects_fallen),
            Metric::DetectionMissRatio => self.detection_miss_ratio,
            Metric::Collision => Real::from(self.collision),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub summary: TraceMetrics,
}

impl Trace {
    /// One row per step: `t,d,S_p,v_r,detected,ee_x,ee_y,hand_x,hand_y`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "d", "S_p", "v_r", "detected", "ee_x", "ee_y", "hand_x", "hand_y"])?;
        for s in &self.steps {
            out.write_record([
                s.t.to_string(),
                s.d.to_string(),
                s.s_p.to_string(),
                s.v_r.to_string(),
                u8::from(s.detected).to_string(),
                s.ee.x.to_string(),
                s.ee.y.to_string(),
                s.hand.x.to_string(),
                s.hand.y.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
