//! Cell description loaded from `.scenario` files (TOML tables mirroring the
//! structs below) and the feature-binding machinery that writes an assignment
//! into it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::risk_model::{Domain, FeatureKind, RiskModel};
use crate::{Point, Real};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {field} {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("binding path `{path}` does not name a scenario field")]
    UnknownPath { path: String },
    #[error("feature `{feature}`: value {value} is outside its domain")]
    OutOfDomain { feature: String, value: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{feature}`: value {value} cannot be written to `{path}`")]
    TypeMismatch {
        feature: String,
        path: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Simulated time span, s.
    pub duration: Real,
    /// Fixed time step, s.
    pub dt: Real,
    pub belt: Belt,
    pub arm: Arm,
    pub operator: Operator,
    pub camera: Camera,
    pub environment: Environment,
    pub controller: Controller,
    pub perception: Perception,
}

/// Conveyor pre-loaded with a queue of equally spaced objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Belt {
    pub start: Point,
    pub end: Point,
    /// m/s
    pub speed: Real,
    /// Distance between consecutive objects along the belt, m.
    pub spacing: Real,
    pub object_count: u32,
    /// Belt progress of the leading object at t = 0, m. Objects queued behind
    /// it enter at `start` as the belt advances.
    pub lead_offset: Real,
    pub object_radius: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arm {
    pub base: Point,
    /// Upper arm and forearm lengths, m.
    pub links: [Real; 2],
    /// Maximum end-effector speed, m/s.
    pub v_max: Real,
    /// Braking deceleration, m/s².
    pub a_brake: Real,
    pub pick_radius: Real,
    pub bin: Point,
    /// Slowest commanded speed while a task target is pending, m/s.
    pub min_speed: Real,
}

/// Open-loop operator script: the hand rests near the torso, reaches across
/// the belt at `approach_time`, dwells, then retreats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operator {
    /// Torso position, m.
    pub start: Point,
    /// How far past the belt centreline the hand reaches towards the arm base, m.
    pub hand_intrusion: Real,
    pub hand_speed: Real,
    pub approach_time: Real,
    pub dwell: Real,
    /// Distance of the resting hand from the torso, towards the belt, m.
    pub rest_offset: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Camera {
    pub position: Point,
    /// Optical axis heading, rad.
    pub yaw: Real,
    pub fov_half_angle: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    /// lux
    pub illuminance: Real,
    pub contrast: Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    Ssm,
    MonitoredStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controller {
    pub mode: ControllerMode,
    pub reaction_time: Real,
    pub human_speed: Real,
    pub clearance: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perception {
    pub p_base: Real,
    pub e_min: Real,
    pub e_sat: Real,
    pub contrast_exponent: Real,
    /// Steps a detection stays valid for the controller.
    pub miss_memory: u32,
    /// Radius of the disc sampled around the hand for occlusion, m.
    pub hand_radius: Real,
    /// Treat the hand as always fully visible.
    #[serde(default)]
    pub ignore_occlusion: bool,
}

/// A value of one domain feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Number(Real),
    Category(String),
}

impl std::fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureValue::Number(v) => write!(f, "{v}"),
            FeatureValue::Category(c) => f.write_str(c),
        }
    }
}

/// One point of the domain-feature space, keyed by feature name.
pub type FeatureAssignment = BTreeMap<String, FeatureValue>;

fn check(ok: bool, field: &'static str, reason: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::Invalid {
            field,
            reason: reason.to_string(),
        })
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// The shipped default cell.
    pub fn default_cell() -> Self {
        Self::from_toml(crate::DEFAULT_SCENARIO).expect("shipped scenario is valid")
    }

    /// Number of recorded steps.
    pub fn step_count(&self) -> usize {
        // tolerate representation error such as 12.0 / 0.01 = 1199.9999
        ((self.duration / self.dt) + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let nonneg = |v: Real| v.is_finite() && v >= 0.0;
        check(self.dt.is_finite() && self.dt > 0.0, "dt", "must be > 0")?;
        check(
            self.duration.is_finite() && self.duration >= self.dt,
            "duration",
            "must be >= dt",
        )?;
        let b = &self.belt;
        check(nonneg(b.speed), "belt.speed", "must be >= 0")?;
        check(nonneg(b.spacing), "belt.spacing", "must be >= 0")?;
        check(nonneg(b.object_radius), "belt.object_radius", "must be >= 0")?;
        check(b.lead_offset.is_finite(), "belt.lead_offset", "must be finite")?;
        check(b.start.dist(b.end) > 0.0, "belt", "start and end coincide")?;
        let a = &self.arm;
        check(
            a.links.iter().all(|&l| l.is_finite() && l > 0.0),
            "arm.links",
            "must be > 0",
        )?;
        check(nonneg(a.v_max), "arm.v_max", "must be >= 0")?;
        check(
            a.a_brake.is_finite() && a.a_brake > 0.0,
            "arm.a_brake",
            "must be > 0",
        )?;
        check(nonneg(a.pick_radius), "arm.pick_radius", "must be >= 0")?;
        check(nonneg(a.min_speed), "arm.min_speed", "must be >= 0")?;
        let o = &self.operator;
        check(nonneg(o.hand_intrusion), "operator.hand_intrusion", "must be >= 0")?;
        check(nonneg(o.hand_speed), "operator.hand_speed", "must be >= 0")?;
        check(nonneg(o.approach_time), "operator.approach_time", "must be >= 0")?;
        check(nonneg(o.dwell), "operator.dwell", "must be >= 0")?;
        check(nonneg(o.rest_offset), "operator.rest_offset", "must be >= 0")?;
        let c = &self.camera;
        check(c.yaw.is_finite(), "camera.yaw", "must be finite")?;
        check(
            c.fov_half_angle > 0.0 && c.fov_half_angle < PI,
            "camera.fov_half_angle",
            "must lie in (0, pi)",
        )?;
        let e = &self.environment;
        check(
            e.illuminance.is_finite() && e.illuminance > 0.0,
            "environment.illuminance",
            "must be > 0",
        )?;
        check(
            (0.0..=1.0).contains(&e.contrast),
            "environment.contrast",
            "must lie in [0, 1]",
        )?;
        let k = &self.controller;
        check(nonneg(k.reaction_time), "controller.reaction_time", "must be >= 0")?;
        check(nonneg(k.human_speed), "controller.human_speed", "must be >= 0")?;
        check(nonneg(k.clearance), "controller.clearance", "must be >= 0")?;
        let p = &self.perception;
        check(
            (0.0..=1.0).contains(&p.p_base),
            "perception.p_base",
            "must lie in [0, 1]",
        )?;
        check(
            p.e_min.is_finite() && p.e_min > 0.0,
            "perception.e_min",
            "must be > 0",
        )?;
        check(
            p.e_sat.is_finite() && p.e_min < p.e_sat,
            "perception.e_sat",
            "must exceed e_min",
        )?;
        check(
            nonneg(p.contrast_exponent),
            "perception.contrast_exponent",
            "must be >= 0",
        )?;
        check(nonneg(p.hand_radius), "perception.hand_radius", "must be >= 0")?;
        Ok(())
    }

    /// Overwrite the fields named by a dotted path (`belt.speed`,
    /// `camera.position.0`).
    pub fn set_path(
        &self,
        path: &str,
        feature: &str,
        value: &FeatureValue,
    ) -> Result<Self, ScenarioError> {
        let mut root = toml::Value::try_from(self).expect("scenario serializes");
        write_path(&mut root, path, feature, value)?;
        let s: Scenario = root.try_into()?;
        s.validate()?;
        Ok(s)
    }
}

fn write_path(
    root: &mut toml::Value,
    path: &str,
    feature: &str,
    value: &FeatureValue,
) -> Result<(), ScenarioError> {
    let unknown = || ScenarioError::UnknownPath {
        path: path.to_string(),
    };
    if path.is_empty() {
        return Err(unknown());
    }
    let mut slot = root;
    for seg in path.split('.') {
        slot = match slot {
            toml::Value::Table(t) => t.get_mut(seg).ok_or_else(unknown)?,
            toml::Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| unknown())?;
                a.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    let mismatch = || ScenarioError::TypeMismatch {
        feature: feature.to_string(),
        path: path.to_string(),
        value: value.to_string(),
    };
    let new = match (&*slot, value) {
        (toml::Value::Float(_), FeatureValue::Number(v)) => toml::Value::Float(*v),
        (toml::Value::Integer(_), FeatureValue::Number(v)) if v.fract() == 0.0 => {
            toml::Value::Integer(*v as i64)
        }
        (toml::Value::String(_), FeatureValue::Category(c)) => toml::Value::String(c.clone()),
        (toml::Value::Boolean(_), FeatureValue::Category(c)) => match c.as_str() {
            "true" => toml::Value::Boolean(true),
            "false" => toml::Value::Boolean(false),
            _ => return Err(mismatch()),
        },
        _ => return Err(mismatch()),
    };
    *slot = new;
    Ok(())
}

/// True if `value` lies inside the feature's declared domain.
pub fn in_domain(kind: FeatureKind, domain: &Domain, value: &FeatureValue) -> bool {
    match (domain, value) {
        (Domain::Interval { lo, hi }, FeatureValue::Number(v)) => {
            v.is_finite()
                && *v >= *lo
                && *v <= *hi
                && (kind != FeatureKind::Integer || v.fract() == 0.0)
        }
        (Domain::Set(values), FeatureValue::Category(c)) => values.iter().any(|x| x == c),
        _ => false,
    }
}

/// Write every assigned feature value into the scenario field its binding names.
pub fn bind_assignment(
    scenario: &Scenario,
    model: &RiskModel,
    assignment: &FeatureAssignment,
) -> Result<Scenario, ScenarioError> {
    let mut out = scenario.clone();
    for (name, value) in assignment {
        let feature = model
            .feature(name)
            .ok_or_else(|| ScenarioError::UnknownFeature(name.clone()))?;
        if !in_domain(feature.kind, &feature.domain, value) {
            return Err(ScenarioError::OutOfDomain {
                feature: name.clone(),
                value: value.to_string(),
            });
        }
        out = out.set_path(&feature.binding, name, value)?;
    }
    Ok(out)
}
