//! Speed-and-separation monitoring: the protective separation distance.

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SsmError {
    #[error("non-braking robot: braking deceleration must be positive")]
    NonBraking,
    #[error("robot speed must be non-negative")]
    NegativeSpeed,
}

/// Parameters of the protective separation distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmParams<T> {
    /// Assumed approach speed of the human, m/s.
    pub human_speed: T,
    /// Controller reaction time, s.
    pub reaction_time: T,
    /// Braking deceleration of the robot, m/s².
    pub brake_decel: T,
    /// Clearance absorbing intrusion and sensing uncertainty, m.
    pub clearance: T,
}

/// `S_p = v_h T_r + v_r T_r + v_r² / (2 a) + C`.
///
/// Strictly increasing in `v_r`, and equal to `v_h T_r + C` for a robot at rest.
pub fn protective_distance<T: Scalar>(v_r: T, p: &SsmParams<T>) -> Result<T, SsmError> {
    // written negated so that NaN also lands here
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(p.brake_decel > T::zero()) {
        return Err(SsmError::NonBraking);
    }
    if v_r < T::zero() {
        return Err(SsmError::NegativeSpeed);
    }
    let two = T::one() + T::one();
    Ok(p.human_speed * p.reaction_time
        + v_r * p.reaction_time
        + v_r * v_r / (two * p.brake_decel)
        + p.clearance)
}

impl From<&super::Scenario> for SsmParams<crate::Real> {
    fn from(s: &super::Scenario) -> Self {
        Self {
            human_speed: s.controller.human_speed,
            reaction_time: s.controller.reaction_time,
            brake_decel: s.arm.a_brake,
            clearance: s.controller.clearance,
        }
    }
}
