//! Surrogate vision component: a detection probability gated by lighting,
//! contrast and occlusion, plus the occlusion geometry.

use super::geometry::{wrap_angle, Blocker, Segment, Vec2};
use crate::scalar::clamp;
use crate::Scalar;

/// Sample points on the disc around the hand used for occlusion.
pub const OCCLUSION_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptionModel<T> {
    pub p_base: T,
    /// Illuminance at or below which nothing is detected, lux.
    pub e_min: T,
    /// Illuminance from which lighting no longer limits detection, lux.
    pub e_sat: T,
    pub contrast_exponent: T,
}

/// Lighting gate: log-linear ramp from 0 at `e_min` to 1 at `e_sat`.
pub fn illuminance_gate<T: Scalar>(e: T, p: &PerceptionModel<T>) -> T {
    // written negated so that NaN also lands here
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(e > T::zero()) {
        return T::zero();
    }
    let g = (e.log10() - p.e_min.log10()) / (p.e_sat.log10() - p.e_min.log10());
    clamp(g, T::zero(), T::one())
}

/// Per-frame probability that the hand is detected.
pub fn detection_probability<T: Scalar>(
    illuminance: T,
    contrast: T,
    occlusion: T,
    p: &PerceptionModel<T>,
) -> T {
    let c = clamp(contrast, T::zero(), T::one());
    let visible = T::one() - clamp(occlusion, T::zero(), T::one());
    let contrast_gate = if c == T::zero() {
        T::zero()
    } else {
        c.powf(p.contrast_exponent)
    };
    clamp(
        p.p_base * illuminance_gate(illuminance, p) * contrast_gate * visible,
        T::zero(),
        T::one(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose<T> {
    pub position: Vec2<T>,
    pub yaw: T,
    pub fov_half_angle: T,
}

impl<T: Scalar> CameraPose<T> {
    pub fn sees_direction_of(&self, p: Vec2<T>) -> bool {
        let off = wrap_angle((p - self.position).angle() - self.yaw);
        off.abs() <= self.fov_half_angle
    }
}

/// Fraction of the hand disc hidden from the camera.
///
/// 1 when the hand centre lies outside the field-of-view cone; otherwise the
/// share of [`OCCLUSION_SAMPLES`] rim points whose line of sight crosses a blocker.
pub fn occlusion_fraction<T: Scalar>(
    camera: &CameraPose<T>,
    hand: Vec2<T>,
    hand_radius: T,
    blockers: &[Blocker<T>],
) -> T {
    if !camera.sees_direction_of(hand) {
        return T::one();
    }
    let n = T::from_usize(OCCLUSION_SAMPLES).unwrap();
    let step = (T::PI() + T::PI()) / n;
    let hidden = (0..OCCLUSION_SAMPLES)
        .filter(|&k| {
            let theta = step * T::from_usize(k).unwrap();
            let target = hand + Vec2::from_angle(theta) * hand_radius;
            let ray = Segment::new(camera.position, target);
            blockers.iter().any(|b| b.blocks(&ray))
        })
        .count();
    T::from_usize(hidden).unwrap() / n
}
