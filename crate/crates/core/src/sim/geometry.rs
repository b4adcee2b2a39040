//! Planar primitives used by the cell simulation.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    from = "[T; 2]",
    into = "[T; 2]",
    bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>")
)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> From<[T; 2]> for Vec2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at angle `theta` from the +x axis.
    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise normal.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self * (T::one() / n)
        } else {
            Self::zero()
        }
    }

    pub fn lerp(self, o: Self, s: T) -> Self {
        self + (o - self) * s
    }

    /// Move towards `target` by at most `step`, never overshooting.
    pub fn step_towards(self, target: Self, step: T) -> Self {
        let d = target - self;
        let n = d.norm();
        if n <= step || n == T::zero() {
            target
        } else {
            self + d * (step / n)
        }
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Closed line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub a: Vec2<T>,
    pub b: Vec2<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(a: Vec2<T>, b: Vec2<T>) -> Self {
        Self { a, b }
    }

    pub fn closest_point(&self, p: Vec2<T>) -> Vec2<T> {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == T::zero() {
            return self.a;
        }
        let s = ((p - self.a).dot(ab) / len2).max(T::zero()).min(T::one());
        self.a + ab * s
    }

    pub fn distance_to(&self, p: Vec2<T>) -> T {
        p.dist(self.closest_point(p))
    }

    /// Proper or touching intersection between two closed segments.
    pub fn intersects(&self, o: &Segment<T>) -> bool {
        let d1 = self.b - self.a;
        let d2 = o.b - o.a;
        let denom = d1.cross(d2);
        let w = o.a - self.a;
        let eps = T::epsilon();
        if denom.abs() <= eps {
            // parallel: only collinear overlap counts
            if w.cross(d1).abs() > eps {
                return false;
            }
            let len2 = d1.dot(d1);
            if len2 == T::zero() {
                return o.distance_to(self.a) <= eps;
            }
            let t0 = w.dot(d1) / len2;
            let t1 = (o.b - self.a).dot(d1) / len2;
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            return hi >= T::zero() && lo <= T::one();
        }
        let t = w.cross(d2) / denom;
        let u = w.cross(d1) / denom;
        t >= T::zero() && t <= T::one() && u >= T::zero() && u <= T::one()
    }
}

/// Disc obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc<T> {
    pub center: Vec2<T>,
    pub radius: T,
}

impl<T: Scalar> Disc<T> {
    /// True if the segment passes through the disc interior or boundary.
    pub fn blocks(&self, seg: &Segment<T>) -> bool {
        seg.distance_to(self.center) <= self.radius
    }
}

/// Something that can sit between a camera and its subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blocker<T> {
    Segment(Segment<T>),
    Disc(Disc<T>),
}

impl<T: Scalar> Blocker<T> {
    pub fn blocks(&self, ray: &Segment<T>) -> bool {
        match self {
            Blocker::Segment(s) => s.intersects(ray),
            Blocker::Disc(d) => d.blocks(ray),
        }
    }
}

/// Minimum distance from `p` to an open polyline through `pts`.
pub fn polyline_distance<T: Scalar>(pts: &[Vec2<T>], p: Vec2<T>) -> T {
    match pts {
        [] => T::infinity(),
        [only] => only.dist(p),
        _ => pts
            .windows(2)
            .map(|w| Segment::new(w[0], w[1]).distance_to(p))
            .fold(T::infinity(), T::min),
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type V = Vec2<f64>;

    #[test]
    fn segment_distance() {
        let s = Segment::new(V::new(0.0, 0.0), V::new(1.0, 0.0));
        assert_relative_eq!(s.distance_to(V::new(0.5, 2.0)), 2.0);
        assert_relative_eq!(s.distance_to(V::new(-3.0, 4.0)), 5.0);
        assert_relative_eq!(s.distance_to(V::new(2.0, 0.0)), 1.0);
    }

    #[test]
    fn crossing_segments() {
        let a = Segment::new(V::new(0.0, 0.0), V::new(1.0, 1.0));
        let b = Segment::new(V::new(0.0, 1.0), V::new(1.0, 0.0));
        let c = Segment::new(V::new(2.0, 0.0), V::new(3.0, 1.0));
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        let touching = Segment::new(V::new(1.0, 1.0), V::new(2.0, 5.0));
        assert!(a.intersects(&touching));
        let collinear = Segment::new(V::new(0.5, 0.5), V::new(4.0, 4.0));
        assert!(a.intersects(&collinear));
        let parallel = Segment::new(V::new(0.0, 0.1), V::new(1.0, 1.1));
        assert!(!a.intersects(&parallel));
    }

    #[test]
    fn polyline() {
        let pts = [V::new(0.0, 0.0), V::new(1.0, 0.0), V::new(1.0, 1.0)];
        assert_relative_eq!(polyline_distance(&pts, V::new(2.0, 0.5)), 1.0);
        assert_relative_eq!(polyline_distance(&pts, V::new(0.5, 0.5)), 0.5);
    }

    #[test]
    fn angle_wrap() {
        use std::f64::consts::PI;
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-3.0 * PI / 2.0), PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn works_in_single_precision() {
        let s = Segment::new(Vec2::<f32>::new(0.0, 0.0), Vec2::new(0.0, 2.0));
        assert!((s.distance_to(Vec2::new(1.0, 1.0)) - 1.0).abs() < 1e-6);
    }
}
