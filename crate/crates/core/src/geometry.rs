//! Planar vectors, the occluding rectangle and line-of-sight tests.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// 2-vector in road coordinates: `x` longitudinal, `y` lateral.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Vec2<S: Scalar = f64> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Vec2<S> {
    #[inline]
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Self) -> S {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<T: Scalar>(self) -> Vec2<T> {
        Vec2::new(T::lit(self.x.to_f64_lossy()), T::lit(self.y.to_f64_lossy()))
    }
}

impl<S: Scalar> Add for Vec2<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Scalar> AddAssign for Vec2<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x = self.x + rhs.x;
        self.y = self.y + rhs.y;
    }
}

impl<S: Scalar> Sub for Vec2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Scalar> Neg for Vec2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<S: Scalar> Mul<S> for Vec2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: S) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// Static axis-aligned occluding object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Occluder<S: Scalar = f64> {
    pub center: Vec2<S>,
    /// Extent along `x`.
    pub length: S,
    /// Extent along `y`.
    pub width: S,
}

impl<S: Scalar> Default for Occluder<S> {
    fn default() -> Self {
        Self {
            center: Vec2::new(S::lit(5.0), S::lit(-4.0)),
            length: S::lit(10.0),
            width: S::lit(4.0),
        }
    }
}

impl<S: Scalar> Occluder<S> {
    pub fn min(&self) -> Vec2<S> {
        let half = S::lit(0.5);
        Vec2::new(
            self.center.x - self.length * half,
            self.center.y - self.width * half,
        )
    }

    pub fn max(&self) -> Vec2<S> {
        let half = S::lit(0.5);
        Vec2::new(
            self.center.x + self.length * half,
            self.center.y + self.width * half,
        )
    }

    /// Closed footprint membership.
    pub fn contains(&self, p: Vec2<S>) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Open interior membership (boundary excluded).
    pub fn contains_strict(&self, p: Vec2<S>) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y
    }

    /// Projects `p` onto the closed footprint.
    pub fn clip(&self, p: Vec2<S>) -> Vec2<S> {
        let (lo, hi) = (self.min(), self.max());
        Vec2::new(p.x.clamp_to(lo.x, hi.x), p.y.clamp_to(lo.y, hi.y))
    }

    /// Whether some point of the open segment `(a, b)` lies in the closed rectangle.
    ///
    /// Liang–Barsky clipping of the parametric segment `a + t (b - a)`.
    pub fn blocks_segment(&self, a: Vec2<S>, b: Vec2<S>) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let d = b - a;
        let mut t0 = S::zero();
        let mut t1 = S::one();
        for (p, q) in [
            (-d.x, a.x - lo.x),
            (d.x, hi.x - a.x),
            (-d.y, a.y - lo.y),
            (d.y, hi.y - a.y),
        ] {
            if p == S::zero() {
                if q < S::zero() {
                    return false;
                }
            } else {
                let r = q / p;
                if p < S::zero() {
                    if r > t1 {
                        return false;
                    }
                    if r > t0 {
                        t0 = r;
                    }
                } else {
                    if r < t0 {
                        return false;
                    }
                    if r < t1 {
                        t1 = r;
                    }
                }
            }
        }
        // [t0, t1] is the clipped interval; it must meet the open interval (0, 1).
        t0 <= t1 && t0 < S::one() && t1 > S::zero()
    }
}

/// Line-of-sight test between the ego and a target point.
///
/// The target is hidden when it sits in the occluder's open interior or when
/// the open segment between the two points touches the closed rectangle.
pub fn is_visible<S: Scalar>(ego: Vec2<S>, target: Vec2<S>, occ: &Occluder<S>) -> bool {
    if occ.contains_strict(target) || occ.contains_strict(ego) {
        return false;
    }
    if ego == target {
        return true;
    }
    // Cheap rejection: segment bounding box disjoint from the rectangle.
    let (lo, hi) = (occ.min(), occ.max());
    if ego.x.max(target.x) < lo.x
        || ego.x.min(target.x) > hi.x
        || ego.y.max(target.y) < lo.y
        || ego.y.min(target.y) > hi.y
    {
        return true;
    }
    !occ.blocks_segment(ego, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ() -> Occluder<f64> {
        Occluder::default()
    }

    /// Dense-sampling oracle for segment visibility.
    fn visible_by_sampling(a: Vec2<f64>, b: Vec2<f64>, occ: &Occluder<f64>) -> bool {
        if occ.contains_strict(b) || occ.contains_strict(a) {
            return false;
        }
        let n = 20_000;
        for i in 1..n {
            let t = i as f64 / n as f64;
            if occ.contains(a + (b - a) * t) {
                return false;
            }
        }
        true
    }

    #[test]
    fn footprint_bounds() {
        let o = occ();
        assert_eq!(o.min(), Vec2::new(0.0, -6.0));
        assert_eq!(o.max(), Vec2::new(10.0, -2.0));
    }

    #[test]
    fn target_left_of_rectangle_is_visible() {
        assert!(is_visible(
            Vec2::new(-25.0, 0.0),
            Vec2::new(-20.0, 0.0),
            &occ()
        ));
    }

    #[test]
    fn target_behind_occluder_is_hidden() {
        let (a, b) = (Vec2::new(-25.0, 0.0), Vec2::new(12.0, -4.0));
        // crossing of x = 10 happens at y = -4 * 35/37
        let y_cross = -4.0 * 35.0 / 37.0;
        assert!((-6.0..=-2.0).contains(&y_cross));
        assert!(!visible_by_sampling(a, b, &occ()));
        assert!(!is_visible(a, b, &occ()));
    }

    #[test]
    fn zero_length_segment_outside_is_visible() {
        let p = Vec2::new(5.0, 0.0);
        assert!(is_visible(p, p, &occ()));
    }

    #[test]
    fn boundary_target_seen_from_beside() {
        // On the right edge, viewed from beyond the occluder.
        let o = occ();
        assert!(is_visible(Vec2::new(15.0, 0.0), Vec2::new(10.0, -4.0), &o));
        // Same point viewed through the occluder body.
        assert!(!is_visible(Vec2::new(-25.0, 0.0), Vec2::new(10.0, -4.0), &o));
    }

    #[test]
    fn matches_sampling_oracle_on_grid() {
        let o = occ();
        let ego = [
            Vec2::new(-25.0, 0.0),
            Vec2::new(-5.0, 1.5),
            Vec2::new(5.0, 0.0),
            Vec2::new(12.0, -1.0),
            Vec2::new(20.0, -4.0),
        ];
        for e in ego {
            for ix in -10..=30 {
                for iy in -12..=6 {
                    let t = Vec2::new(ix as f64 * 0.73, iy as f64 * 0.61);
                    assert_eq!(
                        is_visible(e, t, &o),
                        visible_by_sampling(e, t, &o),
                        "ego {e:?} target {t:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let o = Occluder::<f32>::default();
        assert!(!is_visible(
            Vec2::new(-25.0f32, 0.0),
            Vec2::new(12.0, -4.0),
            &o
        ));
        assert!(is_visible(Vec2::new(-25.0f32, 0.0), Vec2::new(-20.0, 0.0), &o));
    }
}
