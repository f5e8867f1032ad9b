//! Minimal 3D vector and axis-aligned surface geometry used by the
//! propagation model.

use serde::{Deserialize, Serialize};

/// A point or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        self.sub(other).norm()
    }

    pub fn axis(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn with_axis(mut self, axis: Axis, value: f64) -> Vec3 {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
        }
        self
    }

    /// Departure azimuth in [0, 2pi) measured in the XY plane.
    pub fn azimuth(self) -> f64 {
        let phi = self.y.atan2(self.x);
        if phi < 0.0 {
            phi + 2.0 * std::f64::consts::PI
        } else {
            phi
        }
    }

    /// Departure elevation in [0, pi] measured from zenith (+Z).
    pub fn elevation(self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            return 0.0;
        }
        (self.z / n).clamp(-1.0, 1.0).acos()
    }
}

/// Coordinate axis tag for axis-aligned surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The two in-plane axes for a surface normal to `self`.
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

/// Axis-aligned 3D box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

/// An axis-aligned rectangle: the plane `axis = at`, bounded on the two
/// remaining axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub axis: Axis,
    pub at: f64,
    /// (min, max) along the first in-plane axis per `Axis::others`.
    pub u: (f64, f64),
    /// (min, max) along the second in-plane axis.
    pub v: (f64, f64),
    pub material: String,
}

const EPS: f64 = 1e-9;

impl Rect {
    /// Point of intersection of segment a->b with this rectangle, if any.
    pub fn segment_hit(&self, a: Vec3, b: Vec3) -> Option<Vec3> {
        let da = a.axis(self.axis) - self.at;
        let db = b.axis(self.axis) - self.at;
        if (da > EPS && db > EPS) || (da < -EPS && db < -EPS) {
            return None;
        }
        let denom = da - db;
        if denom.abs() < EPS {
            // segment lies in the plane; treat as non-intersecting
            return None;
        }
        let t = da / denom;
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        let p = a.add(b.sub(a).scale(t));
        let (ua, va) = self.axis.others();
        let pu = p.axis(ua);
        let pv = p.axis(va);
        if pu >= self.u.0 - EPS && pu <= self.u.1 + EPS && pv >= self.v.0 - EPS && pv <= self.v.1 + EPS
        {
            Some(p)
        } else {
            None
        }
    }

    /// Mirror a point across the rectangle's plane.
    pub fn mirror(&self, p: Vec3) -> Vec3 {
        let d = p.axis(self.axis) - self.at;
        p.with_axis(self.axis, self.at - d)
    }
}

/// True if the open segment a->b (endpoints shrunk by a small margin) is
/// blocked by any surface, skipping indices in `skip`.
pub fn segment_occluded(surfaces: &[Rect], a: Vec3, b: Vec3, skip: &[usize]) -> bool {
    let dir = b.sub(a);
    let len = dir.norm();
    if len < EPS {
        return false;
    }
    // shrink so that endpoints sitting on a reflecting surface do not count
    let t0 = 1e-6;
    let a2 = a.add(dir.scale(t0));
    let b2 = a.add(dir.scale(1.0 - t0));
    surfaces
        .iter()
        .enumerate()
        .any(|(i, s)| !skip.contains(&i) && s.segment_hit(a2, b2).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall() -> Rect {
        Rect {
            axis: Axis::X,
            at: 5.0,
            u: (0.0, 10.0),
            v: (0.0, 3.0),
            material: "concrete".into(),
        }
    }

    #[test]
    fn segment_hit_through_plane() {
        let w = wall();
        let p = w
            .segment_hit(Vec3::new(0.0, 5.0, 1.5), Vec3::new(10.0, 5.0, 1.5))
            .unwrap();
        assert!((p.x - 5.0).abs() < 1e-12);
    }

    #[test]
    fn segment_misses_outside_bounds() {
        let w = wall();
        assert!(w
            .segment_hit(Vec3::new(0.0, 20.0, 1.5), Vec3::new(10.0, 20.0, 1.5))
            .is_none());
    }

    #[test]
    fn mirror_across_plane() {
        let w = wall();
        let m = w.mirror(Vec3::new(2.0, 1.0, 1.0));
        assert_eq!(m, Vec3::new(8.0, 1.0, 1.0));
    }

    #[test]
    fn occlusion_respects_skip() {
        let surfaces = vec![wall()];
        let a = Vec3::new(0.0, 5.0, 1.5);
        let b = Vec3::new(10.0, 5.0, 1.5);
        assert!(segment_occluded(&surfaces, a, b, &[]));
        assert!(!segment_occluded(&surfaces, a, b, &[0]));
    }
}
