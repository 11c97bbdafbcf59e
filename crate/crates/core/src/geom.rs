//! Small planar geometry toolkit shared by the simulator, the sensor model and the mapper.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// Rectangle with arbitrary orientation, described in its own frame by
/// half extents along the local axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub half: Vec2,
    /// Heading of the local x axis.
    pub angle: f64,
}

impl OrientedBox {
    fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.center).rotate(-self.angle)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let q = self.to_local(p);
        q.x.abs() <= self.half.x && q.y.abs() <= self.half.y
    }

    /// Euclidean distance from `p` to the box; zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        let q = self.to_local(p);
        let dx = (q.x.abs() - self.half.x).max(0.0);
        let dy = (q.y.abs() - self.half.y).max(0.0);
        dx.hypot(dy)
    }

    /// Smallest `t >= 0` such that `origin + t * dir` lies on the box, or
    /// `None` if the ray misses. `dir` must be a unit vector. A ray starting
    /// inside the box reports `Some(0.0)`.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let o = self.to_local(origin);
        let d = dir.rotate(-self.angle);
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for (oc, dc, h) in [(o.x, d.x, self.half.x), (o.y, d.y, self.half.y)] {
            if dc.abs() < 1e-15 {
                if oc.abs() > h {
                    return None;
                }
            } else {
                let t1 = (-h - oc) / dc;
                let t2 = (h - oc) / dc;
                let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                t_near = t_near.max(lo);
                t_far = t_far.min(hi);
            }
        }
        if t_near > t_far || t_far < 0.0 {
            return None;
        }
        Some(t_near.max(0.0))
    }

    /// True if the closed segment `a`-`b` touches the box.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        let len = a.distance(b);
        if len < 1e-12 {
            return self.contains(a);
        }
        match self.ray_hit(a, (b - a) * (1.0 / len)) {
            Some(t) => t <= len,
            None => false,
        }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let ux = Vec2::from_angle(self.angle) * self.half.x;
        let uy = Vec2::from_angle(self.angle + std::f64::consts::FRAC_PI_2) * self.half.y;
        [
            self.center - ux - uy,
            self.center + ux - uy,
            self.center + ux + uy,
            self.center - ux + uy,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_angle_range() {
        use std::f64::consts::PI;
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((normalize_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn box_distance_and_ray() {
        let b = OrientedBox {
            center: Vec2::new(5.0, 0.0),
            half: Vec2::new(1.0, 1.0),
            angle: 0.0,
        };
        assert!((b.distance(Vec2::ZERO) - 4.0).abs() < 1e-12);
        assert_eq!(b.distance(Vec2::new(5.2, 0.3)), 0.0);
        let t = b.ray_hit(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        assert!(b.ray_hit(Vec2::ZERO, Vec2::new(-1.0, 0.0)).is_none());
        assert!(b.ray_hit(Vec2::ZERO, Vec2::new(0.0, 1.0)).is_none());
    }

    #[test]
    fn rotated_box_ray() {
        // 45 degree diamond around the origin with half diagonal sqrt(2).
        let b = OrientedBox {
            center: Vec2::new(10.0, 0.0),
            half: Vec2::new(1.0, 1.0),
            angle: std::f64::consts::FRAC_PI_4,
        };
        let t = b.ray_hit(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - (10.0 - 2f64.sqrt())).abs() < 1e-9);
    }
}
