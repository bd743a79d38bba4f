use std::f64::consts::PI;

use crate::point::Vec2;

/// Exact parametrisation of a boundary edge over `s in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    Straight { a: Vec2, b: Vec2 },
    /// Uniform in angle from `theta0` to `theta1`.
    Arc { center: Vec2, radius: f64, theta0: f64, theta1: f64 },
    /// Quadratic through `a`, `m`, `b` at `s = 0, 1/2, 1`.
    Quadratic { a: Vec2, m: Vec2, b: Vec2 },
}

impl Curve {
    pub fn arc(center: Vec2, radius: f64, theta0: f64, theta1: f64) -> Self {
        Curve::Arc { center, radius, theta0, theta1 }
    }

    /// Quadratic through three points, collapsing to a segment when the
    /// middle point is the chord midpoint.
    pub fn quadratic(a: Vec2, m: Vec2, b: Vec2) -> Self {
        let chord_mid = a.lerp(b, 0.5);
        if (m - chord_mid).norm() <= 1e-14 * (b - a).norm() {
            Curve::Straight { a, b }
        } else {
            Curve::Quadratic { a, m, b }
        }
    }

    pub fn is_straight(&self) -> bool {
        matches!(self, Curve::Straight { .. })
    }

    pub fn point(&self, s: f64) -> Vec2 {
        match *self {
            Curve::Straight { a, b } => a.lerp(b, s),
            Curve::Arc { center, radius, theta0, theta1 } => {
                let t = theta0 + s * (theta1 - theta0);
                center + Vec2::new(t.cos(), t.sin()) * radius
            }
            Curve::Quadratic { a, m, b } => {
                a * ((1.0 - s) * (1.0 - 2.0 * s)) + m * (4.0 * s * (1.0 - s)) + b * (s * (2.0 * s - 1.0))
            }
        }
    }

    /// `d point / ds`
    pub fn derivative(&self, s: f64) -> Vec2 {
        match *self {
            Curve::Straight { a, b } => b - a,
            Curve::Arc { radius, theta0, theta1, .. } => {
                let t = theta0 + s * (theta1 - theta0);
                Vec2::new(-t.sin(), t.cos()) * (radius * (theta1 - theta0))
            }
            Curve::Quadratic { a, m, b } => {
                a * (4.0 * s - 3.0) + m * (4.0 - 8.0 * s) + b * (4.0 * s - 1.0)
            }
        }
    }

    pub fn start(&self) -> Vec2 {
        self.point(0.0)
    }

    pub fn end(&self) -> Vec2 {
        self.point(1.0)
    }

    pub fn reversed(&self) -> Self {
        match *self {
            Curve::Straight { a, b } => Curve::Straight { a: b, b: a },
            Curve::Arc { center, radius, theta0, theta1 } => {
                Curve::Arc { center, radius, theta0: theta1, theta1: theta0 }
            }
            Curve::Quadratic { a, m, b } => Curve::Quadratic { a: b, m, b: a },
        }
    }

    /// Halves at `s = 1/2`, each half reparametrised over [0, 1].
    pub fn split(&self) -> (Self, Self) {
        match *self {
            Curve::Straight { a, b } => {
                let m = a.lerp(b, 0.5);
                (Curve::Straight { a, b: m }, Curve::Straight { a: m, b })
            }
            Curve::Arc { center, radius, theta0, theta1 } => {
                let mid = 0.5 * (theta0 + theta1);
                (Curve::arc(center, radius, theta0, mid), Curve::arc(center, radius, mid, theta1))
            }
            Curve::Quadratic { a, b, .. } => {
                let m = self.point(0.5);
                (
                    Curve::Quadratic { a, m: self.point(0.25), b: m },
                    Curve::Quadratic { a: m, m: self.point(0.75), b },
                )
            }
        }
    }

    /// Exact length for segments and arcs, 20-point Gauss otherwise.
    pub fn length(&self) -> f64 {
        match *self {
            Curve::Straight { a, b } => (b - a).norm(),
            Curve::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
            Curve::Quadratic { .. } => {
                let g = crate::quadrature::GaussLegendre::new(20);
                g.points.iter().zip(&g.weights).map(|(&s, &w)| w * self.derivative(s).norm()).sum()
            }
        }
    }
}

/// Angle of `p - center` in `(-pi, pi]`, unwrapped to lie within `pi` of `near`.
pub(crate) fn angle_near(center: Vec2, p: Vec2, near: f64) -> f64 {
    let mut t = (p.y - center.y).atan2(p.x - center.x);
    while t - near > PI {
        t -= 2.0 * PI;
    }
    while near - t > PI {
        t += 2.0 * PI;
    }
    t
}
