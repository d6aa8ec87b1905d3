//! Registry of named test problems.

use std::f64::consts::PI;

use phifem::{AnalyticField, BoundingBox, Point};

use crate::config::CaseId;

pub struct TestCase {
    pub id: CaseId,
    pub phi: AnalyticField,
    pub f: AnalyticField,
    /// Exact solution with gradient, when known in closed form.
    pub exact: Option<AnalyticField>,
    pub default_box: BoundingBox,
}

impl TestCase {
    pub fn get(id: CaseId) -> Self {
        match id {
            CaseId::Circle => circle(),
            CaseId::Rectangle => rectangle(),
            CaseId::Planted => planted(),
        }
    }
}

/// Printed test-case level set `1/8 − (x−½)² − (y−½)²`, positive inside the disk.
fn circle_bump(p: Point) -> (f64, [f64; 2]) {
    let (dx, dy) = (p[0] - 0.5, p[1] - 0.5);
    (0.125 - dx * dx - dy * dy, [-2.0 * dx, -2.0 * dy])
}

/// `g = eˣ sin(2πy)` with gradient and Laplacian.
fn circle_g(p: Point) -> (f64, [f64; 2], f64) {
    let e = p[0].exp();
    let (s, c) = (2.0 * PI * p[1]).sin_cos();
    (e * s, [e * s, 2.0 * PI * e * c], e * s * (1.0 - 4.0 * PI * PI))
}

/// Disk of radius √2/4 centered at (½, ½), `u = (1/8 − (x−½)² − (y−½)²) eˣ sin(2πy)`.
/// The domain is `{φ < 0}`, so the level set is the negated bump.
fn circle() -> TestCase {
    let exact = AnalyticField::with_gradient(
        |p| circle_bump(p).0 * circle_g(p).0,
        |p| {
            let ((b, gb), (g, gg, _)) = (circle_bump(p), circle_g(p));
            [g * gb[0] + b * gg[0], g * gb[1] + b * gg[1]]
        },
    );
    let f = AnalyticField::new(|p| {
        let ((b, gb), (g, gg, lg)) = (circle_bump(p), circle_g(p));
        -(g * -4.0 + 2.0 * (gb[0] * gg[0] + gb[1] * gg[1]) + b * lg)
    });
    TestCase {
        id: CaseId::Circle,
        phi: AnalyticField::with_gradient(
            |p| -circle_bump(p).0,
            |p| {
                let g = circle_bump(p).1;
                [-g[0], -g[1]]
            },
        ),
        f,
        exact: Some(exact),
        default_box: BoundingBox::unit_square(),
    }
}

/// Half-width of the rectangle's bounding box: the x coordinate of its corners.
pub fn rectangle_half_width() -> f64 {
    2.0 * PI * PI / (PI * PI + 1.0)
}

/// Rectangle bounded by two pairs of perpendicular lines with slopes π and −1/π.
/// The quartic is also negative in the four wedges opposite the corners; the
/// default box touches the rectangle at its corners and excludes them.
fn rectangle() -> TestCase {
    let phi = |p: Point| {
        let (x, y) = (p[0], p[1]);
        -(y - PI * x - PI) * (y + x / PI - PI) * (y - PI * x + PI) * (y + x / PI + PI)
    };
    let a = rectangle_half_width();
    TestCase {
        id: CaseId::Rectangle,
        phi: AnalyticField::new(phi),
        f: AnalyticField::constant(1.0),
        exact: None,
        default_box: BoundingBox::new(-a, -PI, a, PI),
    }
}

/// Ellipse `(x−½)² + 2(y−0.45)² < 0.1` with `u = φ (1 + x + y)`, reproduced
/// exactly by level-set degree ≥ 2 and trial degree ≥ 1.
fn planted() -> TestCase {
    fn phi(p: Point) -> (f64, [f64; 2]) {
        let (dx, dy) = (p[0] - 0.5, p[1] - 0.45);
        (dx * dx + 2.0 * dy * dy - 0.1, [2.0 * dx, 4.0 * dy])
    }
    TestCase {
        id: CaseId::Planted,
        phi: AnalyticField::with_gradient(|p| phi(p).0, |p| phi(p).1),
        // −Δ(φ w) = −(6 w + 2 ∇φ·∇w) with w = 1 + x + y
        f: AnalyticField::new(|p| {
            let (_, g) = phi(p);
            -(6.0 * (1.0 + p[0] + p[1]) + 2.0 * (g[0] + g[1]))
        }),
        exact: Some(AnalyticField::with_gradient(
            |p| phi(p).0 * (1.0 + p[0] + p[1]),
            |p| {
                let (v, g) = phi(p);
                let w = 1.0 + p[0] + p[1];
                [g[0] * w + v, g[1] * w + v]
            },
        )),
        default_box: BoundingBox::unit_square(),
    }
}
