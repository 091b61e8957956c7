//! Closed-form data of the two model problems.
//!
//! Example 1 is a manufactured solution on the unit square,
//! `u = exp(-t) g` with `g(x) = P(x_1) P(x_2)` and `P(s) = (s^2 - s)^2`.
//! Example 2 is free vibration of a layered plate on `(-1, 1)^2` started
//! from a smoothed impulse.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Coefficient, ScalarField, SmoothField, Zero};
use crate::mesh::{Point, Rect};

/// `P(s) = (s^2 - s)^2` and its derivatives up to order four.
fn p(s: f64) -> [f64; 5] {
    let q = s * s - s;
    [q * q, 4.0 * s * s * s - 6.0 * s * s + 2.0 * s, 12.0 * s * s - 12.0 * s + 2.0, 24.0 * s - 12.0, 24.0]
}

fn g_parts(x: Point) -> ([f64; 5], [f64; 5]) {
    (p(x[0]), p(x[1]))
}

/// Spatial factor `g(x) = P(x_1) P(x_2)`.
pub fn example1_g(x: Point) -> f64 {
    let (a, b) = g_parts(x);
    a[0] * b[0]
}

/// `Delta^2 g = P''''(x) P(y) + 2 P''(x) P''(y) + P(x) P''''(y)`.
pub fn example1_bilaplacian_g(x: Point) -> f64 {
    let (a, b) = g_parts(x);
    a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4]
}

/// Exact solution `u(x, t) = exp(-t) g(x)` of Example 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1;

impl ScalarField for Example1 {
    fn value(&self, x: Point, t: f64) -> f64 {
        (-t).exp() * example1_g(x)
    }

    fn time_factor(&self, t: f64) -> Option<f64> {
        Some((-t).exp())
    }
}

impl SmoothField for Example1 {
    fn gradient(&self, x: Point, t: f64) -> [f64; 2] {
        let (a, b) = g_parts(x);
        let e = (-t).exp();
        [e * a[1] * b[0], e * a[0] * b[1]]
    }

    fn hessian(&self, x: Point, t: f64) -> [f64; 3] {
        let (a, b) = g_parts(x);
        let e = (-t).exp();
        [e * a[2] * b[0], e * a[1] * b[1], e * a[0] * b[2]]
    }
}

/// Load `f = u_tt + Delta^2 u = exp(-t) (g + Delta^2 g)` of Example 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Source;

impl ScalarField for Example1Source {
    fn value(&self, x: Point, t: f64) -> f64 {
        (-t).exp() * (example1_g(x) + example1_bilaplacian_g(x))
    }

    fn time_factor(&self, t: f64) -> Option<f64> {
        Some((-t).exp())
    }
}

/// Initial velocity `v^0 = -g` of Example 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Velocity;

impl ScalarField for Example1Velocity {
    fn value(&self, x: Point, _: f64) -> f64 {
        -example1_g(x)
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }
}

/// `A(s) = exp(-100 s^2) (1 - s^2)^2` and its first two derivatives.
fn bump(s: f64) -> [f64; 3] {
    let e = (-100.0 * s * s).exp();
    let e1 = -200.0 * s * e;
    let e2 = (-200.0 + 40000.0 * s * s) * e;
    let w = 1.0 - s * s;
    let (b, b1, b2) = (w * w, -4.0 * s * w, -4.0 + 12.0 * s * s);
    [e * b, e1 * b + e * b1, e2 * b + 2.0 * e1 * b1 + e * b2]
}

/// Initial displacement `u^0 = exp(-|10 x|^2) (1 - x_1^2)^2 (1 - x_2^2)^2 / 5`
/// of Example 2. It factors as `A(x_1) A(x_2) / 5`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example2Initial;

impl ScalarField for Example2Initial {
    fn value(&self, x: Point, _: f64) -> f64 {
        0.2 * bump(x[0])[0] * bump(x[1])[0]
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }
}

impl SmoothField for Example2Initial {
    fn gradient(&self, x: Point, _: f64) -> [f64; 2] {
        let (a, b) = (bump(x[0]), bump(x[1]));
        [0.2 * a[1] * b[0], 0.2 * a[0] * b[1]]
    }

    fn hessian(&self, x: Point, _: f64) -> [f64; 3] {
        let (a, b) = (bump(x[0]), bump(x[1]));
        [0.2 * a[2] * b[0], 0.2 * a[1] * b[1], 0.2 * a[0] * b[2]]
    }
}

/// Half width of the Example 2 sensor square.
pub const SENSOR_HALF_WIDTH: f64 = 1.0 / 32.0;

/// Sensor region `(0.75 - l_c, 0.75 + l_c) x (-l_c, l_c)`.
pub fn example2_sensor() -> Rect {
    let l = SENSOR_HALF_WIDTH;
    Rect::new(0.75 - l, -l, 0.75 + l, l)
}

/// Material coefficient of Example 2: 1 below `x_2 = 0.2`, 9 above.
pub fn example2_coefficient() -> Coefficient {
    Coefficient::Layered { split_y: 0.2, below: 1.0, above: 9.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Example1,
    Example2,
    /// Example 1 initial displacement, zero velocity and zero load.
    Free,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Example1 => "example1",
            ProblemKind::Example2 => "example2",
            ProblemKind::Free => "free",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "example1" => Ok(ProblemKind::Example1),
            "example2" => Ok(ProblemKind::Example2),
            "free" => Ok(ProblemKind::Free),
            other => Err(Error::Config(format!("unknown problem '{other}' (expected example1, example2 or free)"))),
        }
    }
}

/// Data of an initial-boundary value problem with clamped boundary.
#[derive(Clone)]
pub struct Problem {
    pub kind: Option<ProblemKind>,
    pub domain: Rect,
    pub t_end: f64,
    pub coefficient: Coefficient,
    pub initial_displacement: Arc<dyn SmoothField>,
    pub initial_velocity: Arc<dyn ScalarField>,
    pub source: Arc<dyn ScalarField>,
    pub exact: Option<Arc<dyn SmoothField>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("t_end", &self.t_end)
            .field("coefficient", &self.coefficient)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(kind: ProblemKind) -> Problem {
        match kind {
            ProblemKind::Example1 => Problem::example1(),
            ProblemKind::Example2 => Problem::example2(),
            ProblemKind::Free => Problem::free_vibration(),
        }
    }

    pub fn example1() -> Problem {
        Problem {
            kind: Some(ProblemKind::Example1),
            domain: Rect::UNIT,
            t_end: 1.0,
            coefficient: Coefficient::default(),
            initial_displacement: Arc::new(Example1),
            initial_velocity: Arc::new(Example1Velocity),
            source: Arc::new(Example1Source),
            exact: Some(Arc::new(Example1)),
        }
    }

    pub fn example2() -> Problem {
        Problem {
            kind: Some(ProblemKind::Example2),
            domain: Rect::new(-1.0, -1.0, 1.0, 1.0),
            t_end: 0.03,
            coefficient: example2_coefficient(),
            initial_displacement: Arc::new(Example2Initial),
            initial_velocity: Arc::new(Zero),
            source: Arc::new(Zero),
            exact: None,
        }
    }

    pub fn free_vibration() -> Problem {
        Problem {
            kind: Some(ProblemKind::Free),
            source: Arc::new(Zero),
            initial_velocity: Arc::new(Zero),
            exact: None,
            ..Problem::example1()
        }
    }
}
