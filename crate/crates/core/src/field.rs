//! Analytic scalar fields used as data and reference solutions.

use crate::mesh::Point;

pub trait ScalarField: Send + Sync {
    fn value(&self, p: Point, t: f64) -> f64;

    /// `Some(theta(t))` when the field factors as `theta(t) * value(p, 0)`
    /// with `theta(0) = 1`. Lets evaluators cache spatial samples.
    fn time_factor(&self, _t: f64) -> Option<f64> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// A field with first and second spatial derivatives. Hessians are
/// `(xx, xy, yy)`.
pub trait SmoothField: ScalarField {
    fn gradient(&self, p: Point, t: f64) -> [f64; 2];
    fn hessian(&self, p: Point, t: f64) -> [f64; 3];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ScalarField for Zero {
    fn value(&self, _: Point, _: f64) -> f64 {
        0.0
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }

    fn is_zero(&self) -> bool {
        true
    }
}

impl SmoothField for Zero {
    fn gradient(&self, _: Point, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn hessian(&self, _: Point, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _: Point, _: f64) -> f64 {
        self.0
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }

    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl SmoothField for Constant {
    fn gradient(&self, _: Point, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn hessian(&self, _: Point, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Time-independent quadratic `c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic(pub [f64; 6]);

impl ScalarField for Quadratic {
    fn value(&self, p: Point, _: f64) -> f64 {
        let c = &self.0;
        let [x, y] = p;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }
}

impl SmoothField for Quadratic {
    fn gradient(&self, p: Point, _: f64) -> [f64; 2] {
        let c = &self.0;
        [c[1] + 2.0 * c[3] * p[0] + c[4] * p[1], c[2] + c[4] * p[0] + 2.0 * c[5] * p[1]]
    }

    fn hessian(&self, _: Point, _: f64) -> [f64; 3] {
        [2.0 * self.0[3], self.0[4], 2.0 * self.0[5]]
    }
}

/// Closure-backed field without derivatives.
pub struct FieldFn<F>(pub F);

impl<F> ScalarField for FieldFn<F>
where
    F: Fn(Point, f64) -> f64 + Send + Sync,
{
    fn value(&self, p: Point, t: f64) -> f64 {
        (self.0)(p, t)
    }
}

/// Material coefficient, evaluated once per triangle at its centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `below` for `y < split_y`, `above` otherwise.
    Layered {
        split_y: f64,
        below: f64,
        above: f64,
    },
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Constant(1.0)
    }
}

impl Coefficient {
    pub fn at(&self, p: Point) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Layered { split_y, below, above } => {
                if p[1] < split_y {
                    below
                } else {
                    above
                }
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        *self == Coefficient::Constant(1.0)
    }
}
