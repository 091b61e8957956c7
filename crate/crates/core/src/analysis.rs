//! Error measurement, convergence rates and the sensor functional.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};
use crate::forms::{assemble_penalty, FormParams};
use crate::mesh::{Point, Rect};
use crate::quadrature::TriangleRule;
use crate::spaces::{hess_inner, Space, SpaceKind};
use crate::sparse::SparseMatrix;

/// A discrete function viewed as a field. Points are located through the
/// generating grid; on shared edges one adjacent triangle is used.
pub struct DiscreteField<'a> {
    space: &'a Space,
    coeffs: &'a [f64],
}

impl<'a> DiscreteField<'a> {
    pub fn new(space: &'a Space, coeffs: &'a [f64]) -> Self {
        DiscreteField { space, coeffs }
    }

    fn eval(&self, p: Point) -> crate::spaces::BasisEval {
        match self.space.mesh.locate(p) {
            Some(t) => self.space.eval_function(self.coeffs, t, p),
            None => Default::default(),
        }
    }
}

impl ScalarField for DiscreteField<'_> {
    fn value(&self, p: Point, _: f64) -> f64 {
        self.eval(p).value
    }

    fn time_factor(&self, _: f64) -> Option<f64> {
        Some(1.0)
    }
}

impl SmoothField for DiscreteField<'_> {
    fn gradient(&self, p: Point, _: f64) -> [f64; 2] {
        self.eval(p).grad
    }

    fn hessian(&self, p: Point, _: f64) -> [f64; 3] {
        self.eval(p).hess
    }
}

/// Energy norm reported for each scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyNorm {
    /// Broken `H^2` seminorm `|||.|||_pw`.
    Piecewise,
    /// `(|||.|||_pw^2 + c_dG(., .))^(1/2)`.
    Dg,
    /// `(|||.|||_pw^2 + c_IP(., .))^(1/2)`.
    Ip,
}

impl EnergyNorm {
    pub fn for_space(kind: SpaceKind) -> Self {
        match kind {
            SpaceKind::Morley => EnergyNorm::Piecewise,
            SpaceKind::Dg => EnergyNorm::Dg,
            SpaceKind::C0ip => EnergyNorm::Ip,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EnergyNorm::Piecewise => "|||.|||_pw",
            EnergyNorm::Dg => "||.||_dG",
            EnergyNorm::Ip => "||.||_IP",
        }
    }
}

impl fmt::Display for EnergyNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cached degree-6 quadrature data for repeated error evaluation against one
/// exact solution.
pub struct ErrorEvaluator {
    cell_dofs: Vec<[Option<usize>; 6]>,
    per_cell: usize,
    points: Vec<Point>,
    /// `w |K|` per quadrature point.
    weights: Vec<f64>,
    values: Vec<[f64; 6]>,
    /// Constant basis Hessians per cell.
    hessians: Vec<[[f64; 3]; 6]>,
    jumps: Option<SparseMatrix>,
    norm: EnergyNorm,
    exact: Arc<dyn SmoothField>,
    /// Exact values and Hessians at `t = 0` when the exact solution separates.
    cached: Option<(Vec<f64>, Vec<[f64; 3]>)>,
}

impl ErrorEvaluator {
    pub fn new(space: &Space, params: &FormParams, exact: Arc<dyn SmoothField>) -> Result<Self> {
        let rule = TriangleRule::degree6();
        let mesh = &space.mesh;
        let per_cell = rule.weights.len();
        let cap = per_cell * mesh.num_triangles();
        let (mut points, mut weights, mut values) =
            (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
        let mut hessians = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let area = mesh.area(t);
            let basis = space.basis(t);
            for (p, w) in rule.map(&mesh.triangle_points(t)).into_iter().zip(&rule.weights) {
                points.push(p);
                weights.push(w * area);
                values.push(basis.values(p));
            }
            hessians.push(basis.hessians());
        }
        let jumps = match space.kind {
            SpaceKind::Morley => None,
            _ => Some(assemble_penalty(space, params)?),
        };
        let cached = exact.time_factor(0.0).map(|_| {
            (
                points.iter().map(|&p| exact.value(p, 0.0)).collect(),
                points.iter().map(|&p| exact.hessian(p, 0.0)).collect(),
            )
        });
        Ok(ErrorEvaluator {
            cell_dofs: space.cell_dofs.clone(),
            per_cell,
            points,
            weights,
            values,
            hessians,
            jumps,
            norm: EnergyNorm::for_space(space.kind),
            exact,
            cached,
        })
    }

    pub fn norm(&self) -> EnergyNorm {
        self.norm
    }

    /// `(L^2 error, energy error)` of `u` against the exact solution at `t`.
    pub fn errors(&self, u: &[f64], t: f64) -> (f64, f64) {
        let theta = self.cached.as_ref().and_then(|_| self.exact.time_factor(t));
        let (mut l2, mut h2) = (0.0, 0.0);
        for (cell, dofs) in self.cell_dofs.iter().enumerate() {
            let c: [f64; 6] = std::array::from_fn(|i| dofs[i].map_or(0.0, |g| u[g]));
            let mut hu = [0.0; 3];
            for (ci, h) in c.iter().zip(&self.hessians[cell]) {
                for k in 0..3 {
                    hu[k] += ci * h[k];
                }
            }
            for q in cell * self.per_cell..(cell + 1) * self.per_cell {
                let (ev, eh) = match (theta, &self.cached) {
                    (Some(th), Some((v, h))) => (th * v[q], [th * h[q][0], th * h[q][1], th * h[q][2]]),
                    _ => (self.exact.value(self.points[q], t), self.exact.hessian(self.points[q], t)),
                };
                let uh: f64 = c.iter().zip(&self.values[q]).map(|(a, b)| a * b).sum();
                let d = ev - uh;
                let dh = [eh[0] - hu[0], eh[1] - hu[1], eh[2] - hu[2]];
                l2 += self.weights[q] * d * d;
                h2 += self.weights[q] * hess_inner(&dh, &dh);
            }
        }
        if let Some(j) = &self.jumps {
            // Exact-solution jumps vanish, so only the discrete part is penalised.
            h2 += j.bilinear(u, u).max(0.0);
        }
        (l2.sqrt(), h2.sqrt())
    }
}

/// `||u(., t) - u_h||_{L^2}` with a degree-6 rule.
pub fn l2_error(space: &Space, u: &[f64], exact: &dyn ScalarField, t: f64) -> f64 {
    let rule = TriangleRule::degree6();
    let mesh = &space.mesh;
    let mut acc = 0.0;
    for tri in 0..mesh.num_triangles() {
        let area = mesh.area(tri);
        let c = space.local_coeffs(u, tri);
        for (p, w) in rule.map(&mesh.triangle_points(tri)).into_iter().zip(&rule.weights) {
            let v = space.basis(tri).values(p);
            let uh: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
            let d = exact.value(p, t) - uh;
            acc += w * area * d * d;
        }
    }
    acc.sqrt()
}

/// Broken `H^2` seminorm of `u(., t) - u_h`.
pub fn broken_h2_error(space: &Space, u: &[f64], exact: &dyn SmoothField, t: f64) -> f64 {
    let rule = TriangleRule::degree6();
    let mesh = &space.mesh;
    let mut acc = 0.0;
    for tri in 0..mesh.num_triangles() {
        let area = mesh.area(tri);
        let c = space.local_coeffs(u, tri);
        let hb = space.basis(tri).hessians();
        let mut hu = [0.0; 3];
        for (ci, h) in c.iter().zip(&hb) {
            for k in 0..3 {
                hu[k] += ci * h[k];
            }
        }
        for (p, w) in rule.map(&mesh.triangle_points(tri)).into_iter().zip(&rule.weights) {
            let e = exact.hessian(p, t);
            let d = [e[0] - hu[0], e[1] - hu[1], e[2] - hu[2]];
            acc += w * area * hess_inner(&d, &d);
        }
    }
    acc.sqrt()
}

/// Scheme energy-norm error: broken `H^2` seminorm plus, for dG and C0IP,
/// the penalty seminorm of `u_h` (the exact solution has no jumps).
pub fn energy_error(space: &Space, params: &FormParams, u: &[f64], exact: &dyn SmoothField, t: f64) -> Result<f64> {
    let pw = broken_h2_error(space, u, exact, t);
    let jump = match space.kind {
        SpaceKind::Morley => 0.0,
        _ => assemble_penalty(space, params)?.bilinear(u, u).max(0.0),
    };
    Ok((pw * pw + jump).sqrt())
}

/// Maximum-in-time errors of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub k: f64,
    pub l2_error: f64,
    pub energy_error: f64,
    pub norm: EnergyNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// First row of a table.
    None,
    Value(f64),
    /// Zero error or repeated `h`.
    Undefined,
}

impl Rate {
    pub fn between(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Rate {
        let r = (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln();
        if e_coarse > 0.0 && e_fine > 0.0 && h_coarse != h_fine && r.is_finite() {
            Rate::Value(r)
        } else {
            Rate::Undefined
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Rate::Value(r) => Some(*r),
            _ => None,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::None => f.write_str("-"),
            Rate::Value(r) => write!(f, "{r:.16e}"),
            Rate::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub record: ErrorRecord,
    pub l2_rate: Rate,
    pub energy_rate: Rate,
}

/// Error records ordered by decreasing `h` with rates between neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

pub const RATE_CSV_HEADER: &str = "h,k,l2_error,l2_rate,energy_error,energy_rate";

impl RateTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{RATE_CSV_HEADER}")?;
        for r in &self.rows {
            let e = &r.record;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
                e.h, e.k, e.l2_error, r.l2_rate, e.energy_error, r.energy_rate
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// `rate_i = log(e_{i-1} / e_i) / log(h_{i-1} / h_i)` for both error columns.
pub fn convergence_rates(records: &[ErrorRecord]) -> Result<RateTable> {
    if records.len() < 2 {
        return Err(Error::InvalidParameter(format!("rates need at least two records, got {}", records.len())));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    let rows = sorted
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let (l2_rate, energy_rate) = match i {
                0 => (Rate::None, Rate::None),
                _ => {
                    let prev = &sorted[i - 1];
                    (
                        Rate::between(prev.l2_error, rec.l2_error, prev.h, rec.h),
                        Rate::between(prev.energy_error, rec.energy_error, prev.h, rec.h),
                    )
                }
            };
            RateRow { record: *rec, l2_rate, energy_rate }
        })
        .collect();
    Ok(RateTable { rows })
}

/// Clip a convex polygon against an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[Point], r: &Rect) -> Vec<Point> {
    // Each half-plane is `s * p[axis] <= s * bound`.
    let planes = [(0, -1.0, r.x0), (0, 1.0, r.x1), (1, -1.0, r.y0), (1, 1.0, r.y1)];
    let mut out = poly.to_vec();
    for (axis, s, bound) in planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &Point| s * (p[axis] - bound) <= 0.0;
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let lam = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                out.push([prev[0] + lam * (cur[0] - prev[0]), prev[1] + lam * (cur[1] - prev[1])]);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Weights `s_i = int_region phi_i`, so that `int_region u_h = s . u`.
/// Triangles cut by the region boundary are clipped and integrated exactly.
pub fn sensor_weights(space: &Space, region: &Rect) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let tol = 1e-12 * mesh.grid_h();
    if !(region.x1 > region.x0 && region.y1 > region.y0) {
        return Err(Error::InvalidParameter(format!("empty sensor region {region:?}")));
    }
    if !mesh.domain.contains([region.x0, region.y0], tol) || !mesh.domain.contains([region.x1, region.y1], tol) {
        return Err(Error::InvalidParameter(format!("sensor region {region:?} leaves the domain")));
    }
    let rule = TriangleRule::degree4();
    let mut s = vec![0.0; space.ndof];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_points(t);
        let poly = clip_to_rect(&tri, region);
        if poly.len() < 3 {
            continue;
        }
        let basis = space.basis(t);
        let mut local = [0.0; 6];
        for j in 1..poly.len() - 1 {
            let sub = [poly[0], poly[j], poly[j + 1]];
            let area = crate::forms::triangle_area(&sub);
            if area == 0.0 {
                continue;
            }
            for (p, w) in rule.map(&sub).into_iter().zip(&rule.weights) {
                let v = basis.values(p);
                for i in 0..6 {
                    local[i] += w * area * v[i];
                }
            }
        }
        for (d, v) in space.cell_dofs[t].iter().zip(&local) {
            if let Some(d) = *d {
                s[d] += v;
            }
        }
    }
    Ok(s)
}

/// `int_region u_h`.
pub fn sensor_integral(space: &Space, u: &[f64], region: &Rect) -> Result<f64> {
    Ok(crate::sparse::dot(&sensor_weights(space, region)?, u))
}
