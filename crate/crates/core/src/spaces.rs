//! The three lowest-order discrete spaces: Morley, discontinuous P2 and
//! continuous P2 (C0 interior penalty).
//!
//! Each triangle carries six local basis functions expressed in the monomials
//! `1, x, y, x^2, xy, y^2` of centred, scaled physical coordinates. The
//! coefficients come from inverting the 6x6 matrix of dof functionals applied
//! to the monomials, which makes every basis function exactly dual to its dof.
//!
//! Morley dofs are vertex values and mean normal derivatives over edges; the
//! normal is the edge's stored left-to-right normal, so both neighbours of an
//! interior edge share the dof with the same sign. Lagrange dofs are values at
//! the vertices and edge midpoints. Clamped boundary dofs are removed from the
//! global numbering (Morley and C0IP); the DG space keeps everything.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::EdgeRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Morley,
    Dg,
    C0ip,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 3] = [SpaceKind::Morley, SpaceKind::Dg, SpaceKind::C0ip];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceKind::Morley => "morley",
            SpaceKind::Dg => "dg",
            SpaceKind::C0ip => "c0ip",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "morley" => Ok(SpaceKind::Morley),
            "dg" => Ok(SpaceKind::Dg),
            "c0ip" => Ok(SpaceKind::C0ip),
            _ => Err(Error::Config(format!("unknown scheme `{s}` (expected morley, dg or c0ip)"))),
        }
    }
}

/// Value, gradient and Hessian `(xx, xy, yy)` of one basis function at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BasisEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// Frobenius product of two symmetric 2x2 matrices stored as `(xx, xy, yy)`.
pub fn hess_inner(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

/// `H n` for a symmetric `H = (xx, xy, yy)`.
pub fn hess_apply(h: &[f64; 3], n: [f64; 2]) -> [f64; 2] {
    [h[0] * n[0] + h[1] * n[1], h[1] * n[0] + h[2] * n[1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    center: Point,
    scale: f64,
    /// `coef[m][j]`: coefficient of monomial `m` in basis function `j`.
    coef: [[f64; 6]; 6],
}

fn monomials(xi: f64, eta: f64) -> [f64; 6] {
    [1.0, xi, eta, xi * xi, xi * eta, eta * eta]
}

impl LocalBasis {
    fn from_functionals(center: Point, scale: f64, rows: [[f64; 6]; 6]) -> Result<Self> {
        let v = SMatrix::<f64, 6, 6>::from_fn(|i, m| rows[i][m]);
        let inv = v.try_inverse().ok_or_else(|| Error::InvalidMesh("singular local dof matrix".into()))?;
        let mut coef = [[0.0; 6]; 6];
        for (m, row) in coef.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = inv[(m, j)];
            }
        }
        Ok(LocalBasis { center, scale, coef })
    }

    /// P2 Lagrange basis: values at the vertices, then at the midpoints of the
    /// edges opposite each vertex.
    pub fn lagrange(tri: &[Point; 3]) -> Result<Self> {
        let (center, scale) = frame(tri);
        let loc = |p: Point| ((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
        let mut rows = [[0.0; 6]; 6];
        for i in 0..3 {
            let (x, y) = loc(tri[i]);
            rows[i] = monomials(x, y);
            let (x, y) = loc(opposite_midpoint(tri, i));
            rows[3 + i] = monomials(x, y);
        }
        Self::from_functionals(center, scale, rows)
    }

    /// Morley basis: vertex values, then mean derivatives along `normals[i]`
    /// over the edge opposite vertex `i`. The normal derivative of a quadratic
    /// is linear along an edge, so the mean is the midpoint value.
    pub fn morley(tri: &[Point; 3], normals: &[Point; 3]) -> Result<Self> {
        let (center, scale) = frame(tri);
        let loc = |p: Point| ((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
        let mut rows = [[0.0; 6]; 6];
        for i in 0..3 {
            let (x, y) = loc(tri[i]);
            rows[i] = monomials(x, y);
            let (x, y) = loc(opposite_midpoint(tri, i));
            let n = normals[i];
            let gx = [0.0, 1.0, 0.0, 2.0 * x, y, 0.0];
            let gy = [0.0, 0.0, 1.0, 0.0, x, 2.0 * y];
            rows[3 + i] = std::array::from_fn(|k| (gx[k] * n[0] + gy[k] * n[1]) / scale);
        }
        Self::from_functionals(center, scale, rows)
    }

    fn local(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale)
    }

    pub fn values(&self, p: Point) -> [f64; 6] {
        let (x, y) = self.local(p);
        let mono = monomials(x, y);
        std::array::from_fn(|j| (0..6).map(|m| self.coef[m][j] * mono[m]).sum())
    }

    pub fn gradients(&self, p: Point) -> [[f64; 2]; 6] {
        let (x, y) = self.local(p);
        let s = self.scale;
        std::array::from_fn(|j| {
            let c = |m: usize| self.coef[m][j];
            [(c(1) + 2.0 * c(3) * x + c(4) * y) / s, (c(2) + c(4) * x + 2.0 * c(5) * y) / s]
        })
    }

    /// Hessians are constant on the triangle.
    pub fn hessians(&self) -> [[f64; 3]; 6] {
        let s2 = self.scale * self.scale;
        std::array::from_fn(|j| [2.0 * self.coef[3][j] / s2, self.coef[4][j] / s2, 2.0 * self.coef[5][j] / s2])
    }

    pub fn eval(&self, p: Point) -> [BasisEval; 6] {
        let v = self.values(p);
        let g = self.gradients(p);
        let h = self.hessians();
        std::array::from_fn(|j| BasisEval { value: v[j], grad: g[j], hess: h[j] })
    }
}

#[derive(Debug, Clone)]
pub struct Space {
    pub kind: SpaceKind,
    pub mesh: Arc<Mesh>,
    pub ndof: usize,
    /// Global index of each local dof; `None` marks an eliminated boundary dof.
    pub cell_dofs: Vec<[Option<usize>; 6]>,
    bases: Vec<LocalBasis>,
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Result<Space> {
        let (ndof, cell_dofs) = number_dofs(&mesh, kind);
        let bases = (0..mesh.num_triangles()).map(|t| build_local_basis(&mesh, kind, t)).collect::<Result<Vec<_>>>()?;
        Ok(Space { kind, mesh, ndof, cell_dofs, bases })
    }

    pub fn basis(&self, t: usize) -> &LocalBasis {
        &self.bases[t]
    }

    /// Basis values, gradients and Hessians at points of triangle `t`.
    pub fn eval_basis(&self, t: usize, points: &[Point]) -> Result<Vec<[BasisEval; 6]>> {
        if t >= self.mesh.num_triangles() {
            return Err(Error::OutOfRange { what: "triangle", index: t, len: self.mesh.num_triangles() });
        }
        let tri = self.mesh.triangle_points(t);
        points
            .iter()
            .map(|&p| {
                if barycentric(&tri, p).iter().any(|&l| l < -1e-10) {
                    return Err(Error::PointOutside { triangle: t, x: p[0], y: p[1] });
                }
                Ok(self.bases[t].eval(p))
            })
            .collect()
    }

    /// Coefficients of the six local basis functions of `u` on triangle `t`.
    pub fn local_coeffs(&self, u: &[f64], t: usize) -> [f64; 6] {
        let dofs = &self.cell_dofs[t];
        std::array::from_fn(|i| dofs[i].map_or(0.0, |g| u[g]))
    }

    pub fn eval_function(&self, u: &[f64], t: usize, p: Point) -> BasisEval {
        let c = self.local_coeffs(u, t);
        let ev = self.bases[t].eval(p);
        let mut out = BasisEval::default();
        for (ci, e) in c.iter().zip(&ev) {
            out.value += ci * e.value;
            out.grad[0] += ci * e.grad[0];
            out.grad[1] += ci * e.grad[1];
            for k in 0..3 {
                out.hess[k] += ci * e.hess[k];
            }
        }
        out
    }

    /// Apply the six local dof functionals of triangle `t` to a smooth function
    /// given by its value and gradient. Mean normal derivatives use two-point
    /// Gauss on the edge.
    pub fn local_dofs_of<F, G>(&self, t: usize, value: F, grad: G) -> [f64; 6]
    where
        F: Fn(Point) -> f64,
        G: Fn(Point) -> [f64; 2],
    {
        let mesh = &self.mesh;
        let tri = mesh.triangle_points(t);
        let mut out = [0.0; 6];
        for i in 0..3 {
            out[i] = value(tri[i]);
        }
        for i in 0..3 {
            let e = mesh.tri_edges[t][i].edge;
            out[3 + i] = match self.kind {
                SpaceKind::Morley => {
                    let n = mesh.edges[e].normal;
                    let [a, b] = mesh.edge_points(e);
                    let rule = EdgeRule::gauss2();
                    rule.map(a, b)
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&q, w)| {
                            let g = grad(q);
                            w * (g[0] * n[0] + g[1] * n[1])
                        })
                        .sum()
                }
                SpaceKind::Dg | SpaceKind::C0ip => value(mesh.edges[e].midpoint),
            };
        }
        out
    }

    /// Canonical interpolant: global dofs are the dof functionals of the given
    /// function (shared dofs are taken from the first triangle that owns them;
    /// eliminated dofs are dropped).
    pub fn interpolate<F, G>(&self, value: F, grad: G) -> Vec<f64>
    where
        F: Fn(Point) -> f64,
        G: Fn(Point) -> [f64; 2],
    {
        let mut u = vec![0.0; self.ndof];
        let mut set = vec![false; self.ndof];
        for t in 0..self.mesh.num_triangles() {
            let local = self.local_dofs_of(t, &value, &grad);
            for (i, g) in self.cell_dofs[t].iter().enumerate() {
                if let Some(g) = *g {
                    if !set[g] {
                        u[g] = local[i];
                        set[g] = true;
                    }
                }
            }
        }
        u
    }
}

fn frame(tri: &[Point; 3]) -> (Point, f64) {
    let center = [(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0];
    let d = |a: Point, b: Point| (b[0] - a[0]).hypot(b[1] - a[1]);
    (center, d(tri[0], tri[1]).max(d(tri[1], tri[2])).max(d(tri[2], tri[0])))
}

fn opposite_midpoint(tri: &[Point; 3], i: usize) -> Point {
    let a = tri[(i + 1) % 3];
    let b = tri[(i + 2) % 3];
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

pub fn barycentric(tri: &[Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn number_dofs(mesh: &Mesh, kind: SpaceKind) -> (usize, Vec<[Option<usize>; 6]>) {
    match kind {
        SpaceKind::Dg => {
            let dofs = (0..mesh.num_triangles()).map(|t| std::array::from_fn(|i| Some(6 * t + i))).collect();
            (6 * mesh.num_triangles(), dofs)
        }
        SpaceKind::Morley | SpaceKind::C0ip => {
            let mut next = 0;
            let vmap: Vec<Option<usize>> = mesh
                .boundary_vertex
                .iter()
                .map(|&b| {
                    (!b).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect();
            let emap: Vec<Option<usize>> = mesh
                .edges
                .iter()
                .map(|e| {
                    (!e.is_boundary()).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect();
            let dofs = mesh
                .triangles
                .iter()
                .zip(&mesh.tri_edges)
                .map(|(tri, te)| {
                    [vmap[tri[0]], vmap[tri[1]], vmap[tri[2]], emap[te[0].edge], emap[te[1].edge], emap[te[2].edge]]
                })
                .collect();
            (next, dofs)
        }
    }
}

fn build_local_basis(mesh: &Mesh, kind: SpaceKind, t: usize) -> Result<LocalBasis> {
    let tri = mesh.triangle_points(t);
    match kind {
        SpaceKind::Morley => {
            let normals = std::array::from_fn(|i| mesh.edges[mesh.tri_edges[t][i].edge].normal);
            LocalBasis::morley(&tri, &normals)
        }
        SpaceKind::Dg | SpaceKind::C0ip => LocalBasis::lagrange(&tri),
    }
}
