//! Discrete bilinear forms and load functionals.
//!
//! Local element and edge matrices are exposed so they can be checked in
//! isolation; the `assemble_*` functions scatter them into global matrices.
//! Edge terms use the mesh's stored normal `n` (left to right) with
//! `[[v]] = v_L - v_R` and `{{v}} = (v_L + v_R) / 2` on interior edges, and
//! `[[v]] = {{v}} = v_L` on the boundary.

use crate::error::{Error, Result};
use crate::field::{Coefficient, ScalarField};
use crate::mesh::Point;
use crate::quadrature::{EdgeRule, TriangleRule};
use crate::spaces::{hess_apply, hess_inner, LocalBasis, Space, SpaceKind};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Penalty parameters and material coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormParams {
    pub sigma_dg1: f64,
    pub sigma_dg2: f64,
    pub sigma_ip: f64,
    pub coefficient: Coefficient,
}

impl Default for FormParams {
    fn default() -> Self {
        FormParams { sigma_dg1: 10.0, sigma_dg2: 15.0, sigma_ip: 10.0, coefficient: Coefficient::Constant(1.0) }
    }
}

impl FormParams {
    pub fn validate(&self, kind: SpaceKind) -> Result<()> {
        let bad = match kind {
            SpaceKind::Morley => None,
            SpaceKind::Dg => (!(self.sigma_dg1 > 0.0 && self.sigma_dg2 > 0.0))
                .then(|| format!("dG penalties must be positive, got {} and {}", self.sigma_dg1, self.sigma_dg2)),
            SpaceKind::C0ip => {
                (!(self.sigma_ip > 0.0)).then(|| format!("C0IP penalty must be positive, got {}", self.sigma_ip))
            }
        };
        bad.map_or(Ok(()), |m| Err(Error::InvalidParameter(m)))
    }
}

/// One side of an edge as seen by the edge-local forms.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSide<'a> {
    pub basis: &'a LocalBasis,
    /// `+1` for the left triangle, `-1` for the right one.
    pub sign: f64,
    /// Material coefficient of the triangle.
    pub coef: f64,
}

/// Geometry of an edge: endpoints and the unit normal pointing left to right.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGeom {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
}

impl EdgeGeom {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }
}

/// `c |K| D^2 phi_j : D^2 phi_i`.
pub fn local_apw(basis: &LocalBasis, area: f64, c: f64) -> [f64; 36] {
    let h = basis.hessians();
    let mut out = [0.0; 36];
    for i in 0..6 {
        for j in 0..6 {
            out[i * 6 + j] = c * area * hess_inner(&h[i], &h[j]);
        }
    }
    out
}

pub fn local_mass(basis: &LocalBasis, tri: &[Point; 3]) -> [f64; 36] {
    let rule = TriangleRule::degree4();
    let area = triangle_area(tri);
    let mut out = [0.0; 36];
    for (p, w) in rule.map(tri).iter().zip(&rule.weights) {
        add_outer(&mut out, &basis.values(*p), w * area);
    }
    mirror_upper(&mut out, 6);
    out
}

/// Consistency/symmetry term `b_h` restricted to one edge. Local dofs are the
/// concatenation of the sides' six dofs each. Exact with two-point Gauss: the
/// gradient jump is linear along the edge and the Hessian average constant.
pub fn local_bh(sides: &[EdgeSide<'_>], geom: &EdgeGeom) -> Vec<f64> {
    let nloc = 6 * sides.len();
    let avg_weight = if sides.len() == 2 { 0.5 } else { 1.0 };
    let len = geom.length();
    let n = geom.normal;
    // {{c D^2 phi}} n for each local dof.
    let mut avg = vec![[0.0; 2]; nloc];
    for (s, side) in sides.iter().enumerate() {
        for (j, h) in side.basis.hessians().iter().enumerate() {
            let hn = hess_apply(h, n);
            avg[6 * s + j] = [avg_weight * side.coef * hn[0], avg_weight * side.coef * hn[1]];
        }
    }
    let rule = EdgeRule::gauss2();
    let mut out = vec![0.0; nloc * nloc];
    let mut jump = vec![[0.0; 2]; nloc];
    for (q, w) in rule.map(geom.a, geom.b).iter().zip(&rule.weights) {
        for (s, side) in sides.iter().enumerate() {
            for (j, g) in side.basis.gradients(*q).iter().enumerate() {
                jump[6 * s + j] = [side.sign * g[0], side.sign * g[1]];
            }
        }
        let wl = w * len;
        for i in 0..nloc {
            for j in i..nloc {
                let t =
                    jump[j][0] * avg[i][0] + jump[j][1] * avg[i][1] + jump[i][0] * avg[j][0] + jump[i][1] * avg[j][1];
                out[i * nloc + j] -= wl * t;
            }
        }
    }
    mirror_upper(&mut out, nloc);
    out
}

/// Penalty terms `sigma_val / h_e^3 [[w]][[v]] + sigma_normal / h_e [[dw/dn]][[dv/dn]]`
/// on one edge. Value jumps are quartic along the edge (three-point Gauss),
/// normal-derivative jumps quadratic (two-point Gauss).
pub fn local_penalty(sides: &[EdgeSide<'_>], geom: &EdgeGeom, sigma_val: f64, sigma_normal: f64) -> Vec<f64> {
    let nloc = 6 * sides.len();
    let len = geom.length();
    let n = geom.normal;
    let mut out = vec![0.0; nloc * nloc];
    let mut jump = vec![0.0; nloc];
    if sigma_val != 0.0 {
        let rule = EdgeRule::gauss3();
        let scale = sigma_val / len.powi(3);
        for (q, w) in rule.map(geom.a, geom.b).iter().zip(&rule.weights) {
            for (s, side) in sides.iter().enumerate() {
                for (j, v) in side.basis.values(*q).iter().enumerate() {
                    jump[6 * s + j] = side.sign * v;
                }
            }
            add_outer(&mut out, &jump, scale * w * len);
        }
    }
    if sigma_normal != 0.0 {
        let rule = EdgeRule::gauss2();
        let scale = sigma_normal / len;
        for (q, w) in rule.map(geom.a, geom.b).iter().zip(&rule.weights) {
            for (s, side) in sides.iter().enumerate() {
                for (j, g) in side.basis.gradients(*q).iter().enumerate() {
                    jump[6 * s + j] = side.sign * (g[0] * n[0] + g[1] * n[1]);
                }
            }
            add_outer(&mut out, &jump, scale * w * len);
        }
    }
    mirror_upper(&mut out, nloc);
    out
}

/// Edge contribution to the Gram matrix of the mesh-dependent norm:
/// `sum_{z in ends} h_e^{-2} [[v]](z)^2 + (mean_e [[dv/dn]])^2`.
pub fn local_norm_edge(sides: &[EdgeSide<'_>], geom: &EdgeGeom) -> Vec<f64> {
    let nloc = 6 * sides.len();
    let len = geom.length();
    let n = geom.normal;
    let mut out = vec![0.0; nloc * nloc];
    let mut jump = vec![0.0; nloc];
    for z in [geom.a, geom.b] {
        for (s, side) in sides.iter().enumerate() {
            for (j, v) in side.basis.values(z).iter().enumerate() {
                jump[6 * s + j] = side.sign * v;
            }
        }
        add_outer(&mut out, &jump, 1.0 / (len * len));
    }
    jump.iter_mut().for_each(|v| *v = 0.0);
    let rule = EdgeRule::gauss2();
    for (q, w) in rule.map(geom.a, geom.b).iter().zip(&rule.weights) {
        for (s, side) in sides.iter().enumerate() {
            for (j, g) in side.basis.gradients(*q).iter().enumerate() {
                jump[6 * s + j] += w * side.sign * (g[0] * n[0] + g[1] * n[1]);
            }
        }
    }
    add_outer(&mut out, &jump, 1.0);
    mirror_upper(&mut out, nloc);
    out
}

fn add_outer(out: &mut [f64], v: &[f64], scale: f64) {
    let n = v.len();
    for i in 0..n {
        if v[i] == 0.0 {
            continue;
        }
        let si = scale * v[i];
        for j in i..n {
            out[i * n + j] += si * v[j];
        }
    }
}

/// Copy the upper triangle onto the lower one so local matrices are exactly symmetric.
fn mirror_upper(out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            out[i * n + j] = out[j * n + i];
        }
    }
}

pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    let [a, b, c] = tri;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

/// Per-edge view used by the assemblers: sides and the concatenated global dofs.
fn edge_sides<'a>(space: &'a Space, e: usize, coef: &Coefficient) -> (Vec<EdgeSide<'a>>, Vec<Option<usize>>, EdgeGeom) {
    let mesh = &space.mesh;
    let edge = &mesh.edges[e];
    let [a, b] = mesh.edge_points(e);
    let mut sides =
        vec![EdgeSide { basis: space.basis(edge.left), sign: 1.0, coef: coef.at(mesh.centroid(edge.left)) }];
    let mut dofs = space.cell_dofs[edge.left].to_vec();
    if let Some(r) = edge.right {
        sides.push(EdgeSide { basis: space.basis(r), sign: -1.0, coef: coef.at(mesh.centroid(r)) });
        dofs.extend_from_slice(&space.cell_dofs[r]);
    }
    (sides, dofs, EdgeGeom { a, b, normal: edge.normal })
}

fn builder_for(space: &Space) -> TripletBuilder {
    TripletBuilder::with_capacity(space.ndof, space.ndof, 36 * space.mesh.num_triangles())
}

fn add_apw(space: &Space, coef: &Coefficient, out: &mut TripletBuilder) {
    let mesh = &space.mesh;
    for t in 0..mesh.num_triangles() {
        let c = coef.at(mesh.centroid(t));
        out.add_local(&space.cell_dofs[t], &local_apw(space.basis(t), mesh.area(t), c));
    }
}

fn add_bh(space: &Space, coef: &Coefficient, out: &mut TripletBuilder) {
    for e in 0..space.mesh.num_edges() {
        let (sides, dofs, geom) = edge_sides(space, e, coef);
        out.add_local(&dofs, &local_bh(&sides, &geom));
    }
}

fn add_penalty(space: &Space, sigma_val: f64, sigma_normal: f64, out: &mut TripletBuilder) {
    let unit = Coefficient::default();
    for e in 0..space.mesh.num_edges() {
        let (sides, dofs, geom) = edge_sides(space, e, &unit);
        out.add_local(&dofs, &local_penalty(&sides, &geom, sigma_val, sigma_normal));
    }
}

/// Piecewise Hessian form `sum_K int_K c D^2 w : D^2 v`.
pub fn assemble_apw(space: &Space, coef: &Coefficient) -> SparseMatrix {
    let mut b = builder_for(space);
    add_apw(space, coef, &mut b);
    b.build()
}

/// `b_h` over all edges, boundary included.
pub fn assemble_bh(space: &Space, coef: &Coefficient) -> SparseMatrix {
    let mut b = builder_for(space);
    add_bh(space, coef, &mut b);
    b.build()
}

/// `c_dG` for the dG space, `c_IP` for the C0IP space.
pub fn assemble_penalty(space: &Space, params: &FormParams) -> Result<SparseMatrix> {
    let (sv, sn) = penalty_weights(space.kind, params)?;
    let mut b = builder_for(space);
    add_penalty(space, sv, sn, &mut b);
    Ok(b.build())
}

fn penalty_weights(kind: SpaceKind, params: &FormParams) -> Result<(f64, f64)> {
    match kind {
        SpaceKind::Morley => Err(Error::Unsupported("the Morley scheme has no penalty form".into())),
        SpaceKind::Dg => Ok((params.sigma_dg1, params.sigma_dg2)),
        SpaceKind::C0ip => Ok((0.0, params.sigma_ip)),
    }
}

/// Scheme bilinear form: `a_pw` for Morley, `a_pw + b_h + c_dG` for dG and
/// `a_pw + b_h + c_IP` for C0IP.
pub fn assemble_ah(space: &Space, params: &FormParams) -> Result<SparseMatrix> {
    params.validate(space.kind)?;
    let mut b = builder_for(space);
    add_apw(space, &params.coefficient, &mut b);
    if space.kind != SpaceKind::Morley {
        add_bh(space, &params.coefficient, &mut b);
        let (sv, sn) = penalty_weights(space.kind, params)?;
        add_penalty(space, sv, sn, &mut b);
    }
    Ok(b.build())
}

pub fn assemble_mass(space: &Space) -> SparseMatrix {
    let mesh = &space.mesh;
    let mut b = builder_for(space);
    for t in 0..mesh.num_triangles() {
        b.add_local(&space.cell_dofs[t], &local_mass(space.basis(t), &mesh.triangle_points(t)));
    }
    b.build()
}

/// Gram matrix `H` of the mesh-dependent norm, `||v||_h^2 = v^T H v`.
pub fn assemble_norm_gram(space: &Space) -> SparseMatrix {
    let mut b = builder_for(space);
    add_apw(space, &Coefficient::default(), &mut b);
    let unit = Coefficient::default();
    for e in 0..space.mesh.num_edges() {
        let (sides, dofs, geom) = edge_sides(space, e, &unit);
        b.add_local(&dofs, &local_norm_edge(&sides, &geom));
    }
    b.build()
}

pub fn mesh_dependent_norm(space: &Space, v: &[f64]) -> f64 {
    assemble_norm_gram(space).bilinear(v, v).max(0.0).sqrt()
}

/// Load vectors `(g(., t), phi_i)` with cached quadrature data.
#[derive(Debug, Clone)]
pub struct LoadAssembler {
    dofs: Vec<[Option<usize>; 6]>,
    ndof: usize,
    points: Vec<Point>,
    /// Per quadrature point: `w |K| phi_i(x_q)`.
    weighted_values: Vec<[f64; 6]>,
    per_cell: usize,
}

impl LoadAssembler {
    pub fn new(space: &Space) -> Self {
        let rule = TriangleRule::degree4();
        let mesh = &space.mesh;
        let per_cell = rule.weights.len();
        let mut points = Vec::with_capacity(per_cell * mesh.num_triangles());
        let mut weighted_values = Vec::with_capacity(points.capacity());
        for t in 0..mesh.num_triangles() {
            let area = mesh.area(t);
            for (p, w) in rule.map(&mesh.triangle_points(t)).into_iter().zip(&rule.weights) {
                let v = space.basis(t).values(p);
                points.push(p);
                weighted_values.push(std::array::from_fn(|i| w * area * v[i]));
            }
        }
        LoadAssembler { dofs: space.cell_dofs.clone(), ndof: space.ndof, points, weighted_values, per_cell }
    }

    pub fn assemble(&self, g: &dyn ScalarField, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        if g.is_zero() {
            return out;
        }
        for (cell, dofs) in self.dofs.iter().enumerate() {
            let range = cell * self.per_cell..(cell + 1) * self.per_cell;
            let mut local = [0.0; 6];
            for (p, wv) in self.points[range.clone()].iter().zip(&self.weighted_values[range]) {
                let gv = g.value(*p, t);
                for i in 0..6 {
                    local[i] += gv * wv[i];
                }
            }
            for (i, d) in dofs.iter().enumerate() {
                if let Some(d) = *d {
                    out[d] += local[i];
                }
            }
        }
        out
    }
}

pub fn assemble_load(space: &Space, g: &dyn ScalarField, t: f64) -> Vec<f64> {
    LoadAssembler::new(space).assemble(g, t)
}
