//! Structured triangulations of axis-aligned rectangles.
//!
//! Every cell of an `nx x ny` tensor grid is split along the diagonal that
//! runs from its lower-left to its upper-right corner. Edges are stored once
//! with a fixed orientation: the *left* triangle is the one that traverses the
//! edge counterclockwise, and the stored unit normal points from the left
//! triangle into the right one (outward on the boundary). Every jump and
//! average downstream uses this single convention.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `(x0, y0) - (x1, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in the order the left triangle traverses them.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    /// Unit normal pointing from `left` to `right` (outward on the boundary).
    pub normal: Point,
    pub length: f64,
    pub midpoint: Point,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    pub fn tangent(&self) -> Point {
        [-self.normal[1], self.normal[0]]
    }
}

/// Read-only view of the triangles sharing an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePatch {
    pub left: usize,
    pub right: Option<usize>,
    pub normal: Point,
    pub length: f64,
    pub midpoint: Point,
}

/// Local edge `i` of a triangle is the one opposite local vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriEdge {
    pub edge: usize,
    /// `+1` when the triangle is the edge's left triangle, `-1` otherwise.
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    pub tri_edges: Vec<[TriEdge; 3]>,
    pub boundary_vertex: Vec<bool>,
    pub h_max: f64,
    pub domain: Rect,
    /// Cell counts of the generating grid.
    pub cells: [usize; 2],
}

impl Mesh {
    /// Uniform `nx x ny` grid on `rect`, each cell cut by its lower-left to
    /// upper-right diagonal.
    pub fn build_uniform(nx: usize, ny: usize, rect: Rect) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!("cell counts must be positive, got {nx} x {ny}")));
        }
        if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) || !rect.area().is_finite() {
            return Err(Error::InvalidMesh(format!("degenerate rectangle {rect:?}")));
        }
        let dx = rect.width() / nx as f64;
        let dy = rect.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            // Pin the last row/column to the exact rectangle bounds.
            let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
            for i in 0..=nx {
                let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
                vertices.push([x, y]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(Self::from_triangles(vertices, triangles, rect, [nx, ny]))
    }

    fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: Rect, cells: [usize; 2]) -> Mesh {
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * triangles.len() / 2 + cells[0] + cells[1]);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.capacity());
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut h_max: f64 = 0.0;

        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [TriEdge { edge: 0, sign: 1 }; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let pa = vertices[a];
                let pb = vertices[b];
                let len = dist(pa, pb);
                h_max = h_max.max(len);
                match lookup.get(&key) {
                    Some(&e) => {
                        edges[e].right = Some(t);
                        *slot = TriEdge { edge: e, sign: -1 };
                    }
                    None => {
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        edges.push(Edge {
                            vertices: [a, b],
                            left: t,
                            right: None,
                            normal: [d[1] / len, -d[0] / len],
                            length: len,
                            midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                        });
                        lookup.insert(key, edges.len() - 1);
                        *slot = TriEdge { edge: edges.len() - 1, sign: 1 };
                    }
                }
            }
            tri_edges.push(local);
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }

        Mesh { vertices, triangles, edges, tri_edges, boundary_vertex, h_max, domain, cells }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edges[e].is_boundary()
    }

    /// Grid spacing `max(dx, dy)` of the generating tensor grid. This is the
    /// mesh-size label used in convergence tables and time-step couplings.
    pub fn grid_h(&self) -> f64 {
        (self.domain.width() / self.cells[0] as f64).max(self.domain.height() / self.cells[1] as f64)
    }

    /// Triangle containing `p`, using the structure of the generating grid.
    /// Points on shared edges resolve to one of the adjacent triangles.
    pub fn locate(&self, p: Point) -> Option<usize> {
        if !self.domain.contains(p, 1e-12 * self.grid_h()) {
            return None;
        }
        let [nx, ny] = self.cells;
        let sx = (p[0] - self.domain.x0) / self.domain.width() * nx as f64;
        let sy = (p[1] - self.domain.y0) / self.domain.height() * ny as f64;
        let i = (sx.floor().max(0.0) as usize).min(nx - 1);
        let j = (sy.floor().max(0.0) as usize).min(ny - 1);
        let upper = sy - j as f64 > sx - i as f64;
        Some(2 * (j * nx + i) + usize::from(upper))
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn edge_patch(&self, e: usize) -> Result<EdgePatch> {
        let edge = self.edges.get(e).ok_or(Error::OutOfRange { what: "edge", index: e, len: self.edges.len() })?;
        Ok(EdgePatch {
            left: edge.left,
            right: edge.right,
            normal: edge.normal,
            length: edge.length,
            midpoint: edge.midpoint,
        })
    }

    /// Endpoint coordinates of edge `e` in stored order.
    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    /// Debug dump: `V E F`, then vertex coordinates, then triangle triples.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.num_vertices(), self.num_edges(), self.num_triangles())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}
