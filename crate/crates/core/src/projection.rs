//! Operators that turn analytic initial data into discrete vectors.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SmoothField};
use crate::forms::{assemble_ah, assemble_load, assemble_mass, FormParams};
use crate::quadrature::{EdgeRule, TriangleRule};
use crate::spaces::{hess_apply, hess_inner, Space, SpaceKind};
use crate::sparse::{solve_spd, SolverConfig};

/// Morley interpolant: vertex values and edge means of the normal derivative.
pub fn morley_interpolate(space: &Space, w: &dyn SmoothField) -> Result<Vec<f64>> {
    if space.kind != SpaceKind::Morley {
        return Err(Error::Unsupported(format!("Morley interpolation into a {} space", space.kind)));
    }
    Ok(space.interpolate(|p| w.value(p, 0.0), |p| w.gradient(p, 0.0)))
}

/// Right-hand side `a_h(w, phi_i)` of the Ritz projection of a smooth `w`
/// with `w = grad w = 0` on the boundary.
///
/// For smooth `w` the jumps of `w` and of its gradient vanish, so the
/// penalty forms and the first half of `b_h` drop out; what remains is the
/// piecewise Hessian form plus, for dG and C0IP, the edge term
/// `-sum_e int_e [[grad phi_i]] . {{c D^2 w}} n`.
pub fn ritz_rhs(space: &Space, params: &FormParams, w: &dyn SmoothField) -> Vec<f64> {
    let mesh = &space.mesh;
    let rule = TriangleRule::degree4();
    let mut g = vec![0.0; space.ndof];
    for t in 0..mesh.num_triangles() {
        let c = params.coefficient.at(mesh.centroid(t));
        let scale = c * mesh.area(t);
        let hb = space.basis(t).hessians();
        let mut local = [0.0; 6];
        for (p, wq) in rule.map(&mesh.triangle_points(t)).iter().zip(&rule.weights) {
            let hw = w.hessian(*p, 0.0);
            for i in 0..6 {
                local[i] += scale * wq * hess_inner(&hw, &hb[i]);
            }
        }
        scatter(&space.cell_dofs[t], &local, &mut g);
    }
    if space.kind == SpaceKind::Morley {
        return g;
    }
    let rule = EdgeRule::gauss3();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let [a, b] = mesh.edge_points(e);
        let mut sides = vec![(edge.left, 1.0, params.coefficient.at(mesh.centroid(edge.left)))];
        if let Some(r) = edge.right {
            sides.push((r, -1.0, params.coefficient.at(mesh.centroid(r))));
        }
        let avg_c = sides.iter().map(|s| s.2).sum::<f64>() / sides.len() as f64;
        for (x, wq) in rule.map(a, b).iter().zip(&rule.weights) {
            let flux = hess_apply(&w.hessian(*x, 0.0), edge.normal);
            let scale = wq * edge.length * avg_c;
            for &(t, sign, _) in &sides {
                let grads = space.basis(t).gradients(*x);
                let local: [f64; 6] =
                    std::array::from_fn(|i| -scale * sign * (grads[i][0] * flux[0] + grads[i][1] * flux[1]));
                scatter(&space.cell_dofs[t], &local, &mut g);
            }
        }
    }
    g
}

/// Ritz projection `a_h(R w, v) = a_h(w, v)` for smooth, clamped `w`.
pub fn ritz_project(space: &Space, params: &FormParams, w: &dyn SmoothField, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let a = assemble_ah(space, params)?;
    solve_spd(&a, &ritz_rhs(space, params, w), cfg)
}

/// `L^2` projection of `w(., t)`.
pub fn l2_project(space: &Space, w: &dyn ScalarField, t: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let m = assemble_mass(space);
    solve_spd(&m, &assemble_load(space, w, t), cfg)
}

fn scatter(dofs: &[Option<usize>; 6], local: &[f64; 6], out: &mut [f64]) {
    for (d, v) in dofs.iter().zip(local) {
        if let Some(d) = *d {
            out[d] += v;
        }
    }
}
