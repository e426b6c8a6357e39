//! Errors of discrete fields against analytic functions, integrated with
//! the assembly rule.

use crate::mesh::Point;
use crate::quadrature::QuadratureRule;
use crate::spaces::FeFunction;

/// `|u - u_h|_1`, where `grad(x)[c]` is the gradient of component `c`.
pub fn h1_seminorm_error(u: &FeFunction, grad: impl Fn(Point) -> [[f64; 2]; 2]) -> f64 {
    integrate_sq(u, |x, _, g| {
        let exact = grad(x);
        (0..u.components())
            .map(|c| (g[c][0] - exact[c][0]).powi(2) + (g[c][1] - exact[c][1]).powi(2))
            .sum()
    })
    .sqrt()
}

/// `||u - u_h||_0`.
pub fn l2_error(u: &FeFunction, value: impl Fn(Point) -> [f64; 2]) -> f64 {
    integrate_sq(u, |x, v, _| {
        let exact = value(x);
        (0..u.components()).map(|c| (v[c] - exact[c]).powi(2)).sum()
    })
    .sqrt()
}

fn integrate_sq(u: &FeFunction, f: impl Fn(Point, [f64; 2], [[f64; 2]; 2]) -> f64) -> f64 {
    let rule = QuadratureRule::assembly();
    let mesh = u.space().mesh();
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        let geom = mesh.geometry(cell);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (v, g) = u.eval_in_cell(cell, *p);
            total += w * geom.det * f(geom.map(*p), v, g);
        }
    }
    total
}
