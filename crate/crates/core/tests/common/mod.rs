//! Shared fixtures: a divergence-free manufactured Stokes solution and a
//! finite-difference check of its forcing.

#![allow(dead_code)]

use stokes_lps::mesh::Point;

/// `u = (d psi/dy, -d psi/dx)` for the stream function
/// `psi = x^2 (1-x)^2 y^2 (1-y)^2`, with `p = x - 1/2`.
pub fn velocity(x: Point) -> [f64; 2] {
    let [x, y] = x;
    [
        2.0 * x * x * y * (x - 1.0).powi(2) * (y - 1.0) * (2.0 * y - 1.0),
        -2.0 * x * y * y * (x - 1.0) * (2.0 * x - 1.0) * (y - 1.0).powi(2),
    ]
}

pub fn pressure(x: Point) -> f64 {
    x[0] - 0.5
}

pub fn velocity_gradient(x: Point) -> [[f64; 2]; 2] {
    let [x, y] = x;
    let d1x = 4.0 * x * y * (x - 1.0) * (2.0 * x - 1.0) * (y - 1.0) * (2.0 * y - 1.0);
    let d1y = 2.0 * x * x * (x - 1.0).powi(2) * (6.0 * y * y - 6.0 * y + 1.0);
    let d2x = -2.0 * y * y * (y - 1.0).powi(2) * (6.0 * x * x - 6.0 * x + 1.0);
    [[d1x, d1y], [d2x, -d1x]]
}

/// `f = -Laplace u + grad p`, expanded by hand.
pub fn forcing(x: Point) -> [f64; 2] {
    let [x, y] = x;
    let (x2, x3, x4) = (x * x, x * x * x, x.powi(4));
    let (y2, y3, y4) = (y * y, y * y * y, y.powi(4));
    let f1 = -24.0 * x4 * y + 12.0 * x4 + 48.0 * x3 * y - 24.0 * x3 - 48.0 * x2 * y3
        + 72.0 * x2 * y2
        - 48.0 * x2 * y
        + 12.0 * x2
        + 48.0 * x * y3
        - 72.0 * x * y2
        + 24.0 * x * y
        - 8.0 * y3
        + 12.0 * y2
        - 4.0 * y
        + 1.0;
    let f2 = 4.0
        * (2.0 * x - 1.0)
        * (6.0 * x2 * y2 - 6.0 * x2 * y + x2 - 6.0 * x * y2 + 6.0 * x * y - x + 3.0 * y4
            - 6.0 * y3
            + 3.0 * y2);
    [f1, f2]
}

/// Largest deviation of the hand-written forcing, gradient and divergence
/// from central differences of `velocity` and `pressure`, over a grid of
/// interior points.
pub fn finite_difference_defect() -> f64 {
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for i in 1..10 {
        for j in 1..10 {
            let x = [i as f64 / 10.0, j as f64 / 10.0];
            let at = |dx: f64, dy: f64| velocity([x[0] + dx, x[1] + dy]);
            let c = at(0.0, 0.0);
            let (e, w, n, s) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
            let grad = velocity_gradient(x);
            let dp = (pressure([x[0] + h, x[1]]) - pressure([x[0] - h, x[1]])) / (2.0 * h);
            let dq = (pressure([x[0], x[1] + h]) - pressure([x[0], x[1] - h])) / (2.0 * h);
            let f = forcing(x);
            for k in 0..2 {
                let lap = (e[k] + w[k] + n[k] + s[k] - 4.0 * c[k]) / (h * h);
                let dp_k = if k == 0 { dp } else { dq };
                worst = worst.max((f[k] - (-lap + dp_k)).abs());
                worst = worst.max((grad[k][0] - (e[k] - w[k]) / (2.0 * h)).abs());
                worst = worst.max((grad[k][1] - (n[k] - s[k]) / (2.0 * h)).abs());
            }
            let div = (e[0] - w[0]) / (2.0 * h) + (n[1] - s[1]) / (2.0 * h);
            worst = worst.max(div.abs());
        }
    }
    worst
}
