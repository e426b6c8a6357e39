mod common;

use std::sync::Arc;

use stokes_lps::assembly::{BlockSystem, Stabilization};
use stokes_lps::mesh::Mesh;
use stokes_lps::norms::{h1_seminorm_error, l2_error};
use stokes_lps::postprocess::solve_source;
use stokes_lps::spaces::{ElementKind, ProjectionKind};

#[test]
fn forcing_matches_finite_differences() {
    assert!(common::finite_difference_defect() < 1e-4);
}

#[test]
fn velocity_vanishes_on_boundary() {
    for t in 0..=20 {
        let s = t as f64 / 20.0;
        for x in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
            let u = common::velocity(x);
            assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
        }
    }
}

#[test]
fn source_solve_converges_on_p1() {
    let mut errors = Vec::new();
    for n in [4, 8] {
        let sys = BlockSystem::assemble(
            Arc::new(Mesh::unit_square(n).unwrap()),
            ElementKind::P1,
            ElementKind::P1,
            ProjectionKind::Zero,
            Stabilization::default(),
        )
        .unwrap();
        let sol = solve_source(&sys, &sys.assemble_load(common::forcing)).unwrap();
        assert!(sol.residual < 1e-10);
        errors.push((
            h1_seminorm_error(&sol.u, common::velocity_gradient),
            l2_error(&sol.u, common::velocity),
        ));
    }
    assert!(errors[1].0 < errors[0].0 && errors[1].1 < errors[0].1);
}
