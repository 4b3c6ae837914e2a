//! Hand-coded builtins against the same formulas compiled from text.

mod common;

use common::{implicit_deviation, implicit_pairs, parametric_deviation, parametric_pairs};
use gvf_core::nalgebra::Vector2;
use gvf_core::paths::{circle_implicit, ellipse_implicit};

const TOL: f64 = 1e-9;

#[test]
fn implicit_builtins_match_compiled_formulas() {
    for (seed, (name, builtin, dsl, extent)) in implicit_pairs().into_iter().enumerate() {
        let dev = implicit_deviation(&builtin, &dsl, extent, seed as u64);
        assert!(dev < TOL, "{name}: {dev:e}");
    }
}

#[test]
fn parametric_builtins_match_compiled_formulas() {
    for (seed, (name, builtin, dsl)) in parametric_pairs().into_iter().enumerate() {
        let dev = parametric_deviation(&builtin, &dsl, seed as u64);
        assert!(dev < TOL, "{name}: {dev:e}");
    }
}

#[test]
fn points_built_on_the_path_have_zero_level() {
    let c = circle_implicit(Vector2::new(1.0, 2.0), 50.0).unwrap();
    let e = ellipse_implicit(Vector2::new(-3.0, 4.0), 70.0, 20.0, -0.4).unwrap();
    let rot = gvf_core::nalgebra::Rotation2::new(-0.4);
    for k in 0..64 {
        let t = k as f64 * 0.1;
        let pc = Vector2::new(1.0, 2.0) + 50.0 * Vector2::new(t.cos(), t.sin());
        assert!(c.phi(pc).unwrap().abs() < 1e-9);
        let pe = Vector2::new(-3.0, 4.0) + rot * Vector2::new(70.0 * t.cos(), 20.0 * t.sin());
        assert!(e.phi(pe).unwrap().abs() < 1e-9);
    }
}
