//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use gvf_core::expr::{compile_implicit_path, compile_parametric_path, BinaryOp, Expr, ExprKind, UnaryOp};
use gvf_core::nalgebra::{Vector2, Vector3};
use gvf_core::paths::{
    circle2d_parametric, circle_implicit, ellipse3d_parametric, ellipse_implicit, lissajous3d_parametric,
    ImplicitPathSpec, ParametricPathSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;

const PREC: u32 = 256;

pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (1u32..100).prop_map(|k| Expr::constant(k as f64 / 10.0)),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        Just(Expr::param("a")),
    ]
}

pub fn tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), 0..7usize).prop_map(|(a, k)| {
                let op = [UnaryOp::Neg, UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Tan, UnaryOp::Exp, UnaryOp::Ln, UnaryOp::Sqrt][k];
                Expr::unary(op, a)
            }),
            (inner.clone(), inner.clone(), 0..4usize).prop_map(|(l, r, k)| {
                let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div][k];
                Expr::binary(op, l, r)
            }),
            (inner, 0u32..4).prop_map(|(a, n)| Expr::pow(a, n)),
        ]
    })
}

/// High-precision value, or `None` when the point is too close to a
/// singularity or a domain boundary for the comparison to be meaningful.
pub fn eval_mp(e: &Expr, env: &HashMap<&str, Float>) -> Option<Float> {
    let f = |v: f64| Float::with_val(PREC, v);
    let out = match &e.kind {
        ExprKind::Const(v) => f(*v),
        ExprKind::Var(n) | ExprKind::Param(n) => env[n.as_str()].clone(),
        ExprKind::Unary(op, a) => {
            let a = eval_mp(a, env)?;
            match op {
                UnaryOp::Neg => -a,
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Tan => {
                    if a.clone().cos().abs() < 1e-2 {
                        return None;
                    }
                    a.tan()
                }
                UnaryOp::Exp => {
                    if a > 30 {
                        return None;
                    }
                    a.exp()
                }
                UnaryOp::Ln => {
                    if a < 1e-3 {
                        return None;
                    }
                    a.ln()
                }
                UnaryOp::Sqrt => {
                    if a < 1e-3 {
                        return None;
                    }
                    a.sqrt()
                }
            }
        }
        ExprKind::Binary(op, l, r) => {
            let l = eval_mp(l, env)?;
            let r = eval_mp(r, env)?;
            match op {
                BinaryOp::Add => l + r,
                BinaryOp::Sub => l - r,
                BinaryOp::Mul => l * r,
                BinaryOp::Div => {
                    if r.clone().abs() < 1e-3 {
                        return None;
                    }
                    l / r
                }
            }
        }
        ExprKind::Pow(a, n) => eval_mp(a, env)?.pow(*n),
    };
    (out.is_finite() && out.clone().abs() < 1e8).then_some(out)
}

pub struct Oracle {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dxy: f64,
}

pub fn oracle(e: &Expr, x: f64, y: f64, a: f64) -> Option<Oracle> {
    let h = Float::with_val(PREC, 1e-20);
    let at = |dx: i32, dy: i32| {
        let env = HashMap::from([
            ("x", Float::with_val(PREC, x) + Float::with_val(PREC, &h * dx)),
            ("y", Float::with_val(PREC, y) + Float::with_val(PREC, &h * dy)),
            ("a", Float::with_val(PREC, a)),
        ]);
        eval_mp(e, &env)
    };
    let f0 = at(0, 0)?;
    let (fp, fm) = (at(1, 0)?, at(-1, 0)?);
    let (fpp, fpm, fmp, fmm) = (at(1, 1)?, at(1, -1)?, at(-1, 1)?, at(-1, -1)?);
    let h2 = Float::with_val(PREC, &h * &h);
    let dx = Float::with_val(PREC, &fp - &fm) / Float::with_val(PREC, &h * 2u32);
    let dxx = (fp + &fm - Float::with_val(PREC, &f0 * 2u32)) / &h2;
    let dxy = (fpp - fpm - fmp + fmm) / Float::with_val(PREC, &h2 * 4u32);
    Some(Oracle { value: f0.to_f64(), dx: dx.to_f64(), dxx: dxx.to_f64(), dxy: dxy.to_f64() })
}

/// Relative 1e-6, with an absolute floor of 1e-8 times the size of the
/// largest derivative at the point, so "near zero" is judged against the
/// problem's own scale.
pub fn close(got: f64, want: f64, scale: f64) -> bool {
    (got - want).abs() <= (1e-8 * scale.max(1.0)).max(1e-6 * want.abs())
}

impl Oracle {
    pub fn scale(&self) -> f64 {
        self.value.abs().max(self.dx.abs()).max(self.dxx.abs()).max(self.dxy.abs())
    }
}

pub fn bindings(x: f64, y: f64, a: f64) -> HashMap<String, f64> {
    HashMap::from([("x".to_string(), x), ("y".to_string(), y), ("a".to_string(), a)])
}


/// Builtin paths paired with the same formulas compiled from text.
pub fn implicit_pairs() -> Vec<(&'static str, ImplicitPathSpec, ImplicitPathSpec, f64)> {
    vec![
        (
            "circle",
            circle_implicit(Vector2::new(3.0, -7.0), 40.0).unwrap(),
            compile_implicit_path("(x - cx)^2 + (y - cy)^2 - r^2", &named(&[("cx", 3.0), ("cy", -7.0), ("r", 40.0)]))
                .unwrap(),
            100.0,
        ),
        (
            "ellipse",
            ellipse_implicit(Vector2::new(10.0, 5.0), 80.0, 30.0, 0.6).unwrap(),
            compile_implicit_path(
                "((cos(t)*(x - cx) + sin(t)*(y - cy))/a)^2 + ((-sin(t)*(x - cx) + cos(t)*(y - cy))/b)^2 - 1",
                &named(&[("cx", 10.0), ("cy", 5.0), ("a", 80.0), ("b", 30.0), ("t", 0.6)]),
            )
            .unwrap(),
            150.0,
        ),
    ]
}

pub fn parametric_pairs() -> Vec<(&'static str, ParametricPathSpec, ParametricPathSpec)> {
    vec![
        (
            "circle2d_param",
            circle2d_parametric(Vector2::new(-4.0, 2.0), 60.0).unwrap(),
            compile_parametric_path(&["r*cos(w) + xo", "r*sin(w) + yo"], &named(&[("r", 60.0), ("xo", -4.0), ("yo", 2.0)]))
                .unwrap(),
        ),
        (
            "ellipse3d",
            ellipse3d_parametric(5.0, -3.0, 150.0, 40.0, 80.0, 30.0).unwrap(),
            compile_parametric_path(
                &["r*cos(w) + xo", "r*sin(w) + yo", "0.5*(zh + zl + (zl - zh)*sin(alpha*pi/180 - w))"],
                &named(&[("r", 150.0), ("xo", 5.0), ("yo", -3.0), ("zl", 40.0), ("zh", 80.0), ("alpha", 30.0)]),
            )
            .unwrap(),
        ),
        (
            "lissajous3d",
            lissajous3d_parametric(
                Vector3::new(0.0, 10.0, 50.0),
                Vector3::new(200.0, 100.0, 10.0),
                Vector3::new(1.0, 2.0, 3.0),
                Vector3::new(0.0, std::f64::consts::FRAC_PI_2, 0.3),
            )
            .unwrap(),
            compile_parametric_path(
                &["cx + ax*cos(fx*w + px)", "cy + ay*cos(fy*w + py)", "cz + az*cos(fz*w + pz)"],
                &named(&[
                    ("cx", 0.0),
                    ("cy", 10.0),
                    ("cz", 50.0),
                    ("ax", 200.0),
                    ("ay", 100.0),
                    ("az", 10.0),
                    ("fx", 1.0),
                    ("fy", 2.0),
                    ("fz", 3.0),
                    ("px", 0.0),
                    ("py", std::f64::consts::FRAC_PI_2),
                    ("pz", 0.3),
                ]),
            )
            .unwrap(),
        ),
    ]
}

fn named(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Largest relative disagreement in φ, ∇φ and the Hessian over 100 random points.
pub fn implicit_deviation(builtin: &ImplicitPathSpec, dsl: &ImplicitPathSpec, half_extent: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p = Vector2::new(rng.random_range(-half_extent..half_extent), rng.random_range(-half_extent..half_extent));
        let (a, b) = (builtin.eval(p).unwrap(), dsl.eval(p).unwrap());
        worst = worst.max(rel_dev(a.phi, b.phi));
        for i in 0..2 {
            worst = worst.max(rel_dev(a.grad[i], b.grad[i]));
            for j in 0..2 {
                worst = worst.max(rel_dev(a.hess[(i, j)], b.hess[(i, j)]));
            }
        }
    }
    worst
}

/// Largest relative disagreement in f, f' and f'' over 100 random parameters.
pub fn parametric_deviation(builtin: &ParametricPathSpec, dsl: &ParametricPathSpec, seed: u64) -> f64 {
    assert_eq!(builtin.dim(), dsl.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let w = rng.random_range(-10.0..10.0);
        let (a, b) = (builtin.eval(w).unwrap(), dsl.eval(w).unwrap());
        for i in 0..3 {
            worst = worst.max(rel_dev(a.f[i], b.f[i])).max(rel_dev(a.fd[i], b.fd[i])).max(rel_dev(a.fdd[i], b.fdd[i]));
        }
    }
    worst
}
