//! Built-in trajectories with hand-written derivatives, and the name registry
//! used by scenario files.
//!
//! Implicit paths are level sets φ(x, y) = 0 consumed by the implicit GVF.
//! Parametric paths are curves f(w) consumed by the parametric GVF. Both
//! kinds can also come from the expression language
//! ([`crate::expr::compile_implicit_path`], [`crate::expr::compile_parametric_path`]).

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Rotation2, Vector2, Vector3};
use thiserror::Error;

use crate::expr::{CompiledImplicit, CompiledParametric, ExprError};
use crate::numeric::minimize_periodic;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("ellipse semi-axes must be positive, got a={a}, b={b}")]
    DegenerateAxes { a: f64, b: f64 },
    #[error("altitude range requires zh >= zl, got zl={zl}, zh={zh}")]
    InvalidAltitudeRange { zl: f64, zh: f64 },
    #[error("amplitudes must be nonnegative, got {0:?}")]
    NegativeAmplitude([f64; 3]),
    #[error("frequencies must be finite and nonnegative, got {0:?}")]
    InvalidFrequency([f64; 3]),
    #[error("parameter values must be finite")]
    NonFinite,
    #[error("unknown trajectory '{name}', available: {}", available.join(", "))]
    UnknownTrajectory { name: String, available: Vec<&'static str> },
    #[error("trajectory '{name}' takes {expected} parameters ({signature}), got {got}")]
    ParamCount { name: &'static str, expected: usize, signature: &'static str, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Level-set value, gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitEval {
    pub phi: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

/// f(w), f'(w), f''(w). Coordinates past the path dimension are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParametricEval {
    pub f: Vector3<f64>,
    pub fd: Vector3<f64>,
    pub fdd: Vector3<f64>,
}

/// How a distance-to-path figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Exact geometric distance.
    Exact,
    /// |φ| / ‖∇φ‖, exact only to first order.
    FirstOrder,
    /// ‖p − f(w)‖ against the vehicle's own virtual coordinate.
    ParametricError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: Vector2<f64>,
    pub a: f64,
    pub b: f64,
    pub rotation: f64,
    rot: Rotation2<f64>,
}

impl Ellipse {
    fn to_local(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.rot.inverse() * (p - self.center)
    }
}

#[derive(Debug, Clone)]
pub enum ImplicitPathSpec {
    Circle(Circle),
    Ellipse(Ellipse),
    Compiled(CompiledImplicit),
}

/// φ = (x−cx)² + (y−cy)² − r².
pub fn circle_implicit(center: Vector2<f64>, r: f64) -> Result<ImplicitPathSpec, PathError> {
    if !(center.iter().all(|v| v.is_finite()) && r.is_finite()) {
        return Err(PathError::NonFinite);
    }
    if r <= 0.0 {
        return Err(PathError::NonPositiveRadius(r));
    }
    Ok(ImplicitPathSpec::Circle(Circle { center, radius: r }))
}

/// φ = (x'/a)² + (y'/b)² − 1 with (x', y') the position in the ellipse frame,
/// rotated by `rotation` radians counterclockwise from ENU.
pub fn ellipse_implicit(center: Vector2<f64>, a: f64, b: f64, rotation: f64) -> Result<ImplicitPathSpec, PathError> {
    if !(center.iter().all(|v| v.is_finite()) && a.is_finite() && b.is_finite() && rotation.is_finite()) {
        return Err(PathError::NonFinite);
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(PathError::DegenerateAxes { a, b });
    }
    Ok(ImplicitPathSpec::Ellipse(Ellipse { center, a, b, rotation, rot: Rotation2::new(rotation) }))
}

impl ImplicitPathSpec {
    pub fn eval(&self, p: Vector2<f64>) -> Result<ImplicitEval, ExprError> {
        Ok(match self {
            ImplicitPathSpec::Circle(c) => {
                let d = p - c.center;
                ImplicitEval {
                    phi: d.x * d.x + d.y * d.y - c.radius * c.radius,
                    grad: 2.0 * d,
                    hess: Matrix2::new(2.0, 0.0, 0.0, 2.0),
                }
            }
            ImplicitPathSpec::Ellipse(e) => {
                let q = e.to_local(p);
                let (ia2, ib2) = (1.0 / (e.a * e.a), 1.0 / (e.b * e.b));
                let r = e.rot.matrix();
                let local_hess = Matrix2::new(2.0 * ia2, 0.0, 0.0, 2.0 * ib2);
                let mut hess = r * local_hess * r.transpose();
                // exact symmetry, rounding in the triple product can break it
                let off = 0.5 * (hess[(0, 1)] + hess[(1, 0)]);
                hess[(0, 1)] = off;
                hess[(1, 0)] = off;
                ImplicitEval {
                    phi: q.x * q.x * ia2 + q.y * q.y * ib2 - 1.0,
                    grad: r * Vector2::new(2.0 * q.x * ia2, 2.0 * q.y * ib2),
                    hess,
                }
            }
            ImplicitPathSpec::Compiled(c) => return c.eval(p),
        })
    }

    pub fn phi(&self, p: Vector2<f64>) -> Result<f64, ExprError> {
        match self {
            ImplicitPathSpec::Compiled(c) => c.value(p),
            _ => self.eval(p).map(|e| e.phi),
        }
    }

    /// Positional parameters in registry order.
    pub fn params(&self) -> Vec<f64> {
        match self {
            ImplicitPathSpec::Circle(c) => vec![c.center.x, c.center.y, c.radius],
            ImplicitPathSpec::Ellipse(e) => vec![e.center.x, e.center.y, e.a, e.b, e.rotation],
            ImplicitPathSpec::Compiled(c) => c.params().values().copied().collect(),
        }
    }

    pub fn as_circle(&self) -> Option<&Circle> {
        match self {
            ImplicitPathSpec::Circle(c) => Some(c),
            _ => None,
        }
    }

    /// Axis-aligned box around the zero level set, when known.
    pub fn bounding_box(&self) -> Option<(Vector2<f64>, Vector2<f64>)> {
        match self {
            ImplicitPathSpec::Circle(c) => {
                let r = Vector2::repeat(c.radius);
                Some((c.center - r, c.center + r))
            }
            ImplicitPathSpec::Ellipse(e) => {
                let (s, c) = e.rotation.sin_cos();
                let hx = ((e.a * c).powi(2) + (e.b * s).powi(2)).sqrt();
                let hy = ((e.a * s).powi(2) + (e.b * c).powi(2)).sqrt();
                let h = Vector2::new(hx, hy);
                Some((e.center - h, e.center + h))
            }
            ImplicitPathSpec::Compiled(_) => None,
        }
    }

    /// Distance from `p` to the zero level set. Exact for circles and
    /// ellipses (the ellipse by projection onto its angle parameter),
    /// first-order |φ|/‖∇φ‖ otherwise.
    pub fn distance(&self, p: Vector2<f64>) -> Result<(f64, DistanceKind), ExprError> {
        match self {
            ImplicitPathSpec::Circle(c) => Ok((((p - c.center).norm() - c.radius).abs(), DistanceKind::Exact)),
            ImplicitPathSpec::Ellipse(e) => {
                let q = e.to_local(p);
                let (_, d2) = minimize_periodic(
                    |t| {
                        let (s, c) = t.sin_cos();
                        (q.x - e.a * c).powi(2) + (q.y - e.b * s).powi(2)
                    },
                    TAU,
                    720,
                    1e-9,
                );
                Ok((d2.sqrt(), DistanceKind::Exact))
            }
            ImplicitPathSpec::Compiled(_) => {
                let ev = self.eval(p)?;
                Ok((first_order_distance(&ev), DistanceKind::FirstOrder))
            }
        }
    }
}

/// |φ| / ‖∇φ‖; infinite where the gradient vanishes off the path.
pub fn first_order_distance(ev: &ImplicitEval) -> f64 {
    let g = ev.grad.norm();
    if g == 0.0 {
        if ev.phi == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ev.phi.abs() / g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCircle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

/// Tilted circle whose altitude swings between `zl` and `zh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse3d {
    pub xo: f64,
    pub yo: f64,
    pub r: f64,
    pub zl: f64,
    pub zh: f64,
    /// Phase of the altitude swing, in degrees.
    pub alpha_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lissajous3d {
    pub center: Vector3<f64>,
    pub amplitudes: Vector3<f64>,
    pub frequencies: Vector3<f64>,
    pub phases: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub enum ParametricPathSpec {
    Circle2d(ParamCircle),
    Ellipse3d(Ellipse3d),
    Lissajous3d(Lissajous3d),
    Compiled(CompiledParametric),
}

/// f(w) = (xo + r cos w, yo + r sin w).
pub fn circle2d_parametric(center: Vector2<f64>, r: f64) -> Result<ParametricPathSpec, PathError> {
    if !(center.iter().all(|v| v.is_finite()) && r.is_finite()) {
        return Err(PathError::NonFinite);
    }
    if r <= 0.0 {
        return Err(PathError::NonPositiveRadius(r));
    }
    Ok(ParametricPathSpec::Circle2d(ParamCircle { center, radius: r }))
}

pub fn ellipse3d_parametric(xo: f64, yo: f64, r: f64, zl: f64, zh: f64, alpha_deg: f64) -> Result<ParametricPathSpec, PathError> {
    if ![xo, yo, r, zl, zh, alpha_deg].iter().all(|v| v.is_finite()) {
        return Err(PathError::NonFinite);
    }
    if r <= 0.0 {
        return Err(PathError::NonPositiveRadius(r));
    }
    if zh < zl {
        return Err(PathError::InvalidAltitudeRange { zl, zh });
    }
    Ok(ParametricPathSpec::Ellipse3d(Ellipse3d { xo, yo, r, zl, zh, alpha_deg }))
}

/// f_i(w) = c_i + A_i cos(ω_i w + φ_i).
pub fn lissajous3d_parametric(
    center: Vector3<f64>,
    amplitudes: Vector3<f64>,
    frequencies: Vector3<f64>,
    phases: Vector3<f64>,
) -> Result<ParametricPathSpec, PathError> {
    let all = center.iter().chain(amplitudes.iter()).chain(frequencies.iter()).chain(phases.iter());
    if !all.into_iter().all(|v| v.is_finite()) {
        return Err(PathError::NonFinite);
    }
    if amplitudes.iter().any(|&a| a < 0.0) {
        return Err(PathError::NegativeAmplitude(amplitudes.into()));
    }
    if frequencies.iter().any(|&f| f < 0.0) {
        return Err(PathError::InvalidFrequency(frequencies.into()));
    }
    Ok(ParametricPathSpec::Lissajous3d(Lissajous3d { center, amplitudes, frequencies, phases }))
}

impl ParametricPathSpec {
    pub fn dim(&self) -> usize {
        match self {
            ParametricPathSpec::Circle2d(_) => 2,
            ParametricPathSpec::Ellipse3d(_) | ParametricPathSpec::Lissajous3d(_) => 3,
            ParametricPathSpec::Compiled(c) => c.dim(),
        }
    }

    pub fn eval(&self, w: f64) -> Result<ParametricEval, ExprError> {
        Ok(match self {
            ParametricPathSpec::Circle2d(c) => {
                let (s, co) = w.sin_cos();
                let r = c.radius;
                ParametricEval {
                    f: Vector3::new(r * co + c.center.x, r * s + c.center.y, 0.0),
                    fd: Vector3::new(-r * s, r * co, 0.0),
                    fdd: Vector3::new(-r * co, -r * s, 0.0),
                }
            }
            ParametricPathSpec::Ellipse3d(e) => {
                let (s, c) = w.sin_cos();
                let alpha = e.alpha_deg * PI / 180.0;
                let (sa, ca) = (alpha - w).sin_cos();
                ParametricEval {
                    f: Vector3::new(e.r * c + e.xo, e.r * s + e.yo, 0.5 * (e.zh + e.zl + (e.zl - e.zh) * sa)),
                    fd: Vector3::new(-e.r * s, e.r * c, -0.5 * (e.zl - e.zh) * ca),
                    fdd: Vector3::new(-e.r * c, -e.r * s, -0.5 * (e.zl - e.zh) * sa),
                }
            }
            ParametricPathSpec::Lissajous3d(l) => {
                let mut out = ParametricEval::default();
                for i in 0..3 {
                    let (a, om) = (l.amplitudes[i], l.frequencies[i]);
                    let (s, c) = (om * w + l.phases[i]).sin_cos();
                    out.f[i] = l.center[i] + a * c;
                    out.fd[i] = -a * om * s;
                    out.fdd[i] = -a * om * om * c;
                }
                out
            }
            ParametricPathSpec::Compiled(c) => return c.eval(w),
        })
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            ParametricPathSpec::Circle2d(c) => vec![c.center.x, c.center.y, c.radius],
            ParametricPathSpec::Ellipse3d(e) => vec![e.xo, e.yo, e.r, e.zl, e.zh, e.alpha_deg],
            ParametricPathSpec::Lissajous3d(l) => l
                .center
                .iter()
                .chain(l.amplitudes.iter())
                .chain(l.frequencies.iter())
                .chain(l.phases.iter())
                .copied()
                .collect(),
            ParametricPathSpec::Compiled(c) => c.params().values().copied().collect(),
        }
    }

    /// Smallest w-period of the curve, if it is closed. Lissajous curves are
    /// closed when every frequency is rational with denominator at most 64.
    pub fn period(&self) -> Option<f64> {
        match self {
            ParametricPathSpec::Circle2d(_) | ParametricPathSpec::Ellipse3d(_) => Some(TAU),
            ParametricPathSpec::Lissajous3d(l) => {
                let active: Vec<f64> = (0..3)
                    .filter(|&i| l.amplitudes[i] != 0.0 && l.frequencies[i] != 0.0)
                    .map(|i| l.frequencies[i])
                    .collect();
                if active.is_empty() {
                    return Some(TAU);
                }
                // smallest k with every ω·k integral, then divide out their gcd
                (1..=64u32).find_map(|k| {
                    let cycles: Vec<f64> = active.iter().map(|&f| f * k as f64).collect();
                    if cycles.iter().all(|c| (c - c.round()).abs() < 1e-9 && c.round() > 0.0) {
                        let g = cycles.iter().fold(0u64, |a, &c| gcd(a, c.round() as u64));
                        Some(TAU * k as f64 / g as f64)
                    } else {
                        None
                    }
                })
            }
            ParametricPathSpec::Compiled(_) => None,
        }
    }

    /// Range of w used for sampling and projection: one period, or [0, 2π]
    /// for open or unknown curves.
    pub fn sample_range(&self) -> f64 {
        self.period().unwrap_or(TAU)
    }

    /// Bounding box of the physical curve (z ignored for 2D paths).
    pub fn bounding_box(&self) -> Result<(Vector3<f64>, Vector3<f64>), ExprError> {
        Ok(match self {
            ParametricPathSpec::Circle2d(c) => {
                let r = Vector3::new(c.radius, c.radius, 0.0);
                let c = Vector3::new(c.center.x, c.center.y, 0.0);
                (c - r, c + r)
            }
            ParametricPathSpec::Ellipse3d(e) => {
                (Vector3::new(e.xo - e.r, e.yo - e.r, e.zl), Vector3::new(e.xo + e.r, e.yo + e.r, e.zh))
            }
            ParametricPathSpec::Lissajous3d(l) => (l.center - l.amplitudes, l.center + l.amplitudes),
            ParametricPathSpec::Compiled(_) => {
                let range = self.sample_range();
                let mut lo = Vector3::repeat(f64::INFINITY);
                let mut hi = Vector3::repeat(f64::NEG_INFINITY);
                for k in 0..=512 {
                    let f = self.eval(range * k as f64 / 512.0)?.f;
                    lo = lo.inf(&f);
                    hi = hi.sup(&f);
                }
                (lo, hi)
            }
        })
    }

    /// Parameter of the point on the curve closest to `p` (first `dim`
    /// coordinates), searched over one sample range.
    pub fn project(&self, p: Vector3<f64>) -> Result<f64, ExprError> {
        let n = self.dim();
        let range = self.sample_range();
        // surface evaluation errors by checking one sample up front
        self.eval(0.0)?;
        let (w, _) = minimize_periodic(
            |w| match self.eval(w) {
                Ok(ev) => (0..n).map(|i| (p[i] - ev.f[i]).powi(2)).sum(),
                Err(_) => f64::INFINITY,
            },
            range,
            1024,
            1e-9,
        );
        Ok(w)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A path of either kind, as produced by the registry or a path file.
#[derive(Debug, Clone)]
pub enum Trajectory {
    Implicit(ImplicitPathSpec),
    Parametric(ParametricPathSpec),
}

struct RegistryEntry {
    name: &'static str,
    signature: &'static str,
    arity: usize,
    build: fn(&[f64]) -> Result<Trajectory, PathError>,
}

const REGISTRY: [RegistryEntry; 5] = [
    RegistryEntry {
        name: "circle",
        signature: "cx, cy, r",
        arity: 3,
        build: |p| circle_implicit(Vector2::new(p[0], p[1]), p[2]).map(Trajectory::Implicit),
    },
    RegistryEntry {
        name: "ellipse",
        signature: "cx, cy, a, b, rotation_rad",
        arity: 5,
        build: |p| ellipse_implicit(Vector2::new(p[0], p[1]), p[2], p[3], p[4]).map(Trajectory::Implicit),
    },
    RegistryEntry {
        name: "ellipse3d",
        signature: "xo, yo, r, zl, zh, alpha_deg",
        arity: 6,
        build: |p| ellipse3d_parametric(p[0], p[1], p[2], p[3], p[4], p[5]).map(Trajectory::Parametric),
    },
    RegistryEntry {
        name: "lissajous3d",
        signature: "cx, cy, cz, ax, ay, az, fx, fy, fz, px, py, pz",
        arity: 12,
        build: |p| {
            lissajous3d_parametric(
                Vector3::new(p[0], p[1], p[2]),
                Vector3::new(p[3], p[4], p[5]),
                Vector3::new(p[6], p[7], p[8]),
                Vector3::new(p[9], p[10], p[11]),
            )
            .map(Trajectory::Parametric)
        },
    },
    RegistryEntry {
        name: "circle2d_param",
        signature: "xo, yo, r",
        arity: 3,
        build: |p| circle2d_parametric(Vector2::new(p[0], p[1]), p[2]).map(Trajectory::Parametric),
    },
];

/// Names accepted by [`builtin`].
pub fn registry_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

/// `(name, positional signature, kind)` for every registry entry.
pub fn registry_listing() -> Vec<(&'static str, &'static str, &'static str)> {
    REGISTRY
        .iter()
        .map(|e| {
            let kind = if e.name.starts_with("circle2d") || e.name.ends_with("3d") { "parametric" } else { "implicit" };
            (e.name, e.signature, kind)
        })
        .collect()
}

/// Builds a registry trajectory from positional parameters, in the same
/// order as the flight-plan style call `circle(cx, cy, r)`.
pub fn builtin(name: &str, params: &[f64]) -> Result<Trajectory, PathError> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| PathError::UnknownTrajectory { name: name.to_string(), available: registry_names() })?;
    if params.len() != entry.arity {
        return Err(PathError::ParamCount {
            name: entry.name,
            expected: entry.arity,
            signature: entry.signature,
            got: params.len(),
        });
    }
    (entry.build)(params)
}
