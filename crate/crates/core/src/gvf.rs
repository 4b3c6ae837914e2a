//! Guiding vector field for planar paths given as level sets φ(x, y) = 0.
//!
//! The field at p is `ṗ_d = τ − k_e·e·n` with `n = ∇φ(p)`, `τ = s·E·n`,
//! `E` the +90° rotation and `e` the level-set error. Aligning the ground
//! course with `ṗ_d / ‖ṗ_d‖` drives the vehicle onto the path and along it;
//! with `s = +1` a circle is flown counterclockwise.
//!
//! The field is undefined where `ṗ_d` vanishes, most notably where ∇φ = 0
//! (the center of a circle). Such points are reported as
//! [`GuidanceError::SingularField`].

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::guidance::{GuidanceCommand, GuidanceError, NavState, V_MIN};
use crate::numeric::wrap_angle;
use crate::paths::ImplicitPathSpec;
use crate::sim::ActuatorLimits;

/// Below this ‖ṗ_d‖ the field direction is considered undefined.
pub const EPS_SINGULAR: f64 = 1e-6;
/// Standard gravity used by the coordinated-turn relation, m/s².
pub const GRAVITY: f64 = 9.81;

const ROT90: Matrix2<f64> = Matrix2::new(0.0, -1.0, 1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GvfGains {
    /// Convergence gain, in inverse level-set units.
    pub ke: f64,
    /// Course alignment gain, 1/s.
    pub kn: f64,
    /// Sense of travel along the level set, +1 or −1.
    #[serde(default = "default_sense")]
    pub s: f64,
}

fn default_sense() -> f64 {
    1.0
}

impl GvfGains {
    pub fn new(ke: f64, kn: f64, s: f64) -> Result<Self, GuidanceError> {
        let g = Self { ke, kn, s };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.ke > 0.0 && self.ke.is_finite()) {
            return Err(GuidanceError::InvalidGains(format!("ke must be positive, got {}", self.ke)));
        }
        if !(self.kn > 0.0 && self.kn.is_finite()) {
            return Err(GuidanceError::InvalidGains(format!("kn must be positive, got {}", self.kn)));
        }
        if self.s != 1.0 && self.s != -1.0 {
            return Err(GuidanceError::InvalidGains(format!("s must be +1 or -1, got {}", self.s)));
        }
        Ok(())
    }
}

/// One evaluation of the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample2D {
    /// Unnormalized field τ − k_e·e·n.
    pub pd_dot: Vector2<f64>,
    /// Unit direction to follow.
    pub unit: Vector2<f64>,
    /// Tangential component τ.
    pub tangent: Vector2<f64>,
    /// Gradient n = ∇φ.
    pub normal: Vector2<f64>,
    /// Level-set error e = φ(p) − level.
    pub e: f64,
    pub grad_norm: f64,
}

/// Field at `p` for the zero level set.
pub fn field_2d(p: Vector2<f64>, path: &ImplicitPathSpec, gains: &GvfGains) -> Result<FieldSample2D, GuidanceError> {
    field_2d_at_level(p, path, gains, 0.0)
}

/// Field at `p` for the level set φ = `level` (used to fly inner or outer
/// offsets of a closed path).
pub fn field_2d_at_level(
    p: Vector2<f64>,
    path: &ImplicitPathSpec,
    gains: &GvfGains,
    level: f64,
) -> Result<FieldSample2D, GuidanceError> {
    let ev = path.eval(p)?;
    let n = ev.grad;
    let e = ev.phi - level;
    let tangent = gains.s * (ROT90 * n);
    let pd_dot = tangent - gains.ke * e * n;
    let norm = pd_dot.norm();
    if !(norm >= EPS_SINGULAR) {
        return Err(GuidanceError::SingularField { x: p.x, y: p.y, norm });
    }
    Ok(FieldSample2D { pd_dot, unit: pd_dot / norm, tangent, normal: n, e, grad_norm: n.norm() })
}

/// Time derivative of ṗ_d seen by a vehicle moving with `v_ground`:
/// `(s·E − k_e·e·I)·H·v − k_e·(∇φ·v)·∇φ`.
pub fn field_material_derivative(
    p: Vector2<f64>,
    v_ground: Vector2<f64>,
    path: &ImplicitPathSpec,
    gains: &GvfGains,
) -> Result<Vector2<f64>, GuidanceError> {
    material_derivative_at_level(p, v_ground, path, gains, 0.0)
}

pub fn material_derivative_at_level(
    p: Vector2<f64>,
    v_ground: Vector2<f64>,
    path: &ImplicitPathSpec,
    gains: &GvfGains,
    level: f64,
) -> Result<Vector2<f64>, GuidanceError> {
    // singularity check shares the field's threshold
    field_2d_at_level(p, path, gains, level)?;
    let ev = path.eval(p)?;
    let e = ev.phi - level;
    let hv = ev.hess * v_ground;
    Ok(gains.s * (ROT90 * hv) - gains.ke * e * hv - gains.ke * ev.grad.dot(&v_ground) * ev.grad)
}

/// Heading-rate command: proportional course alignment plus the rotation
/// rate of the field direction along the current ground velocity.
pub fn heading_rate_command(
    nav: &NavState,
    path: &ImplicitPathSpec,
    gains: &GvfGains,
    limits: &ActuatorLimits,
) -> Result<GuidanceCommand, GuidanceError> {
    heading_rate_command_at_level(nav, path, gains, limits, 0.0)
}

pub fn heading_rate_command_at_level(
    nav: &NavState,
    path: &ImplicitPathSpec,
    gains: &GvfGains,
    limits: &ActuatorLimits,
    level: f64,
) -> Result<GuidanceCommand, GuidanceError> {
    if !(nav.ground_speed > V_MIN) {
        return Err(GuidanceError::StallSpeed { speed: nav.ground_speed });
    }
    let p = nav.xy();
    let sample = field_2d_at_level(p, path, gains, level)?;
    let pd_rate = material_derivative_at_level(p, nav.ground_velocity, path, gains, level)?;
    let chi_d = sample.unit.y.atan2(sample.unit.x);
    let delta = wrap_angle(chi_d - nav.course);
    let pd = sample.pd_dot;
    let omega_ff = (pd.x * pd_rate.y - pd.y * pd_rate.x) / pd.norm_squared();
    let omega_cmd = (omega_ff + gains.kn * delta).clamp(-limits.omega_max, limits.omega_max);
    Ok(GuidanceCommand {
        omega_cmd,
        roll_setpoint: roll_setpoint(omega_cmd, nav.ground_speed, limits.roll_max)?,
        vz_cmd: 0.0,
        w_rate: 0.0,
    })
}

/// Coordinated-turn roll angle for a turn rate at a given ground speed,
/// `atan(ω·v/g)`, clamped to ±`roll_max`.
pub fn roll_setpoint(omega: f64, v_ground: f64, roll_max: f64) -> Result<f64, GuidanceError> {
    if !(v_ground > 0.0) {
        return Err(GuidanceError::NonPositiveSpeed(v_ground));
    }
    Ok((omega * v_ground / GRAVITY).atan().clamp(-roll_max, roll_max))
}
