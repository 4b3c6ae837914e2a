//! Parametric guiding vector field.
//!
//! A curve p = f(w) in n dimensions is lifted to the (n+1)-dimensional curve
//! `(f(w·β·s), w)` described by the n error coordinates
//! `e_i = p_i − f_i(w·β·s)`. The field over (p, w) is
//!
//! ```text
//! ξ = (−1)ⁿ·(β·s·f'(wb), 1) − Σ k_i·e_i·∇e_i,   ∇e_i = (0,…,1,…,0, −β·s·f_i'(wb))
//! ```
//!
//! whose tangential term is parallel to the lifted curve, so ξ never
//! vanishes: if its physical part is zero then `k_i e_i = (−1)ⁿβ s f_i'` and
//! the w-component is `(−1)ⁿ(1 + β²‖f'‖²)`. Because the virtual coordinate
//! separates the branches, self-intersecting curves are tracked without
//! ambiguity. The vehicle follows the physical projection of ξ while w is
//! integrated as controller state.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::guidance::{GuidanceCommand, GuidanceError, NavState, V_MIN};
use crate::gvf::roll_setpoint;
use crate::numeric::wrap_angle;
use crate::paths::{ParametricEval, ParametricPathSpec};
use crate::sim::ActuatorLimits;

/// Below this norm of (ξ_x, ξ_y) the commanded course is undefined.
pub const EPS_HORIZONTAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PGvfGains {
    pub kx: f64,
    pub ky: f64,
    #[serde(default = "default_kz")]
    pub kz: f64,
    /// Course alignment gain, 1/s.
    pub kn: f64,
    /// Scale between w and the path parameter: wb = w·β·s.
    pub beta: f64,
    #[serde(default = "default_sense")]
    pub s: f64,
}

fn default_kz() -> f64 {
    1.0
}

fn default_sense() -> f64 {
    1.0
}

impl PGvfGains {
    pub fn new(kx: f64, ky: f64, kz: f64, kn: f64, beta: f64, s: f64) -> Result<Self, GuidanceError> {
        let g = Self { kx, ky, kz, kn, beta, s };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        for (name, v) in [("kx", self.kx), ("ky", self.ky), ("kz", self.kz), ("kn", self.kn), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GuidanceError::InvalidGains(format!("{name} must be positive, got {v}")));
            }
        }
        if self.s != 1.0 && self.s != -1.0 {
            return Err(GuidanceError::InvalidGains(format!("s must be +1 or -1, got {}", self.s)));
        }
        Ok(())
    }

    pub fn k(&self) -> Vector3<f64> {
        Vector3::new(self.kx, self.ky, self.kz)
    }

    /// Chain-rule factor dwb/dw.
    pub fn scale(&self) -> f64 {
        self.beta * self.s
    }
}

/// One evaluation of ξ. Vector entries past `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiSample {
    pub dim: usize,
    /// Error coordinates e = p − f(wb).
    pub e: Vector3<f64>,
    /// Physical part of ξ.
    pub xi_phys: Vector3<f64>,
    /// Virtual (w) component of ξ.
    pub xi_w: f64,
}

impl XiSample {
    pub fn norm(&self) -> f64 {
        (self.xi_phys.norm_squared() + self.xi_w * self.xi_w).sqrt()
    }

    /// ξ as an (n+1)-vector.
    pub fn xi(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.xi_phys.iter().take(self.dim).copied().collect();
        v.push(self.xi_w);
        v
    }
}

fn parity(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `e_i = p_i − f_i(w·β·s)` for the first `dim` coordinates, together with
/// the path evaluation at wb.
pub fn parametric_errors(
    p: Vector3<f64>,
    w: f64,
    path: &ParametricPathSpec,
    gains: &PGvfGains,
) -> Result<(Vector3<f64>, ParametricEval), GuidanceError> {
    let ev = path.eval(w * gains.scale())?;
    let mut e = Vector3::zeros();
    for i in 0..path.dim() {
        e[i] = p[i] - ev.f[i];
    }
    Ok((e, ev))
}

/// ξ from the error coordinates and f'(wb).
pub fn field_xi(e: Vector3<f64>, fd: Vector3<f64>, gains: &PGvfGains, dim: usize) -> XiSample {
    let sign = parity(dim);
    let k = gains.k();
    let bs = gains.scale();
    let mut xi_phys = Vector3::zeros();
    let mut xi_w = sign;
    for i in 0..dim {
        xi_phys[i] = sign * bs * fd[i] - k[i] * e[i];
        xi_w += k[i] * e[i] * bs * fd[i];
    }
    let mut e_n = Vector3::zeros();
    e_n.rows_mut(0, dim).copy_from(&e.rows(0, dim));
    XiSample { dim, e: e_n, xi_phys, xi_w }
}

/// ξ at (p, w).
pub fn xi_at(p: Vector3<f64>, w: f64, path: &ParametricPathSpec, gains: &PGvfGains) -> Result<XiSample, GuidanceError> {
    let (e, ev) = parametric_errors(p, w, path, gains)?;
    Ok(field_xi(e, ev.fd, gains, path.dim()))
}

/// Heading-rate and vertical-speed setpoints plus the w rate.
///
/// The course setpoint is the direction of (ξ_x, ξ_y). The vertical speed
/// matches the slope of ξ at the current ground speed, and w advances at
/// `ξ_w·v/‖(ξ_x, ξ_y)‖` so progress along the path keeps pace with the
/// vehicle. The path's second derivatives are not used (no feedforward).
pub fn pgvf_guidance(
    nav: &NavState,
    w: f64,
    path: &ParametricPathSpec,
    gains: &PGvfGains,
    limits: &ActuatorLimits,
) -> Result<(GuidanceCommand, XiSample), GuidanceError> {
    if !(nav.ground_speed > V_MIN) {
        return Err(GuidanceError::StallSpeed { speed: nav.ground_speed });
    }
    let xi = xi_at(nav.position, w, path, gains)?;
    let h = xi.xi_phys.xy().norm();
    if !(h > EPS_HORIZONTAL) {
        return Err(GuidanceError::DegenerateHorizontal { norm: h });
    }
    let chi_d = xi.xi_phys.y.atan2(xi.xi_phys.x);
    let omega_cmd = (gains.kn * wrap_angle(chi_d - nav.course)).clamp(-limits.omega_max, limits.omega_max);
    let v = nav.ground_speed;
    let vz_cmd = if xi.dim == 3 { (v * xi.xi_phys.z / h).clamp(-limits.vz_max, limits.vz_max) } else { 0.0 };
    let cmd = GuidanceCommand {
        omega_cmd,
        roll_setpoint: roll_setpoint(omega_cmd, v, limits.roll_max)?,
        vz_cmd,
        w_rate: xi.xi_w * v / h,
    };
    Ok((cmd, xi))
}

/// Explicit Euler step of the virtual coordinate.
pub fn step_w(w: f64, w_rate: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    w + w_rate * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{circle2d_parametric, ellipse3d_parametric};
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn unit() -> PGvfGains {
        PGvfGains::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn limits() -> ActuatorLimits {
        ActuatorLimits::from_roll_limit(0.75, 11.0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn errors_examples() {
        let c = circle2d_parametric(Vector2::zeros(), 1.0).unwrap();
        let (e, _) = parametric_errors(Vector3::new(1.0, 0.0, 0.0), 0.0, &c, &unit()).unwrap();
        assert_eq!(e, Vector3::zeros());
        let (e, _) = parametric_errors(Vector3::new(2.0, 0.0, 0.0), 0.0, &c, &unit()).unwrap();
        assert_eq!(e, Vector3::new(1.0, 0.0, 0.0));

        let (xo, yo, r, zl, zh) = (10.0, -20.0, 80.0, 40.0, 60.0);
        let el = ellipse3d_parametric(xo, yo, r, zl, zh, 30.0).unwrap();
        let z0 = el.eval(0.0).unwrap().f.z;
        let (e, _) = parametric_errors(Vector3::new(xo + r, yo, z0), 0.0, &el, &unit()).unwrap();
        assert_eq!(e, Vector3::zeros());
    }

    #[test]
    fn on_path_circle_field() {
        let xi = field_xi(Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0), &unit(), 2);
        assert_eq!(xi.xi(), vec![0.0, 1.0, 1.0]);
        let xi3 = field_xi(Vector3::zeros(), Vector3::new(0.3, -2.0, 0.7), &unit(), 3);
        assert_eq!(xi3.xi_w, -1.0);
    }

    #[test]
    fn beta_and_sense_enter_the_chain_rule() {
        let c = circle2d_parametric(Vector2::zeros(), 10.0).unwrap();
        let g = PGvfGains::new(0.5, 0.5, 1.0, 1.0, 0.1, -1.0).unwrap();
        // w = -5 → wb = 0.5
        let p = Vector3::new(12.0, 3.0, 0.0);
        let xi = xi_at(p, -5.0, &c, &g).unwrap();
        let ev = c.eval(0.5).unwrap();
        let e = p - ev.f;
        let bs = -0.1;
        assert_relative_eq!(xi.xi_phys.x, bs * ev.fd.x - 0.5 * e.x, epsilon = 1e-12);
        assert_relative_eq!(xi.xi_phys.y, bs * ev.fd.y - 0.5 * e.y, epsilon = 1e-12);
        assert_relative_eq!(xi.xi_w, 1.0 + 0.5 * bs * (e.x * ev.fd.x + e.y * ev.fd.y), epsilon = 1e-12);
    }

    #[test]
    fn gain_only_scales_its_own_axis() {
        let e = Vector3::new(2.0, -1.0, 0.5);
        let fd = Vector3::new(0.3, 0.8, -0.4);
        let g1 = PGvfGains::new(1.0, 2.0, 3.0, 1.0, 0.7, 1.0).unwrap();
        let g2 = PGvfGains { kx: 4.0, ..g1 };
        let a = field_xi(e, fd, &g1, 3);
        let b = field_xi(e, fd, &g2, 3);
        assert_eq!(a.xi_phys.y, b.xi_phys.y);
        assert_eq!(a.xi_phys.z, b.xi_phys.z);
        assert_relative_eq!(b.xi_phys.x - a.xi_phys.x, -(4.0 - 1.0) * e.x, epsilon = 1e-12);
        assert_relative_eq!(b.xi_w - a.xi_w, (4.0 - 1.0) * e.x * 0.7 * fd.x, epsilon = 1e-12);
    }

    #[test]
    fn guidance_on_flat_circle_matches_speed() {
        let r = 100.0;
        let c = circle2d_parametric(Vector2::zeros(), r).unwrap();
        let g = PGvfGains::new(0.02, 0.02, 0.02, 1.0, 0.01, 1.0).unwrap();
        // on path at wb = 0 travelling counterclockwise
        let nav = NavState::from_velocity(Vector3::new(r, 0.0, 0.0), Vector2::new(0.0, 11.0));
        let (cmd, xi) = pgvf_guidance(&nav, 0.0, &c, &g, &limits()).unwrap();
        assert_eq!(xi.e, Vector3::zeros());
        assert_eq!(cmd.omega_cmd, 0.0);
        assert_eq!(cmd.vz_cmd, 0.0);
        assert_relative_eq!((cmd.w_rate * g.scale()).abs() * r, 11.0, max_relative = 1e-12);
    }

    #[test]
    fn level_3d_path_commands_no_climb() {
        let el = ellipse3d_parametric(0.0, 0.0, 100.0, 50.0, 50.0, 0.0).unwrap();
        let g = PGvfGains::new(0.02, 0.02, 0.02, 1.0, 0.01, 1.0).unwrap();
        let nav = NavState::from_velocity(Vector3::new(100.0, 0.0, 50.0), Vector2::new(0.0, -11.0));
        let (cmd, xi) = pgvf_guidance(&nav, 0.0, &el, &g, &limits()).unwrap();
        assert_eq!(xi.xi_phys.z, 0.0);
        assert_eq!(cmd.vz_cmd, 0.0);
        assert_eq!(cmd.omega_cmd, 0.0);
    }

    #[test]
    fn vertical_speed_is_clamped() {
        let el = ellipse3d_parametric(0.0, 0.0, 100.0, 0.0, 100.0, 0.0).unwrap();
        let g = PGvfGains::new(0.02, 0.02, 0.02, 1.0, 0.01, 1.0).unwrap();
        // far above the path: strong descent requested
        let nav = NavState::from_velocity(Vector3::new(100.0, 0.0, 400.0), Vector2::new(0.0, -11.0));
        let (cmd, _) = pgvf_guidance(&nav, 0.0, &el, &g, &limits()).unwrap();
        assert_eq!(cmd.vz_cmd, -3.0);
    }

    #[test]
    fn stall_is_rejected() {
        let c = circle2d_parametric(Vector2::zeros(), 10.0).unwrap();
        let nav = NavState::from_velocity(Vector3::new(10.0, 0.0, 0.0), Vector2::new(0.0, 0.1));
        assert!(matches!(pgvf_guidance(&nav, 0.0, &c, &unit(), &limits()), Err(GuidanceError::StallSpeed { .. })));
    }

    #[test]
    fn euler_step() {
        assert_eq!(step_w(1.25, 0.0, 0.02), 1.25);
        assert_eq!(step_w(0.0, -1.0, 0.05), -0.05);
    }
}
