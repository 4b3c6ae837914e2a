//! Types shared by both guidance laws.

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::expr::ExprError;

/// Guidance refuses to steer below this ground speed (m/s).
pub const V_MIN: f64 = 0.5;

/// Navigation solution the guidance laws consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    /// ENU position, meters.
    pub position: Vector3<f64>,
    /// Horizontal ground velocity, m/s.
    pub ground_velocity: Vector2<f64>,
    /// atan2 of the ground velocity, radians.
    pub course: f64,
    pub ground_speed: f64,
}

impl NavState {
    pub fn from_velocity(position: Vector3<f64>, ground_velocity: Vector2<f64>) -> Self {
        Self {
            position,
            ground_velocity,
            course: ground_velocity.y.atan2(ground_velocity.x),
            ground_speed: ground_velocity.norm(),
        }
    }

    pub fn xy(&self) -> Vector2<f64> {
        self.position.xy()
    }
}

/// Setpoints handed to the vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuidanceCommand {
    /// Heading-rate setpoint, rad/s, already saturated.
    pub omega_cmd: f64,
    /// Coordinated-turn roll equivalent of `omega_cmd`, radians (telemetry).
    pub roll_setpoint: f64,
    /// Vertical-speed setpoint, m/s (zero for planar guidance).
    pub vz_cmd: f64,
    /// Rate of the virtual coordinate w (parametric guidance only).
    pub w_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("guiding field is singular at ({x:.3}, {y:.3}): |field| = {norm:.3e}")]
    SingularField { x: f64, y: f64, norm: f64 },
    #[error("ground speed {speed:.3} m/s is below the minimum {V_MIN} m/s")]
    StallSpeed { speed: f64 },
    #[error("horizontal part of the parametric field vanished (|xi_xy| = {norm:.3e})")]
    DegenerateHorizontal { norm: f64 },
    #[error("path dimension {path} does not match guidance dimension {expected}")]
    DimensionMismatch { path: usize, expected: usize },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("nonpositive ground speed {0}")]
    NonPositiveSpeed(f64),
    #[error(transparent)]
    Path(#[from] ExprError),
}
