//! Kinematic fixed-wing model under wind.
//!
//! The airframe flies at constant airspeed along its heading ψ; the ground
//! velocity is that air-relative velocity plus the wind. Guidance closes the
//! loop on ground course, so flying a straight track through a crosswind
//! points the nose into the wind (crabbing) without any sideslip.

use std::f64::consts::TAU;

use nalgebra::{SVector, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::guidance::{GuidanceCommand, NavState};
use crate::gvf::GRAVITY;
use crate::numeric::wrap_angle;

/// Largest integration step accepted by [`step_vehicle`], seconds.
pub const DT_MAX: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step {0} s outside (0, {DT_MAX}]")]
    DtOutOfRange(f64),
    #[error("ground speed vanished (wind cancels airspeed)")]
    ZeroGroundSpeed,
    #[error("invalid actuator limits: {0}")]
    InvalidLimits(String),
    #[error("invalid wind model: {0}")]
    InvalidWind(String),
    #[error("airspeed must be positive, got {0}")]
    InvalidAirspeed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// ENU position, meters.
    pub position: Vector3<f64>,
    /// Nose heading ψ, radians in (−π, π], measured from east.
    pub heading: f64,
    pub airspeed: f64,
    pub vertical_speed: f64,
    /// Virtual path coordinate (parametric guidance only).
    pub w: f64,
    pub t: f64,
}

impl VehicleState {
    pub fn new(position: Vector3<f64>, heading: f64, airspeed: f64) -> Result<Self, SimError> {
        if !(airspeed > 0.0 && airspeed.is_finite()) {
            return Err(SimError::InvalidAirspeed(airspeed));
        }
        Ok(Self { position, heading: wrap_angle(heading), airspeed, vertical_speed: 0.0, w: 0.0, t: 0.0 })
    }

    pub fn air_velocity(&self) -> Vector2<f64> {
        let (s, c) = self.heading.sin_cos();
        self.airspeed * Vector2::new(c, s)
    }
}

/// Mean wind plus a slow sinusoidal gust with seeded phases.
#[derive(Debug, Clone, PartialEq)]
pub struct WindModel {
    pub mean: Vector2<f64>,
    pub gust_amplitude: f64,
    pub gust_period: f64,
    pub seed: u64,
    phases: [f64; 2],
}

impl WindModel {
    pub fn new(mean: Vector2<f64>, gust_amplitude: f64, gust_period: f64, seed: u64) -> Result<Self, SimError> {
        if !(gust_amplitude >= 0.0 && gust_amplitude.is_finite()) {
            return Err(SimError::InvalidWind(format!("gust amplitude must be >= 0, got {gust_amplitude}")));
        }
        if !(gust_period > 0.0 && gust_period.is_finite()) {
            return Err(SimError::InvalidWind(format!("gust period must be > 0, got {gust_period}")));
        }
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(SimError::InvalidWind("mean wind must be finite".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
        Ok(Self { mean, gust_amplitude, gust_period, seed, phases })
    }

    pub fn constant(mean: Vector2<f64>) -> Self {
        Self { mean, gust_amplitude: 0.0, gust_period: 1.0, seed: 0, phases: [0.0; 2] }
    }

    pub fn calm() -> Self {
        Self::constant(Vector2::zeros())
    }
}

/// Wind velocity (ENU, m/s) at time `t`.
pub fn wind_at(wind: &WindModel, t: f64) -> Vector2<f64> {
    if wind.gust_amplitude == 0.0 {
        return wind.mean;
    }
    let arg = TAU * t / wind.gust_period;
    wind.mean + wind.gust_amplitude * Vector2::new((arg + wind.phases[0]).cos(), (arg + wind.phases[1]).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActuatorLimits {
    /// Heading-rate saturation, rad/s.
    pub omega_max: f64,
    /// Roll saturation, radians.
    pub roll_max: f64,
    /// Vertical-speed saturation, m/s.
    pub vz_max: f64,
    /// First-order lag of the vertical-speed loop, seconds.
    pub vz_time_constant: f64,
}

impl ActuatorLimits {
    /// Derives the turn-rate limit from the roll limit at the nominal
    /// airspeed: ω_max = g·tan(roll_max)/V.
    pub fn from_roll_limit(roll_max: f64, nominal_airspeed: f64, vz_max: f64, vz_time_constant: f64) -> Result<Self, SimError> {
        if !(roll_max > 0.0 && roll_max < std::f64::consts::FRAC_PI_2) {
            return Err(SimError::InvalidLimits(format!("roll_max must be in (0, pi/2), got {roll_max}")));
        }
        if !(nominal_airspeed > 0.0) {
            return Err(SimError::InvalidAirspeed(nominal_airspeed));
        }
        if !(vz_max > 0.0 && vz_max.is_finite()) {
            return Err(SimError::InvalidLimits(format!("vz_max must be positive, got {vz_max}")));
        }
        if !(vz_time_constant > 0.0 && vz_time_constant.is_finite()) {
            return Err(SimError::InvalidLimits(format!("vz_time_constant must be positive, got {vz_time_constant}")));
        }
        Ok(Self {
            omega_max: GRAVITY * roll_max.tan() / nominal_airspeed,
            roll_max,
            vz_max,
            vz_time_constant,
        })
    }
}

/// Ground course, ground speed and ground velocity at time `t`.
pub fn ground_course_and_speed(state: &VehicleState, wind: &WindModel, t: f64) -> Result<(f64, f64, Vector2<f64>), SimError> {
    let v = state.air_velocity() + wind_at(wind, t);
    let speed = v.norm();
    if speed < 1e-9 {
        return Err(SimError::ZeroGroundSpeed);
    }
    Ok((v.y.atan2(v.x), speed, v))
}

/// Navigation solution at the state's own time.
pub fn nav_state(state: &VehicleState, wind: &WindModel) -> Result<NavState, SimError> {
    let (course, ground_speed, ground_velocity) = ground_course_and_speed(state, wind, state.t)?;
    Ok(NavState { position: state.position, ground_velocity, course, ground_speed })
}

type Rk4State = SVector<f64, 5>;

/// Advances one vehicle by `dt` under a held command. (x, y, ψ, z, v_z) are
/// integrated together with classical RK4; the vertical speed relaxes toward
/// the clamped setpoint with a first-order lag.
pub fn step_vehicle(
    state: &VehicleState,
    cmd: &GuidanceCommand,
    wind: &WindModel,
    limits: &ActuatorLimits,
    dt: f64,
) -> Result<VehicleState, SimError> {
    if !(dt > 0.0 && dt <= DT_MAX) {
        return Err(SimError::DtOutOfRange(dt));
    }
    let omega = cmd.omega_cmd.clamp(-limits.omega_max, limits.omega_max);
    let vz_target = cmd.vz_cmd.clamp(-limits.vz_max, limits.vz_max);
    let va = state.airspeed;
    let tau = limits.vz_time_constant;
    let deriv = |t: f64, y: &Rk4State| -> Rk4State {
        let wv = wind_at(wind, t);
        let (s, c) = y[2].sin_cos();
        Rk4State::from([va * c + wv.x, va * s + wv.y, omega, y[4], (vz_target - y[4]) / tau])
    };
    let t0 = state.t;
    let y0 = Rk4State::from([state.position.x, state.position.y, state.heading, state.position.z, state.vertical_speed]);
    let k1 = deriv(t0, &y0);
    let k2 = deriv(t0 + 0.5 * dt, &(y0 + 0.5 * dt * k1));
    let k3 = deriv(t0 + 0.5 * dt, &(y0 + 0.5 * dt * k2));
    let k4 = deriv(t0 + dt, &(y0 + dt * k3));
    let y1 = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Ok(VehicleState {
        position: Vector3::new(y1[0], y1[1], y1[3]),
        heading: wrap_angle(y1[2]),
        airspeed: va,
        vertical_speed: y1[4],
        w: state.w,
        t: t0 + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn limits() -> ActuatorLimits {
        ActuatorLimits::from_roll_limit(0.75, 11.0, 3.0, 1.0).unwrap()
    }

    fn cmd(omega: f64) -> GuidanceCommand {
        GuidanceCommand { omega_cmd: omega, ..Default::default() }
    }

    #[test]
    fn straight_flight_in_calm_air() {
        let mut s = VehicleState::new(Vector3::zeros(), 0.3, 11.0).unwrap();
        for _ in 0..500 {
            s = step_vehicle(&s, &cmd(0.0), &WindModel::calm(), &limits(), 0.02).unwrap();
        }
        assert_relative_eq!(s.position.x, 110.0 * 0.3f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(s.position.y, 110.0 * 0.3f64.sin(), epsilon = 1e-9);
        assert_eq!(s.heading, 0.3);
        assert_relative_eq!(s.t, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_turn_traces_circle() {
        let (va, om) = (11.0, 0.2);
        let r = va / om;
        let mut s = VehicleState::new(Vector3::zeros(), 0.0, va).unwrap();
        // centre sits at (0, r) for a left turn starting eastbound
        for _ in 0..3000 {
            s = step_vehicle(&s, &cmd(om), &WindModel::calm(), &limits(), 0.02).unwrap();
            let d = (s.position.xy() - Vector2::new(0.0, r)).norm();
            assert!((d - r).abs() < 1e-6);
        }
    }

    #[test]
    fn crab_angle_on_northbound_track() {
        let wind = WindModel::constant(Vector2::new(5.0, 0.0));
        // heading that cancels the eastward drift for a northbound course
        let crab = (5.0f64 / 11.0).asin();
        let s = VehicleState::new(Vector3::zeros(), FRAC_PI_2 + crab, 11.0).unwrap();
        let (course, speed, _) = ground_course_and_speed(&s, &wind, 0.0).unwrap();
        assert_relative_eq!(course, FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(speed, (121.0f64 - 25.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s.heading - course, 0.472, epsilon = 1e-3);
    }

    #[test]
    fn ground_speed_examples() {
        let s = VehicleState::new(Vector3::zeros(), 1.1, 11.0).unwrap();
        let (c, v, _) = ground_course_and_speed(&s, &WindModel::calm(), 0.0).unwrap();
        assert_relative_eq!(c, 1.1, epsilon = 1e-15);
        assert_relative_eq!(v, 11.0, epsilon = 1e-12);

        let s = VehicleState::new(Vector3::zeros(), 0.0, 11.0).unwrap();
        assert_eq!(
            ground_course_and_speed(&s, &WindModel::constant(Vector2::new(-11.0, 0.0)), 0.0).unwrap_err(),
            SimError::ZeroGroundSpeed
        );

        let s = VehicleState::new(Vector3::zeros(), FRAC_PI_2, 11.0).unwrap();
        let (c, v, _) = ground_course_and_speed(&s, &WindModel::constant(Vector2::new(5.0, 0.0)), 0.0).unwrap();
        assert_relative_eq!(v, 146f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c, 11f64.atan2(5.0), epsilon = 1e-15);
    }

    #[test]
    fn gusts_are_bounded_and_deterministic() {
        let calm = WindModel::new(Vector2::new(1.0, 2.0), 0.0, 60.0, 9).unwrap();
        assert_eq!(wind_at(&calm, 123.4), Vector2::new(1.0, 2.0));

        let a = WindModel::new(Vector2::new(5.0, 0.0), 1.0, 60.0, 42).unwrap();
        let b = WindModel::new(Vector2::new(5.0, 0.0), 1.0, 60.0, 42).unwrap();
        for k in 0..2000 {
            let t = k as f64 * 0.173;
            let (wa, wb) = (wind_at(&a, t), wind_at(&b, t));
            assert_eq!(wa.x.to_bits(), wb.x.to_bits());
            assert_eq!(wa.y.to_bits(), wb.y.to_bits());
            assert!((wa.x - 5.0).abs() <= 1.0 && wa.y.abs() <= 1.0);
        }
        let c = WindModel::new(Vector2::new(5.0, 0.0), 1.0, 60.0, 43).unwrap();
        assert_ne!(wind_at(&a, 0.0), wind_at(&c, 0.0));
        assert!(WindModel::new(Vector2::zeros(), -1.0, 60.0, 0).is_err());
    }

    #[test]
    fn vertical_speed_lag_and_clamp() {
        let lim = limits();
        let mut s = VehicleState::new(Vector3::zeros(), 0.0, 11.0).unwrap();
        let c = GuidanceCommand { vz_cmd: 10.0, ..Default::default() };
        for _ in 0..50 {
            s = step_vehicle(&s, &c, &WindModel::calm(), &lim, 0.02).unwrap();
        }
        // one time constant: 1 - e^-1 of the clamped target
        assert_relative_eq!(s.vertical_speed, 3.0 * (1.0 - (-1.0f64).exp()), epsilon = 1e-8);
        assert_relative_eq!(s.position.z, 3.0 * (1.0 - (1.0 - (-1.0f64).exp())), epsilon = 1e-8);
    }

    #[test]
    fn dt_range_enforced() {
        let s = VehicleState::new(Vector3::zeros(), 0.0, 11.0).unwrap();
        for dt in [0.0, -0.01, 0.2] {
            assert_eq!(
                step_vehicle(&s, &cmd(0.0), &WindModel::calm(), &limits(), dt).unwrap_err(),
                SimError::DtOutOfRange(dt)
            );
        }
    }

    #[test]
    fn omega_max_from_roll_limit() {
        let l = limits();
        assert_relative_eq!(l.omega_max, 9.81 * 0.75f64.tan() / 11.0, epsilon = 1e-15);
        assert!(ActuatorLimits::from_roll_limit(2.0, 11.0, 3.0, 1.0).is_err());
    }
}
