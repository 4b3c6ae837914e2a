//! Deterministic lockstep simulation of a scenario.

use nalgebra::Vector3;
use thiserror::Error;

use crate::coord::{
    circle_phase, gvf_level_set_offset, pgvf_w_correction, CoordMessage, MessageBus, NeighborTable, VehicleId,
};
use crate::guidance::{GuidanceCommand, GuidanceError};
use crate::gvf::heading_rate_command_at_level;
use crate::paths::{Circle, Trajectory};
use crate::pgvf::{pgvf_guidance, step_w};
use crate::sim::{nav_state, step_vehicle, ActuatorLimits, SimError, VehicleState, WindModel};

use super::config::{initial_w, GuidanceConfig, Scenario};
use super::metrics::{compute_metrics, Metrics, MetricsContext};
use super::telemetry::TelemetryRecord;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("vehicle {vehicle} at t = {t:.3} s: {source}\n  state: {state}")]
    Guidance { vehicle: VehicleId, t: f64, state: String, source: GuidanceError },
    #[error("vehicle {vehicle} at t = {t:.3} s: {source}\n  state: {state}")]
    Sim { vehicle: VehicleId, t: f64, state: String, source: SimError },
    #[error("vehicle {vehicle}: cannot place on the path: {source}")]
    Init { vehicle: VehicleId, source: crate::expr::ExprError },
}

fn dump(s: &VehicleState) -> String {
    format!(
        "x={:.3} y={:.3} z={:.3} heading={:.4} airspeed={:.3} vz={:.3} w={:.6}",
        s.position.x, s.position.y, s.position.z, s.heading, s.airspeed, s.vertical_speed, s.w
    )
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub metrics: Metrics,
}

struct Agent {
    id: VehicleId,
    gains: GuidanceConfig,
    limits: ActuatorLimits,
    state: VehicleState,
    table: NeighborTable,
    /// Latest coordination term, held between bus ticks.
    coord: f64,
    /// Rate of the shared value (phase or w) from the last guidance step.
    rate: f64,
}

/// Runs the scenario to completion and summarizes it.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let records = simulate(scenario)?;
    let mut metrics = compute_metrics(
        &records.0,
        &MetricsContext {
            trajectory: &scenario.trajectory,
            graph: scenario.graph.as_ref(),
            sense: scenario.config.guidance.sense(),
            convergence_threshold: scenario.config.convergence_threshold,
        },
    );
    metrics.messages = records.1;
    Ok(RunOutput { records: records.0, metrics })
}

type SimOutput = (Vec<TelemetryRecord>, Option<std::collections::BTreeMap<VehicleId, crate::coord::LinkStats>>);

fn simulate(scenario: &Scenario) -> Result<SimOutput, RunError> {
    let cfg = &scenario.config;
    let wind: WindModel = scenario.wind_model();
    let dt = cfg.dt;
    let mut agents = Vec::with_capacity(cfg.vehicles.len());
    for v in &cfg.vehicles {
        let gains = scenario.gains_for(v);
        let mut state = VehicleState::new(Vector3::new(v.x, v.y, v.z), v.heading, v.airspeed).map_err(|source| {
            RunError::Sim { vehicle: v.id, t: 0.0, state: String::new(), source }
        })?;
        if let GuidanceConfig::Pgvf(g) = gains {
            state.w = initial_w(v, &g, &scenario.trajectory).map_err(|source| RunError::Init { vehicle: v.id, source })?;
        }
        agents.push(Agent {
            id: v.id,
            gains,
            limits: scenario.limits_for(v),
            state,
            table: NeighborTable::default(),
            coord: 0.0,
            rate: 0.0,
        });
    }
    agents.sort_by_key(|a| a.id);

    let circle: Option<Circle> = match &scenario.trajectory {
        Trajectory::Implicit(p) => p.as_circle().copied(),
        Trajectory::Parametric(_) => None,
    };
    let mut bus = match (&cfg.coordination, &scenario.graph) {
        (Some(c), Some(g)) => Some(
            MessageBus::new(c.bus, g.clone(), scenario.bus_seed().unwrap_or(0)).expect("bus validated at load"),
        ),
        _ => None,
    };
    let stride = scenario.bus_stride().unwrap_or(u64::MAX);
    let ticks = scenario.ticks();
    let mut records = Vec::with_capacity((ticks as usize + 1) * agents.len());
    let mut cmds = vec![GuidanceCommand::default(); agents.len()];

    let shared_value = |a: &Agent| match (a.gains, circle) {
        (GuidanceConfig::Gvf(g), Some(c)) => circle_phase(a.state.position.xy(), &c, g.s),
        _ => a.state.w,
    };

    for k in 0..=ticks {
        let t = k as f64 * dt;
        if let (Some(bus), Some(c)) = (bus.as_mut(), cfg.coordination.as_ref()) {
            if k % stride == 0 {
                let outbox: Vec<CoordMessage> = agents
                    .iter()
                    .map(|a| CoordMessage { sender: a.id, payload: shared_value(a), sent_at: t })
                    .collect();
                let mut delivered = bus.tick(&outbox, t);
                for a in agents.iter_mut() {
                    if let Some(msgs) = delivered.remove(&a.id) {
                        a.table.absorb(&msgs);
                    }
                }
                for a in agents.iter_mut() {
                    let own = shared_value(a);
                    let pairs = a.table.pairs_at(bus.graph().neighbors(a.id), t, a.rate, bus.graph().kind());
                    a.coord = match a.gains {
                        GuidanceConfig::Gvf(_) => gvf_level_set_offset(own, &pairs, c.kc, c.e_max.unwrap_or(0.0)),
                        GuidanceConfig::Pgvf(_) => pgvf_w_correction(own, &pairs, c.kc),
                    };
                }
            }
        }

        for (a, cmd) in agents.iter_mut().zip(cmds.iter_mut()) {
            let sim_err = |source| RunError::Sim { vehicle: a.id, t, state: dump(&a.state), source };
            let nav = nav_state(&a.state, &wind).map_err(sim_err)?;
            let guid_err = |source| RunError::Guidance { vehicle: a.id, t, state: dump(&a.state), source };
            let mut rec = TelemetryRecord {
                t,
                vehicle: a.id,
                x: a.state.position.x,
                y: a.state.position.y,
                z: a.state.position.z,
                heading: a.state.heading,
                course: nav.course,
                roll_sp: 0.0,
                omega_cmd: 0.0,
                vz_cmd: 0.0,
                e: None,
                e_x: None,
                e_y: None,
                e_z: None,
                w: None,
                coord: cfg.coordination.as_ref().map(|_| a.coord),
                msgs_rx: a.table.received(),
            };
            match (&a.gains, &scenario.trajectory) {
                (GuidanceConfig::Gvf(g), Trajectory::Implicit(path)) => {
                    *cmd = heading_rate_command_at_level(&nav, path, g, &a.limits, a.coord).map_err(guid_err)?;
                    rec.e = Some(path.phi(nav.xy()).map_err(|e| guid_err(e.into()))?);
                    if let Some(c) = circle {
                        let d = nav.xy() - c.center;
                        a.rate = g.s * d.perp(&nav.ground_velocity) / d.norm_squared().max(1e-9);
                    }
                }
                (GuidanceConfig::Pgvf(g), Trajectory::Parametric(path)) => {
                    let (c, xi) = pgvf_guidance(&nav, a.state.w, path, g, &a.limits).map_err(guid_err)?;
                    *cmd = c;
                    a.rate = c.w_rate;
                    cmd.w_rate += a.coord;
                    rec.e_x = Some(xi.e.x);
                    rec.e_y = Some(xi.e.y);
                    rec.e_z = (xi.dim == 3).then_some(xi.e.z);
                    rec.w = Some(a.state.w);
                }
                _ => unreachable!("mode checked at load"),
            }
            rec.roll_sp = cmd.roll_setpoint;
            rec.omega_cmd = cmd.omega_cmd;
            rec.vz_cmd = cmd.vz_cmd;
            records.push(rec);
        }

        if k == ticks {
            break;
        }
        for (a, cmd) in agents.iter_mut().zip(cmds.iter()) {
            let next = step_vehicle(&a.state, cmd, &wind, &a.limits, dt)
                .map_err(|source| RunError::Sim { vehicle: a.id, t, state: dump(&a.state), source })?;
            let w = step_w(a.state.w, cmd.w_rate, dt);
            a.state = VehicleState { w, t: (k + 1) as f64 * dt, ..next };
        }
    }
    Ok((records, bus.map(|b| b.stats().clone())))
}
