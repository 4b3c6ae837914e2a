//! Run summaries computed from telemetry.

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::Serialize;

use crate::coord::{circle_phase, CommGraph, LinkStats, OffsetKind, VehicleId};
use crate::numeric::wrap_angle;
use crate::paths::{first_order_distance, DistanceKind, ImplicitPathSpec, Trajectory};

use super::telemetry::TelemetryRecord;

/// Fraction of the run, at its end, that counts as steady state.
pub const STEADY_STATE_FRACTION: f64 = 0.25;

/// Interval between consensus-trace samples, seconds.
pub const CONSENSUS_SAMPLE_INTERVAL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleMetrics {
    pub id: VehicleId,
    pub distance_kind: DistanceKind,
    pub steady_mean: f64,
    pub steady_max: f64,
    /// Start of the final stretch spent below the threshold; `None` when the
    /// last sample is above it.
    pub convergence_time: Option<f64>,
    /// First-order |φ|/‖∇φ‖ statistics, reported alongside exact distances
    /// for implicit paths.
    pub first_order_steady_mean: Option<f64>,
    pub first_order_steady_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusMetrics {
    /// `phase` (radians, wrapped) or `w`.
    pub kind: &'static str,
    /// (t, max over edges of the offset error).
    pub trace: Vec<(f64, f64)>,
    pub final_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub steady_state_start: f64,
    pub end_time: f64,
    pub convergence_threshold: f64,
    pub vehicles: Vec<VehicleMetrics>,
    pub consensus: Option<ConsensusMetrics>,
    /// Bus counters per vehicle, filled in by the runner.
    pub messages: Option<BTreeMap<VehicleId, LinkStats>>,
}

/// What [`compute_metrics`] needs besides the records.
#[derive(Debug, Clone, Copy)]
pub struct MetricsContext<'a> {
    pub trajectory: &'a Trajectory,
    pub graph: Option<&'a CommGraph>,
    /// Sense of travel, used for phases on a circle.
    pub sense: f64,
    pub convergence_threshold: f64,
}

/// Distance from a record's position to the path, its kind, and the
/// first-order estimate when the path is implicit. Unevaluable points map to
/// infinity.
pub fn record_distance(r: &TelemetryRecord, trajectory: &Trajectory) -> (f64, DistanceKind, Option<f64>) {
    match trajectory {
        Trajectory::Implicit(path) => {
            let p = Vector2::new(r.x, r.y);
            let first = path.eval(p).map(|ev| first_order_distance(&ev)).unwrap_or(f64::INFINITY);
            let (d, kind) = path.distance(p).unwrap_or((f64::INFINITY, DistanceKind::FirstOrder));
            match path {
                ImplicitPathSpec::Compiled(_) => (d, kind, None),
                _ => (d, kind, Some(first)),
            }
        }
        Trajectory::Parametric(_) => {
            let e = Vector3::new(r.e_x.unwrap_or(0.0), r.e_y.unwrap_or(0.0), r.e_z.unwrap_or(0.0));
            (e.norm(), DistanceKind::ParametricError, None)
        }
    }
}

fn mean_max(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let sum: f64 = values.iter().sum();
    (sum / values.len() as f64, values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Aggregates per vehicle plus the consensus trace. Records must be in tick
/// order.
pub fn compute_metrics(records: &[TelemetryRecord], ctx: &MetricsContext) -> Metrics {
    let t0 = records.first().map_or(0.0, |r| r.t);
    let t1 = records.last().map_or(0.0, |r| r.t);
    let steady_start = t1 - STEADY_STATE_FRACTION * (t1 - t0);

    let mut per_vehicle: BTreeMap<VehicleId, Vec<(f64, f64, DistanceKind, Option<f64>)>> = BTreeMap::new();
    for r in records {
        let (d, kind, first) = record_distance(r, ctx.trajectory);
        per_vehicle.entry(r.vehicle).or_default().push((r.t, d, kind, first));
    }
    let vehicles = per_vehicle
        .into_iter()
        .map(|(id, samples)| {
            let steady: Vec<_> = samples.iter().filter(|s| s.0 >= steady_start - 1e-9).collect();
            let (steady_mean, steady_max) = mean_max(&steady.iter().map(|s| s.1).collect::<Vec<_>>());
            let firsts: Vec<f64> = steady.iter().filter_map(|s| s.3).collect();
            let (fo_mean, fo_max) = if firsts.is_empty() { (None, None) } else {
                let (m, x) = mean_max(&firsts);
                (Some(m), Some(x))
            };
            let mut convergence_time = None;
            for s in samples.iter().rev() {
                if s.1 < ctx.convergence_threshold {
                    convergence_time = Some(s.0);
                } else {
                    break;
                }
            }
            VehicleMetrics {
                id,
                distance_kind: samples[0].2,
                steady_mean,
                steady_max,
                convergence_time,
                first_order_steady_mean: fo_mean,
                first_order_steady_max: fo_max,
            }
        })
        .collect();

    Metrics {
        schema_version: 1,
        steady_state_start: steady_start,
        end_time: t1,
        convergence_threshold: ctx.convergence_threshold,
        vehicles,
        consensus: ctx.graph.map(|g| consensus_trace(records, g, ctx)),
        messages: None,
    }
}

/// Pretty-printed JSON; non-finite numbers become `null`.
pub fn write_metrics_json<W: std::io::Write>(out: &mut W, metrics: &Metrics) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, metrics).map_err(std::io::Error::other)?;
    writeln!(out)
}

/// Largest offset error over the graph's edges for one set of shared values.
pub fn consensus_error(values: &BTreeMap<VehicleId, f64>, graph: &CommGraph) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for (i, j, d) in graph.edges() {
        let err = values.get(&j)? - values.get(&i)? - d;
        let err = match graph.kind() {
            OffsetKind::Phase => wrap_angle(err),
            OffsetKind::Linear => err,
        };
        worst = worst.max(err.abs());
    }
    Some(worst)
}

fn consensus_trace(records: &[TelemetryRecord], graph: &CommGraph, ctx: &MetricsContext) -> ConsensusMetrics {
    let circle = match ctx.trajectory {
        Trajectory::Implicit(p) => p.as_circle().copied(),
        Trajectory::Parametric(_) => None,
    };
    let shared = |r: &TelemetryRecord| match (graph.kind(), circle) {
        (OffsetKind::Phase, Some(c)) => Some(circle_phase(Vector2::new(r.x, r.y), &c, ctx.sense)),
        (OffsetKind::Linear, _) => r.w,
        _ => None,
    };
    let mut trace = Vec::new();
    let mut next_sample = records.first().map_or(0.0, |r| r.t);
    let mut i = 0;
    while i < records.len() {
        let t = records[i].t;
        let mut j = i;
        let mut values = BTreeMap::new();
        while j < records.len() && records[j].t == t {
            if let Some(v) = shared(&records[j]) {
                values.insert(records[j].vehicle, v);
            }
            j += 1;
        }
        let last_tick = j == records.len();
        if t >= next_sample - 1e-9 || last_tick {
            if let Some(err) = consensus_error(&values, graph) {
                trace.push((t, err));
            }
            while next_sample <= t + 1e-9 {
                next_sample += CONSENSUS_SAMPLE_INTERVAL;
            }
        }
        i = j;
    }
    let final_error = trace.last().map_or(f64::NAN, |s| s.1);
    ConsensusMetrics {
        kind: match graph.kind() {
            OffsetKind::Phase => "phase",
            OffsetKind::Linear => "w",
        },
        trace,
        final_error,
    }
}
