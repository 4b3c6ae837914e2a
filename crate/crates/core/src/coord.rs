//! Distributed synchronization over a lossy broadcast bus.
//!
//! Two schemes share the same plumbing:
//!
//! * implicit GVF on a circle: each vehicle offsets the level set it tracks,
//!   flying an inner (shorter) lap when it lags its neighbors and an outer
//!   (longer) lap when it leads;
//! * parametric GVF: each vehicle adds a consensus term on the virtual
//!   coordinate w to its w rate.
//!
//! Vehicles only see each other through [`MessageBus`]; every receiver keeps
//! the freshest payload per sender.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::wrap_angle;
use crate::paths::Circle;

pub type VehicleId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordError {
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(VehicleId),
    #[error("edge ({0}, {1}) references an unknown vehicle")]
    UnknownVehicle(VehicleId, VehicleId),
    #[error("self loop on vehicle {0}")]
    SelfLoop(VehicleId),
    #[error("edge ({0}, {1}) listed twice with offsets that are not antisymmetric")]
    NotAntisymmetric(VehicleId, VehicleId),
    #[error("communication graph is not connected (vehicle {0} unreachable)")]
    Disconnected(VehicleId),
    #[error("offsets are inconsistent around a cycle through edge ({0}, {1}), residual {2:.3e}")]
    InconsistentCycle(VehicleId, VehicleId, f64),
    #[error("invalid bus configuration: {0}")]
    InvalidBus(String),
    #[error("non-finite offset on edge ({0}, {1})")]
    NonFinite(VehicleId, VehicleId),
}

/// Whether offsets are angles (compared modulo 2π) or plain w differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetKind {
    Phase,
    Linear,
}

/// Undirected graph with per-edge desired offsets: the target for edge
/// (i, j) is `x_j − x_i = Δ_ij`, and `Δ_ji = −Δ_ij`.
#[derive(Debug, Clone)]
pub struct CommGraph {
    ids: Vec<VehicleId>,
    neighbors: BTreeMap<VehicleId, Vec<(VehicleId, f64)>>,
    kind: OffsetKind,
}

impl CommGraph {
    pub fn new(ids: &[VehicleId], edges: &[(VehicleId, VehicleId, f64)], kind: OffsetKind) -> Result<Self, CoordError> {
        let mut neighbors: BTreeMap<VehicleId, Vec<(VehicleId, f64)>> = BTreeMap::new();
        for &id in ids {
            if neighbors.insert(id, Vec::new()).is_some() {
                return Err(CoordError::DuplicateVehicle(id));
            }
        }
        for &(i, j, d) in edges {
            if !d.is_finite() {
                return Err(CoordError::NonFinite(i, j));
            }
            if i == j {
                return Err(CoordError::SelfLoop(i));
            }
            if !(neighbors.contains_key(&i) && neighbors.contains_key(&j)) {
                return Err(CoordError::UnknownVehicle(i, j));
            }
            if let Some(&(_, existing)) = neighbors[&i].iter().find(|(n, _)| *n == j) {
                if !offsets_match(existing, d, kind) {
                    return Err(CoordError::NotAntisymmetric(i, j));
                }
                continue;
            }
            neighbors.get_mut(&i).unwrap().push((j, d));
            neighbors.get_mut(&j).unwrap().push((i, -d));
        }
        for list in neighbors.values_mut() {
            list.sort_by_key(|(n, _)| *n);
        }
        let graph = Self { ids: neighbors.keys().copied().collect(), neighbors, kind };
        graph.check_consistency()?;
        Ok(graph)
    }

    fn check_consistency(&self) -> Result<(), CoordError> {
        let Some(&root) = self.ids.first() else { return Ok(()) };
        let mut potential: BTreeMap<VehicleId, f64> = BTreeMap::new();
        potential.insert(root, 0.0);
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let pi = potential[&i];
            for &(j, d) in &self.neighbors[&i] {
                match potential.get(&j) {
                    None => {
                        potential.insert(j, pi + d);
                        queue.push_back(j);
                    }
                    Some(&pj) => {
                        let mut residual = pi + d - pj;
                        if self.kind == OffsetKind::Phase {
                            residual = wrap_angle(residual);
                            // wrap(±2π-ish) lands near +π only for genuine mismatches
                        }
                        if residual.abs() > 1e-9 {
                            return Err(CoordError::InconsistentCycle(i, j, residual));
                        }
                    }
                }
            }
        }
        if let Some(&missing) = self.ids.iter().find(|id| !potential.contains_key(id)) {
            return Err(CoordError::Disconnected(missing));
        }
        Ok(())
    }

    pub fn ids(&self) -> &[VehicleId] {
        &self.ids
    }

    pub fn kind(&self) -> OffsetKind {
        self.kind
    }

    /// Neighbors of `id` with the desired offset `Δ_id,j`, sorted by id.
    pub fn neighbors(&self, id: VehicleId) -> &[(VehicleId, f64)] {
        self.neighbors.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every undirected edge once, as (i, j, Δ_ij) with i < j.
    pub fn edges(&self) -> Vec<(VehicleId, VehicleId, f64)> {
        self.neighbors
            .iter()
            .flat_map(|(&i, list)| list.iter().filter(move |(j, _)| *j > i).map(move |&(j, d)| (i, j, d)))
            .collect()
    }
}

fn offsets_match(existing: f64, d: f64, kind: OffsetKind) -> bool {
    match kind {
        OffsetKind::Phase => wrap_angle(existing - d).abs() < 1e-9,
        OffsetKind::Linear => (existing - d).abs() < 1e-9,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusConfig {
    /// Broadcast interval, seconds.
    pub period: f64,
    /// Transport delay, seconds.
    #[serde(default)]
    pub delay: f64,
    /// Independent loss probability per (message, receiver).
    #[serde(default)]
    pub drop_probability: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl BusConfig {
    pub fn ideal(period: f64) -> Self {
        Self { period, delay: 0.0, drop_probability: 0.0, seed: None }
    }

    pub fn validate(&self) -> Result<(), CoordError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(CoordError::InvalidBus(format!("period must be positive, got {}", self.period)));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(CoordError::InvalidBus(format!("delay must be >= 0, got {}", self.delay)));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(CoordError::InvalidBus(format!(
                "drop_probability must be in [0, 1], got {}",
                self.drop_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordMessage {
    pub sender: VehicleId,
    /// Shared scalar: w, or the phase on the circle.
    pub payload: f64,
    pub sent_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

/// Simulated broadcast medium. Drops are drawn from one seeded stream in
/// (tick, sender, receiver) order, so a seed fixes the delivery pattern.
#[derive(Debug, Clone)]
pub struct MessageBus {
    config: BusConfig,
    graph: CommGraph,
    rng: ChaCha8Rng,
    in_flight: VecDeque<(f64, VehicleId, CoordMessage)>,
    stats: BTreeMap<VehicleId, LinkStats>,
}

impl MessageBus {
    pub fn new(config: BusConfig, graph: CommGraph, seed: u64) -> Result<Self, CoordError> {
        config.validate()?;
        let stats = graph.ids().iter().map(|&id| (id, LinkStats::default())).collect();
        Ok(Self { config, graph, rng: ChaCha8Rng::seed_from_u64(seed), in_flight: VecDeque::new(), stats })
    }

    pub fn config(&self) -> &BusConfig {
        &self.config
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    /// Receive-side counters per vehicle (`sent` counts broadcasts).
    pub fn stats(&self) -> &BTreeMap<VehicleId, LinkStats> {
        &self.stats
    }

    /// Accepts this tick's broadcasts and returns everything due by `now`,
    /// grouped by receiver.
    pub fn tick(&mut self, outbox: &[CoordMessage], now: f64) -> BTreeMap<VehicleId, Vec<CoordMessage>> {
        let mut sorted: Vec<&CoordMessage> = outbox.iter().collect();
        sorted.sort_by_key(|m| m.sender);
        for msg in sorted {
            debug_assert!(msg.sent_at <= now + 1e-9);
            if let Some(s) = self.stats.get_mut(&msg.sender) {
                s.sent += 1;
            }
            for &(receiver, _) in self.graph.neighbors(msg.sender) {
                let u: f64 = self.rng.random();
                if u < self.config.drop_probability {
                    self.stats.entry(receiver).or_default().dropped += 1;
                } else {
                    self.in_flight.push_back((msg.sent_at + self.config.delay, receiver, *msg));
                }
            }
        }
        let mut delivered: BTreeMap<VehicleId, Vec<CoordMessage>> = BTreeMap::new();
        let mut pending = VecDeque::with_capacity(self.in_flight.len());
        while let Some((due, receiver, msg)) = self.in_flight.pop_front() {
            if due <= now + 1e-9 {
                self.stats.entry(receiver).or_default().delivered += 1;
                delivered.entry(receiver).or_default().push(msg);
            } else {
                pending.push_back((due, receiver, msg));
            }
        }
        self.in_flight = pending;
        delivered
    }
}

/// Freshest payload per sender, as seen by one receiver. The previous
/// payload is kept only to estimate how fast the sender's value moves.
#[derive(Debug, Clone, Default)]
pub struct NeighborTable {
    latest: BTreeMap<VehicleId, (CoordMessage, Option<CoordMessage>)>,
    received: u64,
}

impl NeighborTable {
    pub fn absorb(&mut self, msgs: &[CoordMessage]) {
        for m in msgs {
            self.received += 1;
            match self.latest.get_mut(&m.sender) {
                Some((last, prev)) => {
                    if m.sent_at > last.sent_at {
                        *prev = Some(*last);
                        *last = *m;
                    } else if m.sent_at == last.sent_at {
                        *last = *m;
                    }
                }
                None => {
                    self.latest.insert(m.sender, (*m, None));
                }
            }
        }
    }

    pub fn get(&self, sender: VehicleId) -> Option<&CoordMessage> {
        self.latest.get(&sender).map(|(m, _)| m)
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    /// (neighbor payload, desired offset) for every neighbor heard from.
    pub fn pairs(&self, neighbors: &[(VehicleId, f64)]) -> Vec<(f64, f64)> {
        neighbors.iter().filter_map(|&(j, d)| self.get(j).map(|m| (m.payload, d))).collect()
    }

    /// Like [`pairs`](Self::pairs), with each payload extrapolated to `now`.
    /// The slope comes from the sender's last two payloads, or `fallback_rate`
    /// (typically the receiver's own rate) before two have arrived. Phase
    /// slopes are taken on wrapped differences.
    pub fn pairs_at(
        &self,
        neighbors: &[(VehicleId, f64)],
        now: f64,
        fallback_rate: f64,
        kind: OffsetKind,
    ) -> Vec<(f64, f64)> {
        neighbors
            .iter()
            .filter_map(|&(j, d)| {
                self.latest.get(&j).map(|(last, prev)| {
                    let rate = match prev {
                        Some(p) if last.sent_at > p.sent_at => {
                            let dv = last.payload - p.payload;
                            let dv = if kind == OffsetKind::Phase { wrap_angle(dv) } else { dv };
                            dv / (last.sent_at - p.sent_at)
                        }
                        _ => fallback_rate,
                    };
                    (last.payload + rate * (now - last.sent_at).max(0.0), d)
                })
            })
            .collect()
    }
}

/// Phase of `p` on a circle, measured in the direction of travel `s`.
pub fn circle_phase(p: Vector2<f64>, circle: &Circle, s: f64) -> f64 {
    let d = p - circle.center;
    wrap_angle(s * d.y.atan2(d.x))
}

/// Level-set offset for implicit GVF synchronization:
/// `clamp(−k_c·Σ wrap(θ_j − θ_i − Δθ_ij), ±e_max)`, phases measured along
/// the direction of travel. A vehicle behind its targets gets a negative
/// offset (inner level set, shorter lap); one ahead gets a positive offset.
pub fn gvf_level_set_offset(self_phase: f64, neighbor_phases: &[(f64, f64)], kc: f64, e_max: f64) -> f64 {
    let sum: f64 = neighbor_phases.iter().map(|&(th, d)| wrap_angle(th - self_phase - d)).sum();
    (-kc * sum).clamp(-e_max, e_max)
}

/// Consensus correction on w: `k_c·Σ (w_j − w_i − Δw_ij)`, added to the w rate.
pub fn pgvf_w_correction(self_w: f64, neighbor_ws: &[(f64, f64)], kc: f64) -> f64 {
    kc * neighbor_ws.iter().map(|&(wj, d)| wj - self_w - d).sum::<f64>()
}
