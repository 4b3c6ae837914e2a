//! Scenario files: JSON schema, defaults and validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coord::{BusConfig, CommGraph, CoordError, OffsetKind, VehicleId};
use crate::expr::{compile_implicit_path, compile_parametric_path, parse_path_file, ExprError};
use crate::guidance::GuidanceError;
use crate::gvf::GvfGains;
use crate::paths::{builtin, PathError, Trajectory};
use crate::pgvf::PGvfGains;
use crate::sim::{ActuatorLimits, SimError, WindModel, DT_MAX};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("invalid `trajectory`: {0}")]
    Path(#[from] PathError),
    #[error("invalid `trajectory`: {0}")]
    Expr(#[from] ExprError),
    #[error("invalid `coordination`: {0}")]
    Coord(#[from] CoordError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

/// Where the path comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    /// Registry entry with positional parameters, e.g. `circle` with `[cx, cy, r]`.
    Builtin { name: String, params: Vec<f64> },
    /// φ(x, y) in the expression language.
    Implicit {
        phi: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Two or three coordinate expressions in `w`.
    Parametric {
        coords: Vec<String>,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Path file, relative to the scenario file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GuidanceConfig {
    Gvf(GvfGains),
    Pgvf(PGvfGains),
}

impl GuidanceConfig {
    pub fn mode_name(&self) -> &'static str {
        match self {
            GuidanceConfig::Gvf(_) => "gvf",
            GuidanceConfig::Pgvf(_) => "pgvf",
        }
    }

    fn validate(&self) -> Result<(), GuidanceError> {
        match self {
            GuidanceConfig::Gvf(g) => g.validate(),
            GuidanceConfig::Pgvf(g) => g.validate(),
        }
    }

    /// Sense of travel.
    pub fn sense(&self) -> f64 {
        match self {
            GuidanceConfig::Gvf(g) => g.s,
            GuidanceConfig::Pgvf(g) => g.s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub id: VehicleId,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    /// Initial heading, radians from east.
    #[serde(default)]
    pub heading: f64,
    pub airspeed: f64,
    /// Initial virtual coordinate; projected onto the path when absent.
    #[serde(default)]
    pub w: Option<f64>,
    /// Per-vehicle gains; must use the scenario's guidance mode.
    #[serde(default)]
    pub gains: Option<GuidanceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConfig {
    #[serde(default)]
    pub mean: [f64; 2],
    #[serde(default)]
    pub gust_amplitude: f64,
    #[serde(default = "default_gust_period")]
    pub gust_period: f64,
    /// Gust phase seed; the scenario seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_gust_period() -> f64 {
    10.0
}

impl Default for WindConfig {
    fn default() -> Self {
        Self { mean: [0.0, 0.0], gust_amplitude: 0.0, gust_period: default_gust_period(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    #[serde(default = "default_roll_max")]
    pub roll_max: f64,
    #[serde(default = "default_vz_max")]
    pub vz_max: f64,
    #[serde(default = "default_vz_tau")]
    pub vz_time_constant: f64,
}

fn default_roll_max() -> f64 {
    0.75
}

fn default_vz_max() -> f64 {
    3.0
}

fn default_vz_tau() -> f64 {
    1.0
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self { roll_max: default_roll_max(), vz_max: default_vz_max(), vz_time_constant: default_vz_tau() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinationConfig {
    /// `[i, j, offset]`: desired `x_j − x_i`, radians of phase for gvf,
    /// units of w for pgvf.
    pub edges: Vec<(VehicleId, VehicleId, f64)>,
    pub bus: BusConfig,
    pub kc: f64,
    /// Level-set offset saturation (gvf only).
    #[serde(default)]
    pub e_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trajectory: TrajectoryConfig,
    pub guidance: GuidanceConfig,
    pub vehicles: Vec<VehicleConfig>,
    #[serde(default)]
    pub wind: WindConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    #[serde(default)]
    pub coordination: Option<CoordinationConfig>,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Distance below which a vehicle counts as converged, meters.
    #[serde(default = "default_convergence_threshold")]
    pub convergence_threshold: f64,
}

fn default_dt() -> f64 {
    0.02
}

fn default_convergence_threshold() -> f64 {
    5.0
}

/// Everything the runner needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    pub graph: Option<CommGraph>,
    base_dir: PathBuf,
}

impl Scenario {
    /// Validates `config`. Relative path files resolve against `base_dir`.
    pub fn from_config(config: ScenarioConfig, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let base_dir = base_dir.into();
        let trajectory = resolve_trajectory(&config.trajectory, &base_dir)?;
        validate(&config, &trajectory)?;
        let graph = match &config.coordination {
            Some(c) => {
                let ids: Vec<VehicleId> = config.vehicles.iter().map(|v| v.id).collect();
                let kind = match config.guidance {
                    GuidanceConfig::Gvf(_) => OffsetKind::Phase,
                    GuidanceConfig::Pgvf(_) => OffsetKind::Linear,
                };
                Some(CommGraph::new(&ids, &c.edges, kind)?)
            }
            None => None,
        };
        Ok(Self { config, trajectory, graph, base_dir })
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>, origin: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_config(config, base_dir)
    }

    /// Same scenario under a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Gains for one vehicle (its override or the scenario default).
    pub fn gains_for(&self, v: &VehicleConfig) -> GuidanceConfig {
        v.gains.unwrap_or(self.config.guidance)
    }

    pub fn wind_model(&self) -> WindModel {
        let w = &self.config.wind;
        // validated at load
        WindModel::new(
            Vector2::new(w.mean[0], w.mean[1]),
            w.gust_amplitude,
            w.gust_period,
            w.seed.unwrap_or(self.config.seed),
        )
        .expect("wind validated at load")
    }

    /// Turn-rate limit uses each vehicle's own airspeed.
    pub fn limits_for(&self, v: &VehicleConfig) -> ActuatorLimits {
        let l = &self.config.limits;
        ActuatorLimits::from_roll_limit(l.roll_max, v.airspeed, l.vz_max, l.vz_time_constant)
            .expect("limits validated at load")
    }

    pub fn bus_seed(&self) -> Option<u64> {
        self.config
            .coordination
            .as_ref()
            .map(|c| c.bus.seed.unwrap_or(self.config.seed.wrapping_add(1)))
    }

    pub fn ticks(&self) -> u64 {
        (self.config.duration / self.config.dt).round() as u64
    }

    /// Ticks per bus period (exact by validation).
    pub fn bus_stride(&self) -> Option<u64> {
        self.config
            .coordination
            .as_ref()
            .map(|c| (c.bus.period / self.config.dt).round().max(1.0) as u64)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ConfigError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Scenario::from_json(&text, base, &path.display().to_string())
}

pub fn resolve_trajectory(cfg: &TrajectoryConfig, base_dir: &Path) -> Result<Trajectory, ConfigError> {
    Ok(match cfg {
        TrajectoryConfig::Builtin { name, params } => builtin(name, params)?,
        TrajectoryConfig::Implicit { phi, params } => Trajectory::Implicit(compile_implicit_path(phi, params)?),
        TrajectoryConfig::Parametric { coords, params } => {
            Trajectory::Parametric(compile_parametric_path(coords, params)?)
        }
        TrajectoryConfig::File { path } => {
            let full = base_dir.join(path);
            let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io { path: full, source })?;
            parse_path_file(&text)?.compile()?
        }
    })
}

fn validate(cfg: &ScenarioConfig, trajectory: &Trajectory) -> Result<(), ConfigError> {
    if !(cfg.duration > 0.0 && cfg.duration.is_finite()) {
        return Err(invalid("duration", format!("must be positive, got {}", cfg.duration)));
    }
    if !(cfg.dt > 0.0 && cfg.dt <= DT_MAX) {
        return Err(invalid("dt", format!("must be in (0, {DT_MAX}], got {}", cfg.dt)));
    }
    if !(cfg.convergence_threshold > 0.0) {
        return Err(invalid("convergence_threshold", "must be positive"));
    }
    if cfg.vehicles.is_empty() {
        return Err(invalid("vehicles", "at least one vehicle is required"));
    }
    cfg.guidance.validate().map_err(|e| invalid("guidance", e.to_string()))?;
    match (&cfg.guidance, trajectory) {
        (GuidanceConfig::Gvf(_), Trajectory::Implicit(_)) | (GuidanceConfig::Pgvf(_), Trajectory::Parametric(_)) => {}
        (g, _) => {
            return Err(invalid(
                "guidance.mode",
                format!("mode '{}' cannot follow this trajectory kind", g.mode_name()),
            ))
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, v) in cfg.vehicles.iter().enumerate() {
        let field = |name: &str| format!("vehicles[{i}].{name}");
        if !seen.insert(v.id) {
            return Err(invalid(field("id"), format!("duplicate id {}", v.id)));
        }
        for (name, x) in [("x", v.x), ("y", v.y), ("z", v.z), ("heading", v.heading)] {
            if !x.is_finite() {
                return Err(invalid(field(name), "must be finite"));
            }
        }
        if !(v.airspeed > 0.0 && v.airspeed.is_finite()) {
            return Err(invalid(field("airspeed"), format!("must be positive, got {}", v.airspeed)));
        }
        if let Some(g) = &v.gains {
            if g.mode_name() != cfg.guidance.mode_name() {
                return Err(invalid(field("gains"), "mode differs from the scenario guidance mode"));
            }
            g.validate().map_err(|e| invalid(field("gains"), e.to_string()))?;
        }
        let l = &cfg.limits;
        ActuatorLimits::from_roll_limit(l.roll_max, v.airspeed, l.vz_max, l.vz_time_constant).map_err(|e| match e {
            SimError::InvalidAirspeed(_) => invalid(field("airspeed"), e.to_string()),
            _ => invalid("limits", e.to_string()),
        })?;
    }
    let w = &cfg.wind;
    WindModel::new(Vector2::new(w.mean[0], w.mean[1]), w.gust_amplitude, w.gust_period, 0)
        .map_err(|e| invalid("wind", e.to_string()))?;
    let max_wind = Vector2::new(w.mean[0], w.mean[1]).norm() + w.gust_amplitude;
    if let Some(v) = cfg.vehicles.iter().find(|v| v.airspeed <= max_wind) {
        return Err(invalid("wind", format!("wind up to {max_wind} m/s reaches airspeed of vehicle {}", v.id)));
    }
    if let Some(c) = &cfg.coordination {
        c.bus.validate()?;
        let n = c.bus.period / cfg.dt;
        if (c.bus.period - n.round() * cfg.dt).abs() > 1e-9 || n.round() < 1.0 {
            return Err(invalid(
                "coordination.bus.period",
                format!("period {} is not a multiple of dt {}", c.bus.period, cfg.dt),
            ));
        }
        if !(c.kc >= 0.0 && c.kc.is_finite()) {
            return Err(invalid("coordination.kc", "must be finite and >= 0"));
        }
        if let GuidanceConfig::Gvf(_) = cfg.guidance {
            let Trajectory::Implicit(p) = trajectory else { unreachable!() };
            if p.as_circle().is_none() {
                return Err(invalid("coordination", "gvf synchronization needs the builtin circle trajectory"));
            }
            match c.e_max {
                Some(e) if e > 0.0 && e.is_finite() => {}
                _ => return Err(invalid("coordination.e_max", "gvf synchronization needs a positive e_max")),
            }
            let senses: std::collections::BTreeSet<i64> = cfg
                .vehicles
                .iter()
                .map(|v| v.gains.unwrap_or(cfg.guidance).sense() as i64)
                .collect();
            if senses.len() > 1 {
                return Err(invalid("vehicles", "synchronized vehicles must share the sense of travel"));
            }
        }
    }
    Ok(())
}

/// Initial virtual coordinate: the configured value, or the projection of the
/// start position onto the path (taken in (−T/2, T/2] for period T) mapped
/// back through wb = w·β·s.
pub fn initial_w(v: &VehicleConfig, gains: &PGvfGains, trajectory: &Trajectory) -> Result<f64, ExprError> {
    if let Some(w) = v.w {
        return Ok(w);
    }
    let Trajectory::Parametric(p) = trajectory else { return Ok(0.0) };
    let mut wb = p.project(Vector3::new(v.x, v.y, v.z))?;
    // centered branch, so vehicles near the start of a closed path share a lap
    let range = p.sample_range();
    if wb > 0.5 * range {
        wb -= range;
    }
    Ok(wb / gains.scale())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "trajectory": {"type": "builtin", "name": "circle", "params": [0, 0, 120]},
        "guidance": {"mode": "gvf", "ke": 0.0002, "kn": 1.0},
        "vehicles": [{"id": 1, "x": 0, "y": -200, "airspeed": 11}],
        "duration": 10
    }"#;

    fn load(text: &str) -> Result<Scenario, ConfigError> {
        Scenario::from_json(text, ".", "test.json")
    }

    fn with(patch: &str) -> String {
        let mut base: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let patch: serde_json::Value = serde_json::from_str(patch).unwrap();
        for (k, v) in patch.as_object().unwrap() {
            base[k] = v.clone();
        }
        base.to_string()
    }

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = load(MINIMAL).unwrap();
        assert_eq!(s.config.dt, 0.02);
        assert_eq!(s.config.seed, 0);
        assert_eq!(s.config.limits, LimitsConfig::default());
        assert_eq!(s.config.wind, WindConfig::default());
        assert_eq!(s.config.vehicles[0].z, 0.0);
        assert_eq!(s.ticks(), 500);
        let GuidanceConfig::Gvf(g) = s.config.guidance else { panic!() };
        assert_eq!(g.s, 1.0);
    }

    #[test]
    fn non_divisible_bus_period_rejected() {
        let text = with(
            r#"{"dt": 0.03, "coordination": {"edges": [], "bus": {"period": 0.1}, "kc": 1, "e_max": 10}}"#,
        );
        let err = load(&text).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "coordination.bus.period"), "{err}");
        let ok = with(r#"{"dt": 0.02, "coordination": {"edges": [], "bus": {"period": 0.1}, "kc": 1, "e_max": 10}}"#);
        assert!(load(&ok).is_ok());
    }

    #[test]
    fn unknown_trajectory_lists_registry() {
        let text = with(r#"{"trajectory": {"type": "builtin", "name": "spiral", "params": []}}"#);
        let msg = load(&text).unwrap_err().to_string();
        for name in crate::paths::registry_names() {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn zero_duration_rejected() {
        let err = load(&with(r#"{"duration": 0}"#)).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "duration"));
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let text = MINIMAL.replace("\"duration\"", "\"durration\": 3, \"duration\"");
        let err = load(&text).unwrap_err();
        let ConfigError::Parse { line, message, .. } = &err else { panic!("{err}") };
        assert_eq!(*line, 5);
        assert!(message.contains("durration"));
        let err = load(&with(r#"{"guidance": {"mode": "gvf", "ke": 1, "kn": 1, "kx": 2}}"#)).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn mode_must_match_trajectory_kind() {
        let text = with(r#"{"trajectory": {"type": "builtin", "name": "circle2d_param", "params": [0, 0, 50]}}"#);
        assert!(matches!(load(&text).unwrap_err(), ConfigError::Invalid { field, .. } if field == "guidance.mode"));
    }

    #[test]
    fn vehicle_checks() {
        assert!(load(&with(r#"{"vehicles": []}"#)).is_err());
        let dup = with(r#"{"vehicles": [{"id": 1, "x": 0, "y": 0, "airspeed": 11}, {"id": 1, "x": 0, "y": 0, "airspeed": 11}]}"#);
        assert!(matches!(load(&dup).unwrap_err(), ConfigError::Invalid { field, .. } if field == "vehicles[1].id"));
        let slow = with(r#"{"vehicles": [{"id": 1, "x": 0, "y": 0, "airspeed": 4}], "wind": {"mean": [5, 0]}}"#);
        assert!(matches!(load(&slow).unwrap_err(), ConfigError::Invalid { field, .. } if field == "wind"));
    }

    #[test]
    fn gvf_sync_requires_builtin_circle() {
        let text = with(
            r#"{"trajectory": {"type": "builtin", "name": "ellipse", "params": [0, 0, 100, 50, 0]},
                "coordination": {"edges": [], "bus": {"period": 0.1}, "kc": 1, "e_max": 10}}"#,
        );
        assert!(matches!(load(&text).unwrap_err(), ConfigError::Invalid { field, .. } if field == "coordination"));
    }

    #[test]
    fn dsl_trajectories_compile() {
        let text = with(
            r#"{"trajectory": {"type": "implicit", "phi": "x^2/a^2 + y^2/b^2 - 1", "params": {"a": 100, "b": 50}}}"#,
        );
        assert!(matches!(load(&text).unwrap().trajectory, Trajectory::Implicit(_)));
        let text = with(
            r#"{"trajectory": {"type": "parametric", "coords": ["r*cos(w)", "r*sin(w)"], "params": {"r": 80}},
                "guidance": {"mode": "pgvf", "kx": 0.01, "ky": 0.01, "kn": 1, "beta": 0.01}}"#,
        );
        assert!(matches!(load(&text).unwrap().trajectory, Trajectory::Parametric(_)));
        let bad = with(r#"{"trajectory": {"type": "implicit", "phi": "x^2 + q", "params": {}}}"#);
        assert!(matches!(load(&bad).unwrap_err(), ConfigError::Expr(_)));
    }

    #[test]
    fn path_file_resolves_relative_to_scenario() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("oval.path"), "params: a=100, b=60\nphi = (x/a)^2 + (y/b)^2 - 1\n").unwrap();
        let scen = dir.path().join("s.json");
        std::fs::write(&scen, with(r#"{"trajectory": {"type": "file", "path": "oval.path"}}"#)).unwrap();
        let s = load_scenario(&scen).unwrap();
        assert!(matches!(s.trajectory, Trajectory::Implicit(_)));
        assert!(matches!(load_scenario(dir.path().join("missing.json")), Err(ConfigError::Io { .. })));
    }

    #[test]
    fn seeds_derive_from_scenario_seed() {
        let text = with(r#"{"seed": 7, "coordination": {"edges": [], "bus": {"period": 0.1}, "kc": 1, "e_max": 10}}"#);
        let s = load(&text).unwrap();
        assert_eq!(s.bus_seed(), Some(8));
        assert_eq!(s.wind_model().seed, 7);
        let s = s.with_seed(3);
        assert_eq!(s.bus_seed(), Some(4));
        assert_eq!(s.bus_stride(), Some(5));
    }
}
