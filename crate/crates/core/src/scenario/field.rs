//! Unit guiding-vector samples on a regular grid, for quiver plots.

use std::io::{self, Write};

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::gvf::field_2d;
use crate::paths::Trajectory;
use crate::pgvf::{xi_at, EPS_HORIZONTAL};

use super::config::GuidanceConfig;
use super::telemetry::format_sig9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("grid needs at least 2 points per axis, got {0}x{1}")]
    Resolution(usize, usize),
    #[error("invalid bounding box: {0}")]
    Bbox(String),
    #[error("trajectory extent is unknown; pass an explicit bounding box")]
    NoExtent,
    #[error("guidance mode does not match the trajectory kind")]
    ModeMismatch,
    #[error("--w/--z slices only apply to parametric guidance")]
    SliceNotApplicable,
}

/// How the 2D grid cuts the parametric field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FieldSlice {
    /// w = 0, z on the path at that w.
    #[default]
    Default,
    /// Fixed w; z is the path altitude at that w.
    W(f64),
    /// Fixed altitude; each cell uses the w of its closest path point.
    Z(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    /// Unit direction; NaN where singular.
    pub unit: Vector3<f64>,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    /// True for the parametric field (three unit components).
    pub parametric: bool,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, x fastest.
    pub rows: Vec<FieldRow>,
}

/// The path's bounding box grown by half its size on every side.
pub fn default_bbox(trajectory: &Trajectory) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let (lo, hi) = match trajectory {
        Trajectory::Implicit(p) => p.bounding_box()?,
        Trajectory::Parametric(p) => {
            let (lo, hi) = p.bounding_box().ok()?;
            (lo.xy(), hi.xy())
        }
    };
    let margin = ((hi - lo) * 0.5).map(|m| m.max(1.0));
    Some((lo - margin, hi + margin))
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Samples the unit field on an inclusive `nx`×`ny` grid. Singular cells
/// are flagged rather than treated as errors.
pub fn export_field_grid(
    trajectory: &Trajectory,
    gains: &GuidanceConfig,
    bbox: Option<(Vector2<f64>, Vector2<f64>)>,
    resolution: (usize, usize),
    slice: FieldSlice,
) -> Result<FieldGrid, FieldError> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(FieldError::Resolution(nx, ny));
    }
    let (lo, hi) = match bbox {
        Some(b) => b,
        None => default_bbox(trajectory).ok_or(FieldError::NoExtent)?,
    };
    if !(lo.x < hi.x && lo.y < hi.y) || !(lo.iter().chain(hi.iter()).all(|v| v.is_finite())) {
        return Err(FieldError::Bbox(format!("min {lo:?} must be below max {hi:?}")));
    }
    let cell = |x: f64, y: f64| -> (Vector3<f64>, bool) {
        let nan = Vector3::repeat(f64::NAN);
        match (gains, trajectory) {
            (GuidanceConfig::Gvf(g), Trajectory::Implicit(path)) => match field_2d(Vector2::new(x, y), path, g) {
                Ok(s) => (Vector3::new(s.unit.x, s.unit.y, 0.0), false),
                Err(_) => (nan, true),
            },
            (GuidanceConfig::Pgvf(g), Trajectory::Parametric(path)) => {
                let placed = match slice {
                    FieldSlice::Default | FieldSlice::W(_) => {
                        let w = if let FieldSlice::W(w) = slice { w } else { 0.0 };
                        path.eval(w * g.scale()).map(|ev| (w, if path.dim() == 3 { ev.f.z } else { 0.0 }))
                    }
                    FieldSlice::Z(z) => path.project(Vector3::new(x, y, z)).map(|wb| (wb / g.scale(), z)),
                };
                let Ok((w, z)) = placed else { return (nan, true) };
                match xi_at(Vector3::new(x, y, z), w, path, g) {
                    Ok(xi) if xi.xi_phys.norm() > EPS_HORIZONTAL => (xi.xi_phys.normalize(), false),
                    _ => (nan, true),
                }
            }
            _ => unreachable!(),
        }
    };
    let parametric = match (gains, trajectory) {
        (GuidanceConfig::Gvf(_), Trajectory::Implicit(_)) => {
            if slice != FieldSlice::Default {
                return Err(FieldError::SliceNotApplicable);
            }
            false
        }
        (GuidanceConfig::Pgvf(_), Trajectory::Parametric(_)) => true,
        _ => return Err(FieldError::ModeMismatch),
    };
    let mut rows = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = linspace(lo.y, hi.y, ny, j);
        for i in 0..nx {
            let x = linspace(lo.x, hi.x, nx, i);
            let (unit, singular) = cell(x, y);
            rows.push(FieldRow { x, y, unit, singular });
        }
    }
    Ok(FieldGrid { parametric, nx, ny, rows })
}

/// CSV: `x,y,unit_x,unit_y,singular` (plus `unit_z` before `singular` for
/// parametric grids).
pub fn write_field_grid<W: Write>(out: &mut W, grid: &FieldGrid) -> io::Result<()> {
    if grid.parametric {
        writeln!(out, "x,y,unit_x,unit_y,unit_z,singular")?;
    } else {
        writeln!(out, "x,y,unit_x,unit_y,singular")?;
    }
    for r in &grid.rows {
        let mut cols = vec![format_sig9(r.x), format_sig9(r.y), format_sig9(r.unit.x), format_sig9(r.unit.y)];
        if grid.parametric {
            cols.push(format_sig9(r.unit.z));
        }
        cols.push(u8::from(r.singular).to_string());
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
