//! Telemetry rows and their CSV encoding.
//!
//! Numbers are written with 9 significant digits through a formatter that
//! only relies on Rust's own float printing, so identical runs give
//! byte-identical files on every platform.

use std::io::{self, Write};

use crate::coord::VehicleId;

/// First line of every telemetry file.
pub const TELEMETRY_VERSION_LINE: &str = "# gvf-telemetry v1";

/// Column order of the header row that follows the version line.
pub const TELEMETRY_COLUMNS: [&str; 17] = [
    "t", "vehicle", "x", "y", "z", "heading", "course", "roll_sp", "omega_cmd", "vz_cmd", "e", "e_x", "e_y", "e_z",
    "w", "coord", "msgs_rx",
];

/// One vehicle at one tick. Fields that do not apply to the guidance mode
/// are `None` and written as empty cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub vehicle: VehicleId,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading: f64,
    pub course: f64,
    pub roll_sp: f64,
    pub omega_cmd: f64,
    pub vz_cmd: f64,
    /// Level-set value φ(p) (implicit guidance).
    pub e: Option<f64>,
    /// p − f(wb) (parametric guidance); e_z is `None` for planar paths.
    pub e_x: Option<f64>,
    pub e_y: Option<f64>,
    pub e_z: Option<f64>,
    pub w: Option<f64>,
    /// Commanded level-set offset or w correction; `None` without coordination.
    pub coord: Option<f64>,
    /// Messages received so far.
    pub msgs_rx: u64,
}

/// 9 significant digits, positional for magnitudes in [1e−5, 1e9), otherwise
/// scientific; trailing zeros trimmed and −0 written as 0.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

impl TelemetryRecord {
    pub fn to_csv_row(&self) -> String {
        [
            format_sig9(self.t),
            self.vehicle.to_string(),
            format_sig9(self.x),
            format_sig9(self.y),
            format_sig9(self.z),
            format_sig9(self.heading),
            format_sig9(self.course),
            format_sig9(self.roll_sp),
            format_sig9(self.omega_cmd),
            format_sig9(self.vz_cmd),
            opt(self.e),
            opt(self.e_x),
            opt(self.e_y),
            opt(self.e_z),
            opt(self.w),
            opt(self.coord),
            self.msgs_rx.to_string(),
        ]
        .join(",")
    }
}

/// Writes the version line, the header row and one row per record.
pub fn write_telemetry<W: Write>(out: &mut W, records: &[TelemetryRecord]) -> io::Result<()> {
    writeln!(out, "{TELEMETRY_VERSION_LINE}")?;
    writeln!(out, "{}", TELEMETRY_COLUMNS.join(","))?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}
