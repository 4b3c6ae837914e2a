//! `gvf`: run guidance scenarios, export field grids, inspect trajectories.
//!
//! Exit codes: 0 success, 1 invalid input (arguments or scenario),
//! 2 failure while running (guidance error, output not writable).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gvf_core::nalgebra::Vector2;
use gvf_core::paths::registry_listing;
use gvf_core::scenario::{
    export_field_grid, load_scenario, run_scenario, write_field_grid, write_metrics_json, write_telemetry,
    FieldSlice, Scenario,
};

#[derive(Parser)]
#[command(name = "gvf", version, about = "Guiding-vector-field path following simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write telemetry (and optionally metrics).
    Run {
        scenario: PathBuf,
        /// Telemetry CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Metrics JSON output.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the unit guiding field on a grid.
    Field(FieldArgs),
    /// List the built-in trajectories and their parameters.
    ListTrajectories,
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

#[derive(Args)]
struct FieldArgs {
    scenario: PathBuf,
    /// Grid size as COLSxROWS, e.g. 25x25.
    #[arg(long, value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long)]
    out: PathBuf,
    /// Fix the virtual coordinate (parametric guidance).
    #[arg(long, conflicts_with = "z", allow_hyphen_values = true)]
    w: Option<f64>,
    /// Fix the altitude; each cell uses its closest path point (parametric guidance).
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    /// xmin,ymin,xmax,ymax; defaults to the path extent grown by 50% per side.
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    bbox: Option<(Vector2<f64>, Vector2<f64>)>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected COLSxROWS, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("invalid grid size '{v}'"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a < 2 || b < 2 {
        return Err(format!("grid needs at least 2 points per axis, got {a}x{b}"));
    }
    Ok((a, b))
}

fn parse_bbox(s: &str) -> Result<(Vector2<f64>, Vector2<f64>), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("invalid number '{p}'")))
        .collect::<Result<_, _>>()?;
    let [x0, y0, x1, y1] = v[..] else {
        return Err(format!("expected xmin,ymin,xmax,ymax, got '{s}'"));
    };
    Ok((Vector2::new(x0, y0), Vector2::new(x1, y1)))
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Invalid(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Failure::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(|e| Failure::Invalid(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, out, metrics, seed } => {
            let mut s = load(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let result = run_scenario(&s).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_with(&out, |w| write_telemetry(w, &result.records))?;
            if let Some(path) = metrics {
                write_with(&path, |w| write_metrics_json(w, &result.metrics))?;
            }
            for v in &result.metrics.vehicles {
                eprintln!(
                    "vehicle {}: steady-state distance mean {:.3} m, max {:.3} m ({:?})",
                    v.id, v.steady_mean, v.steady_max, v.distance_kind
                );
            }
            Ok(())
        }
        Command::Field(args) => {
            let s = load(&args.scenario)?;
            let slice = match (args.w, args.z) {
                (Some(w), _) => FieldSlice::W(w),
                (_, Some(z)) => FieldSlice::Z(z),
                _ => FieldSlice::Default,
            };
            let grid = export_field_grid(&s.trajectory, &s.config.guidance, args.bbox, args.grid, slice)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            write_with(&args.out, |w| write_field_grid(w, &grid))
        }
        Command::ListTrajectories => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for (name, signature, kind) in registry_listing() {
                // broken pipes are not worth an error exit
                let _ = writeln!(out, "{name:<16}{kind:<12}({signature})");
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            println!(
                "ok: {} vehicle(s), {} guidance, {} ticks",
                s.config.vehicles.len(),
                s.config.guidance.mode_name(),
                s.ticks()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
