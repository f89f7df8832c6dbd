//! Command-line entry points.
//!
//! Exit codes: 0 ok, 2 configuration or usage error, 3 numeric failure,
//! 4 check-suite failure. Errors are reported on stderr as one JSON object.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::check::run_checks;
use crate::config::{load_config, SimConfig};
use crate::export::{
    export_outputs, fmt_f64, read_wake_vtk, RunArtifacts, INCOMPLETE_MARKER,
};
use crate::gait_opt::{optimize, DesignVector, NelderMeadOptions};
use crate::sim::{simulate, stroke_vorticity, StrokeVorticity};
use crate::wake::sectional_slice;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "WAKEGAIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wakegait", version, about = "Wake-structure simulation and gait design for morphing flapping wings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and export the final-cycle wake mesh and circulation history.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, then also sample the vorticity grid and sectional slices.
    Field {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the configured design fields for the wake in a VTK file.
    Optimize {
        config: PathBuf,
        target: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Perturb the start by up to this relative amount, using the first config seed.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
    /// Compare up/downstroke streamwise vorticity of two configurations.
    Compare { config_a: PathBuf, config_b: PathBuf },
    /// Run the built-in oracle suite.
    Check,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn error_kind(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Config { .. } => ("config", EXIT_CONFIG),
        Error::Parse { .. } => ("parse", EXIT_CONFIG),
        Error::Io { .. } => ("io", EXIT_CONFIG),
        Error::InvalidArgument(_) | Error::MeshMismatch { .. } | Error::DimensionMismatch { .. } => {
            ("invalid_argument", EXIT_CONFIG)
        }
        _ => ("numeric", EXIT_NUMERIC),
    }
}

fn report(kind: &str, message: String, code: i32) -> i32 {
    let r = ErrorReport {
        error: kind,
        message,
        exit_code: code,
    };
    eprintln!("{}", serde_json::to_string(&r).expect("report serializes"));
    code
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Marks `dir` incomplete until [`OutputDir::finish`] is called.
struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    fn open(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let marker = dir.join(INCOMPLETE_MARKER);
        fs::write(&marker, "run did not finish\n").map_err(|e| Error::io(&marker, e))?;
        Ok(Self { dir })
    }

    fn finish(self) -> Result<()> {
        let marker = self.dir.join(INCOMPLETE_MARKER);
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))
    }
}

fn output_dir(cfg: &SimConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>, with_field: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let dir = OutputDir::open(output_dir(&cfg, out))?;
    let run = simulate(&cfg)?;
    let (grid, slices) = if with_field {
        let grid = run.vorticity(&cfg.field.grid()?);
        let segments = run.segments();
        let slices: Vec<_> = cfg
            .field
            .slice_x
            .iter()
            .flat_map(|x| sectional_slice(&segments, run.lattice.core_radius, &grid, *x))
            .collect();
        (Some(grid), slices)
    } else {
        (None, Vec::new())
    };
    export_outputs(
        &RunArtifacts {
            config: &cfg,
            run: &run,
            field: grid.as_ref(),
            slices: &slices,
        },
        &dir.dir,
    )?;
    dir.finish()
}

fn perturbed(x: &DesignVector, frac: f64, seed: u64) -> DesignVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = x
        .params
        .iter()
        .map(|p| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let v = p.value * (1.0 + sign * frac);
            v.clamp(p.lower, p.upper)
        })
        .collect();
    x.with_values(&values)
}

fn cmd_optimize(config: &Path, target: &Path, out: Option<PathBuf>, perturb: f64) -> Result<()> {
    if !(0.0..1.0).contains(&perturb) {
        return Err(Error::InvalidArgument(format!("--perturb must be in [0, 1), got {perturb}")));
    }
    let cfg = load_config(config)?;
    let wd = read_wake_vtk(target)?;
    let dir = OutputDir::open(output_dir(&cfg, out))?;
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let x0 = perturbed(&cfg.design_vector(), perturb, seed);
    let opts = NelderMeadOptions {
        budget: cfg.optimize.budget,
        initial_step: cfg.optimize.initial_step,
        ..Default::default()
    };
    let res = optimize(&cfg, &wd, &x0, &opts)?;

    let json_path = dir.dir.join("opt_result.json");
    let mut text = serde_json::to_string_pretty(&res).expect("result serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.dir.join("opt_history.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut header = vec!["evaluation".to_string()];
    header.extend(x0.params.iter().map(|p| serde_json::to_value(p.field).expect("field").as_str().unwrap_or("").to_string()));
    header.extend(["cost".into(), "best_so_far".into(), "feasible".into()]);
    let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(&header).map_err(to_err)?;
    for (i, (e, best)) in res.history.iter().zip(res.best_so_far()).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(e.values.iter().map(|v| fmt_f64(*v)));
        rec.extend([fmt_f64(e.cost), fmt_f64(best), e.feasible.to_string()]);
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    dir.finish()
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub a: StrokeVorticity,
    pub b: StrokeVorticity,
    /// `b.upstroke_positive / a.upstroke_positive`.
    pub upstroke_positive_ratio: f64,
}

pub fn compare_configs(a: &SimConfig, b: &SimConfig) -> Result<CompareReport> {
    let grid = a.field.grid()?;
    let measure = |cfg: &SimConfig| -> Result<StrokeVorticity> {
        let run = simulate(cfg)?;
        let field = run.vorticity(&grid);
        Ok(stroke_vorticity(&run, &field))
    };
    let (sa, sb) = (measure(a)?, measure(b)?);
    Ok(CompareReport {
        a: sa,
        b: sb,
        upstroke_positive_ratio: sb.upstroke_positive / sa.upstroke_positive,
    })
}

fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let rep = compare_configs(&load_config(a)?, &load_config(b)?)?;
    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    Ok(())
}

fn cmd_check() -> Result<bool> {
    let cases = run_checks()?;
    for c in &cases {
        println!(
            "{} {}: measured {} expected {} tol {}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_f64(c.measured),
            fmt_f64(c.expected),
            fmt_f64(c.tolerance),
            if c.relative { " (relative)" } else { "" }
        );
    }
    Ok(cases.iter().all(|c| c.passed))
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            return report("usage", e.render().to_string().trim().to_string(), EXIT_CONFIG);
        }
    };
    if let Err(e) = init_threads() {
        let (kind, code) = error_kind(&e);
        return report(kind, e.to_string(), code);
    }
    let result = match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, out, false),
        Command::Field { config, out } => cmd_simulate(&config, out, true),
        Command::Optimize {
            config,
            target,
            out,
            perturb,
        } => cmd_optimize(&config, &target, out, perturb),
        Command::Compare { config_a, config_b } => cmd_compare(&config_a, &config_b),
        Command::Check => match cmd_check() {
            Ok(true) => Ok(()),
            Ok(false) => return report("check", "one or more oracle cases failed".into(), EXIT_CHECK),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (kind, code) = error_kind(&e);
            report(kind, e.to_string(), code)
        }
    }
}
