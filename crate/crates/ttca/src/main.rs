use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use rayon::prelude::*;
use ttca_core::fit::{build_constraints, fit_constrained, ConstraintWindow, DEFAULT_SAMPLE_SPACING};
use ttca_core::plan::{compare, run_cpf, run_ttca, Scenario};
use ttca_core::sim::LcMetrics;
use ttca_core::ttc::{gate_lane_change, time_to_collision, Gate, LongitudinalPair, DEFAULT_D_STOP, DEFAULT_THRESHOLD};
use ttca_core::Error;

use ttca::export::{self, ExportError};
use ttca::scenario::{load_scenario_file, parse_speed, LoadError};

/// Lane-change planning: potential-field waypoints with a TTC-constrained cubic refit.
#[derive(Parser)]
#[command(name = "ttca", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planner {
    Cpf,
    Ttca,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one planner and track its path.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "ttca")]
        planner: Planner,
        #[arg(long)]
        plot: bool,
    },
    /// Run both planners on a scenario (or every *.json in --batch) and export the comparison.
    Compare {
        #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        batch: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Time to collision from a scenario file or explicit values; speeds take m/s or km/h.
    Ttc {
        #[arg(long, conflicts_with_all = ["v1", "v2", "gap"])]
        scenario: Option<PathBuf>,
        #[arg(long, value_parser = parse_speed, required_unless_present = "scenario")]
        v1: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a1: f64,
        #[arg(long, value_parser = parse_speed, required_unless_present = "scenario")]
        v2: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a2: f64,
        /// Centre-to-centre gap, m.
        #[arg(long, required_unless_present = "scenario")]
        gap: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_D_STOP)]
        d_stop: f64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Constrained cubic fit of x,y[,weight] waypoints to a corridor window.
    Fit {
        #[arg(long)]
        waypoints: PathBuf,
        /// x_start,x_end
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        /// y_lower,y_upper
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        corridor: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SPACING)]
        spacing: f64,
    },
}

#[derive(Debug, thiserror::Error)]
enum AppError {
    /// The plan is unsafe or impossible as posed; exit code 2.
    #[error("{0}")]
    Unsafe(String),
    #[error("{0}")]
    Failed(String),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        match e {
            Error::BrakeFirst { .. } | Error::Infeasible => AppError::Unsafe(e.to_string()),
            _ => AppError::Failed(e.to_string()),
        }
    }
}

impl From<LoadError> for AppError {
    fn from(e: LoadError) -> Self {
        AppError::Failed(e.to_string())
    }
}

impl From<ExportError> for AppError {
    fn from(e: ExportError) -> Self {
        AppError::Failed(e.to_string())
    }
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Unsafe(_) => 2,
            AppError::Failed(_) => 1,
        }
    }
}

fn print_metrics(m: &LcMetrics) {
    for (name, v) in LcMetrics::FIELDS.iter().zip(m.values()) {
        println!("{name} {v}");
    }
}

fn plan(scenario: &Path, out: &Path, planner: Planner, plot: bool) -> Result<(), AppError> {
    let s = load_scenario_file(scenario)?;
    std::fs::create_dir_all(out).map_err(|e| AppError::Failed(format!("{}: {e}", out.display())))?;
    let (name, run) = match planner {
        Planner::Cpf => ("cpf", run_cpf(&s)?),
        Planner::Ttca => {
            let r = run_ttca(&s)?;
            info!("ttc {} s ({:?}), maneuver {:?}", r.ttc.seconds, r.ttc.regime, r.maneuver);
            if let Some(c) = r.cubic {
                println!("cubic {} {} {} {}", c.a0, c.a1, c.a2, c.a3);
            }
            ("ttca", r.run)
        }
    };
    export::write_trajectory(&run.log, &out.join(format!("{name}_traj.csv")))?;
    export::write_metrics(&run.metrics, &out.join(export::METRICS))?;
    if plot {
        let p = out.join(export::PLOT);
        std::fs::write(&p, ttca::plot::paths_svg(&[(name, &run.log)]))
            .map_err(|e| AppError::Failed(format!("{}: {e}", p.display())))?;
    }
    print_metrics(&run.metrics);
    Ok(())
}

fn compare_one(scenario: &Path, out: &Path, plot: bool) -> Result<(), AppError> {
    let s = load_scenario_file(scenario)?;
    let r = compare(&s)?;
    let files = export::export_comparison(&r, out, plot)?;
    for f in &files {
        debug!("wrote {}", f.display());
    }
    println!("metric cpf ttca reduction");
    let (a, b) = (r.cpf.metrics.values(), r.ttca.run.metrics.values());
    for (i, name) in LcMetrics::FIELDS.iter().enumerate() {
        println!("{name} {} {} {}", a[i], b[i], r.deltas[i]);
    }
    Ok(())
}

fn compare_batch(dir: &Path, out: &Path, plot: bool) -> Result<(), AppError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| AppError::Failed(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::Failed(format!("{}: no *.json scenarios", dir.display())));
    }
    let results: Vec<(PathBuf, Result<ttca_core::plan::ComparisonReport, AppError>)> = files
        .par_iter()
        .map(|f| {
            let r = load_scenario_file(f).map_err(AppError::from).and_then(|s| compare(&s).map_err(AppError::from));
            let r = r.and_then(|r| {
                let stem = f.file_stem().unwrap_or_default();
                export::export_comparison(&r, &out.join(stem), plot)?;
                Ok(r)
            });
            (f.clone(), r)
        })
        .collect();
    let mut worst: Option<AppError> = None;
    for (f, r) in results {
        match r {
            Ok(r) => println!("{} ok path_length_reduction {}", f.display(), r.deltas[0]),
            Err(e) => {
                println!("{} {} {e}", f.display(), if e.code() == 2 { "unsafe" } else { "error" });
                if worst.as_ref().map_or(true, |w| e.code() < w.code()) {
                    worst = Some(e);
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn ttc_cmd(s: Option<Scenario>, pair: Option<LongitudinalPair>, threshold: f64) -> Result<(), AppError> {
    let (pair, threshold) = match (s, pair) {
        (Some(s), _) => {
            let o = s.obstacle.ok_or_else(|| AppError::Failed("scenario has no obstacle".into()))?;
            let p = LongitudinalPair {
                v1: s.ego.speed,
                a1: s.ego.accel,
                v2: o.speed,
                a2: o.accel,
                d_rela: o.x - s.ego.x,
                d_stop: s.ttc.d_stop,
            };
            (p, s.ttc.threshold)
        }
        (None, Some(p)) => (p, threshold),
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let r = time_to_collision(&pair)?;
    let gate = gate_lane_change(&r, threshold);
    println!("ttc_s {}", r.seconds);
    println!("regime {:?}", r.regime);
    println!("gate {gate:?}");
    match gate {
        Gate::Proceed => Ok(()),
        Gate::BrakeFirst => Err(Error::BrakeFirst { ttc: r.seconds }.into()),
    }
}

fn fit_cmd(path: &Path, window: Option<Vec<f64>>, corridor: Option<Vec<f64>>, spacing: f64) -> Result<(), AppError> {
    let w = export::read_waypoints(path)?;
    w.validate()?;
    let bounds = match (window, corridor) {
        (Some(x), Some(y)) if x.len() != 2 || y.len() != 2 => {
            return Err(AppError::Failed("--window and --corridor take two comma-separated numbers".into()));
        }
        (Some(x), Some(y)) => {
            let cw = ConstraintWindow { x_start: x[0], x_end: x[1], y_lower: y[0], y_upper: y[1], sample_spacing: spacing };
            if !(cw.x_start < cw.x_end) {
                return Err(Error::EmptyWindow { x_start: cw.x_start, x_end: cw.x_end }.into());
            }
            build_constraints(&cw)
        }
        (None, None) => Vec::new(),
        _ => return Err(AppError::Failed("--window and --corridor go together".into())),
    };
    let r = fit_constrained(&w, &bounds)?;
    if r.kkt_residual > 1.0 {
        warn!("KKT residual {} exceeds tolerance", r.kkt_residual);
    }
    let c = r.coeffs;
    println!("a0 {}\na1 {}\na2 {}\na3 {}", c.a0, c.a1, c.a2, c.a3);
    println!("residual {}", r.residual);
    println!("active_constraints {}", r.active_constraints);
    println!("kkt_residual {}", r.kkt_residual);
    Ok(())
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.cmd {
        Cmd::Plan { scenario, out, planner, plot } => plan(&scenario, &out, planner, plot),
        Cmd::Compare { scenario: Some(s), out, plot, .. } => compare_one(&s, &out, plot),
        Cmd::Compare { batch: Some(dir), out, plot, .. } => compare_batch(&dir, &out, plot),
        Cmd::Compare { .. } => unreachable!("clap requires --scenario or --batch"),
        Cmd::Ttc { scenario, v1, a1, v2, a2, gap, d_stop, threshold } => {
            let s = scenario.map(|p| load_scenario_file(&p)).transpose()?;
            let pair = match (v1, v2, gap) {
                (Some(v1), Some(v2), Some(d_rela)) => Some(LongitudinalPair { v1, a1, v2, a2, d_rela, d_stop }),
                _ => None,
            };
            ttc_cmd(s, pair, threshold)
        }
        Cmd::Fit { waypoints, window, corridor, spacing } => fit_cmd(&waypoints, window, corridor, spacing),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TTCA_LOG", "warn")).init();
    // usage errors exit 1 like any other error; 2 means a planned-unsafe outcome
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ttca: {e}");
            ExitCode::from(e.code())
        }
    }
}
