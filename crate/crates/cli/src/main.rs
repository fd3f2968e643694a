use clap::{Parser, Subcommand};
use pumpd_core::geometry::reference_path;
use pumpd_core::global_solver::evaluate_displacement;
use pumpd_core::io::{
    frechet_distance, plot_comparison, read_config, read_crack_csv, write_crack_csv, write_displacement_samples,
    write_pd_snapshot, RunConfig,
};
use pumpd_core::{coupling, run_coupled, vec2, Error, Rect, Vec2};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pumpd",
    version,
    about = "Crack propagation with a partition-of-unity solver and moving peridynamic boxes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full coupled run: crack CSV, per-step diagnostics and an SVG plot.
    Run {
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete Frechet distance between two crack CSVs.
    Compare { a: PathBuf, b: PathBuf },
    /// Plots crack CSVs over the specimen of a config.
    Plot {
        config: PathBuf,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long, default_value = "plot.svg")]
        output: PathBuf,
    },
    /// One local solve in the first box, for debugging.
    PdOnly {
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        load_factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One elastic solve with the initial crack; writes sampled displacements.
    GlobalOnly {
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        load_factor: f64,
        /// Sampling grid spacing in m.
        #[arg(long, default_value_t = 0.00396875)]
        spacing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures sorted by exit code.
enum Failure {
    Config(Error),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::UnknownCase(_) => Failure::Config(e),
            other => Failure::Solver(other),
        }
    }
}

fn load(config: &Path, out: Option<PathBuf>) -> Result<RunConfig, Failure> {
    let mut c = read_config(config).map_err(|e| match e {
        Error::Io(io) => Failure::Config(Error::Config {
            key: config.display().to_string(),
            reason: io.to_string(),
        }),
        other => Failure::Config(other),
    })?;
    if let Some(dir) = out {
        c.output_dir = dir;
    }
    Ok(c)
}

fn output_dir(c: &RunConfig) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&c.output_dir).map_err(|e| Failure::Solver(e.into()))?;
    Ok(&c.output_dir)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out } => {
            let c = load(&config, out)?;
            let report = run_coupled(&c.setup())?;
            let dir = output_dir(&c)?;
            write_crack_csv(&report.crack, &dir.join("crack.csv"))?;
            report.write_diagnostics(&dir.join("diagnostics.csv"))?;
            let mut paths = vec![("simulated".to_string(), report.crack.clone())];
            if let Some(id) = c.specimen.reference_case() {
                let reference = reference_path(id);
                let d = frechet_distance(&report.grown_path(), reference.points());
                println!("frechet distance to reference: {d:.6} m");
                paths.push(("experiment".to_string(), reference));
            }
            plot_comparison(&paths, &c.domain(), &report.boxes, &dir.join("crack.svg"))?;
            let tip = report.crack.tip();
            println!(
                "tip ({:.6}, {:.6}) after {} load steps, {} local and {} global solves",
                tip.x,
                tip.y,
                report.steps.len(),
                report.local_solves,
                report.global_solves
            );
            if let Some(step) = report.broke_through {
                println!("crack reached a free surface at load step {step}");
            }
            println!("results in {}", dir.display());
        }
        Command::Compare { a, b } => {
            let a = read_crack_csv(&a).map_err(Failure::Config)?;
            let b = read_crack_csv(&b).map_err(Failure::Config)?;
            println!("{}", frechet_distance(a.points(), b.points()));
        }
        Command::Plot { config, paths, output } => {
            let c = load(&config, None)?;
            let mut labeled = Vec::with_capacity(paths.len());
            for p in &paths {
                let label = p
                    .file_stem()
                    .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                labeled.push((label, read_crack_csv(p).map_err(Failure::Config)?));
            }
            plot_comparison(&labeled, &c.domain(), &[], &output)?;
        }
        Command::PdOnly {
            config,
            load_factor,
            out,
        } => {
            let c = load(&config, out)?;
            let local = coupling::single_local_solve(&c.setup(), load_factor)?;
            let dir = output_dir(&c)?;
            write_pd_snapshot(&local.state, &local.damage, &dir.join("pd_only.csv"))?;
            write_crack_csv(&local.crack, &dir.join("pd_only_crack.csv"))?;
            let max = local.damage.iter().copied().fold(0.0, f64::max);
            println!(
                "{} nodes, max damage {max:.4}, tip ({:.6}, {:.6})",
                local.state.len(),
                local.crack.tip().x,
                local.crack.tip().y
            );
        }
        Command::GlobalOnly {
            config,
            load_factor,
            spacing,
            out,
        } => {
            let c = load(&config, out)?;
            if spacing.is_nan() || spacing <= 0.0 {
                return Err(Failure::Config(Error::Config {
                    key: "--spacing".into(),
                    reason: "must be positive".into(),
                }));
            }
            let solution = coupling::single_global_solve(&c.setup(), load_factor)?;
            let domain = c.domain();
            let crack = domain.initial_crack_path();
            let points = sample_points(&domain.beam_rect(), spacing, |p| {
                domain.contains(p) && crack.side(p).is_some()
            });
            let values = evaluate_displacement(&solution, &points)?;
            let dir = output_dir(&c)?;
            write_displacement_samples(&points, &values, &dir.join("global_only.csv"))?;
            println!("{} displacement samples written", points.len());
        }
    }
    Ok(())
}

/// Cell centers of a grid over `rect` that pass `keep`.
fn sample_points(rect: &Rect, spacing: f64, keep: impl Fn(&Vec2) -> bool) -> Vec<Vec2> {
    let nx = (rect.width() / spacing).floor().max(1.0) as usize;
    let ny = (rect.height() / spacing).floor().max(1.0) as usize;
    let (dx, dy) = (rect.width() / nx as f64, rect.height() / ny as f64);
    (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| vec2(rect.min.x + (i as f64 + 0.5) * dx, rect.min.y + (j as f64 + 0.5) * dy))
        })
        .filter(|p| keep(p))
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
