//! `meshloc` command-line runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use meshloc::scenario::{validate, ScenarioFile, ValidationErrors};
use meshloc::sim::Simulation;

#[derive(Parser, Debug)]
#[command(
    name = "meshloc",
    version,
    about = "Swarm mesh, UWB ranging and cooperative localization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write metrics files.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Run K consecutive seeds concurrently; outputs get a `_seed<N>` suffix.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        parallel: u32,
    },
    /// Check a scenario file and list every problem found.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print a documented sample scenario.
    Example,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Invalid(ValidationErrors),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn init_logging() {
    let level = std::env::var("MESHLOC_LOG").unwrap_or_else(|_| "off".into());
    let filter = match level.as_str() {
        "off" | "info" | "trace" => level.as_str(),
        other => {
            eprintln!("warning: MESHLOC_LOG={other} not recognised (off|info|trace); logging disabled");
            "off"
        }
    };
    env_logger::Builder::new()
        .parse_filters(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn load(path: &Path) -> Result<Result<ScenarioFile, ValidationErrors>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(validate(&bytes).map(|v| {
        for w in &v.warnings {
            eprintln!("warning: {w}");
        }
        v.file
    }))
}

fn output_name(stem: &str, ext: &str, seed: u64, suffixed: bool) -> String {
    if suffixed {
        format!("{stem}_seed{seed}.{ext}")
    } else {
        format!("{stem}.{ext}")
    }
}

fn run_one(file: &ScenarioFile, out: &Path, format: Format, suffixed: bool) -> Result<()> {
    let scenario = file.build().map_err(|e| anyhow::anyhow!("{e}"))?;
    let seed = scenario.seed;
    info!("seed {seed}: running {} s", scenario.duration_s);
    let report = Simulation::new(scenario).run();
    let series_path = match format {
        Format::Csv => {
            let p = out.join(output_name("metrics", "csv", seed, suffixed));
            let f = fs::File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
            report
                .write_csv(f)
                .with_context(|| format!("cannot write {}", p.display()))?;
            p
        }
        Format::Json => {
            let p = out.join(output_name("metrics", "json", seed, suffixed));
            fs::write(&p, report.series_json() + "\n").with_context(|| format!("cannot write {}", p.display()))?;
            p
        }
    };
    let summary_path = out.join(output_name("summary", "json", seed, suffixed));
    fs::write(&summary_path, report.summary_json() + "\n")
        .with_context(|| format!("cannot write {}", summary_path.display()))?;
    info!(
        "seed {seed}: wrote {} and {}",
        series_path.display(),
        summary_path.display()
    );
    for t in &report.summary.topics {
        if !t.counters.is_conserved() {
            warn!("seed {seed}: topic {} counters not conserved", t.name);
        }
    }
    Ok(())
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
    out: &Path,
    format: Format,
    parallel: u32,
) -> Result<(), Failure> {
    let mut file = load(path)?.map_err(Failure::Invalid)?;
    if let Some(s) = seed {
        file.seed = s;
    }
    if let Some(d) = duration {
        file.duration_s = d;
    }
    // overrides can break an otherwise valid file
    file.check().map_err(|e| Failure::Invalid(ValidationErrors(e)))?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let suffixed = parallel > 1;
    let runs: Vec<ScenarioFile> = (0..parallel as u64)
        .map(|k| ScenarioFile {
            seed: file.seed.wrapping_add(k),
            ..file.clone()
        })
        .collect();
    let results: Vec<Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs
            .iter()
            .map(|f| s.spawn(move || run_one(f, out, format, suffixed)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(anyhow::anyhow!("simulation thread panicked")))
            })
            .collect()
    });
    results.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    load(path)?.map_err(Failure::Invalid)?;
    println!("{}: ok", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let result = match &cli.command {
        Command::Run {
            scenario,
            seed,
            duration,
            out,
            format,
            parallel,
        } => cmd_run(scenario, *seed, *duration, out, *format, *parallel),
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Example => {
            println!("{}", ScenarioFile::example().to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(errors)) => {
            for e in &errors.0 {
                eprintln!("error: {e}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
