//! `pmbm`: simulate scenarios, run the tracker, benchmark OSPA and run the
//! self-checks.
//!
//! Exit codes: 0 on success, 1 when `validate` finds a failing check, 2 on
//! usage or I/O errors.

mod config;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pmbm_core::montecarlo::{paper_grid, paper_value, run_cell, track_run, CellResult};
use pmbm_core::scenario::{
    generate_measurements, generate_trajectories, parse_scenario, stream_rng, write_scenario,
};
use pmbm_core::validation::{run_checks, CheckOptions};
use pmbm_core::Estimator;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "pmbm", version, about = "Poisson multi-Bernoulli mixture multi-target tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and measurements in the scenario text format.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo run whose measurements to draw.
        #[arg(long, default_value_t = 0)]
        run: usize,
        /// Output file (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the filter over a scenario file and report per-step OSPA.
    Track {
        /// Scenario file with measurements and, optionally, ground truth.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the density after every step as JSON into this directory.
        #[arg(long, value_name = "DIR")]
        dump_density: Option<PathBuf>,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo RMS OSPA over a grid of detection probabilities and
    /// clutter rates.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Number of Monte Carlo runs per cell.
        #[arg(long)]
        runs: Option<usize>,
        /// Summary CSV; per-step curves go to `<stem>_curves.csv` next to it.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the library with its brute-force oracles.
    Validate {
        /// Only run the named checks (likelihood, conjugacy, murty, mbm01,
        /// estimators, ospa).
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Multiply fixture counts by this factor.
        #[arg(long, default_value_t = 1)]
        scale: usize,
        /// Scale one reference value by (1 + x) to exercise failure paths.
        #[arg(long, default_value_t = 0.0, hide = true)]
        perturb: f64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; unspecified keys take the published defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the published setup (for `benchmark`: the full grid, 100 runs).
    #[arg(long, conflicts_with = "config")]
    paper: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of 1,2,3.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<u8>>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = &self.estimators {
            cfg.estimators = e.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            common,
            run,
            output,
        } => {
            let cfg = common.load()?;
            let scenario = cfg.scenario();
            let truth = generate_trajectories(&scenario)?;
            let mut rng = stream_rng(scenario.seed, run as u64 + 1);
            let meas = generate_measurements(&truth, &scenario.model(), &scenario.area, &mut rng)?;
            write_output(output.as_deref(), &write_scenario(Some(&truth), Some(&meas)))?;
            Ok(true)
        }
        Command::Track {
            input,
            common,
            dump_density,
            output,
        } => {
            let cfg = common.load()?;
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("cannot read {}", input.display()))?;
            let (truth, meas) =
                parse_scenario(&text).with_context(|| format!("in {}", input.display()))?;
            if let Some(dir) = &dump_density {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let mut dump_err = None;
            let records = track_run(
                &cfg.scenario().model(),
                &cfg.filter(),
                &truth,
                &meas,
                &cfg.estimator_list()?,
                &cfg.ospa(),
                |step, d| {
                    if let Some(dir) = &dump_density {
                        let path = dir.join(format!("density_{step:04}.json"));
                        if let Err(e) = std::fs::write(&path, d.to_json()) {
                            dump_err.get_or_insert(format!("{}: {e}", path.display()));
                        }
                    }
                },
            )?;
            if let Some(e) = dump_err {
                anyhow::bail!("cannot write density dump {e}");
            }
            let mut csv = String::from("step,estimator,ospa,cardinality_estimate,truth_cardinality\n");
            for r in &records {
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.step, r.estimator, r.ospa, r.cardinality_estimate, r.truth_cardinality
                )?;
            }
            write_output(output.as_deref(), &csv)?;
            Ok(true)
        }
        Command::Benchmark {
            common,
            runs,
            output,
        } => {
            let cfg = common.load()?;
            let grid = if common.paper { paper_grid() } else { cfg.grid_cells() };
            let runs = runs.unwrap_or(cfg.runs);
            anyhow::ensure!(runs >= 1, "runs must be at least 1");
            let estimators = cfg.estimator_list()?;
            let mut results = Vec::new();
            for &(pd, lc) in &grid {
                eprintln!("cell p_d={pd} lambda_c={lc}: {runs} runs");
                results.extend(run_cell(
                    &cfg.scenario(),
                    &cfg.filter(),
                    &cfg.ospa(),
                    &estimators,
                    runs,
                    pd,
                    lc,
                )?);
            }
            print!("{}", table(&grid, &estimators, &results));
            if let Some(path) = output {
                write_output(Some(&path), &summary_csv(&results, runs))?;
                write_output(Some(&curves_path(&path)), &curves_csv(&results))?;
            }
            Ok(true)
        }
        Command::Validate {
            filter,
            seed,
            scale,
            perturb,
        } => {
            let results = run_checks(
                &filter,
                &CheckOptions {
                    seed,
                    perturb,
                    scale,
                },
            );
            let mut ok = true;
            for r in &results {
                println!(
                    "{} {:<11} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                ok &= r.passed;
            }
            Ok(ok)
        }
    }
}

fn curves_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("benchmark");
    path.with_file_name(format!("{stem}_curves.csv"))
}

fn summary_csv(results: &[CellResult], runs: usize) -> String {
    let mut out = String::from("p_detection,clutter_rate,estimator,runs,rms_ospa,paper\n");
    for r in results {
        let paper = paper_value(r.p_detection, r.clutter_rate, r.estimator)
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{runs},{:.6},{paper}",
            r.p_detection, r.clutter_rate, r.estimator, r.rms
        )
        .unwrap();
    }
    out
}

fn curves_csv(results: &[CellResult]) -> String {
    let mut out = String::from("p_detection,clutter_rate,estimator,step,rms_ospa\n");
    for r in results {
        for (k, v) in r.curve.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{v:.6}",
                r.p_detection,
                r.clutter_rate,
                r.estimator,
                k + 1
            )
            .unwrap();
        }
    }
    out
}

fn table(grid: &[(f64, f64)], estimators: &[Estimator], results: &[CellResult]) -> String {
    let mut out = format!("{:<14}", "(p_d, lc)");
    for e in estimators {
        write!(out, "  {:>13}", format!("Est{e} (paper)")).unwrap();
    }
    out.push('\n');
    for &(pd, lc) in grid {
        write!(out, "{:<14}", format!("({pd}, {lc})")).unwrap();
        for &e in estimators {
            let r = results
                .iter()
                .find(|r| r.p_detection == pd && r.clutter_rate == lc && r.estimator == e);
            let cell = match (r, paper_value(pd, lc, e)) {
                (Some(r), Some(p)) => format!("{:.2} ({p:.2})", r.rms),
                (Some(r), None) => format!("{:.2}", r.rms),
                _ => "-".into(),
            };
            write!(out, "  {cell:>13}").unwrap();
        }
        out.push('\n');
    }
    out
}
