//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure (bad flags, bad config, failed
//! check), 2 numeric failure during integration.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{self, time_to_fraction, UncertaintyRanges};
use crate::error::{Error, Result};
use crate::io::{self, RunConfig, RunManifest, Strategy};
use crate::observer;
use crate::sim::{self, Profile, Trajectory};

#[derive(Debug, Parser)]
#[command(
    name = "giardia",
    version,
    about = "Giardia lamblia population control: simulate, check and sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Theorem,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Theorem => Profile::Theorem,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the closed loop and write trajectory.csv + manifest.json.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// open-loop | constant | adaptive | schedule[:<file>]
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, value_enum)]
        profile: Option<ProfileArg>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Treat observer gain violations as errors.
        #[arg(long)]
        strict_gains: bool,
    },
    /// Check the envelope and observer bound on a trajectory CSV.
    Check {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Decay rate for the envelope check (defaults to the config's controller delta).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Monte Carlo sweep of the adaptive law over parameter intervals.
    Mc {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative half-width around the nominal parameters; overrides the config's ranges.
        #[arg(long)]
        ranges: Option<f64>,
        #[arg(long, value_enum)]
        profile: Option<ProfileArg>,
        /// Write the JSON summary here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a trajectory with observed counts (t_hours,value).
    Compare {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the open-loop equilibrium.
    Equilibrium {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, Vec<u8>)> {
    match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::Config(format!("{} is not UTF-8", p.display())))?;
            Ok((io::parse_config_str(&text, p)?, bytes))
        }
        None => Ok((RunConfig::default(), io::DEFAULT_CONFIG.as_bytes().to_vec())),
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate {
            config,
            strategy,
            profile,
            out,
            strict_gains,
        } => cmd_simulate(config.as_deref(), strategy, profile, &out, strict_gains),
        Command::Check { traj, config, delta } => cmd_check(&traj, config.as_deref(), delta),
        Command::Mc {
            config,
            n,
            seed,
            ranges,
            profile,
            out,
        } => cmd_mc(config.as_deref(), n, seed, ranges, profile, out.as_deref()),
        Command::Compare { traj, data, out } => cmd_compare(&traj, &data, out.as_deref()),
        Command::Equilibrium { config } => cmd_equilibrium(config.as_deref()),
    }
}

fn cmd_simulate(
    config: Option<&Path>,
    strategy: Option<Strategy>,
    profile: Option<ProfileArg>,
    out: &Path,
    strict_gains: bool,
) -> Result<i32> {
    let (mut cfg, bytes) = load_config(config)?;
    if let Some(p) = profile {
        cfg.sim.profile = p.into();
    }
    let strategy = strategy.unwrap_or_else(|| cfg.strategy.clone());
    let controller = cfg.controller_spec.build(&strategy)?;

    let gains = observer::validate_gains(&cfg.model, &cfg.observer);
    if strict_gains && !gains.passes() {
        return Err(Error::Validation(gains.failures()));
    }

    let traj = sim::simulate(&cfg.model, &cfg.observer, &controller, &cfg.sim)?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv_path = out.join("trajectory.csv");
    io::write_trajectory_csv(&csv_path, &traj.records)?;
    let mut manifest = RunManifest::new(config, &bytes, cfg.sim.profile.name(), &strategy.to_string());
    manifest.warnings = traj.warnings.clone();
    manifest.outputs.push(csv_path.display().to_string());
    manifest.write(&out.join("manifest.json"))?;

    print_summary(&traj, cfg.sim.ics.x1, cfg.observer.lambda, &cfg.sim);
    println!("wrote {}", csv_path.display());
    Ok(0)
}

fn print_summary(traj: &Trajectory, y0: f64, lambda: f64, sc: &sim::SimConfig) {
    let Some(last) = traj.last() else { return };
    println!(
        "final t = {} h, y = {:.6e} cells/ml, x2 = {:.6}",
        last.t, last.x1, last.x2
    );
    match time_to_fraction(&traj.records, 0.10) {
        Some(t) => println!("time to 10% of y(0): {t:.3} h"),
        None => println!("time to 10% of y(0): not reached"),
    }
    if let Some(delta) = traj.delta {
        let v = sim::check_envelope(&traj.records, y0, delta);
        println!("envelope (delta = {delta}): {} violations", v.len());
    }
    let v = sim::check_observer_bound(&traj.records, lambda, sc.ics.x2_bound(), sc.ics.x2_hat.abs());
    println!("observer bound: {} violations", v.len());
    if traj.x1_clamp_events > 0 {
        println!("x1 clamped to 0 on {} steps", traj.x1_clamp_events);
    }
}

fn cmd_check(traj_path: &Path, config: Option<&Path>, delta: Option<f64>) -> Result<i32> {
    let (cfg, _) = load_config(config)?;
    let records = io::read_trajectory_csv(traj_path)?;
    let first = records
        .first()
        .ok_or_else(|| Error::Validation(vec![format!("{} has no records", traj_path.display())]))?;
    let delta = delta.or(cfg.controller_spec.delta);
    let mut clean = true;

    if let Some(d) = delta {
        let v = sim::check_envelope(&records, first.x1, d);
        println!(
            "envelope (delta = {d}): {} violations over {} samples",
            v.len(),
            records.len()
        );
        for x in v.iter().take(5) {
            println!("  t = {} h: y = {:.6e} > {:.6e}", x.t, x.value, x.bound);
        }
        clean &= v.is_empty();
    } else {
        println!("envelope: skipped (no delta)");
    }

    let x2_bound = cfg.sim.ics.x2_abs_bound.unwrap_or(first.x2.abs());
    let v = sim::check_observer_bound(&records, cfg.observer.lambda, x2_bound, first.x2_hat.abs());
    println!(
        "observer bound (lambda = {}): {} violations",
        cfg.observer.lambda,
        v.len()
    );
    for x in v.iter().take(5) {
        println!("  t = {} h: |x2| = {:.6} > {:.6}", x.t, x.value, x.bound);
    }
    clean &= v.is_empty();
    Ok(if clean { 0 } else { 1 })
}

fn cmd_mc(
    config: Option<&Path>,
    n: usize,
    seed: u64,
    ranges: Option<f64>,
    profile: Option<ProfileArg>,
    out: Option<&Path>,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::Validation(vec!["--n must be >= 1".into()]));
    }
    let (mut cfg, _) = load_config(config)?;
    if let Some(p) = profile {
        cfg.sim.profile = p.into();
    }
    let ranges = match (ranges, cfg.ranges) {
        (Some(rel), _) => UncertaintyRanges::around(&cfg.model, rel)?,
        (None, Some(r)) => r,
        (None, None) => UncertaintyRanges::around(&cfg.model, 0.1)?,
    };
    let design = cfg.controller_spec.adaptive()?;
    let summary = analysis::monte_carlo(&ranges, &design, &cfg.observer, &cfg.sim, n, seed)?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    println!("{json}");
    if let Some(p) = out {
        std::fs::write(p, format!("{json}\n")).map_err(|e| Error::io(p, e))?;
    }
    if !summary.certified {
        eprintln!("warning: design does not dominate the ranges or violates the eta condition; no guarantee applies");
    }
    Ok(0)
}

fn cmd_compare(traj_path: &Path, data_path: &Path, out: Option<&Path>) -> Result<i32> {
    let records = io::read_trajectory_csv(traj_path)?;
    let data = match io::read_experiment_csv(data_path)? {
        io::ExperimentData::Counts(c) => c,
        io::ExperimentData::Schedule(_) => {
            return Err(Error::Config(format!(
                "{} is a dose schedule, expected counts (t_hours,value)",
                data_path.display()
            )))
        }
    };
    let traj = Trajectory {
        records,
        ..Trajectory::default()
    };
    let rows = analysis::compare_experiment(&traj, &data)?;
    match out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
            io::tables::write_comparison(std::io::BufWriter::new(f), &rows).map_err(|e| Error::io(p, e))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            io::tables::write_comparison(&mut lock, &rows).map_err(|e| Error::io("<stdout>", e))?;
            lock.flush().map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(0)
}

fn cmd_equilibrium(config: Option<&Path>) -> Result<i32> {
    let (cfg, _) = load_config(config)?;
    let eq = cfg.model.open_loop_equilibrium()?;
    println!("x1_star = {:.9e}", eq.x1);
    println!("x2_star = {:.9e}", eq.x2);
    println!(
        "note: x2_star solves x = sqrt(w_m/2) exp(-x^2/w_m); sqrt(w_m/2) = {:.9e} is only an upper bound",
        (cfg.model.w_m() / 2.0).sqrt()
    );
    Ok(0)
}
