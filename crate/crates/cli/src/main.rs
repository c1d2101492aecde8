//! Command-line front end: single solves, sweeps and the self-check suite.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 infeasible
//! problem, 4 solver failure (or a failed validation check).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flmar::bcd::{bcd_solve, initial_allocation, BcdResult};
use flmar::config::RunConfig;
use flmar::harness::scenario::gen_topology;
use flmar::harness::sweep::{run_sweep, Algorithm, Axis, SweepSpec};
use flmar::harness::ResolutionPolicy;
use flmar::validate::{run_validation, ValidateOptions};
use flmar::{Allocation, Error};

#[derive(Parser)]
#[command(name = "flmar", version, about = "Joint power, bandwidth, CPU frequency and resolution allocation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Repeat to print more, e.g. the per-round trace.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one random topology and write the allocation.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter sweep and write the result table and plot data.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// p_max (dBm), f_max (GHz), rho, or t_fixed (s).
        #[arg(long)]
        axis: String,
        /// Comma-separated algorithm labels: proposed, proposed:w1,w2,rho,
        /// minpixel, randpixel, joint-fixed[:T], comm-only[:T], comp-only[:T].
        #[arg(long, default_value = "proposed,minpixel")]
        algorithms: String,
        /// Comma-separated grid; the figure grid for the axis when omitted.
        #[arg(long)]
        grid: Option<String>,
        /// Overrides `replications` from the configuration.
        #[arg(long)]
        replications: Option<usize>,
        /// Semicolon-separated `w1,w2,rho` triples for `proposed`. Defaults
        /// to (0.9,0.1), (0.5,0.5), (0.1,0.9) with the configured rho, or the
        /// configured triple on the rho axis.
        #[arg(long)]
        weights: Option<String>,
        /// Resolution rule of the comm-only scheme: random, min or max.
        #[arg(long, default_value = "random")]
        comm_only_resolution: String,
    },
    /// Run the property and oracle checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Instances per solver check.
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// Relative error injected into the converged multipliers.
        #[arg(long, default_value_t = 0.0, hide = true)]
        perturb_nu: f64,
    },
}

enum Failure {
    Usage(String),
    Solver(Error),
    Io(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) | Error::InvalidWeights(m) => Failure::Usage(m),
            e => Failure::Solver(e),
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    cfg.verbosity = cfg.verbosity.max(common.verbose);
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn allocation_csv(a: &Allocation) -> String {
    let mut out = String::from("device,power_w,bandwidth_hz,freq_hz,resolution\n");
    for n in 0..a.len() {
        let _ = writeln!(out, "{n},{:.10e},{:.10e},{:.10e},{}", a.power[n], a.bandwidth[n], a.freq[n], a.resolution[n]);
    }
    out
}

fn solve(common: &Common) -> Result<(), Failure> {
    let run = load(common)?;
    let sys = run.system_config();
    let devices = gen_topology(&run.scenario_spec())?;
    let init = initial_allocation(&sys, &devices)?;
    let w = run.weights()?;
    let BcdResult { allocation, cost, trace, converged } = bcd_solve(&sys, &devices, &w, &run.bcd_config(), &init)?;
    println!("total energy   {:.6e} J", cost.total_energy);
    println!("total time     {:.6e} s", cost.total_time);
    println!("accuracy sum   {:.6}", cost.accuracy_sum);
    println!("objective      {:.6e}", cost.objective);
    println!("rounds         {} ({})", trace.rounds.len(), if converged { "converged" } else { "round cap reached" });
    if run.verbosity > 1 {
        print!("{}", trace.to_csv());
    }
    let a = write(&run.output_dir, "allocation.csv", &allocation_csv(&allocation))?;
    let t = write(&run.output_dir, "bcd_trace.csv", &trace.to_csv())?;
    println!("wrote {} and {}", a.display(), t.display());
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("cannot parse '{x}' as a number"))))
        .collect()
}

/// Splits an algorithm list on commas, keeping numeric pieces with the label
/// before them so that `proposed:0.5,0.5,1,minpixel` yields two labels.
fn split_labels(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for piece in s.split(',').map(str::trim) {
        match out.last_mut() {
            Some(last) if last.contains(':') && piece.parse::<f64>().is_ok() => {
                last.push(',');
                last.push_str(piece);
            }
            _ => out.push(piece.to_string()),
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    common: &Common,
    axis: &str,
    algorithms: &str,
    grid: Option<&str>,
    replications: Option<usize>,
    weights: Option<&str>,
    comm_only_resolution: &str,
) -> Result<(), Failure> {
    let run = load(common)?;
    let axis: Axis = axis.parse()?;
    let algs = split_labels(algorithms)
        .iter()
        .map(|a| a.parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()?;
    let triples = match weights {
        Some(w) => w
            .split(';')
            .map(|t| match parse_list(t)?[..] {
                [a, b, c] => Ok((a, b, c)),
                _ => Err(Failure::Usage(format!("weight triple '{t}' needs three numbers"))),
            })
            .collect::<Result<Vec<_>, _>>()?,
        None if axis == Axis::Rho => vec![(run.w1, run.w2, run.rho)],
        None => vec![(0.9, 0.1, run.rho), (0.5, 0.5, run.rho), (0.1, 0.9, run.rho)],
    };
    let mut spec = SweepSpec::new(axis, replications.unwrap_or(run.replications), triples);
    if let Some(g) = grid {
        spec.grid = parse_list(g)?;
    }
    spec.paired = run.paired;
    spec.bcd = flmar::bcd::BcdConfig { fixed_deadline: None, ..run.bcd_config() };
    spec.comm_only_resolution = match comm_only_resolution {
        "random" => ResolutionPolicy::Random,
        "min" => ResolutionPolicy::Fixed(run.s_min),
        "max" => ResolutionPolicy::Fixed(run.s_max),
        other => return Err(Failure::Usage(format!("unknown comm-only resolution rule '{other}'"))),
    };
    let table = run_sweep(&run.system_config(), &run.scenario_spec(), &spec, &algs)?;
    let failed = table.rows.iter().filter(|r| r.failed()).count();
    let path = write(&run.output_dir, "sweep.csv", &table.to_csv())?;
    println!("{} rows ({failed} failed cells) -> {}", table.rows.len(), path.display());
    if run.verbosity > 1 {
        for r in table.rows.iter().filter(|r| r.failed()) {
            println!("  {} at {}={} seed {}: {}", r.algorithm, r.axis_name, r.axis_value, r.seed, r.error.as_deref().unwrap_or(""));
        }
    }
    for (stem, body) in table.plot_data() {
        let p = write(&run.output_dir, &format!("{stem}.csv"), &body)?;
        println!("plot data -> {}", p.display());
    }
    Ok(())
}

fn validate(common: &Common, instances: usize, perturb_nu: f64) -> Result<(), Failure> {
    let run = load(common)?;
    if instances == 0 {
        return Err(Failure::Usage("need at least one instance".into()));
    }
    let checks = run_validation(&run, &ValidateOptions { perturb_nu, instances });
    for c in &checks {
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Solve { common } => solve(common),
        Command::Sweep { common, axis, algorithms, grid, replications, weights, comm_only_resolution } => sweep(
            common,
            axis,
            algorithms,
            grid.as_deref(),
            *replications,
            weights.as_deref(),
            comm_only_resolution,
        ),
        Command::Validate { common, instances, perturb_nu } => validate(common, *instances, *perturb_nu),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) if e.is_infeasibility() => {
            eprintln!("infeasible: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e}");
            ExitCode::from(4)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
        Err(Failure::Checks) => {
            eprintln!("some checks failed");
            ExitCode::from(4)
        }
    }
}
