//! `ndde`: stability checks, simulation, thresholds and sweeps for scalar
//! linear neutral delay differential equations given as JSON spec files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ndde::criteria::{evaluate, evaluate_all, Claim, CriterionId, CriterionVerdict, Verdict};
use ndde::equation::validate;
use ndde::harness::{example2_table, reproduce_example1, reproduce_example2, sweep, sweep_csv, threshold, SweepAxis};
use ndde::simulator::{estimate_decay, integrate_on, Grid, Oracle, SimConfig};
use ndde::{EquationFile, Finding};
use serde_json::json;

/// Exit code when no criterion establishes exponential stability.
const EXIT_NONE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ndde",
    version,
    about = "Stability criteria and simulation for scalar linear neutral delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the stability criteria on an equation.
    ///
    /// Exits 0 when some criterion with an exponential-stability claim is
    /// satisfied, 2 when none is, 1 on input errors.
    Check {
        spec: PathBuf,
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<CriterionId>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrate the equation and estimate the decay rate.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        /// Uniform step; defaults to min(1e-3, min lag / 100), aligned to the lags.
        #[arg(long, conflicts_with = "geometric")]
        dt: Option<f64>,
        /// Geometric grid `t_{n+1} = t_n (1 + eta)` for pantograph delays.
        #[arg(long, value_name = "ETA", num_args = 0..=1, default_missing_value = "1e-3")]
        geometric: Option<f64>,
        /// Trajectory CSV; a JSON sidecar with the same stem records the run.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisect for the value of one parameter where the oracle outcome flips.
    Threshold {
        spec: PathBuf,
        /// `tau`, `b`, `sigma`, `a` or a dotted path such as `delay.1.h.tau`.
        #[arg(long)]
        param: String,
        /// `lo:hi`
        #[arg(long, value_parser = parse_range)]
        range: (f64, f64),
        /// `simulate`, a criterion id, or ids joined by `+`.
        #[arg(long, default_value = "simulate")]
        oracle: Oracle,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Evaluate criteria (and optionally the simulator) over a 1- or 2-parameter grid.
    Sweep {
        spec: PathBuf,
        /// `param=lo:hi:n[,param2=lo:hi:n]`
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<SweepAxis>,
        /// Columns to compute: criterion ids and/or `simulate`, joined by `+`.
        /// Every criterion is included when no id is named.
        #[arg(long)]
        oracle: Option<String>,
        /// Comma-separated criterion ids, added to those named by `--oracle`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<CriterionId>,
        /// Add the simulated classification column.
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimArgs,
        /// CSV output (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the comparison tables for the two worked families.
    Reproduce {
        which: Which,
        /// Skip the simulated-threshold column of example1.
        #[arg(long)]
        no_simulate: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(clap::Args)]
struct OutArgs {
    /// Write the results to this file as well.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; by default taken from the file extension.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(clap::Args)]
struct SimArgs {
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            t_end: self.t_end,
            dt: self.dt,
            history: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Example1,
    Example2,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    if !(lo < hi) {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn load(path: &Path) -> Result<EquationFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EquationFile::load(&text).with_context(|| format!("in {}", path.display()))
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn format_for(out: &OutArgs, path: &Path) -> Format {
    out.format
        .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        })
}

fn detail(v: &CriterionVerdict) -> String {
    let mut parts = Vec::new();
    if let Some(b) = &v.branch {
        parts.push(format!("branch {b}"));
    }
    if let Some(s) = &v.subset {
        parts.push(format!("subset {s:?}"));
    }
    if let Some(w) = v.omega {
        parts.push(format!("omega {w}"));
    }
    if let Some(n) = &v.note {
        parts.push(n.clone());
    }
    parts.join("; ")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_check(spec: &Path, criteria: &[CriterionId], out: &OutArgs) -> Result<ExitCode> {
    let file = load(spec)?;
    let eq = file.equation();
    let findings = validate(&eq);
    for f in &findings {
        if f.is_blocking() {
            eprintln!("warning: {}", serde_json::to_string(f)?);
        }
        if let Finding::UnboundedDelay { term } = f {
            eprintln!("note: {term} has an unbounded delay; only the unbounded-delay criteria apply");
        }
    }
    let verdicts: Vec<CriterionVerdict> = if criteria.is_empty() {
        evaluate_all(&eq)
    } else {
        criteria.iter().map(|id| evaluate(&eq, *id)).collect()
    };

    println!("{:<8} {:<15} {:<22} detail", "id", "verdict", "claim");
    for v in &verdicts {
        println!(
            "{:<8} {:<15} {:<22} {}",
            v.criterion.as_str(),
            format!("{:?}", v.verdict),
            format!("{:?}", v.claim),
            detail(v)
        );
    }
    let exponential = verdicts
        .iter()
        .any(|v| v.verdict == Verdict::Satisfied && v.claim == Claim::ExponentialStability);

    if let Some(path) = &out.out {
        let text = match format_for(out, path) {
            Format::Json => serde_json::to_string_pretty(&json!({
                "fingerprint": eq.fingerprint(),
                "findings": findings,
                "exponentially_stable": exponential,
                "verdicts": verdicts,
            }))?,
            Format::Csv => {
                let mut s = String::from("criterion,verdict,claim,detail\n");
                for v in &verdicts {
                    writeln!(
                        s,
                        "{},{:?},{:?},{}",
                        v.criterion,
                        v.verdict,
                        v.claim,
                        csv_field(&detail(v))
                    )?;
                }
                s
            }
        };
        write_file(path, &text)?;
    }
    Ok(if exponential {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NONE)
    })
}

fn cmd_simulate(
    spec: &Path,
    t_end: Option<f64>,
    dt: Option<f64>,
    geometric: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let file = load(spec)?;
    let eq = file.equation();
    let (t_end, dt) = SimConfig {
        t_end,
        dt,
        history: None,
    }
    .resolve(&eq);
    let grid = match geometric {
        Some(eta) => Grid::Geometric { eta },
        None => Grid::Uniform { dt },
    };
    let tr = integrate_on(&eq, &file.history(), t_end, grid, file.forcing.as_ref())?;
    let decay = estimate_decay(&tr);
    let record = json!({
        "spec": spec.display().to_string(),
        "t_end": tr.t_end(),
        "points": tr.len(),
        "meta": tr.meta,
        "digest": tr.digest(),
        "decay": decay,
    });
    match out {
        Some(path) => {
            write_file(path, &tr.to_csv())?;
            write_file(&path.with_extension("json"), &serde_json::to_string_pretty(&record)?)?;
        }
        None => emit(&format!("{}\n", serde_json::to_string_pretty(&record)?))?,
    }
    eprintln!(
        "{:?}: gamma_hat = {:.6}, M_hat = {:.4}, r2 = {:.4} over {} points",
        decay.classification,
        decay.gamma_hat,
        decay.m_hat,
        decay.r2,
        tr.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn with_sim(oracle: Oracle, cfg: SimConfig) -> Oracle {
    match oracle {
        Oracle::Simulate(_) => Oracle::Simulate(cfg),
        other => other,
    }
}

fn cmd_threshold(
    spec: &Path,
    param: &str,
    range: (f64, f64),
    oracle: Oracle,
    tol: f64,
    sim: &SimArgs,
) -> Result<ExitCode> {
    let file = load(spec)?;
    let mut cfg = sim.config();
    cfg.history = file.history.clone();
    let oracle = with_sim(oracle, cfg);
    let t = threshold(&file, param, range, &oracle, tol)?;
    if matches!(oracle, Oracle::Simulate(_)) {
        eprintln!("threshold of the decay classifier (empirical proxy)");
    }
    println!("{t:.17}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    spec: &Path,
    grid: &[SweepAxis],
    oracle: Option<&str>,
    criteria: &[CriterionId],
    simulate: bool,
    sim: &SimArgs,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let file = load(spec)?;
    let mut ids = criteria.to_vec();
    let mut simulate = simulate;
    for part in oracle.into_iter().flat_map(|o| o.split('+')) {
        if part == "simulate" {
            simulate = true;
        } else {
            ids.push(part.parse()?);
        }
    }
    let cfg = sim.config();
    let points = sweep(&file, grid, &ids, simulate.then_some(&cfg))?;
    let csv = sweep_csv(grid, &ids, &points);
    match out {
        Some(path) => write_file(path, &csv)?,
        None => emit(&csv)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(which: Which, simulate: bool, out: &OutArgs) -> Result<ExitCode> {
    let (table, json, ok) = match which {
        Which::Example1 => {
            let report = reproduce_example1(simulate)?;
            (report.to_table(), serde_json::to_value(&report)?, true)
        }
        Which::Example2 => {
            let rows = reproduce_example2(&[0.0, 0.5, 1.0, 2.0])?;
            let ok = rows.iter().all(|r| r.empty || r.union_better);
            (example2_table(&rows), serde_json::to_value(&rows)?, ok)
        }
    };
    print!("{table}");
    if let Some(path) = &out.out {
        match format_for(out, path) {
            Format::Json => write_file(path, &serde_json::to_string_pretty(&json)?)?,
            Format::Csv => bail!("reproduce writes JSON only"),
        }
    }
    if !ok {
        eprintln!("the interval criterion reaches beyond 1 + 3/e for some sigma");
        return Ok(ExitCode::from(EXIT_NONE));
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NDDE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("NDDE_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Check { spec, criteria, out } => cmd_check(&spec, &criteria, &out),
        Command::Simulate {
            spec,
            t_end,
            dt,
            geometric,
            out,
        } => cmd_simulate(&spec, t_end, dt, geometric, out.as_deref()),
        Command::Threshold {
            spec,
            param,
            range,
            oracle,
            tol,
            sim,
        } => cmd_threshold(&spec, &param, range, oracle, tol, &sim),
        Command::Sweep {
            spec,
            grid,
            oracle,
            criteria,
            simulate,
            sim,
            out,
        } => cmd_sweep(
            &spec,
            &grid,
            oracle.as_deref(),
            &criteria,
            simulate,
            &sim,
            out.as_deref(),
        ),
        Command::Reproduce {
            which,
            no_simulate,
            out,
        } => cmd_reproduce(which, !no_simulate, &out),
    }
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for "no criterion applies", so usage errors
    // exit 1 instead of clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
