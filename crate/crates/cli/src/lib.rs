//! `nmrvote`: generate fault-injection scenarios, run the voter on them,
//! check traces with the oracle and run the exhaustive suite.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage/config/parse error,
//! 3 runtime error (the voter could not start).

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nmr_voter::oracle::{self, enumerate_and_check, OracleError};
use nmr_voter::scenario::{generate_scenario, read_trace, run, summarize, write_trace, Profile};
use nmr_voter::{Scenario, SignalHealth, UnitId, VoterConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nmrvote", version, about = "N-modular redundant voter: simulator and requirements checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded fault-injection scenario.
    Generate(GenerateArgs),
    /// Run the voter on a scenario and write its trace.
    Run(RunArgs),
    /// Check a trace against its scenario.
    Check(CheckArgs),
    /// Exhaustively enumerate small input domains and check every trace.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub units: i64,
    #[arg(long)]
    pub delta: i64,
    #[arg(long)]
    pub persistence: i64,
    #[arg(long = "max-simul-fault")]
    pub max_simul_fault: i64,
    #[arg(long = "min-required")]
    pub min_required: Option<i64>,
}

impl ConfigArgs {
    fn build(&self) -> anyhow::Result<VoterConfig> {
        let mut raw = std::collections::BTreeMap::new();
        raw.insert("num_units".to_string(), self.units);
        raw.insert("delta".to_string(), self.delta);
        raw.insert("persistence_lmt".to_string(), self.persistence);
        raw.insert("max_simul_fault".to_string(), self.max_simul_fault);
        if let Some(m) = self.min_required {
            raw.insert("min_required".to_string(), m);
        }
        nmr_voter::validate_config(&raw).map_err(|e| anyhow!("invalid configuration: {e}"))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub cycles: usize,
    /// Per-cycle probability of a new transient fault on a healthy unit.
    #[arg(long = "fault-rate", default_value_t = 0.0)]
    pub fault_rate: f64,
    /// Units that develop a permanent fault (comma separated uids).
    #[arg(long, value_delimiter = ',')]
    pub permanent: Vec<u32>,
    /// Largest change of the ground truth between cycles.
    #[arg(long = "max-increment", default_value_t = 5)]
    pub max_increment: u64,
    /// Inject one cycle that breaks the simultaneous fault hypothesis.
    #[arg(long = "violate-hypothesis")]
    pub violate_hypothesis: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    /// Where to write the JSON Lines trace.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub scenario: PathBuf,
    pub trace: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HealthArg {
    Good,
    Bad,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Per-unit value domain (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<u64>,
    /// Per-unit health domain (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "good")]
    pub health: Vec<HealthArg>,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long)]
    pub json: bool,
}

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

trait OrUsage<T> {
    fn or_usage(self) -> Result<T, Failure>;
}

impl<T> OrUsage<T> for anyhow::Result<T> {
    fn or_usage(self) -> Result<T, Failure> {
        self.map_err(usage)
    }
}

fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn json_line(out: &mut dyn Write, value: &impl serde::Serialize) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let config = a.config.build().or_usage()?;
    let profile = Profile {
        horizon: a.cycles,
        fault_rate: a.fault_rate,
        permanent_targets: a.permanent.iter().copied().map(UnitId).collect(),
        max_increment: a.max_increment,
        violate_hypothesis: a.violate_hypothesis,
    };
    let scenario = generate_scenario(&config, a.seed, &profile).map_err(|e| usage(e.into()))?;
    let text = scenario.to_json();
    match &a.out {
        Some(path) => write_file(path, text.as_bytes()).or_usage()?,
        None => out.write_all(text.as_bytes()).map_err(|e| usage(e.into()))?,
    }
    Ok(EXIT_PASS)
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let scenario = load_scenario(&a.scenario).or_usage()?;
    let trace = run(&scenario).map_err(|e| Failure { code: EXIT_RUNTIME, error: anyhow!("voter initialisation failed: {e}") })?;
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace).map_err(|e| usage(e.into()))?;
    write_file(&a.trace, &buf).or_usage()?;
    let summary = summarize(&trace);
    if a.json {
        json_line(out, &summary).or_usage()?;
    } else {
        writeln!(out, "{summary}").map_err(|e| usage(e.into()))?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let scenario = load_scenario(&a.scenario).or_usage()?;
    let file = fs::File::open(&a.trace)
        .with_context(|| format!("opening {}", a.trace.display()))
        .or_usage()?;
    let trace = read_trace(BufReader::new(file))
        .with_context(|| format!("parsing {}", a.trace.display()))
        .or_usage()?;
    let verdict = oracle::check_trace(&trace, &scenario).map_err(|e| usage(e.into()))?;
    if a.json {
        json_line(out, &verdict).or_usage()?;
    } else {
        writeln!(out, "{verdict}").map_err(|e| usage(e.into()))?;
    }
    Ok(if verdict.pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_enumerate(a: &EnumerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let config = a.config.build().or_usage()?;
    let healths: Vec<SignalHealth> = a
        .health
        .iter()
        .map(|h| match h {
            HealthArg::Good => SignalHealth::Good,
            HealthArg::Bad => SignalHealth::Bad,
        })
        .collect();
    let report = enumerate_and_check(&config, &a.values, &healths, a.horizon).map_err(|e| match e {
        OracleError::BudgetExceeded { .. } | OracleError::EmptyDomain => usage(e.into()),
        OracleError::TraceMismatch { .. } => usage(e.into()),
    })?;
    if a.json {
        json_line(out, &report).or_usage()?;
    } else {
        let s = &report.stats;
        let w = |out: &mut dyn Write| -> std::io::Result<()> {
            writeln!(
                out,
                "traces={} states={} init_rejected={} admissible={}",
                s.traces, s.states_visited, s.init_rejected, s.admissible_traces
            )?;
            let arrows: Vec<String> = s.transitions.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(out, "transitions: {}", arrows.join(" "))?;
            writeln!(out, "{}", report.verdict)
        };
        w(out).map_err(|e| usage(e.into()))?;
    }
    Ok(if report.verdict.pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` and runs the selected command, returning the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Enumerate(a) => cmd_enumerate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            let _ = writeln!(err, "error: {error:#}");
            code
        }
    }
}
