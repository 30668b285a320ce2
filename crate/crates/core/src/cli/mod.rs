//! Command-line front end. `run` parses arguments, writes a manifest,
//! dispatches to the library and maps failures to exit codes: 2 for usage
//! errors, 1 for errors raised by a module.

mod analysis;
mod keys;
mod sweep;
mod table;

pub use sweep::{cell_hash, sweep};
pub use table::{num, Format, Table};

use crate::certify::{DecisionRule, NoiseModel, SecurityParams};
use crate::error::{Error, Result};
use crate::shadows::Rule;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Worker thread count; the only environment variable read.
pub const THREADS_ENV: &str = "SHADOWSIG_THREADS";
/// Bumped on any incompatible change to a CSV layout.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Parser, Debug, Serialize)]
#[command(name = "shadowsig", version, about = "Shadow-based quantum signatures: keys, certification, attacks, error detection")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Result file instead of standard output. Sweeps always write CSV here
    /// and resume from it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path [default: <out>.manifest.json, else shadowsig.manifest.json].
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample or inspect circuit files.
    #[command(subcommand)]
    Circuit(keys::CircuitCmd),
    /// Collect the public shadows of a circuit.
    #[command(subcommand)]
    Pk(keys::PkCmd),
    /// Secret and public key files for an ensemble.
    Keygen(keys::KeygenArgs),
    /// Sign a bit string with a secret key.
    Sign(keys::SignArgs),
    /// Verify a signature against a public key.
    Verify(keys::VerifyArgs),
    /// Certify shadows against a hypothesis circuit.
    Certify(analysis::CertifyArgs),
    /// Relaxation times and shot calculators.
    #[command(subcommand)]
    Tau(analysis::TauCmd),
    /// Parity-check codes for multi-bit messages.
    #[command(subcommand)]
    Code(keys::CodeCmd),
    /// Learning and spoofing attacks.
    #[command(subcommand)]
    Attack(analysis::AttackCmd),
    /// Iceberg error detection.
    #[command(subcommand)]
    Qed(analysis::QedCmd),
    /// Time the core kernels.
    Bench(analysis::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Pauli,
    Clifford,
}

impl From<RuleArg> for Rule {
    fn from(r: RuleArg) -> Rule {
        match r {
            RuleArg::Pauli => Rule::Pauli,
            RuleArg::Clifford => Rule::Clifford,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Mean,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseArg {
    Depolarizing,
    General,
}

impl From<NoiseArg> for NoiseModel {
    fn from(n: NoiseArg) -> NoiseModel {
        match n {
            NoiseArg::Depolarizing => NoiseModel::Depolarizing,
            NoiseArg::General => NoiseModel::General,
        }
    }
}

/// Thresholds shared by `verify`, `certify` and `attack brute`.
#[derive(Args, Debug, Serialize)]
pub struct SecurityArgs {
    /// Learning infidelity floor ε_CNL assumed of any adversary.
    #[arg(long = "eps", default_value_t = 0.99)]
    pub eps_cnl: f64,
    /// Soundness failure probability δ.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Acceptance slack ε′ [default: 3ε/(4τ)].
    #[arg(long)]
    pub eps_prime: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Mean)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = NoiseArg::Depolarizing)]
    pub noise_model: NoiseArg,
    /// Accept fewer shots than the planner requires.
    #[arg(long)]
    pub no_shot_check: bool,
}

impl SecurityArgs {
    pub fn params(&self, n: usize, m: usize, rule: Rule, eps_hon: f64, tau: f64) -> Result<SecurityParams> {
        let mut p = SecurityParams::plan(self.eps_cnl, eps_hon, n, tau, m, self.delta, rule, self.noise_model.into(), self.eps_prime)?;
        p.decision = match self.mode {
            ModeArg::Mean => DecisionRule::MeanThreshold,
            ModeArg::LowerBound => DecisionRule::LowerBound,
        };
        if self.no_shot_check {
            p.t = None;
        }
        Ok(p)
    }
}

/// What a command produced for its result stream.
pub(crate) enum Emit {
    Table(Table),
    /// Raw artifact text (circuit, shadows, key files).
    Text(String),
    /// Already written to `--out`.
    Written(Table),
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    csv_schema: u32,
    argv: Vec<String>,
    config: &'a Cli,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn manifest_path(cli: &Cli) -> PathBuf {
    match (&cli.manifest, &cli.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => {
            let mut s = out.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        (None, None) => PathBuf::from("shadowsig.manifest.json"),
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Resource(_) => "resource",
        Error::Parse { .. } => "parse",
        Error::Structure(_) => "structure",
        Error::ZeroBranch => "zero-branch",
        Error::InfiniteTau(_) => "infinite-tau",
        Error::NoGap { .. } => "no-gap",
        Error::Data(_) => "data",
        Error::InsufficientAcceptance => "insufficient-acceptance",
        Error::Io(_) => "io",
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("{THREADS_ENV}={v:?} is not a positive integer"))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<()> {
    let manifest = Manifest {
        tool: "shadowsig",
        version: env!("CARGO_PKG_VERSION"),
        csv_schema: CSV_SCHEMA,
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        config: cli,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Data(e.to_string()))? + "\n";
    write_text(&manifest_path(cli), &json)?;
    let emit = match &cli.command {
        Command::Circuit(c) => keys::circuit(cli, c)?,
        Command::Pk(c) => keys::pk(cli, c)?,
        Command::Keygen(a) => keys::keygen(cli, a)?,
        Command::Sign(a) => keys::sign(cli, a)?,
        Command::Verify(a) => keys::verify(cli, a)?,
        Command::Code(c) => keys::code(cli, c)?,
        Command::Certify(a) => analysis::certify(cli, a)?,
        Command::Tau(c) => analysis::tau(cli, c)?,
        Command::Attack(c) => analysis::attack(cli, c)?,
        Command::Qed(c) => analysis::qed(cli, c)?,
        Command::Bench(a) => analysis::bench(cli, a)?,
    };
    let text = match emit {
        Emit::Table(t) => t.render(cli.format),
        Emit::Text(s) => s,
        Emit::Written(t) => {
            if cli.format != Format::Csv {
                eprint!("{}", t.render(cli.format));
            }
            return Ok(());
        }
    };
    match &cli.out {
        Some(p) => write_text(p, &text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Run the tool on `argv` (program name first) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("shadowsig: usage error: {msg}");
        return 2;
    }
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("shadowsig: error [{}]: {e}", kind(&e));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["shadowsig", "--no-such-flag"]), 2);
        assert_eq!(run(["shadowsig", "frobnicate"]), 2);
        assert_eq!(run(["shadowsig", "--help"]), 0);
    }
}
