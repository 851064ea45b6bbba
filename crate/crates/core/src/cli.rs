//! Command-line frontend.
//!
//! Settings come from flags, optionally backed by a `--config` file of flat
//! `key = value` lines whose keys are the flag names without dashes
//! (`flip-prob` and `flip_prob` are both accepted). Flags win over the file.
//!
//! Errors print one line, `error[<kind>]: <message>`, to stderr and exit with
//! 2 (parameter or usage), 3 (protocol order) or 4 (enumeration cap).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::channel::{AdversaryConfig, Channel, NoiseModel};
use crate::error::{Error, ErrorKind, Result};
use crate::format::{fmt_f64, to_json_line, to_json_pretty};
use crate::groupmath::{next_prime, GroupParams};
use crate::harness::oracle::{for_each_instance, OracleRow, OracleSummary};
use crate::harness::{round_rng, round_seed, run_experiment, ExperimentConfig, ExperimentReport, DEFAULT_THRESHOLD};
use crate::qzkp::{run_round_pinned, Mode, ProverSession, RoundPins, RoundRecord, VerifierSession};
use crate::schnorr::KeyPair;

/// Stream index reserved for key generation when `--x` is absent.
pub const KEYGEN_STREAM: u64 = u64::MAX;
/// Lower bound for the prime search when `--p` is absent.
pub const DEFAULT_MIN_P: u64 = 1000;
pub const DEFAULT_ROUNDS: u64 = 1000;

#[derive(Debug, Parser)]
#[command(name = "qzkp", version, about = "Single-qubit Schnorr identification laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate (or validate) group parameters and a key pair.
    Keygen(CommonArgs),
    /// Run a single protocol round and print its transcript.
    Run(CommonArgs),
    /// Run many rounds and print an aggregate report.
    Experiment(CommonArgs),
    /// Repeat an experiment over a list of values of p or sigma.
    Sweep(SweepArgs),
    /// Print the exact per-instance acceptance table.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    P,
    Sigma,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Prime modulus.
    #[arg(long)]
    pub p: Option<u64>,
    /// Generator; defaults to the smallest primitive root of p.
    #[arg(long)]
    pub g: Option<u64>,
    /// Prover secret in [1, p - 2]; generated from the seed when absent.
    #[arg(long)]
    pub x: Option<u64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Standard deviation of the channel's Rx jitter, radians.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Probability of flipping the verifier's measurement bit.
    #[arg(long = "flip-prob")]
    pub flip_prob: Option<f64>,
    /// Put an intercept-resend eavesdropper on the quantum channel.
    #[arg(long)]
    pub eve: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Identity-acceptance threshold on the acceptance rate.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// When p is absent, use the smallest prime at or above this value.
    #[arg(long = "min-p")]
    pub min_p: Option<u64>,
    /// Pin the prover's nonce r (white-box).
    #[arg(long)]
    pub r: Option<u64>,
    /// Pin the verifier's challenge c (white-box).
    #[arg(long)]
    pub c: Option<u64>,
    /// Include every round in JSON experiment reports.
    #[arg(long = "per-round")]
    pub per_round: bool,
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Variable to sweep.
    #[arg(long, value_enum)]
    pub var: SweepVar,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
}

/// Settings after merging the config file and validating every number.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: GroupParams,
    pub keys: KeyPair,
    pub rounds: u64,
    pub mode: Mode,
    pub noise: NoiseModel,
    pub adversary: AdversaryConfig,
    pub seed: u64,
    pub threshold: f64,
    pub pins: RoundPins,
    pub per_round: bool,
    pub verbose: u8,
}

fn param_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| param_err(format!("cannot parse {key} = {raw:?}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(param_err(format!("cannot parse {key} = {raw:?} as a boolean"))),
    }
}

/// Reads a flat `key = value` file. Blank lines and `#` comments are ignored.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| param_err(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| param_err(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        entries.insert(key, value);
    }
    Ok(entries)
}

impl CommonArgs {
    /// Fills every unset flag from the config file, if one was given.
    fn merged(&self) -> Result<CommonArgs> {
        let mut args = self.clone();
        let Some(path) = &self.config else {
            return Ok(args);
        };
        for (key, raw) in read_config_file(path)? {
            let raw = raw.as_str();
            match key.as_str() {
                "p" => fill(&mut args.p, &key, raw)?,
                "g" => fill(&mut args.g, &key, raw)?,
                "x" => fill(&mut args.x, &key, raw)?,
                "rounds" => fill(&mut args.rounds, &key, raw)?,
                "mode" => fill(&mut args.mode, &key, raw)?,
                "sigma" => fill(&mut args.sigma, &key, raw)?,
                "flip-prob" => fill(&mut args.flip_prob, &key, raw)?,
                "seed" => fill(&mut args.seed, &key, raw)?,
                "threshold" => fill(&mut args.threshold, &key, raw)?,
                "min-p" => fill(&mut args.min_p, &key, raw)?,
                "r" => fill(&mut args.r, &key, raw)?,
                "c" => fill(&mut args.c, &key, raw)?,
                "out" => {
                    if args.out.is_none() {
                        args.out = Some(PathBuf::from(raw));
                    }
                }
                "format" => {
                    if args.format.is_none() {
                        args.format = Some(
                            Format::from_str(raw, true)
                                .map_err(|_| param_err(format!("unknown format {raw:?}")))?,
                        );
                    }
                }
                "eve" => args.eve |= parse_bool(&key, raw)?,
                "per-round" => args.per_round |= parse_bool(&key, raw)?,
                other => return Err(param_err(format!("unknown config key {other:?}"))),
            }
        }
        Ok(args)
    }

    fn params(&self) -> Result<GroupParams> {
        match (self.p, self.g) {
            (Some(p), Some(g)) => GroupParams::new(p, g),
            (Some(p), None) => GroupParams::with_first_root(p),
            (None, Some(_)) => Err(param_err("--g requires --p")),
            (None, None) => {
                let p = next_prime(self.min_p.unwrap_or(DEFAULT_MIN_P).max(3))?;
                GroupParams::with_first_root(p)
            }
        }
    }

    fn resolve_with(&self, params: GroupParams) -> Result<Resolved> {
        let seed = self.seed.unwrap_or(0);
        let keys = match self.x {
            Some(x) => KeyPair::from_secret(&params, x)?,
            None => KeyPair::generate(&params, &mut keygen_rng(seed)),
        };
        let rounds = self.rounds.unwrap_or(DEFAULT_ROUNDS);
        if rounds == 0 {
            return Err(param_err("--rounds must be at least 1"));
        }
        let threshold = self.threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(param_err(format!("--threshold {threshold} outside [0, 1]")));
        }
        let q = params.order();
        for (flag, pin) in [("--r", self.r), ("--c", self.c)] {
            if let Some(v) = pin {
                if v >= q {
                    return Err(param_err(format!("{flag} {v} outside [0, {}]", q - 1)));
                }
            }
        }
        Ok(Resolved {
            params,
            keys,
            rounds,
            mode: self.mode.unwrap_or(Mode::Corrected),
            noise: NoiseModel::new(self.sigma.unwrap_or(0.0), self.flip_prob.unwrap_or(0.0))?,
            adversary: if self.eve {
                AdversaryConfig::intercept_resend()
            } else {
                AdversaryConfig::none()
            },
            seed,
            threshold,
            pins: RoundPins {
                nonce: self.r,
                challenge: self.c,
            },
            per_round: self.per_round,
            verbose: self.verbose,
        })
    }

    pub fn resolve(&self) -> Result<Resolved> {
        self.resolve_with(self.params()?)
    }
}

fn fill<T: std::str::FromStr>(slot: &mut Option<T>, key: &str, raw: &str) -> Result<()> {
    if slot.is_none() {
        *slot = Some(parse_value(key, raw)?);
    }
    Ok(())
}

/// Random stream used to draw `x` when it is not given.
pub fn keygen_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(round_seed(seed, KEYGEN_STREAM))
}

impl Resolved {
    pub fn experiment_config(&self, record_rounds: bool) -> ExperimentConfig {
        ExperimentConfig {
            params: self.params,
            x: self.keys.secret(),
            rounds: self.rounds,
            mode: self.mode,
            noise: self.noise,
            adversary: self.adversary,
            master_seed: self.seed,
            threshold: self.threshold,
            pins: self.pins,
            record_rounds,
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().flexible(true).from_writer(Vec::new())
}

fn csv_finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn csv_row<I, S>(writer: &mut csv::Writer<Vec<u8>>, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    writer
        .write_record(fields)
        .map_err(|e| Error::Io(format!("csv: {e}")))
}

#[derive(Serialize)]
struct KeygenOutput {
    params: GroupParams,
    x_secret: u64,
    y: u64,
}

pub fn cmd_keygen(args: &CommonArgs) -> Result<String> {
    let resolved = args.merged()?.resolve()?;
    let out = KeygenOutput {
        params: resolved.params,
        x_secret: resolved.keys.secret(),
        y: resolved.keys.public(),
    };
    match args.format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json_pretty(&out)? + "\n"),
        Format::Csv => {
            let mut w = csv_writer();
            csv_row(&mut w, ["p", "g", "q", "x_secret", "y"])?;
            let p = resolved.params;
            csv_row(
                &mut w,
                [p.modulus(), p.generator(), p.order(), out.x_secret, out.y].map(|v| v.to_string()),
            )?;
            csv_finish(w)
        }
    }
}

const RECORD_HEADER: [&str; 9] = [
    "round",
    "t_honest",
    "c",
    "s",
    "s_mod_q",
    "outcome",
    "accepted",
    "mode",
    "theta_total",
];

fn record_fields(index: u64, rec: &RoundRecord) -> Vec<String> {
    vec![
        index.to_string(),
        rec.t_honest.map(|t| t.to_string()).unwrap_or_default(),
        rec.c.to_string(),
        rec.s.to_string(),
        rec.s_mod_q.to_string(),
        rec.outcome.to_string(),
        rec.accepted.to_string(),
        rec.mode.to_string(),
        rec.theta_total.map(fmt_f64).unwrap_or_default(),
    ]
}

#[derive(Serialize)]
struct RecordLine<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    record: &'a RoundRecord,
}

pub fn cmd_run(args: &CommonArgs) -> Result<String> {
    let args = args.merged()?;
    let resolved = args.resolve()?;
    resolved.note(format!(
        "p={} g={} Y={} mode={}",
        resolved.params.modulus(),
        resolved.params.generator(),
        resolved.keys.public(),
        resolved.mode
    ));
    let mut prover = ProverSession::new(resolved.params, resolved.keys);
    let mut verifier = VerifierSession::new(resolved.params, resolved.keys.public(), resolved.mode)?
        .with_readout_flip(resolved.noise.flip_prob())?;
    let channel = Channel::new(resolved.noise, resolved.adversary);
    let mut rng = round_rng(resolved.seed, 0);
    let outcome = run_round_pinned(&mut prover, &mut verifier, &channel, resolved.pins, &mut rng)?;
    outcome.transcript.audit()?;

    match args.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut text = String::new();
            for msg in &outcome.transcript.messages {
                text.push_str(&to_json_line(msg)?);
                text.push('\n');
            }
            text.push_str(&to_json_line(&RecordLine {
                kind: "record",
                record: &outcome.record,
            })?);
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut w = csv_writer();
            csv_row(&mut w, RECORD_HEADER)?;
            csv_row(&mut w, record_fields(0, &outcome.record))?;
            csv_finish(w)
        }
    }
}

fn experiment_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv_writer();
    csv_row(&mut w, RECORD_HEADER)?;
    for (i, rec) in report.per_round.iter().flatten().enumerate() {
        csv_row(&mut w, record_fields(i as u64, rec))?;
    }
    csv_row(
        &mut w,
        [
            "summary",
            "accepted_count",
            "rounds",
            "rate",
            "ci_low",
            "ci_high",
            "oracle_expectation",
            "verdict",
        ],
    )?;
    let verdict = serde_json::to_value(report.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    csv_row(
        &mut w,
        [
            "summary".to_string(),
            report.accepted_count.to_string(),
            report.rounds.to_string(),
            fmt_f64(report.rate),
            fmt_f64(report.ci_low),
            fmt_f64(report.ci_high),
            report.oracle_expectation.map(fmt_f64).unwrap_or_default(),
            verdict,
        ],
    )?;
    csv_finish(w)
}

pub fn cmd_experiment(args: &CommonArgs) -> Result<String> {
    let args = args.merged()?;
    let resolved = args.resolve()?;
    let format = args.format.unwrap_or(Format::Json);
    let config = resolved.experiment_config(resolved.per_round || format == Format::Csv);
    let report = run_experiment(&config)?;
    resolved.note(format!(
        "{} of {} rounds accepted",
        report.accepted_count, report.rounds
    ));
    match format {
        Format::Json => Ok(to_json_pretty(&report)? + "\n"),
        Format::Csv => experiment_csv(&report),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub var: &'static str,
    pub value: String,
    pub mode: Mode,
    pub p: u64,
    pub rounds: u64,
    pub accepted_count: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub oracle_expectation: Option<f64>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let common = args.common.merged()?;
    let values: Vec<&str> = args
        .values
        .iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(param_err("usage: sweep needs --values v1,v2,..."));
    }
    let mut rows = Vec::with_capacity(values.len());
    for raw in values {
        let mut point = common.clone();
        let (var, params) = match args.var {
            SweepVar::P => {
                if common.p.is_some() || common.g.is_some() {
                    return Err(param_err("--p/--g cannot be combined with --var p"));
                }
                let p: u64 = parse_value("p", raw)?;
                point.p = Some(p);
                ("p", GroupParams::with_first_root(p)?)
            }
            SweepVar::Sigma => {
                point.sigma = Some(parse_value("sigma", raw)?);
                ("sigma", common.params()?)
            }
        };
        let resolved = point.resolve_with(params)?;
        let report = run_experiment(&resolved.experiment_config(false))?;
        rows.push(SweepRow {
            var,
            value: match args.var {
                SweepVar::P => params.modulus().to_string(),
                SweepVar::Sigma => fmt_f64(resolved.noise.sigma()),
            },
            mode: resolved.mode,
            p: params.modulus(),
            rounds: report.rounds,
            accepted_count: report.accepted_count,
            rate: report.rate,
            ci_low: report.ci_low,
            ci_high: report.ci_high,
            oracle_expectation: report.oracle_expectation,
        });
    }
    match common.format.unwrap_or(Format::Csv) {
        Format::Json => Ok(to_json_pretty(&rows)? + "\n"),
        Format::Csv => {
            let mut w = csv_writer();
            csv_row(
                &mut w,
                [
                    "var",
                    "value",
                    "mode",
                    "p",
                    "rounds",
                    "accepted_count",
                    "rate",
                    "ci_low",
                    "ci_high",
                    "oracle_expectation",
                ],
            )?;
            for row in &rows {
                csv_row(
                    &mut w,
                    [
                        row.var.to_string(),
                        row.value.clone(),
                        row.mode.to_string(),
                        row.p.to_string(),
                        row.rounds.to_string(),
                        row.accepted_count.to_string(),
                        fmt_f64(row.rate),
                        fmt_f64(row.ci_low),
                        fmt_f64(row.ci_high),
                        row.oracle_expectation.map(fmt_f64).unwrap_or_default(),
                    ],
                )?;
            }
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    params: GroupParams,
    x: u64,
    mode: Mode,
    noise: NoiseModel,
    adversary: AdversaryConfig,
    rows: &'a [OracleRow],
    summary: OracleSummary,
}

pub fn cmd_oracle(args: &CommonArgs) -> Result<String> {
    let args = args.merged()?;
    let resolved = args.resolve()?;
    let run = |visit: &mut dyn FnMut(&OracleRow)| {
        for_each_instance(
            &resolved.params,
            resolved.keys.secret(),
            resolved.mode,
            &resolved.noise,
            &resolved.adversary,
            resolved.pins,
            visit,
        )
    };
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer();
            csv_row(&mut w, ["r", "c", "theta_total", "accept_probability"])?;
            let mut failure = None;
            let summary = run(&mut |row: &OracleRow| {
                if failure.is_none() {
                    failure = csv_row(
                        &mut w,
                        [
                            row.r.to_string(),
                            row.c.to_string(),
                            fmt_f64(row.theta_total),
                            fmt_f64(row.accept_probability),
                        ],
                    )
                    .err();
                }
            })?;
            if let Some(err) = failure {
                return Err(err);
            }
            let mut text = csv_finish(w)?;
            text.push_str(&format!("# mode={}\n", resolved.mode));
            text.push_str(&format!("# instances={}\n", summary.instances));
            text.push_str(&format!("# mean={}\n", fmt_f64(summary.mean)));
            text.push_str(&format!("# deterministic_count={}\n", summary.deterministic_count));
            text.push_str(&format!(
                "# deterministic_fraction={}\n",
                fmt_f64(summary.deterministic_fraction)
            ));
            Ok(text)
        }
        Format::Json => {
            let mut rows = Vec::new();
            let summary = run(&mut |row: &OracleRow| rows.push(*row))?;
            let out = OracleOutput {
                params: resolved.params,
                x: resolved.keys.secret(),
                mode: resolved.mode,
                noise: resolved.noise,
                adversary: resolved.adversary,
                rows: &rows,
                summary,
            };
            Ok(to_json_pretty(&out)? + "\n")
        }
    }
}

fn out_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Keygen(a) | Command::Run(a) | Command::Experiment(a) | Command::Oracle(a) => a.out.as_ref(),
        Command::Sweep(s) => s.common.out.as_ref(),
    }
}

/// Executes a parsed command, returning the primary output.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Keygen(a) => cmd_keygen(a),
        Command::Run(a) => cmd_run(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Sweep(s) => cmd_sweep(s),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Parameter => 2,
        ErrorKind::Protocol => 3,
        ErrorKind::EnumerationCap => 4,
    }
}

pub fn diagnostic(err: &Error) -> String {
    let kind = match err.kind() {
        ErrorKind::Parameter => "parameter",
        ErrorKind::Protocol => "protocol",
        ErrorKind::EnumerationCap => "enumeration-cap",
    };
    format!("error[{kind}]: {err}")
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind as ClapKind;
            if matches!(err.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) {
                print!("{err}");
                return 0;
            }
            let text = err.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return 2;
        }
    };
    let output = match execute(&cli) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("{}", diagnostic(&err));
            return exit_code(&err);
        }
    };
    let written = match out_path(&cli.command) {
        Some(path) => fs::write(path, output.as_bytes())
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(output.as_bytes())
            .map_err(Error::from),
    };
    match written {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", diagnostic(&err));
            exit_code(&err)
        }
    }
}
