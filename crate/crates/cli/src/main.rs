//! `lineup`: ingest match data, fit team models, search lineups, evaluate
//! efficiency and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 validation error, 2 data error, 3 numerical
//! failure. Errors go to stderr as `error[<class>:<kind>] <message>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use lineup_core::domain::{Formation, PlayerId};
use lineup_core::optimizer::{ObjectiveKind, OpponentAssumption};
use lineup_core::synth::LeagueConfig;
use lineup_core::Error as CoreError;

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
#[error("error[{class}:{kind}] {message}")]
pub struct CliError {
    class: &'static str,
    kind: &'static str,
    message: String,
}

impl CliError {
    pub fn validation(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            class: "validation",
            kind,
            message: message.into(),
        }
    }

    pub fn data(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            class: "data",
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.class {
            "validation" => 1,
            "data" => 2,
            _ => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let (class, kind) = match &e {
            CoreError::InvalidLineup(_) => ("validation", "invalid_lineup"),
            CoreError::Infeasible { .. } => ("validation", "infeasible"),
            CoreError::Validation(_) => ("validation", "invalid"),
            CoreError::Contract(_) => ("validation", "contract"),
            CoreError::Parse { .. } => ("data", "parse"),
            CoreError::Reference(_) => ("data", "reference"),
            CoreError::MissingData(_) => ("data", "missing_data"),
            CoreError::History(_) => ("data", "no_history"),
            CoreError::Io(_) => ("data", "io"),
            CoreError::Json(_) => ("data", "json"),
            CoreError::Degenerate(_) => ("numerical", "degenerate"),
            CoreError::SingularRefit { .. } => ("numerical", "singular_refit"),
            CoreError::Numerical(_) => ("numerical", "numerical"),
        };
        CliError {
            class,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data("json", e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lineup", version, about = "Match-outcome models and starting-eleven search")]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a data directory and write normalized copies of its CSVs.
    Ingest(IngestArgs),
    /// Fit a team model and write it as a JSON artifact.
    Fit(FitArgs),
    /// Search the best lineup for a fixture.
    Optimize(OptimizeArgs),
    /// Recursive actual-vs-optimal evaluation over a test window.
    Evaluate(EvaluateArgs),
    /// Summarize efficiency records written by `evaluate`.
    Efficiency(EfficiencyArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic league with known generating coefficients.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding players.csv, attributes.csv, matches.csv and optionally rosters.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Attribute weight file; defaults to `weights.json` in the data directory, else the published weights.
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl DataArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.data, self.data);
        set(&mut c.weights, self.weights);
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Where to write the normalized CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    team: Option<String>,
    /// Train on matches strictly before this date.
    #[arg(long)]
    train_until: Option<NaiveDate>,
    #[arg(long)]
    max_vars: Option<usize>,
    #[arg(long)]
    min_matches: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Seed for the cross-validation folds.
    #[arg(long)]
    fit_seed: Option<u64>,
    /// Model artifact path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    #[arg(long)]
    opponent_assumption: Option<OpponentAssumption>,
    /// Restrict the search to these formations, e.g. 4-4-2 (repeatable).
    #[arg(long = "formation")]
    formations: Vec<Formation>,
    /// Players that must start (repeatable).
    #[arg(long = "pin")]
    pinned: Vec<String>,
    /// Players that may not start (repeatable).
    #[arg(long = "exclude")]
    excluded: Vec<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    min_iterations: Option<usize>,
    #[arg(long)]
    min_random_starts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl SearchArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.seed, self.seed);
        if let Some(o) = self.objective {
            c.objective = o;
        }
        if let Some(a) = self.opponent_assumption {
            c.opponent_assumption = a;
        }
        if !self.formations.is_empty() {
            c.formations = self.formations;
        }
        if !self.pinned.is_empty() {
            c.pinned = self.pinned.into_iter().map(PlayerId::new).collect();
        }
        if !self.excluded.is_empty() {
            c.excluded = self.excluded.into_iter().map(PlayerId::new).collect();
        }
        if let Some(d) = self.delta {
            c.search.delta = d;
        }
        if let Some(n) = self.min_iterations {
            c.search.min_iterations = n;
        }
        if let Some(n) = self.min_random_starts {
            c.search.min_random_starts = n;
        }
        if let Some(n) = self.max_iterations {
            c.search.max_iterations = n;
        }
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model artifact written by `fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    opponent: Option<String>,
    /// Fixture date.
    #[arg(long)]
    date: Option<NaiveDate>,
    /// Play at home.
    #[arg(long, conflicts_with = "away")]
    home: bool,
    /// Play away.
    #[arg(long)]
    away: bool,
    #[command(flatten)]
    search: SearchArgs,
    /// Search trace path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    team: Option<String>,
    #[arg(long)]
    test_from: Option<NaiveDate>,
    #[arg(long)]
    test_until: Option<NaiveDate>,
    /// Freeze training at this date instead of refitting before each match.
    #[arg(long)]
    train_until: Option<NaiveDate>,
    /// per-match, per-gameweek or once.
    #[arg(long)]
    refit: Option<lineup_core::analytics::RefitFrequency>,
    #[command(flatten)]
    search: SearchArgs,
    /// Records CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EfficiencyArgs {
    /// Records CSV written by `evaluate`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, env = "LINEUP_BIND")]
    bind: Option<String>,
    /// Model artifact directory.
    #[arg(long)]
    artifacts: Option<PathBuf>,
    /// Static files (the web client bundle) served for non-API paths.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    teams: usize,
    #[arg(long, default_value_t = 2)]
    seasons: usize,
    /// Add a fixed-player and a pair effect to the generating model.
    #[arg(long)]
    player_effects: bool,
    /// Twenty seasons with stronger effects; overrides --seasons.
    #[arg(long)]
    long_history: bool,
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.threads, cli.threads);
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::validation("threads", e.to_string()))?;
    }
    match cli.command {
        Command::Ingest(a) => {
            a.data.apply(&mut cfg);
            set(&mut cfg.out, a.out);
            commands::ingest(&cfg)
        }
        Command::Fit(a) => {
            a.data.apply(&mut cfg);
            set(&mut cfg.team, a.team);
            set(&mut cfg.train_until, a.train_until);
            set(&mut cfg.out, a.out);
            if let Some(n) = a.max_vars {
                cfg.fit.max_vars = n;
            }
            if let Some(n) = a.min_matches {
                cfg.fit.min_matches = n;
            }
            if let Some(n) = a.folds {
                cfg.fit.folds = n;
            }
            if let Some(s) = a.fit_seed {
                cfg.fit.seed = s;
            }
            commands::fit(&cfg)
        }
        Command::Optimize(a) => {
            a.data.apply(&mut cfg);
            a.search.apply(&mut cfg);
            set(&mut cfg.model, a.model);
            set(&mut cfg.opponent, a.opponent);
            set(&mut cfg.date, a.date);
            set(&mut cfg.out, a.out);
            if a.home || a.away {
                cfg.home = Some(a.home);
            }
            commands::optimize(&cfg)
        }
        Command::Evaluate(a) => {
            a.data.apply(&mut cfg);
            a.search.apply(&mut cfg);
            set(&mut cfg.team, a.team);
            set(&mut cfg.test_from, a.test_from);
            set(&mut cfg.test_until, a.test_until);
            set(&mut cfg.train_until, a.train_until);
            set(&mut cfg.out, a.out);
            if let Some(r) = a.refit {
                cfg.refit = r;
            }
            commands::evaluate(&cfg)
        }
        Command::Efficiency(a) => {
            set(&mut cfg.records, a.records);
            set(&mut cfg.out, a.out);
            commands::efficiency(&cfg)
        }
        Command::Serve(a) => {
            a.data.apply(&mut cfg);
            set(&mut cfg.bind, a.bind);
            set(&mut cfg.artifacts, a.artifacts);
            set(&mut cfg.static_dir, a.static_dir);
            commands::serve(&cfg)
        }
        Command::Generate(a) => {
            set(&mut cfg.out, a.out);
            let mut league = if a.long_history {
                LeagueConfig::long_history()
            } else {
                LeagueConfig {
                    seasons: a.seasons,
                    ..LeagueConfig::default()
                }
            };
            league.seed = a.seed;
            league.teams = a.teams;
            if a.player_effects {
                league = league.with_player_effects();
            }
            commands::generate(&cfg, &league)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error[validation:usage] {}", e.kind());
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_classes() {
        let code = |e: CoreError| CliError::from(e).exit_code();
        assert_eq!(code(CoreError::Validation("x".into())), 1);
        assert_eq!(code(CoreError::InvalidLineup(Vec::new())), 1);
        assert_eq!(code(CoreError::Reference("x".into())), 2);
        assert_eq!(code(CoreError::History("x".into())), 2);
        assert_eq!(
            code(CoreError::SingularRefit {
                columns: vec!["home".into()]
            }),
            3
        );
        assert_eq!(code(CoreError::Numerical("x".into())), 3);
    }

    #[test]
    fn message_prefix_is_parsable() {
        let e = CliError::from(CoreError::Reference("player P9".into()));
        assert!(e.to_string().starts_with("error[data:reference] "));
    }

    #[test]
    fn flags_override_file_values() {
        let cli = Cli::try_parse_from(["lineup", "optimize", "--seed", "9", "--formation", "4-3-3"]).unwrap();
        let mut cfg: RunConfig = serde_json::from_str(r#"{"seed":1,"formations":["4-4-2"],"opponent":"T02"}"#).unwrap();
        let Command::Optimize(a) = cli.command else { panic!() };
        a.search.apply(&mut cfg);
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.formations[0].to_string(), "4-3-3");
        assert_eq!(cfg.opponent.as_deref(), Some("T02"));
    }
}
