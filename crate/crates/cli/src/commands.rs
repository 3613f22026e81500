use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lineup_core::analytics::{recursive_evaluate, summarize, write_records_csv, EvaluateConfig, Summary};
use lineup_core::ingestion::DataStore;
use lineup_core::model::FittedModel;
use lineup_core::pipeline::{fit_team_model, optimize_fixture, FixtureQuery};
use lineup_core::skills::WeightSet;
use lineup_core::synth::{generate_league, LeagueConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

fn load_store(cfg: &RunConfig) -> Result<DataStore, CliError> {
    Ok(DataStore::load_dir(cfg.data_dir()?)?)
}

fn load_weights(cfg: &RunConfig) -> Result<WeightSet, CliError> {
    let path = match (&cfg.weights, &cfg.data) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) if d.join("weights.json").exists() => d.join("weights.json"),
        _ => return Ok(WeightSet::published()),
    };
    Ok(WeightSet::from_json(&std::fs::read_to_string(&path)?)?)
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let store = load_store(cfg)?;
    let teams = store.teams();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "players     {}", store.players().count())?;
    writeln!(stdout, "snapshots   {}", store.snapshots().count())?;
    writeln!(stdout, "matches     {}", store.matches().len())?;
    writeln!(stdout, "teams       {}", teams.len())?;
    if let Some(out) = &cfg.out {
        store.write_dir(out)?;
        writeln!(stdout, "normalized  {}", out.display())?;
    }
    Ok(())
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let team = RunConfig::require(&cfg.team, "team")?;
    let store = load_store(cfg)?;
    let weights = load_weights(cfg)?;
    let outcome = fit_team_model(&store, team, cfg.train_until, &weights, &cfg.fit)?;
    let model = outcome.model;
    let path = out_path(cfg, &format!("{team}.model.json"));
    write_file(&path, &model.to_json()?)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "team {team}: {} matches, lambda {:?}",
        model.training_window.n_matches, model.lambda
    )?;
    writeln!(stdout, "{:<40} {:>10} {:>10}", "feature", "win", "loss")?;
    for row in model.coefficient_table() {
        writeln!(stdout, "{:<40} {:>10.4} {:>10.4}", row.name, row.win, row.loss)?;
    }
    writeln!(stdout, "AIC {:.3}", model.aic)?;
    writeln!(stdout, "model written to {}", path.display())?;
    Ok(())
}

pub fn optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let optimizer = cfg.optimizer()?;
    let model_path = RunConfig::require(&cfg.model, "model")?;
    let opponent = RunConfig::require(&cfg.opponent, "opponent")?;
    let date = *RunConfig::require(&cfg.date, "date")?;
    let home = *RunConfig::require(&cfg.home, "home (--home or --away)")?;
    let model = FittedModel::load(model_path)?;
    let store = load_store(cfg)?;
    let query = FixtureQuery {
        date,
        home,
        opponent: opponent.clone(),
        opponent_assumption: cfg.opponent_assumption,
        opponent_lineup: None,
        objective: cfg.objective,
        season: None,
    };
    let trace = optimize_fixture(&store, &model, &query, &optimizer)?;
    let path = out_path(cfg, "trace.json");
    write_file(&path, &trace.to_json()?)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{} vs {opponent} on {date} ({}), formation {}",
        model.team_id,
        if home { "home" } else { "away" },
        trace.formation
    )?;
    let mut slots = trace.best_lineup.slots().to_vec();
    slots.sort_by(|a, b| a.position.cmp(&b.position).then(a.player_id.cmp(&b.player_id)));
    for s in &slots {
        writeln!(stdout, "  {} {}", s.position.letter(), s.player_id)?;
    }
    writeln!(
        stdout,
        "objective {:.6} after {} iterations",
        trace.best_value, trace.iterations_used
    )?;
    writeln!(stdout, "trace written to {}", path.display())?;
    if let Some(reason) = &trace.aborted {
        writeln!(stdout, "search aborted: {reason}")?;
    }
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_windows()?;
    let optimizer = cfg.optimizer()?;
    let team = RunConfig::require(&cfg.team, "team")?;
    let test_from = *RunConfig::require(&cfg.test_from, "test_from")?;
    let store = load_store(cfg)?;
    let weights = load_weights(cfg)?;
    let ecfg = EvaluateConfig {
        fit: cfg.fit.clone(),
        optimizer,
        objective: cfg.objective,
        opponent: cfg.opponent_assumption,
        refit: cfg.refit,
        frozen_until: cfg.train_until,
    };
    let records = recursive_evaluate(&store, team, test_from, cfg.test_until, &weights, &ecfg)?;
    let path = out_path(cfg, "efficiency.csv");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_records_csv(&path, &records)?;

    let failed = records.iter().filter(|r| r.ratio.is_none()).count();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{} test matches, {failed} failed", records.len())?;
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    if !ratios.is_empty() {
        print_summary(&mut stdout, "all", &summarize(&ratios)?)?;
    }
    writeln!(stdout, "records written to {}", path.display())?;
    Ok(())
}

/// One row of the CSV written by `evaluate`.
#[derive(Debug, Deserialize)]
struct RecordRow {
    home: u8,
    ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EfficiencyReport {
    pub records: usize,
    pub failed: usize,
    pub all: Option<Summary>,
    pub home: Option<Summary>,
    pub away: Option<Summary>,
}

pub fn efficiency(cfg: &RunConfig) -> Result<(), CliError> {
    let path = RunConfig::require(&cfg.records, "records")?;
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::data("io", format!("{}: {e}", path.display())))?;
    let rows = reader
        .deserialize::<RecordRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::data("parse", format!("{}: {e}", path.display())))?;
    let pick = |venue: Option<bool>| -> Result<Option<Summary>, CliError> {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| venue.is_none_or(|h| (r.home == 1) == h))
            .filter_map(|r| r.ratio)
            .collect();
        Ok(if v.is_empty() { None } else { Some(summarize(&v)?) })
    };
    let report = EfficiencyReport {
        records: rows.len(),
        failed: rows.iter().filter(|r| r.ratio.is_none()).count(),
        all: pick(None)?,
        home: pick(Some(true))?,
        away: pick(Some(false))?,
    };
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{} records, {} failed", report.records, report.failed)?;
    writeln!(
        stdout,
        "{:<6} {:>4} {:>7} {:>7} {:>7} {:>7} {:>7}",
        "venue", "n", "min", "max", "mean", "sd", "median"
    )?;
    for (name, s) in [("all", &report.all), ("home", &report.home), ("away", &report.away)] {
        if let Some(s) = s {
            print_summary(&mut stdout, name, s)?;
        }
    }
    if let Some(out) = &cfg.out {
        write_file(out, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn print_summary(w: &mut impl Write, name: &str, s: &Summary) -> std::io::Result<()> {
    writeln!(
        w,
        "{name:<6} {:>4} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
        s.n, s.min, s.max, s.mean, s.sd, s.median
    )
}

pub fn serve(cfg: &RunConfig) -> Result<(), CliError> {
    let store = load_store(cfg)?;
    let weights = load_weights(cfg)?;
    let bind = cfg.bind.as_deref().unwrap_or("127.0.0.1:8080");
    let addr: SocketAddr = bind
        .parse()
        .map_err(|e| CliError::validation("bind", format!("`{bind}`: {e}")))?;
    let artifacts = cfg.artifacts.clone().unwrap_or_else(|| PathBuf::from("artifacts"));
    let state = Arc::new(lineup_service::AppState::new(store, weights, artifacts)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(lineup_service::serve(addr, state, cfg.static_dir.clone()))?;
    Ok(())
}

pub fn generate(cfg: &RunConfig, league_cfg: &LeagueConfig) -> Result<(), CliError> {
    let out = RunConfig::require(&cfg.out, "out")?;
    let league = generate_league(league_cfg)?;
    league.store.write_dir(out)?;
    write_file(&out.join("weights.json"), &league.weights.to_json()?)?;
    write_file(&out.join("truth.json"), &serde_json::to_string_pretty(&league.truth)?)?;
    println!(
        "{} teams, {} matches written to {}",
        league.teams.len(),
        league.store.matches().len(),
        out.display()
    );
    Ok(())
}
