//! Multi-start local search over feasible starting elevens.
//!
//! Three random starts, then repeated moves to the best single-swap
//! neighbor. A move is taken only if the neighbor is new with respect to the
//! last three solutions and changes the objective by more than `delta`
//! relative; otherwise the search restarts from a fresh random lineup.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    check_assignable_masks, enumerate_formations, Formation, Lineup, PlayerId, PlayerRecord, Position, Squad,
};
use crate::error::{Error, Result};
use crate::ingestion::DataStore;
use crate::model::{FittedModel, Probs};
use crate::skills::{lineup_strengths, SkillTable, StrengthVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ObjectiveKind {
    #[default]
    MaxWin,
    /// Maximizes `1 - pLoss`.
    MinLoss,
    MaxExpectedPoints,
}

impl ObjectiveKind {
    pub fn value(self, p: &Probs) -> f64 {
        match self {
            ObjectiveKind::MaxWin => p.win,
            ObjectiveKind::MinLoss => 1.0 - p.loss,
            ObjectiveKind::MaxExpectedPoints => p.expected_points(),
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxWin" | "max-win" | "win" => Ok(ObjectiveKind::MaxWin),
            "minLoss" | "min-loss" | "loss" => Ok(ObjectiveKind::MinLoss),
            "maxExpectedPoints" | "max-expected-points" | "points" => Ok(ObjectiveKind::MaxExpectedPoints),
            _ => Err(Error::Validation(format!("unknown objective `{s}`"))),
        }
    }
}

/// Anything that scores a lineup; larger is better.
pub trait Objective: Sync {
    fn evaluate(&self, lineup: &Lineup) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&Lineup) -> Result<f64> + Sync,
{
    fn evaluate(&self, lineup: &Lineup) -> Result<f64> {
        self(lineup)
    }
}

/// Scores a candidate lineup with a fitted model against a fixed opponent.
pub struct ModelObjective<'a> {
    pub model: &'a FittedModel,
    pub kind: ObjectiveKind,
    pub home: bool,
    pub opponent: StrengthVector,
    pub skills: &'a SkillTable,
}

impl<'a> ModelObjective<'a> {
    /// `skills` must cover both the candidate squad and the opponent lineup.
    pub fn new(
        model: &'a FittedModel,
        kind: ObjectiveKind,
        home: bool,
        opponent_lineup: &Lineup,
        skills: &'a SkillTable,
    ) -> Result<Self> {
        let opponent = lineup_strengths(opponent_lineup, |p| skills.get(p), model.aggregation_mode)?;
        Ok(ModelObjective {
            model,
            kind,
            home,
            opponent,
            skills,
        })
    }

    pub fn probs(&self, lineup: &Lineup) -> Result<Probs> {
        let own = lineup_strengths(lineup, |p| self.skills.get(p), self.model.aggregation_mode)?;
        self.model.predict(self.home, &own, &self.opponent, lineup)
    }
}

impl Objective for ModelObjective<'_> {
    fn evaluate(&self, lineup: &Lineup) -> Result<f64> {
        Ok(self.kind.value(&self.probs(lineup)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub min_iterations: usize,
    pub min_random_starts: usize,
    pub delta: f64,
    pub seed: u64,
    pub pinned: BTreeSet<PlayerId>,
    pub excluded: BTreeSet<PlayerId>,
    /// Formations to search; empty means every feasible standard formation.
    pub formations: Vec<Formation>,
    /// Hard stop on evaluated solutions, in case the stopping rule never
    /// fires.
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            min_iterations: 20,
            min_random_starts: 10,
            delta: 1e-4,
            seed: 0,
            pinned: BTreeSet::new(),
            excluded: BTreeSet::new(),
            formations: Vec::new(),
            max_iterations: 10_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_iterations < 3 {
            return Err(Error::Validation("min_iterations must be at least 3".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Validation("delta must be positive".into()));
        }
        if let Some(p) = self.pinned.intersection(&self.excluded).next() {
            return Err(Error::Contract(format!("player {p} is both pinned and excluded")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Random,
    /// A caller-supplied lineup used in place of a random start.
    Injected,
    Neighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lineup: Lineup,
    pub value: f64,
    pub restart: bool,
    pub kind: StepKind,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub formation: Formation,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub best_lineup: Lineup,
    pub best_value: f64,
    pub restarts: usize,
    pub iterations_used: usize,
    /// Set when the search stopped on an objective failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl SearchTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mask(p: &PlayerRecord) -> u8 {
    p.eligible_positions.iter().fold(0u8, |m, pos| m | (1 << pos.index()))
}

fn check_selection(squad: &Squad, pinned: &BTreeSet<PlayerId>, excluded: &BTreeSet<PlayerId>) -> Result<()> {
    if let Some(p) = pinned.intersection(excluded).next() {
        return Err(Error::Contract(format!("player {p} is both pinned and excluded")));
    }
    if let Some(p) = pinned.iter().find(|p| squad.player(p).is_none()) {
        return Err(Error::Validation(format!("pinned player {p} is not in the squad")));
    }
    if pinned.len() > 11 {
        return Err(Error::Infeasible {
            position: None,
            reason: format!("{} pinned players exceed eleven", pinned.len()),
        });
    }
    Ok(())
}

/// Draws a feasible lineup: pinned players first, then each position group
/// in order GK, DEF, MID, FWD, uniformly among the players that keep the
/// remaining slots fillable.
pub fn random_feasible_lineup(
    squad: &Squad,
    formation: Formation,
    rng: &mut impl Rng,
    pinned: &BTreeSet<PlayerId>,
    excluded: &BTreeSet<PlayerId>,
) -> Result<Lineup> {
    check_selection(squad, pinned, excluded)?;
    let pool: Vec<&PlayerRecord> = squad
        .players()
        .iter()
        .filter(|p| !excluded.contains(&p.player_id))
        .collect();
    let masks: Vec<u8> = pool.iter().map(|p| mask(p)).collect();
    let mut needs = formation.counts();
    let mut used = vec![false; pool.len()];
    let free_masks =
        |used: &[bool]| -> Vec<u8> { masks.iter().zip(used).filter(|(_, u)| !**u).map(|(m, _)| *m).collect() };
    check_assignable_masks(&masks, needs).map_err(|p| Error::Infeasible {
        position: Some(p),
        reason: format!("not enough eligible players at {p} for {formation}"),
    })?;

    let mut assignment: Vec<(PlayerId, Position)> = Vec::with_capacity(11);
    if !pinned.is_empty() {
        let idx: Vec<usize> = pinned
            .iter()
            .map(|p| pool.iter().position(|r| &r.player_id == p).expect("checked above"))
            .collect();
        for &i in &idx {
            used[i] = true;
        }
        let rest = free_masks(&used);
        let mut options: Vec<Vec<Position>> = Vec::new();
        let mut current = Vec::with_capacity(idx.len());
        enumerate_pinned(&idx, &pool, &mut needs.clone(), &rest, &mut current, &mut options);
        if options.is_empty() {
            return Err(Error::Infeasible {
                position: None,
                reason: format!("pinned players cannot be placed in {formation}"),
            });
        }
        let choice = &options[rng.gen_range(0..options.len())];
        for (&i, &pos) in idx.iter().zip(choice) {
            needs[pos.index()] -= 1;
            assignment.push((pool[i].player_id.clone(), pos));
        }
    }

    for pos in Position::ALL {
        while needs[pos.index()] > 0 {
            let mut after = needs;
            after[pos.index()] -= 1;
            let mut candidates = Vec::new();
            for i in 0..pool.len() {
                if used[i] || masks[i] & (1 << pos.index()) == 0 {
                    continue;
                }
                used[i] = true;
                if check_assignable_masks(&free_masks(&used), after).is_ok() {
                    candidates.push(i);
                }
                used[i] = false;
            }
            let Some(&pick) = candidates.choose(rng) else {
                return Err(Error::Infeasible {
                    position: Some(pos),
                    reason: format!("no eligible player left at {pos}"),
                });
            };
            used[pick] = true;
            needs = after;
            assignment.push((pool[pick].player_id.clone(), pos));
        }
    }
    Ok(Lineup::new(assignment, formation))
}

/// All position assignments of the pinned players that leave the rest of
/// the formation fillable from the unpinned pool.
fn enumerate_pinned(
    idx: &[usize],
    pool: &[&PlayerRecord],
    needs: &mut [usize; 4],
    rest: &[u8],
    current: &mut Vec<Position>,
    out: &mut Vec<Vec<Position>>,
) {
    let k = current.len();
    if k == idx.len() {
        if check_assignable_masks(rest, *needs).is_ok() {
            out.push(current.clone());
        }
        return;
    }
    for &pos in &pool[idx[k]].eligible_positions {
        if needs[pos.index()] == 0 {
            continue;
        }
        needs[pos.index()] -= 1;
        current.push(pos);
        enumerate_pinned(idx, pool, needs, rest, current, out);
        current.pop();
        needs[pos.index()] += 1;
    }
}

/// Every lineup reached by swapping one unpinned starter for an eligible,
/// non-excluded bench player at the same slot. Ordered by slot, then by
/// incoming player id.
pub fn neighbors(
    lineup: &Lineup,
    squad: &Squad,
    pinned: &BTreeSet<PlayerId>,
    excluded: &BTreeSet<PlayerId>,
) -> Vec<Lineup> {
    let bench: Vec<&PlayerRecord> = squad
        .players()
        .iter()
        .filter(|p| !excluded.contains(&p.player_id) && !lineup.contains(&p.player_id))
        .collect();
    let mut out = Vec::new();
    for (i, slot) in lineup.slots().iter().enumerate() {
        if pinned.contains(&slot.player_id) {
            continue;
        }
        for p in bench.iter().filter(|p| p.is_eligible(slot.position)) {
            out.push(lineup.with_swap(i, p.player_id.clone()));
        }
    }
    out
}

fn relative_change(from: f64, to: f64) -> f64 {
    let diff = (from - to).abs();
    if from == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / from.abs()
    }
}

fn evaluate(objective: &dyn Objective, lineup: &Lineup) -> Result<f64> {
    let v = objective.evaluate(lineup)?;
    if v.is_nan() {
        return Err(Error::Numerical(format!("objective is NaN for {lineup}")));
    }
    Ok(v)
}

/// Best neighbor by value, ties to the lexicographically smallest lineup.
fn best_neighbor(objective: &dyn Objective, candidates: Vec<Lineup>) -> Result<Option<(Lineup, f64)>> {
    let values: Vec<Result<f64>> = candidates.par_iter().map(|l| evaluate(objective, l)).collect();
    let mut best: Option<(Lineup, f64)> = None;
    for (l, v) in candidates.into_iter().zip(values) {
        let v = v?;
        let better = match &best {
            None => true,
            Some((bl, bv)) => v > *bv || (v == *bv && l < *bl),
        };
        if better {
            best = Some((l, v));
        }
    }
    Ok(best)
}

struct Search<'a> {
    squad: &'a Squad,
    formation: Formation,
    config: &'a OptimizerConfig,
    objective: &'a dyn Objective,
    rng: ChaCha8Rng,
    injected: VecDeque<Lineup>,
    trace: Vec<IterationRecord>,
    best: Option<(Lineup, f64)>,
}

impl Search<'_> {
    fn push(&mut self, lineup: Lineup, value: f64, restart: bool, kind: StepKind) {
        let better = match &self.best {
            None => true,
            Some((_, b)) => value > *b,
        };
        if better {
            self.best = Some((lineup.clone(), value));
        }
        let best_so_far = self.best.as_ref().map(|(_, v)| *v).unwrap_or(value);
        self.trace.push(IterationRecord {
            iteration: self.trace.len() + 1,
            lineup,
            value,
            restart,
            kind,
            best_so_far,
        });
    }

    fn fresh(&mut self) -> Result<(Lineup, StepKind)> {
        if let Some(l) = self.injected.pop_front() {
            return Ok((l, StepKind::Injected));
        }
        let l = random_feasible_lineup(
            self.squad,
            self.formation,
            &mut self.rng,
            &self.config.pinned,
            &self.config.excluded,
        )?;
        Ok((l, StepKind::Random))
    }

    fn restart(&mut self) -> Result<()> {
        let (l, kind) = self.fresh()?;
        let v = evaluate(self.objective, &l)?;
        self.push(l, v, true, kind);
        Ok(())
    }

    fn run(&mut self) -> Result<usize> {
        let cfg = self.config;
        let mut restarts = 0;
        for _ in 0..3 {
            self.restart()?;
            restarts += 1;
        }
        let mut flag = false;
        loop {
            let i = self.trace.len();
            if (!flag && restarts >= cfg.min_random_starts && i >= cfg.min_iterations) || i >= cfg.max_iterations {
                return Ok(restarts);
            }
            let prev = &self.trace[i - 1];
            let candidates = neighbors(&prev.lineup, self.squad, &cfg.pinned, &cfg.excluded);
            let prev_value = prev.value;
            let accepted = match best_neighbor(self.objective, candidates)? {
                Some((n, v))
                    if self.trace[i.saturating_sub(3)..].iter().all(|r| r.lineup != n)
                        && relative_change(prev_value, v) > cfg.delta =>
                {
                    Some((n, v))
                }
                _ => None,
            };
            match accepted {
                Some((n, v)) => {
                    self.push(n, v, false, StepKind::Neighbor);
                    flag = true;
                }
                None => {
                    self.restart()?;
                    restarts += 1;
                    flag = false;
                }
            }
        }
    }
}

/// Runs the search for one formation. `inject` lineups replace the first
/// random starts, in order; ones not valid for this squad, formation, pins
/// and exclusions are skipped.
pub fn optimize_lineup(
    objective: &dyn Objective,
    squad: &Squad,
    formation: Formation,
    config: &OptimizerConfig,
    inject: &[Lineup],
) -> Result<SearchTrace> {
    config.validate()?;
    check_selection(squad, &config.pinned, &config.excluded)?;
    let injected = inject
        .iter()
        .filter(|l| {
            l.formation() == formation
                && squad.validate_lineup(l).is_ok()
                && config.pinned.iter().all(|p| l.contains(p))
                && !config.excluded.iter().any(|p| l.contains(p))
        })
        .cloned()
        .collect();
    let mut search = Search {
        squad,
        formation,
        config,
        objective,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        injected,
        trace: Vec::new(),
        best: None,
    };
    let outcome = search.run();
    let (restarts, aborted) = match outcome {
        Ok(r) => (r, None),
        Err(e) if search.trace.is_empty() => return Err(e),
        Err(e) => (search.trace.iter().filter(|r| r.restart).count(), Some(e.to_string())),
    };
    let (best_lineup, best_value) = search.best.expect("at least one evaluated solution");
    Ok(SearchTrace {
        formation,
        seed: config.seed,
        iterations_used: search.trace.len(),
        iterations: search.trace,
        best_lineup,
        best_value,
        restarts,
        aborted,
    })
}

/// Runs [`optimize_lineup`] for each configured formation and keeps the
/// best result; ties go to the earlier formation.
pub fn optimize_over_formations(
    objective: &dyn Objective,
    squad: &Squad,
    config: &OptimizerConfig,
    inject: &[Lineup],
) -> Result<SearchTrace> {
    let formations = if config.formations.is_empty() {
        enumerate_formations()
    } else {
        config.formations.clone()
    };
    let mut best: Option<SearchTrace> = None;
    let mut last_err = None;
    for f in formations {
        if !squad.is_feasible(f) {
            continue;
        }
        match optimize_lineup(objective, squad, f, config, inject) {
            Ok(t) => {
                if best.as_ref().is_none_or(|b| t.best_value > b.best_value) {
                    best = Some(t);
                }
            }
            Err(e @ Error::Infeasible { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or(Error::Infeasible {
            position: None,
            reason: "no requested formation is feasible for the squad".into(),
        })
    })
}

/// Top players by position-relevant skill among natural-position players;
/// ties go to the smaller player id.
pub fn best_rated_lineup(squad: &Squad, formation: Formation, skills: &SkillTable) -> Result<Lineup> {
    let mut assignment = Vec::with_capacity(11);
    for pos in Position::ALL {
        let mut group: Vec<(f64, &PlayerId)> = squad
            .players()
            .iter()
            .filter(|p| p.natural_position == pos)
            .map(|p| Ok((skills.get(&p.player_id)?.for_position(pos), &p.player_id)))
            .collect::<Result<_>>()?;
        let need = formation.count(pos);
        if group.len() < need {
            return Err(Error::Infeasible {
                position: Some(pos),
                reason: format!("{} natural {pos} players, {formation} needs {need}", group.len()),
            });
        }
        group.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        assignment.extend(group.into_iter().take(need).map(|(_, id)| (id.clone(), pos)));
    }
    Ok(Lineup::new(assignment, formation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OpponentAssumption {
    #[default]
    BestRated,
    LastMatch,
    MostFrequentEleven,
}

impl std::str::FromStr for OpponentAssumption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bestRated" | "best-rated" => Ok(OpponentAssumption::BestRated),
            "lastMatch" | "last-match" => Ok(OpponentAssumption::LastMatch),
            "mostFrequentEleven" | "most-frequent-eleven" => Ok(OpponentAssumption::MostFrequentEleven),
            _ => Err(Error::Validation(format!("unknown opponent assumption `{s}`"))),
        }
    }
}

/// The team's most used standard formation before `date` that the squad can
/// field; 4-4-2 when there is no usable history.
pub fn usual_formation(store: &DataStore, team: &str, date: NaiveDate, squad: &Squad) -> Result<Formation> {
    let mut counts: BTreeMap<Formation, usize> = BTreeMap::new();
    for v in store.team_matches(team).filter(|v| v.record.date < date) {
        let f = v.own_lineup().formation();
        if f.is_standard() {
            *counts.entry(f).or_default() += 1;
        }
    }
    let mut ranked: Vec<(Formation, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let default = Formation::new(4, 4, 2)?;
    ranked
        .into_iter()
        .map(|(f, _)| f)
        .chain(std::iter::once(default))
        .chain(enumerate_formations())
        .find(|f| squad.is_feasible(*f) && natural_counts_cover(squad, *f))
        .ok_or_else(|| Error::Infeasible {
            position: None,
            reason: format!("squad of {team} cannot field any standard formation"),
        })
}

fn natural_counts_cover(squad: &Squad, f: Formation) -> bool {
    let mut c = [0usize; 4];
    for p in squad.players() {
        c[p.natural_position.index()] += 1;
    }
    Position::ALL.iter().all(|p| c[p.index()] >= f.count(*p))
}

/// The lineup a team is assumed to field on `date`.
pub fn opponent_assumption(
    kind: OpponentAssumption,
    store: &DataStore,
    team: &str,
    date: NaiveDate,
    squad: &Squad,
    skills: &SkillTable,
) -> Result<Lineup> {
    match kind {
        OpponentAssumption::BestRated => best_rated_lineup(squad, usual_formation(store, team, date, squad)?, skills),
        OpponentAssumption::LastMatch => store
            .team_matches(team)
            .filter(|v| v.record.date < date)
            .last()
            .map(|v| v.own_lineup().clone())
            .ok_or_else(|| Error::History(format!("{team} has no match before {date}"))),
        OpponentAssumption::MostFrequentEleven => most_frequent_eleven(store, team, date),
    }
}

/// The goalkeeper and ten outfield players with most starts before `date`,
/// at their most frequent positions, reshaped to the nearest standard
/// formation by moving the least-used players of overfull groups.
pub fn most_frequent_eleven(store: &DataStore, team: &str, date: NaiveDate) -> Result<Lineup> {
    let mut starts: BTreeMap<PlayerId, [usize; 4]> = BTreeMap::new();
    let mut any = false;
    for v in store.team_matches(team).filter(|v| v.record.date < date) {
        any = true;
        for s in v.own_lineup().slots() {
            starts.entry(s.player_id.clone()).or_default()[s.position.index()] += 1;
        }
    }
    if !any {
        return Err(Error::History(format!("{team} has no match before {date}")));
    }
    let total = |c: &[usize; 4]| c.iter().sum::<usize>();
    let modal = |c: &[usize; 4]| {
        (0..4)
            .max_by(|&a, &b| c[a].cmp(&c[b]).then(b.cmp(&a)))
            .expect("four positions")
    };
    let mut ranked: Vec<(&PlayerId, &[usize; 4])> = starts.iter().collect();
    ranked.sort_by(|a, b| total(b.1).cmp(&total(a.1)).then(a.0.cmp(b.0)));
    let keeper = ranked
        .iter()
        .find(|(_, c)| modal(c) == 0)
        .ok_or_else(|| Error::History(format!("{team} has never fielded a goalkeeper before {date}")))?;
    let outfield: Vec<(&PlayerId, [usize; 4])> = ranked
        .iter()
        .filter(|(_, c)| modal(c) != 0)
        .take(10)
        .map(|(p, c)| (*p, **c))
        .collect();
    if outfield.len() < 10 {
        return Err(Error::History(format!(
            "{team} has fewer than ten outfield starters before {date}"
        )));
    }
    let mut group: Vec<usize> = outfield.iter().map(|(_, c)| modal(c)).collect();
    let mut counts = [0usize; 4];
    for &g in &group {
        counts[g] += 1;
    }
    let target = enumerate_formations()
        .into_iter()
        .min_by_key(|f| (1..4).map(|g| counts[g].abs_diff(f.counts()[g])).sum::<usize>())
        .expect("eight formations");
    let want = target.counts();
    while let Some(over) = (1..4).find(|&g| counts[g] > want[g]) {
        // Least-used member of the overfull group, by starts there.
        let k = (0..10)
            .filter(|&k| group[k] == over)
            .min_by(|&a, &b| {
                outfield[a].1[over]
                    .cmp(&outfield[b].1[over])
                    .then(outfield[b].0.cmp(outfield[a].0))
            })
            .expect("group is overfull");
        let under: Vec<usize> = (1..4).filter(|&g| counts[g] < want[g]).collect();
        let dest = *under
            .iter()
            .max_by(|&&a, &&b| outfield[k].1[a].cmp(&outfield[k].1[b]).then(b.cmp(&a)))
            .expect("an underfull group exists");
        group[k] = dest;
        counts[over] -= 1;
        counts[dest] += 1;
    }
    let mut assignment = vec![((*keeper.0).clone(), Position::Goalkeeper)];
    assignment.extend(
        outfield
            .iter()
            .zip(&group)
            .map(|((p, _), &g)| ((*p).clone(), Position::ALL[g])),
    );
    Ok(Lineup::new(assignment, target))
}
