//! Flat-file inputs: players, rated attribute snapshots, and matches with
//! both starting elevens.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{structural_violations, Lineup, PlayerId, PlayerRecord, Position};
use crate::error::{Error, Result};

pub const GOALKEEPING_ATTRIBUTES: [&str; 5] = [
    "gk_diving",
    "gk_handling",
    "gk_kicking",
    "gk_positioning",
    "gk_reflexes",
];

pub const DEFENSIVE_ATTRIBUTES: [&str; 4] = [
    "def_interceptions",
    "def_marking",
    "def_standing_tackle",
    "def_sliding_tackle",
];

pub const ATTACKING_ATTRIBUTES: [&str; 9] = [
    "att_crossing",
    "att_finishing",
    "att_heading_accuracy",
    "att_volleys",
    "att_curve",
    "att_free_kick_accuracy",
    "att_shot_power",
    "att_long_shots",
    "att_penalties",
];

pub const GENERAL_ATTRIBUTES: [&str; 15] = [
    "gen_short_passing",
    "gen_long_passing",
    "gen_ball_control",
    "gen_acceleration",
    "gen_sprint_speed",
    "gen_agility",
    "gen_reactions",
    "gen_balance",
    "gen_jumping",
    "gen_stamina",
    "gen_strength",
    "gen_aggression",
    "gen_positioning",
    "gen_vision",
    "gen_dribbling",
];

pub const ATTRIBUTE_COUNT: usize = 33;

/// All 33 attribute columns in file order: goalkeeping, defensive,
/// attacking, general.
pub fn attribute_names() -> impl Iterator<Item = &'static str> {
    GOALKEEPING_ATTRIBUTES
        .iter()
        .chain(&DEFENSIVE_ATTRIBUTES)
        .chain(&ATTACKING_ATTRIBUTES)
        .chain(&GENERAL_ATTRIBUTES)
        .copied()
}

pub fn attribute_index(name: &str) -> Option<usize> {
    attribute_names().position(|n| n == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSnapshot {
    pub player_id: PlayerId,
    pub snapshot_date: NaiveDate,
    /// Ratings in [`attribute_names`] order.
    pub ratings: Vec<f64>,
}

impl AttributeSnapshot {
    pub fn new(player_id: PlayerId, snapshot_date: NaiveDate, ratings: Vec<f64>) -> Result<Self> {
        if ratings.len() != ATTRIBUTE_COUNT {
            return Err(Error::Validation(format!(
                "snapshot for {player_id} has {} ratings, expected {ATTRIBUTE_COUNT}",
                ratings.len()
            )));
        }
        if let Some((i, r)) = ratings.iter().enumerate().find(|(_, r)| !(1.0..=99.0).contains(*r)) {
            let name = attribute_names().nth(i).unwrap_or("?");
            return Err(Error::Validation(format!(
                "rating {r} for `{name}` of {player_id} is outside [1, 99]"
            )));
        }
        Ok(AttributeSnapshot {
            player_id,
            snapshot_date,
            ratings,
        })
    }

    pub fn rating(&self, name: &str) -> Option<f64> {
        attribute_index(name).map(|i| self.ratings[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Draw,
    Loss,
}

impl Outcome {
    pub fn from_goals(scored: u32, conceded: u32) -> Self {
        match scored.cmp(&conceded) {
            std::cmp::Ordering::Greater => Outcome::Win,
            std::cmp::Ordering::Equal => Outcome::Draw,
            std::cmp::Ordering::Less => Outcome::Loss,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Win => Outcome::Loss,
            Outcome::Draw => Outcome::Draw,
            Outcome::Loss => Outcome::Win,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub date: NaiveDate,
    pub season: String,
    pub home_team_id: String,
    pub away_team_id: String,
    pub home_goals: u32,
    pub away_goals: u32,
    pub home_lineup: Lineup,
    pub away_lineup: Lineup,
}

/// One team's view of a match.
#[derive(Debug, Clone, Copy)]
pub struct TeamView<'a> {
    pub record: &'a MatchRecord,
    pub home: bool,
}

impl<'a> TeamView<'a> {
    pub fn own_lineup(&self) -> &'a Lineup {
        if self.home {
            &self.record.home_lineup
        } else {
            &self.record.away_lineup
        }
    }

    pub fn opponent_lineup(&self) -> &'a Lineup {
        if self.home {
            &self.record.away_lineup
        } else {
            &self.record.home_lineup
        }
    }

    pub fn opponent(&self) -> &'a str {
        if self.home {
            &self.record.away_team_id
        } else {
            &self.record.home_team_id
        }
    }

    pub fn outcome(&self) -> Outcome {
        let o = self.record.outcome_for_home();
        if self.home {
            o
        } else {
            o.flip()
        }
    }

    pub fn goal_difference(&self) -> f64 {
        let gd = self.record.home_goals as f64 - self.record.away_goals as f64;
        if self.home {
            gd
        } else {
            -gd
        }
    }
}

impl MatchRecord {
    pub fn outcome_for_home(&self) -> Outcome {
        Outcome::from_goals(self.home_goals, self.away_goals)
    }

    pub fn involves(&self, team: &str) -> bool {
        self.home_team_id == team || self.away_team_id == team
    }

    pub fn view(&self, team: &str) -> Option<TeamView<'_>> {
        if self.home_team_id == team {
            Some(TeamView {
                record: self,
                home: true,
            })
        } else if self.away_team_id == team {
            Some(TeamView {
                record: self,
                home: false,
            })
        } else {
            None
        }
    }
}

/// Whether an as-of lookup had to fall back to a later snapshot.
#[derive(Debug, Clone, Copy)]
pub struct AsOf<'a> {
    pub snapshot: &'a AttributeSnapshot,
    pub extrapolated: bool,
}

/// Everything loaded from one data directory. Immutable after loading.
#[derive(Debug, Clone, Default)]
pub struct DataStore {
    players: BTreeMap<PlayerId, PlayerRecord>,
    snapshots: BTreeMap<PlayerId, Vec<AttributeSnapshot>>,
    matches: Vec<MatchRecord>,
    rosters: Option<BTreeMap<(String, String), BTreeSet<PlayerId>>>,
}

impl DataStore {
    pub fn new(
        players: Vec<PlayerRecord>,
        snapshots: Vec<AttributeSnapshot>,
        mut matches: Vec<MatchRecord>,
    ) -> Result<Self> {
        let mut pmap = BTreeMap::new();
        for p in players {
            let id = p.player_id.clone();
            if pmap.insert(id.clone(), p).is_some() {
                return Err(Error::Validation(format!("duplicate player_id {id}")));
            }
        }
        let mut smap: BTreeMap<PlayerId, Vec<AttributeSnapshot>> = BTreeMap::new();
        for s in snapshots {
            if !pmap.contains_key(&s.player_id) {
                return Err(Error::Reference(format!("snapshot for unknown player {}", s.player_id)));
            }
            smap.entry(s.player_id.clone()).or_default().push(s);
        }
        for (id, v) in smap.iter_mut() {
            v.sort_by_key(|s| s.snapshot_date);
            if let Some(w) = v.windows(2).find(|w| w[0].snapshot_date == w[1].snapshot_date) {
                return Err(Error::Validation(format!(
                    "duplicate snapshot ({id}, {})",
                    w[0].snapshot_date
                )));
            }
        }
        let mut ids = HashSet::new();
        for m in &matches {
            if !ids.insert(m.match_id.as_str()) {
                return Err(Error::Validation(format!("duplicate match_id {}", m.match_id)));
            }
            for s in m.home_lineup.slots().iter().chain(m.away_lineup.slots()) {
                if !pmap.contains_key(&s.player_id) {
                    return Err(Error::Reference(format!(
                        "match {} lists unknown player {}",
                        m.match_id, s.player_id
                    )));
                }
            }
        }
        matches.sort_by(|a, b| (a.date, &a.match_id).cmp(&(b.date, &b.match_id)));
        Ok(DataStore {
            players: pmap,
            snapshots: smap,
            matches,
            rosters: None,
        })
    }

    /// Loads `players.csv`, `attributes.csv`, `matches.csv` and, when
    /// present, `rosters.csv` from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let players = load_players(dir.join("players.csv"))?;
        let snapshots = load_attributes(dir.join("attributes.csv"))?;
        let matches = load_matches(dir.join("matches.csv"))?;
        let mut store = DataStore::new(players, snapshots, matches)?;
        let rosters = dir.join("rosters.csv");
        if rosters.exists() {
            store.set_rosters(load_rosters(rosters)?)?;
        }
        Ok(store)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_players(dir.join("players.csv"), self.players.values())?;
        write_attributes(dir.join("attributes.csv"), self.snapshots.values().flatten())?;
        write_matches(dir.join("matches.csv"), &self.matches)?;
        if let Some(r) = &self.rosters {
            write_rosters(dir.join("rosters.csv"), r)?;
        }
        Ok(())
    }

    pub fn set_rosters(&mut self, rosters: Vec<RosterEntry>) -> Result<()> {
        let mut map: BTreeMap<(String, String), BTreeSet<PlayerId>> = BTreeMap::new();
        for r in rosters {
            if !self.players.contains_key(&r.player_id) {
                return Err(Error::Reference(format!("roster lists unknown player {}", r.player_id)));
            }
            map.entry((r.team_id, r.season)).or_default().insert(r.player_id);
        }
        self.rosters = Some(map);
        Ok(())
    }

    pub fn players(&self) -> impl Iterator<Item = &PlayerRecord> {
        self.players.values()
    }

    pub fn player(&self, id: &PlayerId) -> Option<&PlayerRecord> {
        self.players.get(id)
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &AttributeSnapshot> {
        self.snapshots.values().flatten()
    }

    pub fn player_snapshots(&self, id: &PlayerId) -> &[AttributeSnapshot] {
        self.snapshots.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Chronologically sorted matches.
    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn team_matches<'a>(&'a self, team: &'a str) -> impl Iterator<Item = TeamView<'a>> + 'a {
        self.matches.iter().filter_map(move |m| m.view(team))
    }

    pub fn teams(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .matches
            .iter()
            .flat_map(|m| [&m.home_team_id, &m.away_team_id])
            .collect();
        set.into_iter().cloned().collect()
    }

    /// Latest snapshot dated on or before `date`; falls back to the earliest
    /// snapshot (flagged) for dates before any snapshot.
    pub fn attribute_as_of(&self, player: &PlayerId, date: NaiveDate) -> Result<AsOf<'_>> {
        let snaps = self.player_snapshots(player);
        if snaps.is_empty() {
            return Err(Error::MissingData(player.clone()));
        }
        let after = snaps.partition_point(|s| s.snapshot_date <= date);
        Ok(if after == 0 {
            AsOf {
                snapshot: &snaps[0],
                extrapolated: true,
            }
        } else {
            AsOf {
                snapshot: &snaps[after - 1],
                extrapolated: false,
            }
        })
    }

    /// Players available to `team` in `season`: the roster file when loaded,
    /// otherwise everyone who started for the team in that season.
    pub fn season_pool(&self, team: &str, season: &str) -> BTreeSet<PlayerId> {
        if let Some(r) = &self.rosters {
            if let Some(set) = r.get(&(team.to_owned(), season.to_owned())) {
                return set.clone();
            }
        }
        self.team_matches(team)
            .filter(|v| v.record.season == season)
            .flat_map(|v| v.own_lineup().slots().iter().map(|s| s.player_id.clone()))
            .collect()
    }
}

fn read_csv(path: &Path) -> Result<(csv::Reader<File>, csv::StringRecord)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    Ok((rdr, headers))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let day = s.get(..10).unwrap_or(s);
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub fn load_players(path: impl AsRef<Path>) -> Result<Vec<PlayerRecord>> {
    let path = path.as_ref();
    let (mut rdr, headers) = read_csv(path)?;
    let id = column(path, &headers, "player_id")?;
    let name = column(path, &headers, "name")?;
    let pos = column(path, &headers, "natural_position")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec);
        let position: Position = rec[pos]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        if rec[id].trim().is_empty() {
            return Err(Error::parse(path, line, "empty player_id"));
        }
        out.push(PlayerRecord::natural(rec[id].trim(), &rec[name], position));
    }
    Ok(out)
}

pub fn load_attributes(path: impl AsRef<Path>) -> Result<Vec<AttributeSnapshot>> {
    let path = path.as_ref();
    let (mut rdr, headers) = read_csv(path)?;
    let id = column(path, &headers, "player_id")?;
    let date = column(path, &headers, "snapshot_date")?;
    let cols: Vec<usize> = attribute_names()
        .map(|n| column(path, &headers, n))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec);
        let d = parse_date(&rec[date]).ok_or_else(|| Error::parse(path, line, format!("bad date `{}`", &rec[date])))?;
        let pid = PlayerId::new(rec[id].trim());
        let ratings = cols
            .iter()
            .zip(attribute_names())
            .map(|(&c, n)| {
                rec[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("`{n}` is not a number: `{}`", &rec[c])))
            })
            .collect::<Result<Vec<_>>>()?;
        if !seen.insert((pid.clone(), d)) {
            return Err(Error::Validation(format!(
                "{}:{line}: duplicate snapshot ({pid}, {d})",
                path.display()
            )));
        }
        let snap = AttributeSnapshot::new(pid, d, ratings)
            .map_err(|e| Error::Validation(format!("{}:{line}: {e}", path.display())))?;
        out.push(snap);
    }
    Ok(out)
}

fn lineup_columns(path: &Path, headers: &csv::StringRecord, side: &str) -> Result<Vec<(usize, usize)>> {
    (1..=11)
        .map(|k| {
            Ok((
                column(path, headers, &format!("{side}_p{k}"))?,
                column(path, headers, &format!("{side}_pos{k}"))?,
            ))
        })
        .collect()
}

fn parse_lineup(path: &Path, line: u64, rec: &csv::StringRecord, cols: &[(usize, usize)]) -> Result<Lineup> {
    let mut assignments = Vec::new();
    for &(p, q) in cols {
        let id = rec[p].trim();
        if id.is_empty() {
            continue;
        }
        let pos: Position = rec[q]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        assignments.push((PlayerId::new(id), pos));
    }
    let lineup = Lineup::from_assignments(assignments);
    let v = structural_violations(&lineup);
    if !v.is_empty() {
        return Err(Error::Validation(format!(
            "{}:{line}: {}",
            path.display(),
            Error::InvalidLineup(v)
        )));
    }
    Ok(lineup)
}

pub fn load_matches(path: impl AsRef<Path>) -> Result<Vec<MatchRecord>> {
    let path = path.as_ref();
    let (mut rdr, headers) = read_csv(path)?;
    let c = |n: &str| column(path, &headers, n);
    let (id, date, season) = (c("match_id")?, c("date")?, c("season")?);
    let (home, away) = (c("home_team_id")?, c("away_team_id")?);
    let (hg, ag) = (c("home_goals")?, c("away_goals")?);
    let hcols = lineup_columns(path, &headers, "home")?;
    let acols = lineup_columns(path, &headers, "away")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec);
        let goals = |i: usize| {
            rec[i]
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(path, line, format!("bad goal count `{}`", &rec[i])))
        };
        let m = MatchRecord {
            match_id: rec[id].trim().to_owned(),
            date: parse_date(&rec[date])
                .ok_or_else(|| Error::parse(path, line, format!("bad date `{}`", &rec[date])))?,
            season: rec[season].trim().to_owned(),
            home_team_id: rec[home].trim().to_owned(),
            away_team_id: rec[away].trim().to_owned(),
            home_goals: goals(hg)?,
            away_goals: goals(ag)?,
            home_lineup: parse_lineup(path, line, &rec, &hcols)?,
            away_lineup: parse_lineup(path, line, &rec, &acols)?,
        };
        if m.home_team_id == m.away_team_id {
            return Err(Error::Validation(format!(
                "{}:{line}: team plays itself",
                path.display()
            )));
        }
        out.push(m);
    }
    out.sort_by(|a, b| (a.date, &a.match_id).cmp(&(b.date, &b.match_id)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub team_id: String,
    pub season: String,
    pub player_id: PlayerId,
}

pub fn load_rosters(path: impl AsRef<Path>) -> Result<Vec<RosterEntry>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn flush(mut w: csv::Writer<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn wr(path: &Path, e: csv::Error) -> Error {
    csv_error(path, e)
}

pub fn write_players<'a>(path: impl AsRef<Path>, players: impl IntoIterator<Item = &'a PlayerRecord>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["player_id", "name", "natural_position"])
        .map_err(|e| wr(path, e))?;
    for p in players {
        w.write_record([p.player_id.as_str(), &p.name, p.natural_position.code()])
            .map_err(|e| wr(path, e))?;
    }
    flush(w)
}

pub fn write_attributes<'a>(
    path: impl AsRef<Path>,
    snapshots: impl IntoIterator<Item = &'a AttributeSnapshot>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let header: Vec<&str> = ["player_id", "snapshot_date"]
        .into_iter()
        .chain(attribute_names())
        .collect();
    w.write_record(&header).map_err(|e| wr(path, e))?;
    for s in snapshots {
        let mut row = vec![s.player_id.0.clone(), s.snapshot_date.to_string()];
        row.extend(s.ratings.iter().map(|r| r.to_string()));
        w.write_record(&row).map_err(|e| wr(path, e))?;
    }
    flush(w)
}

fn lineup_fields(l: &Lineup) -> (Vec<String>, Vec<String>) {
    let mut ids: Vec<String> = l.slots().iter().map(|s| s.player_id.0.clone()).collect();
    let mut pos: Vec<String> = l.slots().iter().map(|s| s.position.code().to_owned()).collect();
    ids.resize(11, String::new());
    pos.resize(11, String::new());
    (ids, pos)
}

pub fn write_matches(path: impl AsRef<Path>, matches: &[MatchRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header: Vec<String> = [
        "match_id",
        "date",
        "season",
        "home_team_id",
        "away_team_id",
        "home_goals",
        "away_goals",
    ]
    .map(String::from)
    .to_vec();
    for side in ["home", "away"] {
        header.extend((1..=11).map(|k| format!("{side}_p{k}")));
        header.extend((1..=11).map(|k| format!("{side}_pos{k}")));
    }
    w.write_record(&header).map_err(|e| wr(path, e))?;
    for m in matches {
        let mut row = vec![
            m.match_id.clone(),
            m.date.to_string(),
            m.season.clone(),
            m.home_team_id.clone(),
            m.away_team_id.clone(),
            m.home_goals.to_string(),
            m.away_goals.to_string(),
        ];
        for l in [&m.home_lineup, &m.away_lineup] {
            let (ids, pos) = lineup_fields(l);
            row.extend(ids);
            row.extend(pos);
        }
        w.write_record(&row).map_err(|e| wr(path, e))?;
    }
    flush(w)
}

fn write_rosters(path: impl AsRef<Path>, rosters: &BTreeMap<(String, String), BTreeSet<PlayerId>>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path)?;
    writeln!(f, "team_id,season,player_id")?;
    let mut w = csv::Writer::from_writer(f);
    for ((team, season), ids) in rosters {
        for id in ids {
            w.write_record([team.as_str(), season.as_str(), id.as_str()])
                .map_err(|e| wr(path, e))?;
        }
    }
    flush(w)
}
