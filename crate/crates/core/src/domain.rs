//! Squads, formations and lineups.
//!
//! A lineup is an explicit player → position assignment. The binary
//! membership tuple over a squad is derivable from it but loses the
//! positional information that multi-role players need.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Position {
    #[serde(rename = "GK")]
    Goalkeeper,
    #[serde(rename = "DEF")]
    Defender,
    #[serde(rename = "MID")]
    Midfielder,
    #[serde(rename = "FWD")]
    Forward,
}

impl Position {
    pub const ALL: [Position; 4] = [
        Position::Goalkeeper,
        Position::Defender,
        Position::Midfielder,
        Position::Forward,
    ];
    pub const OUTFIELD: [Position; 3] = [Position::Defender, Position::Midfielder, Position::Forward];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Position::Goalkeeper => "GK",
            Position::Defender => "DEF",
            Position::Midfielder => "MID",
            Position::Forward => "FWD",
        }
    }

    /// Single-letter tag used in feature names, e.g. `Cole(D)`.
    pub fn letter(self) -> char {
        match self {
            Position::Goalkeeper => 'G',
            Position::Defender => 'D',
            Position::Midfielder => 'M',
            Position::Forward => 'F',
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GK" | "G" => Ok(Position::Goalkeeper),
            "DEF" | "D" => Ok(Position::Defender),
            "MID" | "M" => Ok(Position::Midfielder),
            "FWD" | "F" => Ok(Position::Forward),
            other => Err(Error::Validation(format!("unknown position `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        PlayerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        PlayerId(s.to_owned())
    }
}

impl From<String> for PlayerId {
    fn from(s: String) -> Self {
        PlayerId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    pub player_id: PlayerId,
    pub name: String,
    pub natural_position: Position,
    pub eligible_positions: BTreeSet<Position>,
}

impl PlayerRecord {
    /// A player eligible only at his natural position.
    pub fn natural(player_id: impl Into<PlayerId>, name: impl Into<String>, position: Position) -> Self {
        PlayerRecord {
            player_id: player_id.into(),
            name: name.into(),
            natural_position: position,
            eligible_positions: BTreeSet::from([position]),
        }
    }

    pub fn is_eligible(&self, position: Position) -> bool {
        self.eligible_positions.contains(&position)
    }
}

/// Outfield counts (defenders, midfielders, forwards); the goalkeeper is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Formation {
    pub defenders: u8,
    pub midfielders: u8,
    pub forwards: u8,
}

impl Formation {
    /// A formation satisfying the standard constraint set.
    pub fn new(defenders: u8, midfielders: u8, forwards: u8) -> Result<Self> {
        let f = Formation {
            defenders,
            midfielders,
            forwards,
        };
        if f.is_standard() {
            Ok(f)
        } else {
            Err(Error::Validation(format!("{f} is not a feasible formation")))
        }
    }

    /// Any ten-outfielder split, as seen in recorded matches.
    pub fn observed(defenders: u8, midfielders: u8, forwards: u8) -> Self {
        Formation {
            defenders,
            midfielders,
            forwards,
        }
    }

    pub fn is_standard(&self) -> bool {
        (3..=5).contains(&self.defenders)
            && self.midfielders <= 5
            && (1..=3).contains(&self.forwards)
            && self.outfield() == 10
    }

    pub fn outfield(&self) -> u32 {
        self.defenders as u32 + self.midfielders as u32 + self.forwards as u32
    }

    pub fn count(&self, position: Position) -> usize {
        match position {
            Position::Goalkeeper => 1,
            Position::Defender => self.defenders as usize,
            Position::Midfielder => self.midfielders as usize,
            Position::Forward => self.forwards as usize,
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        Position::ALL.map(|p| self.count(p))
    }
}

impl fmt::Display for Formation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.defenders, self.midfielders, self.forwards)
    }
}

impl FromStr for Formation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.trim().split('-').collect();
        let bad = || Error::Validation(format!("cannot parse formation `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<u8> = parts
            .iter()
            .map(|p| p.parse::<u8>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Formation::new(n[0], n[1], n[2])
    }
}

/// The eight formations meeting the constraint set, ordered by (d, m, f).
pub fn enumerate_formations() -> Vec<Formation> {
    let mut out = Vec::new();
    for d in 0..=10u8 {
        for m in 0..=(10 - d) {
            let f = Formation::observed(d, m, 10 - d - m);
            if f.is_standard() {
                out.push(f);
            }
        }
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Squad sizes per position when no player is eligible in more than one role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionCounts {
    pub goalkeepers: usize,
    pub defenders: usize,
    pub midfielders: usize,
    pub forwards: usize,
}

impl PositionCounts {
    pub fn new(goalkeepers: usize, defenders: usize, midfielders: usize, forwards: usize) -> Self {
        PositionCounts {
            goalkeepers,
            defenders,
            midfielders,
            forwards,
        }
    }

    pub fn get(&self, p: Position) -> usize {
        match p {
            Position::Goalkeeper => self.goalkeepers,
            Position::Defender => self.defenders,
            Position::Midfielder => self.midfielders,
            Position::Forward => self.forwards,
        }
    }
}

/// Number of distinct lineups for a squad with disjoint eligibility.
pub fn count_lineups(sizes: PositionCounts, formation: Formation) -> Result<u64> {
    let mut total = 1u64;
    for p in Position::ALL {
        let (have, need) = (sizes.get(p), formation.count(p));
        if have < need {
            return Err(Error::Infeasible {
                position: Some(p),
                reason: format!("{formation} needs {need} {p}, squad has {have}"),
            });
        }
        total *= binomial(have as u64, need as u64);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub player_id: PlayerId,
    pub position: Position,
}

/// Eleven players with their assigned positions.
///
/// Slots are kept sorted by (position, player id) so equal lineups compare
/// and hash equal and iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lineup {
    slots: Vec<Slot>,
    formation: Formation,
}

impl Lineup {
    pub fn new(assignments: impl IntoIterator<Item = (PlayerId, Position)>, formation: Formation) -> Self {
        let mut slots: Vec<Slot> = assignments
            .into_iter()
            .map(|(player_id, position)| Slot { player_id, position })
            .collect();
        slots.sort_by(|a, b| (a.position, &a.player_id).cmp(&(b.position, &b.player_id)));
        Lineup { slots, formation }
    }

    /// Builds a lineup whose formation is read off the outfield counts.
    pub fn from_assignments(assignments: impl IntoIterator<Item = (PlayerId, Position)>) -> Self {
        let mut lineup = Lineup::new(assignments, Formation::observed(0, 0, 0));
        let c = lineup.position_counts();
        lineup.formation = Formation::observed(c[1] as u8, c[2] as u8, c[3] as u8);
        lineup
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn formation(&self) -> Formation {
        self.formation
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn position_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for s in &self.slots {
            c[s.position.index()] += 1;
        }
        c
    }

    pub fn contains(&self, player: &PlayerId) -> bool {
        self.slots.iter().any(|s| &s.player_id == player)
    }

    pub fn position_of(&self, player: &PlayerId) -> Option<Position> {
        self.slots.iter().find(|s| &s.player_id == player).map(|s| s.position)
    }

    pub fn players_at(&self, position: Position) -> impl Iterator<Item = &PlayerId> {
        self.slots
            .iter()
            .filter(move |s| s.position == position)
            .map(|s| &s.player_id)
    }

    pub fn player_ids(&self) -> BTreeSet<&PlayerId> {
        self.slots.iter().map(|s| &s.player_id).collect()
    }

    /// Replaces the player in slot `index` with `incoming` at the same position.
    pub fn with_swap(&self, index: usize, incoming: PlayerId) -> Lineup {
        let position = self.slots[index].position;
        let assignments = self.slots.iter().enumerate().map(|(i, s)| {
            if i == index {
                (incoming.clone(), position)
            } else {
                (s.player_id.clone(), s.position)
            }
        });
        Lineup::new(assignments, self.formation)
    }

    /// The binary membership tuple over the squad's player order.
    pub fn indicator(&self, squad: &Squad) -> Vec<u8> {
        let ids = self.player_ids();
        squad
            .players()
            .iter()
            .map(|p| u8::from(ids.contains(&p.player_id)))
            .collect()
    }
}

impl fmt::Display for Lineup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.formation)?;
        for s in &self.slots {
            write!(f, " {}({})", s.player_id, s.position.letter())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Cardinality {
        found: usize,
    },
    UnknownPlayer(PlayerId),
    Duplicate(PlayerId),
    Goalkeepers {
        found: usize,
    },
    FormationMismatch {
        position: Position,
        expected: usize,
        found: usize,
    },
    Ineligible {
        player: PlayerId,
        position: Position,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cardinality { found } => write!(f, "lineup has {found} players, expected 11"),
            Violation::UnknownPlayer(p) => write!(f, "player {p} is not in the squad"),
            Violation::Duplicate(p) => write!(f, "player {p} assigned more than once"),
            Violation::Goalkeepers { found } => write!(f, "{found} goalkeepers, expected 1"),
            Violation::FormationMismatch {
                position,
                expected,
                found,
            } => write!(f, "{found} at {position}, formation requires {expected}"),
            Violation::Ineligible { player, position } => {
                write!(f, "player {player} is not eligible at {position}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Squad {
    pub team_id: String,
    players: Vec<PlayerRecord>,
    pub as_of_date: NaiveDate,
}

impl Squad {
    pub fn new(team_id: impl Into<String>, mut players: Vec<PlayerRecord>, as_of_date: NaiveDate) -> Result<Self> {
        players.sort_by(|a, b| a.player_id.cmp(&b.player_id));
        if let Some(w) = players.windows(2).find(|w| w[0].player_id == w[1].player_id) {
            return Err(Error::Validation(format!(
                "duplicate player {} in squad",
                w[0].player_id
            )));
        }
        for p in &players {
            let gk = p.natural_position == Position::Goalkeeper;
            let ok = p.eligible_positions.contains(&p.natural_position)
                && if gk {
                    p.eligible_positions.len() == 1
                } else {
                    !p.eligible_positions.contains(&Position::Goalkeeper)
                };
            if !ok {
                return Err(Error::Validation(format!(
                    "player {} has inconsistent eligibility {:?}",
                    p.player_id, p.eligible_positions
                )));
            }
        }
        let squad = Squad {
            team_id: team_id.into(),
            players,
            as_of_date,
        };
        if squad.players.is_empty() {
            return Err(Error::Validation("empty squad".into()));
        }
        Ok(squad)
    }

    pub fn players(&self) -> &[PlayerRecord] {
        &self.players
    }

    pub fn player(&self, id: &PlayerId) -> Option<&PlayerRecord> {
        self.players
            .binary_search_by(|p| p.player_id.cmp(id))
            .ok()
            .map(|i| &self.players[i])
    }

    /// Adds `position` to a player's eligible set (outfield players only).
    pub fn grant_eligibility(&mut self, id: &PlayerId, position: Position) -> Result<()> {
        let i = self
            .players
            .binary_search_by(|p| p.player_id.cmp(id))
            .map_err(|_| Error::Validation(format!("player {id} is not in the squad")))?;
        let rec = &mut self.players[i];
        let gk_mismatch = (rec.natural_position == Position::Goalkeeper) != (position == Position::Goalkeeper);
        if gk_mismatch {
            return Err(Error::Validation(format!("cannot make {id} eligible at {position}")));
        }
        rec.eligible_positions.insert(position);
        Ok(())
    }

    /// Per-position counts of eligible players (a player may count twice).
    pub fn eligible_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for p in &self.players {
            for pos in &p.eligible_positions {
                c[pos.index()] += 1;
            }
        }
        c
    }

    pub fn is_feasible(&self, formation: Formation) -> bool {
        check_assignable(self.players.iter(), formation.counts()).is_ok()
    }

    pub fn feasible_formations(&self) -> Vec<Formation> {
        enumerate_formations()
            .into_iter()
            .filter(|f| self.is_feasible(*f))
            .collect()
    }

    pub fn validate_lineup(&self, lineup: &Lineup) -> Result<()> {
        let violations = self.lineup_violations(lineup);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLineup(violations))
        }
    }

    pub fn lineup_violations(&self, lineup: &Lineup) -> Vec<Violation> {
        let mut v = structural_violations(lineup);
        for s in lineup.slots() {
            match self.player(&s.player_id) {
                None => v.push(Violation::UnknownPlayer(s.player_id.clone())),
                Some(rec) if !rec.is_eligible(s.position) => v.push(Violation::Ineligible {
                    player: s.player_id.clone(),
                    position: s.position,
                }),
                Some(_) => {}
            }
        }
        v
    }
}

/// Squad-independent checks: cardinality, one goalkeeper, counts matching
/// the formation, no repeated player.
pub fn structural_violations(lineup: &Lineup) -> Vec<Violation> {
    let mut v = Vec::new();
    if lineup.len() != 11 {
        v.push(Violation::Cardinality { found: lineup.len() });
    }
    let mut seen = BTreeMap::new();
    for s in lineup.slots() {
        *seen.entry(&s.player_id).or_insert(0usize) += 1;
    }
    for (p, n) in seen {
        if n > 1 {
            v.push(Violation::Duplicate(p.clone()));
        }
    }
    let counts = lineup.position_counts();
    if counts[0] != 1 {
        v.push(Violation::Goalkeepers { found: counts[0] });
    }
    for p in Position::OUTFIELD {
        let expected = lineup.formation().count(p);
        if counts[p.index()] != expected {
            v.push(Violation::FormationMismatch {
                position: p,
                expected,
                found: counts[p.index()],
            });
        }
    }
    v
}

/// Checks that `players` can fill `needs` slots per position, each player
/// used at most once and only where eligible.
///
/// With four positions, Hall's condition over all position subsets is
/// necessary and sufficient. On failure, returns the first position of the
/// smallest violating subset.
pub fn check_assignable<'a>(
    players: impl IntoIterator<Item = &'a PlayerRecord>,
    needs: [usize; 4],
) -> std::result::Result<(), Position> {
    let masks: Vec<u8> = players
        .into_iter()
        .map(|p| p.eligible_positions.iter().fold(0u8, |m, pos| m | (1 << pos.index())))
        .collect();
    check_assignable_masks(&masks, needs)
}

pub(crate) fn check_assignable_masks(masks: &[u8], needs: [usize; 4]) -> std::result::Result<(), Position> {
    let mut subsets: Vec<u8> = (1u8..16).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    for subset in subsets {
        let demand: usize = (0..4).filter(|i| subset & (1 << i) != 0).map(|i| needs[i]).sum();
        if demand == 0 {
            continue;
        }
        let supply = masks.iter().filter(|m| *m & subset != 0).count();
        if supply < demand {
            let first = subset.trailing_zeros() as usize;
            return Err(Position::ALL[first]);
        }
    }
    Ok(())
}
