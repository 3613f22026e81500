//! Attribute weights, per-player skill scores, role eligibility and the ten
//! lineup strength measures.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{Lineup, PlayerId, PlayerRecord, Position};
use crate::error::{Error, Result};
use crate::ingestion::{
    attribute_names, AttributeSnapshot, DataStore, ATTACKING_ATTRIBUTES, DEFENSIVE_ATTRIBUTES, GENERAL_ATTRIBUTES,
    GOALKEEPING_ATTRIBUTES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillCategory {
    Goalkeeping,
    Defensive,
    Attacking,
    General,
}

impl SkillCategory {
    pub const ALL: [SkillCategory; 4] = [
        SkillCategory::Goalkeeping,
        SkillCategory::Defensive,
        SkillCategory::Attacking,
        SkillCategory::General,
    ];

    pub fn attributes(self) -> &'static [&'static str] {
        match self {
            SkillCategory::Goalkeeping => &GOALKEEPING_ATTRIBUTES,
            SkillCategory::Defensive => &DEFENSIVE_ATTRIBUTES,
            SkillCategory::Attacking => &ATTACKING_ATTRIBUTES,
            SkillCategory::General => &GENERAL_ATTRIBUTES,
        }
    }

    /// Offset of the category's first attribute in snapshot order.
    pub(crate) fn offset(self) -> usize {
        match self {
            SkillCategory::Goalkeeping => 0,
            SkillCategory::Defensive => 5,
            SkillCategory::Attacking => 9,
            SkillCategory::General => 18,
        }
    }
}

/// Per-attribute weights, grouped by skill category.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    /// Aligned with [`attribute_names`].
    weights: Vec<f64>,
}

/// JSON shape: `{"goalkeeping": {"gk_diving": 0.207, ...}, ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightDocument {
    pub goalkeeping: BTreeMap<String, f64>,
    pub defensive: BTreeMap<String, f64>,
    pub attacking: BTreeMap<String, f64>,
    pub general: BTreeMap<String, f64>,
}

/// Published weights are rounded to three decimals, so imported sets may
/// miss 1 by a few thousandths.
const IMPORT_SUM_TOLERANCE: f64 = 0.01;

impl WeightSet {
    pub fn from_category_weights(per_category: [&[f64]; 4]) -> Result<Self> {
        let mut weights = Vec::with_capacity(33);
        for (cat, w) in SkillCategory::ALL.iter().zip(per_category) {
            if w.len() != cat.attributes().len() {
                return Err(Error::Validation(format!(
                    "{cat:?} needs {} weights, got {}",
                    cat.attributes().len(),
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("non-finite weight in {cat:?}")));
            }
            weights.extend_from_slice(w);
        }
        Ok(WeightSet { weights })
    }

    /// Every attribute weighted equally within its category.
    pub fn equal() -> Self {
        let per: Vec<Vec<f64>> = SkillCategory::ALL
            .iter()
            .map(|c| vec![1.0 / c.attributes().len() as f64; c.attributes().len()])
            .collect();
        WeightSet::from_category_weights([&per[0], &per[1], &per[2], &per[3]]).expect("static sizes")
    }

    /// The published first-component loadings, three-decimal precision.
    pub fn published() -> Self {
        WeightSet::from_category_weights([
            &[0.207, 0.205, 0.178, 0.205, 0.204],
            &[0.237, 0.254, 0.256, 0.253],
            &[0.105, 0.127, 0.003, 0.132, 0.127, 0.123, 0.124, 0.139, 0.120],
            &[
                0.091, 0.070, 0.105, 0.084, 0.077, 0.093, 0.076, 0.074, 0.014, 0.057, -0.026, -0.000, 0.091, 0.093,
                0.103,
            ],
        ])
        .expect("static sizes")
    }

    pub fn category(&self, cat: SkillCategory) -> &[f64] {
        let start = cat.offset();
        &self.weights[start..start + cat.attributes().len()]
    }

    pub fn category_sum(&self, cat: SkillCategory) -> f64 {
        self.category(cat).iter().sum()
    }

    pub fn weight(&self, attribute: &str) -> Option<f64> {
        attribute_names().position(|n| n == attribute).map(|i| self.weights[i])
    }

    pub fn to_document(&self) -> WeightDocument {
        let map = |cat: SkillCategory| {
            cat.attributes()
                .iter()
                .zip(self.category(cat))
                .map(|(n, w)| (n.to_string(), *w))
                .collect()
        };
        WeightDocument {
            goalkeeping: map(SkillCategory::Goalkeeping),
            defensive: map(SkillCategory::Defensive),
            attacking: map(SkillCategory::Attacking),
            general: map(SkillCategory::General),
        }
    }

    pub fn from_document(doc: &WeightDocument) -> Result<Self> {
        let mut per = Vec::new();
        for (cat, map) in
            SkillCategory::ALL
                .iter()
                .zip([&doc.goalkeeping, &doc.defensive, &doc.attacking, &doc.general])
        {
            let attrs = cat.attributes();
            if map.len() != attrs.len() {
                return Err(Error::Validation(format!(
                    "{cat:?} lists {} attributes, expected {}",
                    map.len(),
                    attrs.len()
                )));
            }
            let w: Vec<f64> = attrs
                .iter()
                .map(|a| {
                    map.get(*a)
                        .copied()
                        .ok_or_else(|| Error::Validation(format!("{cat:?} weights lack `{a}`")))
                })
                .collect::<Result<_>>()?;
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > IMPORT_SUM_TOLERANCE {
                return Err(Error::Validation(format!("{cat:?} weights sum to {sum}")));
            }
            per.push(w);
        }
        WeightSet::from_category_weights([&per[0], &per[1], &per[2], &per[3]])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        WeightSet::from_document(&serde_json::from_str(s)?)
    }
}

impl Serialize for WeightSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = WeightDocument::deserialize(d)?;
        WeightSet::from_document(&doc).map_err(serde::de::Error::custom)
    }
}

/// Result of a first-principal-component analysis of one attribute block.
#[derive(Debug, Clone)]
pub struct LeadingComponent {
    pub eigenvalue: f64,
    /// Unit-norm loadings after sign fixing.
    pub loadings: Vec<f64>,
    /// Loadings rescaled to sum to one.
    pub weights: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
}

/// Pearson correlation matrix of the columns of `rows`.
pub fn correlation_matrix(rows: &[Vec<f64>], names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let p = names.len();
    let n = rows.len();
    if n < 2 {
        return Err(Error::Contract(format!("correlation needs at least 2 rows, got {n}")));
    }
    let mean: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for r in rows {
        for a in 0..p {
            let da = r[a] - mean[a];
            for b in a..p {
                cov[a][b] += da * (r[b] - mean[b]);
            }
        }
    }
    let sd: Vec<f64> = (0..p).map(|j| cov[j][j].sqrt()).collect();
    for (j, s) in sd.iter().enumerate() {
        if *s <= 1e-12 * (1.0 + mean[j].abs()) * (n as f64).sqrt() {
            return Err(Error::Degenerate(names[j].to_owned()));
        }
    }
    let mut corr = vec![vec![0.0; p]; p];
    for a in 0..p {
        corr[a][a] = 1.0;
        for b in a + 1..p {
            let c = cov[a][b] / (sd[a] * sd[b]);
            corr[a][b] = c;
            corr[b][a] = c;
        }
    }
    Ok(corr)
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and column eigenvectors (`vecs[i][k]` is
/// component `i` of eigenvector `k`).
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Flips `v` so that most entries are positive (ties: positive sum).
pub fn fix_sign(v: &mut [f64]) {
    let pos = v.iter().filter(|x| **x > 0.0).count();
    let neg = v.iter().filter(|x| **x < 0.0).count();
    if neg > pos || (neg == pos && v.iter().sum::<f64>() < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// First principal component of the correlation matrix of `rows`,
/// sign-fixed and rescaled to sum to one.
pub fn leading_component(rows: &[Vec<f64>], names: &[&str]) -> Result<LeadingComponent> {
    let correlation = correlation_matrix(rows, names)?;
    let (vals, vecs) = jacobi_eigen(&correlation);
    let k = (0..vals.len())
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::Contract("empty attribute block".into()))?;
    let mut loadings: Vec<f64> = vecs.iter().map(|row| row[k]).collect();
    let norm = loadings.iter().map(|x| x * x).sum::<f64>().sqrt();
    loadings.iter_mut().for_each(|x| *x /= norm);
    fix_sign(&mut loadings);
    let sum: f64 = loadings.iter().sum();
    if sum.abs() < 1e-12 {
        return Err(Error::Numerical("leading loadings sum to zero; cannot rescale".into()));
    }
    let weights = loadings.iter().map(|x| x / sum).collect();
    Ok(LeadingComponent {
        eigenvalue: vals[k],
        loadings,
        weights,
        correlation,
    })
}

/// PCA weights per category over all snapshots.
pub fn compute_pca_weights<'a>(snapshots: impl IntoIterator<Item = &'a AttributeSnapshot>) -> Result<WeightSet> {
    let snaps: Vec<&AttributeSnapshot> = snapshots.into_iter().collect();
    let mut per = Vec::new();
    for cat in SkillCategory::ALL {
        let names = cat.attributes();
        let off = cat.offset();
        let rows: Vec<Vec<f64>> = snaps
            .iter()
            .map(|s| s.ratings[off..off + names.len()].to_vec())
            .collect();
        per.push(leading_component(&rows, names)?.weights);
    }
    WeightSet::from_category_weights([&per[0], &per[1], &per[2], &per[3]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillVector {
    pub goalkeeping: f64,
    pub defensive: f64,
    pub attacking: f64,
    pub general: f64,
}

impl SkillVector {
    pub fn new(goalkeeping: f64, defensive: f64, attacking: f64, general: f64) -> Self {
        SkillVector {
            goalkeeping,
            defensive,
            attacking,
            general,
        }
    }

    pub fn get(&self, cat: SkillCategory) -> f64 {
        match cat {
            SkillCategory::Goalkeeping => self.goalkeeping,
            SkillCategory::Defensive => self.defensive,
            SkillCategory::Attacking => self.attacking,
            SkillCategory::General => self.general,
        }
    }

    /// The skill a position is judged by when ranking players.
    pub fn for_position(&self, position: Position) -> f64 {
        match position {
            Position::Goalkeeper => self.goalkeeping,
            Position::Defender => self.defensive,
            Position::Midfielder => self.general,
            Position::Forward => self.attacking,
        }
    }
}

pub fn skills_from_snapshot(snapshot: &AttributeSnapshot, weights: &WeightSet) -> SkillVector {
    let score = |cat: SkillCategory| {
        let off = cat.offset();
        weights
            .category(cat)
            .iter()
            .zip(&snapshot.ratings[off..])
            .map(|(w, r)| w * r)
            .sum()
    };
    SkillVector {
        goalkeeping: score(SkillCategory::Goalkeeping),
        defensive: score(SkillCategory::Defensive),
        attacking: score(SkillCategory::Attacking),
        general: score(SkillCategory::General),
    }
}

/// Resolves players to skill vectors at a date.
#[derive(Debug, Clone, Copy)]
pub struct SkillResolver<'a> {
    pub store: &'a DataStore,
    pub weights: &'a WeightSet,
}

impl<'a> SkillResolver<'a> {
    pub fn new(store: &'a DataStore, weights: &'a WeightSet) -> Self {
        SkillResolver { store, weights }
    }

    pub fn player_skills(&self, player: &PlayerId, date: NaiveDate) -> Result<SkillVector> {
        let as_of = self.store.attribute_as_of(player, date)?;
        Ok(skills_from_snapshot(as_of.snapshot, self.weights))
    }

    pub fn table<'p>(&self, players: impl IntoIterator<Item = &'p PlayerId>, date: NaiveDate) -> Result<SkillTable> {
        let mut t = SkillTable::default();
        for p in players {
            t.0.insert(p.clone(), self.player_skills(p, date)?);
        }
        Ok(t)
    }
}

/// Skill vectors keyed by player, typically resolved for one match date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkillTable(pub BTreeMap<PlayerId, SkillVector>);

impl SkillTable {
    pub fn get(&self, p: &PlayerId) -> Result<SkillVector> {
        self.0.get(p).copied().ok_or_else(|| Error::MissingData(p.clone()))
    }

    pub fn insert(&mut self, p: PlayerId, s: SkillVector) {
        self.0.insert(p, s);
    }
}

/// Natural position plus any outfield role where the player's matching
/// skill strictly beats both of his other outfield skills.
pub fn eligible_positions(player: &PlayerRecord, skills: &SkillVector) -> BTreeSet<Position> {
    let mut set = BTreeSet::from([player.natural_position]);
    if player.natural_position == Position::Goalkeeper {
        return set;
    }
    let (d, a, g) = (skills.defensive, skills.attacking, skills.general);
    if d > a && d > g {
        set.insert(Position::Defender);
    }
    if g > d && g > a {
        set.insert(Position::Midfielder);
    }
    if a > d && a > g {
        set.insert(Position::Forward);
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    Sum,
    #[default]
    Mean,
}

pub const STRENGTH_NAMES: [&str; 10] = [
    "gk_goalkeeping",
    "def_defensive",
    "def_attacking",
    "def_general",
    "mid_defensive",
    "mid_attacking",
    "mid_general",
    "fwd_defensive",
    "fwd_attacking",
    "fwd_general",
];

/// Indices into [`StrengthVector::values`] of the four measures that every
/// model must keep.
pub const FORCED_STRENGTHS: [usize; 4] = [0, 1, 6, 8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthVector {
    pub values: [f64; 10],
    pub mode: AggregationMode,
}

/// The ten group measures of a lineup. Under mean aggregation an empty
/// outfield group (only possible in recorded non-standard shapes) scores 0.
pub fn lineup_strengths(
    lineup: &Lineup,
    mut skills: impl FnMut(&PlayerId) -> Result<SkillVector>,
    mode: AggregationMode,
) -> Result<StrengthVector> {
    let mut sums = [[0.0f64; 3]; 4];
    let mut counts = [0usize; 4];
    let mut gk = 0.0;
    for slot in lineup.slots() {
        let s = skills(&slot.player_id)?;
        let g = slot.position.index();
        counts[g] += 1;
        if slot.position == Position::Goalkeeper {
            gk += s.goalkeeping;
        } else {
            sums[g][0] += s.defensive;
            sums[g][1] += s.attacking;
            sums[g][2] += s.general;
        }
    }
    let agg = |sum: f64, n: usize| match mode {
        AggregationMode::Sum => sum,
        AggregationMode::Mean if n == 0 => 0.0,
        AggregationMode::Mean => sum / n as f64,
    };
    let mut values = [0.0; 10];
    values[0] = agg(gk, counts[0]);
    for g in 1..4 {
        for k in 0..3 {
            values[1 + (g - 1) * 3 + k] = agg(sums[g][k], counts[g]);
        }
    }
    Ok(StrengthVector { values, mode })
}
