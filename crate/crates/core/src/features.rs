//! Feature universe and design matrix for one reference team.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::{Lineup, PlayerId, Position};
use crate::error::{Error, Result};
use crate::ingestion::{Outcome, TeamView};
use crate::skills::{
    lineup_strengths, AggregationMode, SkillResolver, StrengthVector, FORCED_STRENGTHS, STRENGTH_NAMES,
};

pub const DEFAULT_MIN_MATCHES: usize = 30;

/// A player at a position, the unit fixed and pair effects are keyed by.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Combo {
    pub player_id: PlayerId,
    pub position: Position,
}

impl Combo {
    pub fn new(player_id: PlayerId, position: Position) -> Self {
        Combo { player_id, position }
    }

    fn label(&self) -> String {
        format!("{}({})", self.player_id, self.position.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Home,
    StrengthOwn {
        measure: usize,
    },
    StrengthOpp {
        measure: usize,
    },
    FixedEffect {
        combo: Combo,
    },
    PairEffect {
        first: Combo,
        second: Combo,
    },
    /// Group-average plus-minus rating; only used by comparison models.
    RatingOwn {
        position: Position,
    },
    RatingOpp {
        position: Position,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    pub forced: bool,
}

impl Feature {
    pub fn is_binary(&self) -> bool {
        matches!(
            self.kind,
            FeatureKind::Home | FeatureKind::FixedEffect { .. } | FeatureKind::PairEffect { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub team_id: String,
    pub features: Vec<Feature>,
}

/// Home dummy plus own and opponent strength measures; the core shared by
/// every spec.
fn base_features() -> Vec<Feature> {
    let mut f = vec![Feature {
        name: "home".into(),
        kind: FeatureKind::Home,
        forced: false,
    }];
    for (side, own) in [("own", true), ("opp", false)] {
        for (k, n) in STRENGTH_NAMES.iter().enumerate() {
            f.push(Feature {
                name: format!("{side}_{n}"),
                kind: if own {
                    FeatureKind::StrengthOwn { measure: k }
                } else {
                    FeatureKind::StrengthOpp { measure: k }
                },
                forced: FORCED_STRENGTHS.contains(&k),
            });
        }
    }
    f
}

impl FeatureSpec {
    /// Home plus the twenty strength measures, without player effects.
    pub fn strengths_only(team_id: impl Into<String>) -> Self {
        FeatureSpec {
            team_id: team_id.into(),
            features: base_features(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn forced_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.features[j].forced).collect()
    }

    pub fn fixed_effect_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| matches!(f.kind, FeatureKind::FixedEffect { .. }))
            .count()
    }

    pub fn pair_effect_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| matches!(f.kind, FeatureKind::PairEffect { .. }))
            .count()
    }

    /// Restricts the spec to the named columns, keeping spec order.
    pub fn subset(&self, keep: &BTreeSet<usize>) -> FeatureSpec {
        FeatureSpec {
            team_id: self.team_id.clone(),
            features: keep.iter().map(|&j| self.features[j].clone()).collect(),
        }
    }

    pub fn needs_ratings(&self) -> bool {
        self.features
            .iter()
            .any(|f| matches!(f.kind, FeatureKind::RatingOwn { .. } | FeatureKind::RatingOpp { .. }))
    }

    /// One design row. Fixed/pair columns read the reference lineup only;
    /// rating columns cannot be computed here and come out NaN.
    pub fn row(&self, home: bool, own: &StrengthVector, opp: &StrengthVector, own_lineup: &Lineup) -> Vec<f64> {
        let combos: BTreeSet<Combo> = own_lineup
            .slots()
            .iter()
            .map(|s| Combo::new(s.player_id.clone(), s.position))
            .collect();
        self.features
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Home => f64::from(u8::from(home)),
                FeatureKind::StrengthOwn { measure } => own.values[*measure],
                FeatureKind::StrengthOpp { measure } => opp.values[*measure],
                FeatureKind::FixedEffect { combo } => f64::from(u8::from(combos.contains(combo))),
                FeatureKind::PairEffect { first, second } => {
                    f64::from(u8::from(combos.contains(first) && combos.contains(second)))
                }
                FeatureKind::RatingOwn { .. } | FeatureKind::RatingOpp { .. } => f64::NAN,
            })
            .collect()
    }
}

fn combos_of(lineup: &Lineup) -> Vec<Combo> {
    lineup
        .slots()
        .iter()
        .map(|s| Combo::new(s.player_id.clone(), s.position))
        .collect()
}

/// Home, the twenty strengths, and every fixed/pair effect seen in at least
/// `min_matches` of the team's training lineups.
pub fn build_feature_spec<'a>(
    team_id: &str,
    matches: impl IntoIterator<Item = TeamView<'a>>,
    min_matches: usize,
) -> FeatureSpec {
    let mut singles: BTreeMap<Combo, usize> = BTreeMap::new();
    let mut pairs: BTreeMap<(Combo, Combo), usize> = BTreeMap::new();
    for v in matches {
        let mut c = combos_of(v.own_lineup());
        c.sort_by(|a, b| (&a.player_id, a.position).cmp(&(&b.player_id, b.position)));
        for (i, a) in c.iter().enumerate() {
            *singles.entry(a.clone()).or_default() += 1;
            for b in &c[i + 1..] {
                *pairs.entry((a.clone(), b.clone())).or_default() += 1;
            }
        }
    }
    let mut features = base_features();
    let mut fixed: Vec<&Combo> = singles
        .iter()
        .filter(|(_, n)| **n >= min_matches)
        .map(|(c, _)| c)
        .collect();
    fixed.sort_by(|a, b| (&a.player_id, a.position).cmp(&(&b.player_id, b.position)));
    for c in fixed {
        features.push(Feature {
            name: format!("fe:{}", c.label()),
            kind: FeatureKind::FixedEffect { combo: c.clone() },
            forced: false,
        });
    }
    for ((a, b), n) in &pairs {
        if *n >= min_matches {
            features.push(Feature {
                name: format!("pair:{}:{}", a.label(), b.label()),
                kind: FeatureKind::PairEffect {
                    first: a.clone(),
                    second: b.clone(),
                },
                forced: false,
            });
        }
    }
    FeatureSpec {
        team_id: team_id.to_owned(),
        features,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub match_id: String,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    /// n × m, one row per match.
    pub x: DMatrix<f64>,
    pub y: Vec<Outcome>,
    pub rows: Vec<RowMeta>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            names: self.names.clone(),
            x: self.x.select_rows(idx.iter()),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            x: self.x.select_columns(idx.iter()),
            y: self.y.clone(),
            rows: self.rows.clone(),
        }
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>], y: Vec<Outcome>) -> Result<Self> {
        let m = names.len();
        if rows.len() != y.len() || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Contract("row/outcome dimensions disagree".into()));
        }
        let x = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        let meta = (0..rows.len())
            .map(|i| RowMeta {
                match_id: i.to_string(),
                date: NaiveDate::MIN,
            })
            .collect();
        Ok(DesignMatrix {
            names,
            x,
            y,
            rows: meta,
        })
    }
}

/// Strength vectors for both sides of a team view.
pub fn view_strengths(
    view: &TeamView<'_>,
    resolver: &SkillResolver<'_>,
    mode: AggregationMode,
) -> Result<(StrengthVector, StrengthVector)> {
    let date = view.record.date;
    let own = lineup_strengths(view.own_lineup(), |p| resolver.player_skills(p, date), mode)?;
    let opp = lineup_strengths(view.opponent_lineup(), |p| resolver.player_skills(p, date), mode)?;
    Ok((own, opp))
}

pub fn build_design_matrix<'a>(
    spec: &FeatureSpec,
    matches: impl IntoIterator<Item = TeamView<'a>>,
    resolver: &SkillResolver<'_>,
    mode: AggregationMode,
) -> Result<DesignMatrix> {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut meta = Vec::new();
    for v in matches {
        let (own, opp) = view_strengths(&v, resolver, mode)
            .map_err(|e| Error::Validation(format!("match {} ({}): {e}", v.record.match_id, v.record.date)))?;
        rows.push(spec.row(v.home, &own, &opp, v.own_lineup()));
        y.push(v.outcome());
        meta.push(RowMeta {
            match_id: v.record.match_id.clone(),
            date: v.record.date,
        });
    }
    let m = spec.len();
    let x = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
    Ok(DesignMatrix {
        names: spec.names().map(String::from).collect(),
        x,
        y,
        rows: meta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StandardizeOptions {
    pub include_forced: bool,
    pub include_binary: bool,
}

/// Per-column affine transform `z = (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Constant columns; left untouched and excluded from penalization.
    pub flagged: Vec<usize>,
}

impl Standardization {
    pub fn identity(m: usize) -> Self {
        Standardization {
            center: vec![0.0; m],
            scale: vec![1.0; m],
            flagged: Vec::new(),
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - self.center[j]) / self.scale[j]
        })
    }

    pub fn invert(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * self.scale[j] + self.center[j])
    }

    /// Maps (intercept, slopes) fitted on the standardized scale back to the
    /// raw scale.
    pub fn coefficients_to_raw(&self, intercept: f64, slopes: &[f64]) -> (f64, Vec<f64>) {
        let raw: Vec<f64> = slopes.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let shift: f64 = raw.iter().zip(&self.center).map(|(b, c)| b * c).sum();
        (intercept - shift, raw)
    }
}

fn is_binary_column(x: &DMatrix<f64>, j: usize) -> bool {
    x.column(j).iter().all(|v| *v == 0.0 || *v == 1.0)
}

fn is_constant_column(x: &DMatrix<f64>, j: usize) -> bool {
    let col = x.column(j);
    match col.iter().next() {
        None => true,
        Some(first) => col.iter().all(|v| v == first),
    }
}

/// Centers and scales to unit (population) variance the penalized
/// non-binary columns; `forced` marks columns exempt from penalization.
pub fn standardize_columns(
    matrix: &DesignMatrix,
    forced: &[bool],
    opts: StandardizeOptions,
) -> (DesignMatrix, Standardization) {
    let (n, m) = (matrix.n_rows(), matrix.n_cols());
    let mut st = Standardization::identity(m);
    for j in 0..m {
        if is_constant_column(&matrix.x, j) {
            st.flagged.push(j);
            continue;
        }
        let binary = is_binary_column(&matrix.x, j);
        if (forced[j] && !opts.include_forced) || (binary && !opts.include_binary) {
            continue;
        }
        let col = matrix.x.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        st.center[j] = mean;
        st.scale[j] = var.sqrt();
    }
    let out = DesignMatrix {
        x: st.apply(&matrix.x),
        ..matrix.clone()
    };
    (out, st)
}
