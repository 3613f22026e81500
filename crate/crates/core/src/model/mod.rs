//! Penalized three-outcome logit: likelihood, L1 path, penalty selection,
//! refit, and the fitted-model artifact.

pub mod lasso;
pub mod likelihood;
pub mod refit;
pub mod select;

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use lasso::{fit_lasso_path, ColumnRole, LassoPath, PathConfig, PathPoint};
pub use likelihood::{gradient, hessian, neg_log_likelihood, predict_probs, probs_from_eta, Coefficients, Probs};
pub use refit::{aic, refit_mle, sup_log_likelihood, RefitResult};
pub use select::{choose_lambda, select_lambda, CvConfig, Selection};

use crate::domain::Lineup;
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureKind, FeatureSpec};
use crate::skills::{AggregationMode, StrengthVector, WeightSet};

pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingWindow {
    pub from: Option<NaiveDate>,
    pub until: Option<NaiveDate>,
    pub n_matches: usize,
}

impl TrainingWindow {
    pub fn of(matrix: &DesignMatrix) -> Self {
        TrainingWindow {
            from: matrix.rows.iter().map(|r| r.date).min(),
            until: matrix.rows.iter().map(|r| r.date).max(),
            n_matches: matrix.n_rows(),
        }
    }
}

/// Metadata carried into a fitted model alongside the estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContext {
    pub lambda: Option<f64>,
    pub aggregation_mode: AggregationMode,
    pub weights: WeightSet,
    pub seed: u64,
}

impl Default for ModelContext {
    fn default() -> Self {
        ModelContext {
            lambda: None,
            aggregation_mode: AggregationMode::Mean,
            weights: WeightSet::published(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub version: String,
    pub team_id: String,
    /// Full candidate universe the model was selected from.
    pub spec: FeatureSpec,
    /// Indices into `spec`, ascending.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    /// Over the full spec; zero outside `selected`.
    pub coefficients: Coefficients,
    pub std_errors: Option<Coefficients>,
    pub lambda: Option<f64>,
    pub aggregation_mode: AggregationMode,
    pub weights: WeightSet,
    pub training_window: TrainingWindow,
    pub seed: u64,
    pub log_likelihood: f64,
    pub aic: f64,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// One named coefficient pair with standard errors, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub win: f64,
    pub loss: f64,
    pub win_se: Option<f64>,
    pub loss_se: Option<f64>,
}

impl FittedModel {
    /// A model with all coefficients zero; handy for wiring checks.
    pub fn zero(spec: FeatureSpec, ctx: ModelContext) -> Self {
        let m = spec.len();
        FittedModel {
            version: ARTIFACT_VERSION.into(),
            team_id: spec.team_id.clone(),
            selected: spec.forced_indices(),
            selected_names: spec
                .forced_indices()
                .iter()
                .map(|&j| spec.features[j].name.clone())
                .collect(),
            spec,
            coefficients: Coefficients::zeros(m),
            std_errors: None,
            lambda: ctx.lambda,
            aggregation_mode: ctx.aggregation_mode,
            weights: ctx.weights,
            training_window: TrainingWindow {
                from: None,
                until: None,
                n_matches: 0,
            },
            seed: ctx.seed,
            log_likelihood: 0.0,
            aic: 0.0,
            diagnostics: Vec::new(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<Probs> {
        predict_probs(&self.coefficients, row)
    }

    /// Probabilities for a concrete fixture.
    pub fn predict(
        &self,
        home: bool,
        own: &StrengthVector,
        opp: &StrengthVector,
        own_lineup: &Lineup,
    ) -> Result<Probs> {
        if self.spec.needs_ratings() {
            return Err(Error::Contract(
                "plus-minus comparison models do not predict from skills".into(),
            ));
        }
        if own.mode != self.aggregation_mode || opp.mode != self.aggregation_mode {
            return Err(Error::Contract(format!(
                "strengths aggregated by {:?}, model trained with {:?}",
                own.mode, self.aggregation_mode
            )));
        }
        self.predict_row(&self.spec.row(home, own, opp, own_lineup))
    }

    pub fn coefficient_table(&self) -> Vec<CoefficientRow> {
        let mut rows = vec![CoefficientRow {
            name: "(intercept)".into(),
            win: self.coefficients.win[0],
            loss: self.coefficients.loss[0],
            win_se: self.std_errors.as_ref().map(|s| s.win[0]),
            loss_se: self.std_errors.as_ref().map(|s| s.loss[0]),
        }];
        rows.extend(self.selected.iter().map(|&j| CoefficientRow {
            name: self.spec.features[j].name.clone(),
            win: self.coefficients.win[j + 1],
            loss: self.coefficients.loss[j + 1],
            win_se: self.std_errors.as_ref().map(|s| s.win[j + 1]),
            loss_se: self.std_errors.as_ref().map(|s| s.loss[j + 1]),
        }));
        rows
    }

    /// Home coefficients if the home dummy survived selection.
    pub fn home_effect(&self) -> Option<CoefficientRow> {
        let j = self.spec.features.iter().position(|f| f.kind == FeatureKind::Home)?;
        let name = &self.spec.features[j].name;
        self.coefficient_table().into_iter().find(|r| &r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: FittedModel = serde_json::from_str(s)?;
        if m.version != ARTIFACT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model artifact version {}",
                m.version
            )));
        }
        if m.coefficients.win.len() != m.spec.len() + 1 || m.coefficients.loss.len() != m.spec.len() + 1 {
            return Err(Error::Validation(
                "coefficient length does not match the feature spec".into(),
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Unpenalized refit of `selected` columns of `matrix` (raw scale) and
/// assembly of the model artifact.
pub fn refit_and_assess(
    matrix: &DesignMatrix,
    spec: &FeatureSpec,
    selected: &BTreeSet<usize>,
    ctx: &ModelContext,
) -> Result<FittedModel> {
    if matrix.n_cols() != spec.len() {
        return Err(Error::Contract("design matrix does not match the feature spec".into()));
    }
    if let Some(j) = spec.forced_indices().into_iter().find(|j| !selected.contains(j)) {
        return Err(Error::Contract(format!(
            "forced feature {} not selected",
            spec.features[j].name
        )));
    }
    if let Some(&j) = selected.iter().find(|&&j| j >= spec.len()) {
        return Err(Error::Contract(format!("selected index {j} out of range")));
    }
    let idx: Vec<usize> = selected.iter().copied().collect();
    let sub = matrix.select_columns(&idx);
    let r = refit_mle(&sub.x, &sub.y, &sub.names)?;
    let m = spec.len();
    let mut coefficients = Coefficients::zeros(m);
    let mut se = Coefficients::zeros(m);
    coefficients.win[0] = r.coefficients.win[0];
    coefficients.loss[0] = r.coefficients.loss[0];
    se.win[0] = r.std_errors.win[0];
    se.loss[0] = r.std_errors.loss[0];
    for (k, &j) in idx.iter().enumerate() {
        coefficients.win[j + 1] = r.coefficients.win[k + 1];
        coefficients.loss[j + 1] = r.coefficients.loss[k + 1];
        se.win[j + 1] = r.std_errors.win[k + 1];
        se.loss[j + 1] = r.std_errors.loss[k + 1];
    }
    Ok(FittedModel {
        version: ARTIFACT_VERSION.into(),
        team_id: spec.team_id.clone(),
        spec: spec.clone(),
        selected_names: idx.iter().map(|&j| spec.features[j].name.clone()).collect(),
        selected: idx,
        coefficients,
        std_errors: Some(se),
        lambda: ctx.lambda,
        aggregation_mode: ctx.aggregation_mode,
        weights: ctx.weights.clone(),
        training_window: TrainingWindow::of(matrix),
        seed: ctx.seed,
        log_likelihood: r.log_likelihood,
        aic: aic(r.log_likelihood, selected.len()),
        diagnostics: Vec::new(),
    })
}
