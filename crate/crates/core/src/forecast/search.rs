use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PrbSeries;

use super::{rmse, FitReport, ModelSpec, SplitConfig};

/// Shortest series the command-line pipeline and the control loop accept.
/// The library functions themselves only need non-empty train and test
/// segments.
pub const MIN_SERIES_LEN: usize = 20;

pub fn check_series_len(series: &PrbSeries) -> Result<()> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::InsufficientHistory {
            needed: MIN_SERIES_LEN,
            available: series.len(),
        });
    }
    Ok(())
}

/// One-step walk-forward validation.
///
/// The first `floor(train_fraction * n)` values train the model; each test
/// index `i` is then predicted from `series[..i]`.
pub fn walk_forward(series: &PrbSeries, spec: &ModelSpec, split: SplitConfig) -> Result<FitReport> {
    split.validate()?;
    let values = &series.values;
    let n = values.len();
    let train_len = split.train_len(n);
    if train_len == 0 || train_len == n {
        return Err(Error::invalid(format!(
            "split {} leaves an empty train or test segment for {n} values",
            split.train_fraction
        )));
    }

    let mut model = spec.build()?;
    model.fit(&values[..train_len])?;
    let mut predictions = Vec::with_capacity(n - train_len);
    for i in train_len..n {
        let p = model.predict_next(&values[..i])?;
        if !p.is_finite() {
            return Err(Error::Numerical(format!("{spec} produced a non-finite prediction at index {i}")));
        }
        predictions.push(p);
    }
    let rmse = rmse(&values[train_len..], &predictions)?;
    Ok(FitReport {
        spec: spec.clone(),
        rmse,
        train_len,
        test_len: n - train_len,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSpec {
    pub spec: ModelSpec,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    /// Ascending RMSE, ties broken by kind then params.
    pub ranked: Vec<FitReport>,
    pub failures: Vec<FailedSpec>,
}

/// Evaluates every spec. Specs that error are reported, not fatal.
pub fn grid_search(series: &PrbSeries, grid: &[ModelSpec], split: SplitConfig) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::invalid("model grid is empty"));
    }
    split.validate()?;
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for spec in grid {
        match walk_forward(series, spec, split) {
            Ok(report) => ranked.push(report),
            Err(e) => failures.push(FailedSpec {
                spec: spec.clone(),
                reason: e.to_string(),
            }),
        }
    }
    ranked.sort_by(|a, b| a.rmse.total_cmp(&b.rmse).then_with(|| a.spec.tie_break_cmp(&b.spec)));
    failures.sort_by(|a, b| a.spec.tie_break_cmp(&b.spec));
    Ok(GridOutcome { ranked, failures })
}

pub fn select_model(ranked: &[FitReport]) -> Result<ModelSpec> {
    ranked
        .first()
        .map(|r| r.spec.clone())
        .ok_or_else(|| Error::invalid("no successful model to select"))
}
