//! One-step-ahead demand forecasting.
//!
//! Every model implements [`OneStepForecaster`]; [`walk_forward`] drives a
//! model over the held-out tail of a series and [`grid_search`] ranks a set
//! of [`ModelSpec`]s by RMSE.

pub mod arima;
pub mod baseline;
pub mod ets;
pub mod mlp;
mod neldermead;
pub mod presets;
mod search;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arima::{fit_arima, forecast_arima, ArimaModel, ArimaTrend};
pub use baseline::{predict_ma, predict_mm, predict_naive};
pub use ets::{fit_ets, EtsModel, EtsParams, EtsTrend};
pub use mlp::{fit_mlp, MlpConfig, MlpModel};
pub use search::{
    check_series_len, grid_search, select_model, walk_forward, FailedSpec, GridOutcome, MIN_SERIES_LEN,
};

/// Model family, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Naive,
    MA,
    MM,
    ARIMA,
    ETS,
    MLP,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Kind-specific hyperparameters. Serialized as `{"kind": .., "params": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum ModelParams {
    Naive {
        offset: usize,
    },
    #[serde(rename = "MA")]
    MovingAverage {
        window: usize,
    },
    #[serde(rename = "MM")]
    MovingMedian {
        window: usize,
    },
    #[serde(rename = "ARIMA")]
    Arima {
        p: usize,
        d: usize,
        q: usize,
        trend: ArimaTrend,
    },
    #[serde(rename = "ETS")]
    Ets {
        trend: EtsTrend,
        damped: bool,
    },
    #[serde(rename = "MLP")]
    Mlp {
        n_inputs: usize,
        n_nodes: usize,
        epochs: usize,
        batch_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub model: ModelParams,
    /// Only the MLP consumes randomness.
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(model: ModelParams) -> Self {
        ModelSpec { model, seed: 0 }
    }

    pub fn naive(offset: usize) -> Self {
        Self::new(ModelParams::Naive { offset })
    }

    pub fn ma(window: usize) -> Self {
        Self::new(ModelParams::MovingAverage { window })
    }

    pub fn mm(window: usize) -> Self {
        Self::new(ModelParams::MovingMedian { window })
    }

    pub fn arima(p: usize, d: usize, q: usize, trend: ArimaTrend) -> Self {
        Self::new(ModelParams::Arima { p, d, q, trend })
    }

    pub fn ets(trend: EtsTrend, damped: bool) -> Self {
        Self::new(ModelParams::Ets { trend, damped })
    }

    pub fn mlp(n_inputs: usize, n_nodes: usize, epochs: usize, batch_size: usize, seed: u64) -> Self {
        ModelSpec {
            model: ModelParams::Mlp {
                n_inputs,
                n_nodes,
                epochs,
                batch_size,
            },
            seed,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            ModelParams::Naive { .. } => ModelKind::Naive,
            ModelParams::MovingAverage { .. } => ModelKind::MA,
            ModelParams::MovingMedian { .. } => ModelKind::MM,
            ModelParams::Arima { .. } => ModelKind::ARIMA,
            ModelParams::Ets { .. } => ModelKind::ETS,
            ModelParams::Mlp { .. } => ModelKind::MLP,
        }
    }

    /// Canonical JSON of the params object, used for display and tie-breaks.
    pub fn params_key(&self) -> String {
        serde_json::to_value(&self.model)
            .ok()
            .and_then(|v| v.get("params").map(|p| p.to_string()))
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelParams::Naive { offset: w }
            | ModelParams::MovingAverage { window: w }
            | ModelParams::MovingMedian { window: w } => {
                if *w == 0 {
                    return Err(Error::invalid(format!("{}: window/offset must be >= 1", self.kind())));
                }
            }
            ModelParams::Arima { .. } | ModelParams::Ets { .. } => {}
            ModelParams::Mlp {
                n_inputs,
                n_nodes,
                epochs,
                batch_size,
            } => {
                if *n_inputs == 0 || *n_nodes == 0 || *epochs == 0 || *batch_size == 0 {
                    return Err(Error::invalid("MLP: inputs, nodes, epochs and batch size must be >= 1"));
                }
            }
        }
        Ok(())
    }

    /// A fresh, unfitted forecaster for this spec.
    pub fn build(&self) -> Result<Box<dyn OneStepForecaster>> {
        self.validate()?;
        Ok(match &self.model {
            ModelParams::Naive { offset } => Box::new(baseline::Naive { offset: *offset }),
            ModelParams::MovingAverage { window } => Box::new(baseline::MovingAverage { window: *window }),
            ModelParams::MovingMedian { window } => Box::new(baseline::MovingMedian { window: *window }),
            ModelParams::Arima { p, d, q, trend } => {
                Box::new(arima::ArimaForecaster::new(*p, *d, *q, *trend))
            }
            ModelParams::Ets { trend, damped } => Box::new(ets::EtsForecaster::new(*trend, *damped)),
            ModelParams::Mlp {
                n_inputs,
                n_nodes,
                epochs,
                batch_size,
            } => Box::new(mlp::MlpForecaster::new(MlpConfig {
                n_inputs: *n_inputs,
                n_nodes: *n_nodes,
                epochs: *epochs,
                batch_size: *batch_size,
                seed: self.seed,
                ..MlpConfig::default()
            })),
        })
    }

    /// Deterministic ordering used to break RMSE ties.
    pub fn tie_break_cmp(&self, other: &Self) -> Ordering {
        self.kind()
            .cmp(&other.kind())
            .then_with(|| self.params_key().cmp(&other.params_key()))
            .then_with(|| self.seed.cmp(&other.seed))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind(), self.params_key())
    }
}

/// A model that can be evaluated by one-step walk-forward validation.
pub trait OneStepForecaster {
    /// Called once with the training prefix before any prediction.
    fn fit(&mut self, train: &[f64]) -> Result<()>;

    /// Predicts the value that follows `history`. `history` always extends
    /// the previous call's history by exactly the newly observed values, and
    /// starts with the training prefix.
    fn predict_next(&mut self, history: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.66 }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    pub fn train_len(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub spec: ModelSpec,
    pub rmse: f64,
    pub train_len: usize,
    pub test_len: usize,
    /// One prediction per test index, aligned with `series[train_len..]`.
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

/// Root mean squared error between equally long, non-empty sequences.
pub fn rmse(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::invalid("rmse of empty sequences"));
    }
    if observed.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "rmse length mismatch: {} observed vs {} predicted",
            observed.len(),
            predicted.len()
        )));
    }
    let sse: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(f, g)| (f - g) * (f - g))
        .sum();
    Ok((sse / observed.len() as f64).sqrt())
}
