//! Holt-family exponential smoothing (no seasonal component).
//!
//! Recursions, with damping `phi` (1 when undamped):
//!
//! ```text
//! none:  l_t = a*y_t + (1-a)*l_{t-1}                     yhat = l
//! add:   l_t = a*y_t + (1-a)*(l_{t-1} + phi*b_{t-1})     yhat = l + phi*b
//!        b_t = b*(l_t - l_{t-1}) + (1-b)*phi*b_{t-1}
//! mul:   l_t = a*y_t + (1-a)*l_{t-1}*b_{t-1}^phi         yhat = l * b^phi
//!        b_t = b*(l_t / l_{t-1}) + (1-b)*b_{t-1}^phi
//! ```
//!
//! The level starts at the first observation; trended models take their
//! initial slope (or growth factor) from the first two observations. Smoothing
//! parameters are chosen by exhaustive search over a fixed grid minimizing the
//! in-sample one-step SSE. Because every grid point's SSE is a running sum,
//! [`EtsGridFitter`] keeps all candidates alive and can absorb new data points
//! incrementally; the argmin after absorbing `y[..n]` is exactly what a fresh
//! fit on `y[..n]` would return.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::OneStepForecaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtsTrend {
    #[serde(rename = "none", alias = "None")]
    None,
    #[serde(rename = "add", alias = "additive")]
    Additive,
    #[serde(rename = "mul", alias = "multiplicative")]
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsParams {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

/// `0.01, 0.03, ..., 0.99`
fn smoothing_grid() -> impl Iterator<Item = f64> + Clone {
    (0..50).map(|k| (1 + 2 * k) as f64 / 100.0)
}

/// `0.80, 0.82, ..., 0.98`
fn damping_grid() -> impl Iterator<Item = f64> + Clone {
    (0..10).map(|k| (80 + 2 * k) as f64 / 100.0)
}

pub fn parameter_grid(trend: EtsTrend, damped: bool) -> Vec<EtsParams> {
    let phis: Vec<f64> = if damped && trend != EtsTrend::None {
        damping_grid().collect()
    } else {
        vec![1.0]
    };
    let betas: Vec<f64> = if trend == EtsTrend::None {
        vec![0.0]
    } else {
        smoothing_grid().collect()
    };
    let mut grid = Vec::with_capacity(50 * betas.len() * phis.len());
    for alpha in smoothing_grid() {
        for &beta in &betas {
            for &phi in &phis {
                grid.push(EtsParams { alpha, beta, phi });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    params: EtsParams,
    level: f64,
    slope: f64,
    sse: f64,
}

impl Candidate {
    fn forecast(&self, trend: EtsTrend) -> f64 {
        match trend {
            EtsTrend::None => self.level,
            EtsTrend::Additive => self.level + self.params.phi * self.slope,
            EtsTrend::Multiplicative => self.level * self.slope.powf(self.params.phi),
        }
    }

    fn update(&mut self, trend: EtsTrend, y: f64) {
        let EtsParams { alpha, beta, phi } = self.params;
        let err = y - self.forecast(trend);
        self.sse += err * err;
        match trend {
            EtsTrend::None => {
                self.level = alpha * y + (1.0 - alpha) * self.level;
            }
            EtsTrend::Additive => {
                let prev = self.level;
                self.level = alpha * y + (1.0 - alpha) * (prev + phi * self.slope);
                self.slope = beta * (self.level - prev) + (1.0 - beta) * phi * self.slope;
            }
            EtsTrend::Multiplicative => {
                let prev = self.level;
                let growth = self.slope.powf(phi);
                self.level = alpha * y + (1.0 - alpha) * prev * growth;
                self.slope = beta * (self.level / prev) + (1.0 - beta) * growth;
            }
        }
    }
}

/// All grid candidates run side by side over a growing series.
#[derive(Debug, Clone)]
pub struct EtsGridFitter {
    trend: EtsTrend,
    damped: bool,
    candidates: Vec<Candidate>,
    first: Option<f64>,
    seen: usize,
}

impl EtsGridFitter {
    pub fn new(trend: EtsTrend, damped: bool) -> Self {
        Self::with_grid(trend, damped, parameter_grid(trend, damped))
    }

    pub fn with_grid(trend: EtsTrend, damped: bool, grid: Vec<EtsParams>) -> Self {
        let candidates = grid
            .into_iter()
            .map(|params| Candidate {
                params,
                level: 0.0,
                slope: 0.0,
                sse: 0.0,
            })
            .collect();
        EtsGridFitter {
            trend,
            damped,
            candidates,
            first: None,
            seen: 0,
        }
    }

    pub fn observed(&self) -> usize {
        self.seen
    }

    pub fn observe(&mut self, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::invalid(format!("non-finite observation {y}")));
        }
        if self.trend == EtsTrend::Multiplicative && y <= 0.0 {
            return Err(Error::invalid(format!(
                "multiplicative trend needs strictly positive data, got {y}"
            )));
        }
        let trend = self.trend;
        match (self.seen, trend) {
            (0, _) => {
                self.first = Some(y);
                for c in &mut self.candidates {
                    c.level = y;
                }
            }
            (1, EtsTrend::Additive) | (1, EtsTrend::Multiplicative) => {
                let y0 = self.first.unwrap();
                let slope = if trend == EtsTrend::Additive { y - y0 } else { y / y0 };
                for c in &mut self.candidates {
                    c.level = y;
                    c.slope = slope;
                }
            }
            _ => {
                for c in &mut self.candidates {
                    c.update(trend, y);
                }
            }
        }
        self.seen += 1;
        Ok(())
    }

    pub fn observe_all(&mut self, ys: &[f64]) -> Result<()> {
        ys.iter().try_for_each(|&y| self.observe(y))
    }

    /// Lowest finite SSE; the earliest grid point wins ties.
    fn best(&self) -> Option<&Candidate> {
        let mut best: Option<&Candidate> = None;
        for c in &self.candidates {
            if !c.sse.is_finite() || !c.forecast(self.trend).is_finite() {
                continue;
            }
            if best.is_none_or(|b| c.sse < b.sse) {
                best = Some(c);
            }
        }
        best
    }

    pub fn model(&self) -> Result<EtsModel> {
        let c = self.best().ok_or_else(|| {
            Error::Numerical("every ETS parameter combination diverged".into())
        })?;
        Ok(EtsModel {
            trend: self.trend,
            damped: self.damped,
            params: c.params,
            level: c.level,
            slope: c.slope,
            sse: c.sse,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtsModel {
    pub trend: EtsTrend,
    pub damped: bool,
    pub params: EtsParams,
    pub level: f64,
    pub slope: f64,
    pub sse: f64,
}

impl EtsModel {
    pub fn forecast(&self) -> f64 {
        Candidate {
            params: self.params,
            level: self.level,
            slope: self.slope,
            sse: self.sse,
        }
        .forecast(self.trend)
    }
}

fn check_train(train: &[f64], trend: EtsTrend) -> Result<()> {
    if train.len() < 10 {
        return Err(Error::InsufficientHistory {
            needed: 10,
            available: train.len(),
        });
    }
    if trend == EtsTrend::Multiplicative {
        if let Some(v) = train.iter().find(|v| **v <= 0.0) {
            return Err(Error::invalid(format!(
                "multiplicative trend needs strictly positive data, found {v}"
            )));
        }
    }
    Ok(())
}

pub fn fit_ets(train: &[f64], trend: EtsTrend, damped: bool) -> Result<EtsModel> {
    check_train(train, trend)?;
    let mut fitter = EtsGridFitter::new(trend, damped);
    fitter.observe_all(train)?;
    fitter.model()
}

/// Runs the recursions with fixed parameters and returns the next forecast.
pub fn forecast_with(params: EtsParams, trend: EtsTrend, history: &[f64]) -> Result<f64> {
    check_train(history, trend)?;
    let mut fitter = EtsGridFitter::with_grid(trend, params.phi != 1.0, vec![params]);
    fitter.observe_all(history)?;
    Ok(fitter.model()?.forecast())
}

pub(crate) struct EtsForecaster {
    fitter: EtsGridFitter,
}

impl EtsForecaster {
    pub fn new(trend: EtsTrend, damped: bool) -> Self {
        EtsForecaster {
            fitter: EtsGridFitter::new(trend, damped),
        }
    }
}

impl OneStepForecaster for EtsForecaster {
    fn fit(&mut self, train: &[f64]) -> Result<()> {
        check_train(train, self.fitter.trend)?;
        self.fitter = EtsGridFitter::new(self.fitter.trend, self.fitter.damped);
        self.fitter.observe_all(train)
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        let seen = self.fitter.observed();
        if history.len() < seen {
            return Err(Error::invalid("ETS history shrank between predictions"));
        }
        self.fitter.observe_all(&history[seen..])?;
        let f = self.fitter.model()?.forecast();
        if !f.is_finite() {
            return Err(Error::Numerical("ETS forecast is not finite".into()));
        }
        Ok(f)
    }
}
