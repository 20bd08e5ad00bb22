//! ARIMA(p, d, q) with optional constant, estimated by conditional sum of
//! squares (CSS).
//!
//! The series is differenced `d` times; on the differenced series `w`
//!
//! ```text
//! w_t = c + sum_i ar_i * w_{t-i} + sum_j ma_j * e_{t-j} + e_t
//! ```
//!
//! Residuals are computed for `t >= p` with all earlier innovations fixed at
//! zero, and the coefficient vector minimizing their squared sum is found by
//! Nelder-Mead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::neldermead::{self, Options};
use super::OneStepForecaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArimaTrend {
    #[serde(rename = "n", alias = "none")]
    None,
    #[serde(rename = "c", alias = "constant")]
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub trend: ArimaTrend,
    pub constant: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Conditional sum of squares at the optimum.
    pub css: f64,
    /// Last `q` in-sample residuals, oldest first.
    pub residuals: Vec<f64>,
}

impl ArimaModel {
    fn n_params(p: usize, q: usize, trend: ArimaTrend) -> usize {
        p + q + usize::from(trend == ArimaTrend::Constant)
    }

    fn unpack(p: usize, q: usize, trend: ArimaTrend, theta: &[f64]) -> (f64, &[f64], &[f64]) {
        let (c, rest) = match trend {
            ArimaTrend::Constant => (theta[0], &theta[1..]),
            ArimaTrend::None => (0.0, theta),
        };
        (c, &rest[..p], &rest[p..p + q])
    }

    fn packed(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::n_params(self.p, self.q, self.trend));
        if self.trend == ArimaTrend::Constant {
            v.push(self.constant);
        }
        v.extend_from_slice(&self.ar);
        v.extend_from_slice(&self.ma);
        v
    }
}

/// Applies first differences `d` times.
pub fn difference(x: &[f64], d: usize) -> Vec<f64> {
    let mut w = x.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    w
}

/// In-sample one-step residuals on the differenced series; returns the CSS.
fn residuals_into(w: &[f64], c: f64, ar: &[f64], ma: &[f64], e: &mut Vec<f64>) -> f64 {
    let p = ar.len();
    e.clear();
    e.resize(w.len(), 0.0);
    let mut css = 0.0;
    for t in p..w.len() {
        let mut pred = c;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - i];
        }
        for (j, th) in ma.iter().enumerate() {
            if t > j {
                pred += th * e[t - 1 - j];
            }
        }
        let r = w[t] - pred;
        e[t] = r;
        css += r * r;
    }
    css
}

pub fn fit_arima(train: &[f64], p: usize, d: usize, q: usize, trend: ArimaTrend) -> Result<ArimaModel> {
    fit_arima_from(train, p, d, q, trend, None)
}

/// Like [`fit_arima`], optionally starting the search from a previous fit.
pub fn fit_arima_from(
    train: &[f64],
    p: usize,
    d: usize,
    q: usize,
    trend: ArimaTrend,
    warm: Option<&ArimaModel>,
) -> Result<ArimaModel> {
    let min_len = p + d + q + 5;
    if train.len() <= min_len {
        return Err(Error::InsufficientHistory {
            needed: min_len + 1,
            available: train.len(),
        });
    }
    if let Some(bad) = train.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite training value {bad}")));
    }
    let w = difference(train, d);
    let k = ArimaModel::n_params(p, q, trend);

    let scale = {
        let m = w.iter().sum::<f64>() / w.len() as f64;
        (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt()
    };
    let (x0, steps) = match warm.filter(|m| (m.p, m.d, m.q, m.trend) == (p, d, q, trend)) {
        Some(prev) => (prev.packed(), vec![0.01; k]),
        None => {
            let mut x0 = vec![0.0; k];
            let mut steps = vec![0.1; k];
            if trend == ArimaTrend::Constant {
                x0[0] = w.iter().sum::<f64>() / w.len() as f64;
                steps[0] = 0.1 * scale + 1e-3;
            }
            (x0, steps)
        }
    };
    let opts = Options {
        max_evals: 300 * (k + 1),
        f_tol: 1e-10,
        x_tol: 1e-7,
    };
    let mut buf = Vec::with_capacity(w.len());
    let min = neldermead::minimize(
        |theta| {
            let (c, ar, ma) = ArimaModel::unpack(p, q, trend, theta);
            residuals_into(&w, c, ar, ma, &mut buf)
        },
        &x0,
        &steps,
        &opts,
    );
    if !min.value.is_finite() {
        return Err(Error::Numerical(format!(
            "ARIMA({p},{d},{q}) conditional sum of squares is not finite"
        )));
    }

    let (c, ar, ma) = ArimaModel::unpack(p, q, trend, &min.x);
    let css = residuals_into(&w, c, ar, ma, &mut buf);
    Ok(ArimaModel {
        p,
        d,
        q,
        trend,
        constant: c,
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        css,
        residuals: buf[buf.len().saturating_sub(q)..].to_vec(),
    })
}

/// One-step forecast after `history`: difference, run the AR/MA recursion to
/// recover the residual state, predict, then undo the differencing.
pub fn forecast_arima(model: &ArimaModel, history: &[f64]) -> Result<f64> {
    let needed = (model.p + model.d).max(1);
    if history.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            available: history.len(),
        });
    }
    let mut last_levels = Vec::with_capacity(model.d);
    let mut w = history.to_vec();
    for _ in 0..model.d {
        last_levels.push(*w.last().unwrap());
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }

    let mut e = Vec::new();
    residuals_into(&w, model.constant, &model.ar, &model.ma, &mut e);
    let m = w.len();
    let mut next = model.constant;
    for (i, phi) in model.ar.iter().enumerate() {
        next += phi * w[m - 1 - i];
    }
    for (j, th) in model.ma.iter().enumerate() {
        if m > j {
            next += th * e[m - 1 - j];
        }
    }
    for level in last_levels.iter().rev() {
        next += level;
    }
    if !next.is_finite() {
        return Err(Error::Numerical("ARIMA forecast is not finite".into()));
    }
    Ok(next)
}

/// Walk-forward adapter: refits on the full history before each prediction,
/// warm-starting from the previous coefficients.
pub(crate) struct ArimaForecaster {
    p: usize,
    d: usize,
    q: usize,
    trend: ArimaTrend,
    model: Option<ArimaModel>,
    fitted_len: usize,
}

impl ArimaForecaster {
    pub fn new(p: usize, d: usize, q: usize, trend: ArimaTrend) -> Self {
        ArimaForecaster {
            p,
            d,
            q,
            trend,
            model: None,
            fitted_len: 0,
        }
    }
}

impl OneStepForecaster for ArimaForecaster {
    fn fit(&mut self, train: &[f64]) -> Result<()> {
        self.model = Some(fit_arima(train, self.p, self.d, self.q, self.trend)?);
        self.fitted_len = train.len();
        Ok(())
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        if self.model.is_none() || history.len() != self.fitted_len {
            let refit = fit_arima_from(history, self.p, self.d, self.q, self.trend, self.model.as_ref())?;
            self.model = Some(refit);
            self.fitted_len = history.len();
        }
        forecast_arima(self.model.as_ref().unwrap(), history)
    }
}
