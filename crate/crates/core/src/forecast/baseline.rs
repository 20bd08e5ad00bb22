//! Persistence, moving-average and moving-median baselines.

use crate::error::{Error, Result};

use super::OneStepForecaster;

fn tail(history: &[f64], n: usize) -> Result<&[f64]> {
    if n == 0 {
        return Err(Error::invalid("window must be >= 1"));
    }
    if history.len() < n {
        return Err(Error::InsufficientHistory {
            needed: n,
            available: history.len(),
        });
    }
    Ok(&history[history.len() - n..])
}

/// `history[len - offset]`.
pub fn predict_naive(history: &[f64], offset: usize) -> Result<f64> {
    Ok(tail(history, offset)?[0])
}

pub fn predict_ma(history: &[f64], window: usize) -> Result<f64> {
    let w = tail(history, window)?;
    Ok(w.iter().sum::<f64>() / w.len() as f64)
}

/// Median of the last `window` values; even windows average the two middle
/// order statistics.
pub fn predict_mm(history: &[f64], window: usize) -> Result<f64> {
    let mut w = tail(history, window)?.to_vec();
    w.sort_by(f64::total_cmp);
    let mid = w.len() / 2;
    Ok(if w.len() % 2 == 1 {
        w[mid]
    } else {
        (w[mid - 1] + w[mid]) / 2.0
    })
}

pub(crate) struct Naive {
    pub offset: usize,
}

pub(crate) struct MovingAverage {
    pub window: usize,
}

pub(crate) struct MovingMedian {
    pub window: usize,
}

impl OneStepForecaster for Naive {
    fn fit(&mut self, _train: &[f64]) -> Result<()> {
        Ok(())
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        predict_naive(history, self.offset)
    }
}

impl OneStepForecaster for MovingAverage {
    fn fit(&mut self, _train: &[f64]) -> Result<()> {
        Ok(())
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        predict_ma(history, self.window)
    }
}

impl OneStepForecaster for MovingMedian {
    fn fit(&mut self, _train: &[f64]) -> Result<()> {
        Ok(())
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        predict_mm(history, self.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn naive_examples() {
        assert_eq!(predict_naive(&[5.0, 7.0, 9.0], 1).unwrap(), 9.0);
        assert_eq!(predict_naive(&[5.0, 7.0, 9.0], 2).unwrap(), 7.0);
        assert!(matches!(
            predict_naive(&[5.0], 2),
            Err(Error::InsufficientHistory { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn ma_examples() {
        assert_eq!(predict_ma(&[4.0, 6.0], 2).unwrap(), 5.0);
        assert_eq!(predict_ma(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), 4.0);
        assert_eq!(predict_ma(&[2.0, 2.0, 2.0], 3).unwrap(), 2.0);
        assert!(predict_ma(&[2.0], 3).is_err());
    }

    #[test]
    fn mm_examples() {
        assert_eq!(predict_mm(&[1.0, 100.0, 3.0], 3).unwrap(), 3.0);
        assert_eq!(predict_mm(&[4.0, 6.0], 2).unwrap(), 5.0);
        assert_eq!(predict_mm(&[7.0], 1).unwrap(), 7.0);
        assert!(predict_mm(&[], 1).is_err());
    }

    proptest! {
        #[test]
        fn window_one_degenerates_to_persistence(h in prop::collection::vec(-1e6f64..1e6, 1..50)) {
            let last = predict_naive(&h, 1).unwrap();
            prop_assert_eq!(predict_ma(&h, 1).unwrap(), last);
            prop_assert_eq!(predict_mm(&h, 1).unwrap(), last);
        }
    }
}
