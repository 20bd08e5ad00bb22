//! Bundled hyperparameter grids: one tuned configuration per model family for
//! each (network, granularity) pair.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{ModelKind, ModelSpec};

pub const TABLE1_GRIDS_JSON: &str = include_str!("table1_grids.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Preset {
    LteHour,
    NrHour,
    LteMinute,
    NrMinute,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::LteHour, Preset::NrHour, Preset::LteMinute, Preset::NrMinute];

    pub fn key(self) -> &'static str {
        match self {
            Preset::LteHour => "lte_hour",
            Preset::NrHour => "nr_hour",
            Preset::LteMinute => "lte_minute",
            Preset::NrMinute => "nr_minute",
        }
    }

    /// All six model families.
    pub fn grid(self) -> Vec<ModelSpec> {
        let all: BTreeMap<String, Vec<ModelSpec>> =
            serde_json::from_str(TABLE1_GRIDS_JSON).expect("bundled grid file is valid");
        all[self.key()].clone()
    }

    /// The grid without the neural model.
    pub fn statistical_grid(self) -> Vec<ModelSpec> {
        self.grid().into_iter().filter(|s| s.kind() != ModelKind::MLP).collect()
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.key() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown grid preset '{s}'")))
    }
}

/// Parses a grid file: a JSON array of model specs.
pub fn parse_grid(json: &str) -> Result<Vec<ModelSpec>> {
    let grid: Vec<ModelSpec> = serde_json::from_str(json)?;
    if grid.is_empty() {
        return Err(Error::invalid("model grid is empty"));
    }
    for spec in &grid {
        spec.validate()?;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::{ArimaTrend, EtsTrend, ModelParams};

    #[test]
    fn every_preset_has_six_families() {
        for p in Preset::ALL {
            let g = p.grid();
            let kinds: Vec<_> = g.iter().map(|s| s.kind()).collect();
            assert_eq!(
                kinds,
                vec![ModelKind::Naive, ModelKind::MA, ModelKind::MM, ModelKind::ARIMA, ModelKind::ETS, ModelKind::MLP]
            );
            assert_eq!(p.statistical_grid().len(), 5);
        }
    }

    #[test]
    fn lte_hour_values() {
        let g = Preset::LteHour.grid();
        assert_eq!(g[3], ModelSpec::arima(1, 3, 2, ArimaTrend::Constant));
        assert_eq!(g[4], ModelSpec::ets(EtsTrend::Multiplicative, false));
        assert_eq!(
            g[5].model,
            ModelParams::Mlp {
                n_inputs: 1,
                n_nodes: 150,
                epochs: 100,
                batch_size: 150
            }
        );
        assert_eq!("nr-hour".parse::<Preset>().unwrap(), Preset::NrHour);
        assert!("weekly".parse::<Preset>().is_err());
    }

    #[test]
    fn grid_file_validation() {
        assert!(parse_grid("[]").is_err());
        assert!(parse_grid(r#"[{"kind":"MA","params":{"window":0}}]"#).is_err());
        assert_eq!(parse_grid(r#"[{"kind":"Naive","params":{"offset":1}}]"#).unwrap().len(), 1);
    }
}
