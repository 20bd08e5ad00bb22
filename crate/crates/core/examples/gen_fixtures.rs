//! Regenerates the bundled fixtures: an hourly LTE DCI log and an NR demand
//! series, each with a daily cycle plus noise.
//!
//! Usage: `cargo run --release -p prbshare-core --example gen_fixtures -- <out_dir>`
//! Prints the statistics the forecasting pipeline derives from them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use prbshare_core::allocate::stats_from_values;
use prbshare_core::forecast::presets::Preset;
use prbshare_core::forecast::{grid_search, SplitConfig};
use prbshare_core::ingest::{parse_dci_log, to_series};
use prbshare_core::series::{PrbSeries, GRANULARITY_HOUR as HOUR_MS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const HOURS: usize = 1000;
const START_MS: i64 = 1_700_000_000_000 - 1_700_000_000_000 % HOUR_MS;
const RECORDS_PER_HOUR: usize = 12;

struct Profile {
    base: f64,
    amp: f64,
    /// Upper cut of the unit sinusoid; below 1 flattens the daily peak.
    clip: f64,
    noise: f64,
}

impl Profile {
    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let noise = Normal::new(0.0, self.noise).unwrap();
        (0..n)
            .map(|t| {
                let phase = (2.0 * PI * t as f64 / 24.0).sin().min(self.clip);
                (self.base + self.amp * phase + noise.sample(rng)).max(1.0)
            })
            .collect()
    }
}

fn dci_log(rng: &mut ChaCha8Rng, hourly: &[f64]) -> String {
    let mut out = String::from("timestamp_ms,sfn,subframe,rnti,prb_count,mcs,dci_format\n");
    let step = HOUR_MS / (RECORDS_PER_HOUR as i64 + 1);
    for (h, &target) in hourly.iter().enumerate() {
        // integer PRB counts whose mean is target rounded to 1/RECORDS_PER_HOUR
        let total = (target * RECORDS_PER_HOUR as f64).round() as u32;
        let base = total / RECORDS_PER_HOUR as u32;
        let extra = (total % RECORDS_PER_HOUR as u32) as usize;
        for r in 0..RECORDS_PER_HOUR {
            let ts = START_MS + h as i64 * HOUR_MS + (r as i64 + 1) * step + rng.random_range(0..50);
            let prb = base + u32::from(r < extra);
            push_record(&mut out, rng, ts, prb, "2B");
            if r % 4 == 1 {
                // control-plane grants that the data-demand filter drops
                let ts = ts + 100;
                let prb = rng.random_range(2..=6);
                push_record(&mut out, rng, ts, prb, "1A");
            }
        }
    }
    out
}

fn push_record(out: &mut String, rng: &mut ChaCha8Rng, ts: i64, prb: u32, format: &str) {
    let sfn = (ts / 10) % 1024;
    let subframe = ts % 10;
    let rnti = rng.random_range(61..=65523);
    let mcs = rng.random_range(0..=28);
    writeln!(out, "{ts},{sfn},{subframe},{rnti},{prb},{mcs},{format}").unwrap();
}

fn report(series: &PrbSeries, preset: Preset) {
    let outcome = grid_search(series, &preset.statistical_grid(), SplitConfig::default()).unwrap();
    let best = &outcome.ranked[0];
    let s = stats_from_values(&best.predictions).unwrap();
    println!(
        "{}: winner {} rmse {:.3}; predicted mean {:.3} var {:.3} max {:.3}",
        series.label, best.spec, best.rmse, s.mean, s.variance, s.maximum
    );
    for r in &outcome.ranked {
        println!("    {:<40} {:.4}", r.spec.to_string(), r.rmse);
    }
}

fn arg(i: usize, default: f64) -> f64 {
    std::env::args().nth(i).map_or(default, |s| s.parse().unwrap())
}

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures".into()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let lte = Profile {
        base: arg(2, 21.55),
        amp: arg(3, 5.0),
        clip: arg(4, 0.88),
        noise: arg(5, 0.1),
    };
    let nr = Profile {
        base: arg(6, 23.45),
        amp: arg(7, 5.3),
        clip: arg(8, 0.38),
        noise: arg(9, 0.1),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let lte_hourly = lte.sample(&mut rng, HOURS);
    let log_path = out_dir.join("lte_dci.csv");
    std::fs::write(&log_path, dci_log(&mut rng, &lte_hourly)).unwrap();

    let nr_values = nr.sample(&mut rng, HOURS);
    let nr_series = PrbSeries::new(START_MS, HOUR_MS, nr_values, "NR").unwrap();
    nr_series.write(&out_dir.join("nr_hour.csv")).unwrap();

    let records = parse_dci_log(&log_path, Some("2B")).unwrap();
    let lte_series = to_series(&records, HOUR_MS).unwrap();
    report(&lte_series, Preset::LteHour);
    report(&nr_series, Preset::NrHour);
}
