//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

// `ensure!` negates float comparisons on purpose so that NaN fails a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use prbshare_core::allocate::{convexity_check, solve, AllocationProblem, DemandStats, Variant};
use prbshare_core::control::{run_loop, verify_causality, LoopConfig, LoopVariant, StatsSource};
use prbshare_core::forecast::mlp::{init_params, loss_and_gradient, MlpModel, Shape};
use prbshare_core::forecast::{
    fit_arima, forecast_arima, walk_forward, ArimaTrend, EtsTrend, MlpConfig, ModelSpec, SplitConfig,
};
use prbshare_core::ingest::{parse_dci_log, to_series};
use prbshare_core::series::GRANULARITY_HOUR;
use prbshare_core::PrbSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const LTE: (f64, f64, f64) = (21.52, 12.37, 26.31);
const NR: (f64, f64, f64) = (22.80, 8.33, 25.80);

fn stats(s: (f64, f64, f64)) -> DemandStats {
    DemandStats::new(s.0, s.1, s.2).unwrap()
}

// ---------------------------------------------------------------------------
// independent objective oracle

/// `(m, k)` written out directly from the two objectives.
fn oracle_coefficients(variant: Variant, s: &DemandStats) -> (f64, f64) {
    match variant {
        Variant::Max => (1.0 / s.maximum, 1.0 / (s.maximum * s.maximum)),
        Variant::Avg => {
            let (mu, var) = (s.mean, s.variance);
            (1.0 / mu + var / mu.powi(3), 1.0 / mu.powi(2) + 3.0 * var / mu.powi(4))
        }
    }
}

struct Oracle {
    gamma: f64,
    a: (f64, f64),
    b: (f64, f64),
}

impl Oracle {
    fn new(p: &AllocationProblem) -> Self {
        Oracle {
            gamma: p.gamma,
            a: oracle_coefficients(p.variant, &p.stats_a),
            b: oracle_coefficients(p.variant, &p.stats_b),
        }
    }

    fn part_a(&self, x: f64) -> f64 {
        self.gamma * (self.a.1 * x * x - 2.0 * self.a.0 * x)
    }

    fn part_b(&self, x: f64) -> f64 {
        (1.0 - self.gamma) * (self.b.1 * x * x - 2.0 * self.b.0 * x)
    }

    fn j(&self, na: f64, nb: f64) -> f64 {
        1.0 + self.part_a(na) + self.part_b(nb)
    }

    /// Minimum over the 0.01 lattice of the feasible triangle.
    fn grid_min(&self, pool: f64) -> f64 {
        let r = (pool / 0.01 + 1e-9).floor() as usize;
        // best B part using at most j steps
        let mut prefix = Vec::with_capacity(r + 1);
        let mut best = f64::INFINITY;
        for j in 0..=r {
            best = best.min(self.part_b(j as f64 * 0.01));
            prefix.push(best);
        }
        (0..=r)
            .map(|i| 1.0 + self.part_a(i as f64 * 0.01) + prefix[r - i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Continuous minimum: per-network optimum if it fits, otherwise a
    /// golden-section search along the exhausted pool.
    fn continuous_min(&self, pool: f64) -> f64 {
        let (ta, tb) = ((self.a.0 / self.a.1).max(0.0), (self.b.0 / self.b.1).max(0.0));
        if ta + tb <= pool {
            return self.j(ta, tb);
        }
        let f = |x: f64| self.j(x, pool - x);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, pool);
        for _ in 0..200 {
            let x1 = hi - ratio * (hi - lo);
            let x2 = lo + ratio * (hi - lo);
            if f(x1) <= f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        f((lo + hi) / 2.0)
    }

    fn integer_min(&self, pool: f64) -> f64 {
        let r = pool.floor() as i64;
        let mut best = f64::INFINITY;
        for a in 0..=r {
            for b in 0..=(r - a) {
                best = best.min(self.j(a as f64, b as f64));
            }
        }
        best
    }
}

fn jain(a: f64, b: f64) -> f64 {
    (a + b).powi(2) / (2.0 * (a * a + b * b))
}

fn random_problem(rng: &mut ChaCha8Rng) -> AllocationProblem {
    let mut st = || {
        let mean = rng.random_range(5.0..=50.0);
        let variance = rng.random_range(0.0..=mean);
        let maximum = rng.random_range(mean..=2.0 * mean);
        DemandStats::new(mean, variance, maximum).unwrap()
    };
    let (stats_a, stats_b) = (st(), st());
    AllocationProblem {
        pool_size: rng.random_range(5.0..=100.0),
        gamma: f64::from(rng.random_range(1..=19u32)) * 0.05,
        variant: if rng.random_bool(0.5) { Variant::Max } else { Variant::Avg },
        integer_mode: false,
        stats_a,
        stats_b,
    }
}

fn gammas() -> Vec<f64> {
    (1..=99).map(|i| f64::from(i) / 100.0).collect()
}

// ---------------------------------------------------------------------------

fn c1_solver_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut below_grid: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for _ in 0..200 {
        let p = random_problem(&mut rng);
        let oracle = Oracle::new(&p);

        let r = solve(&p).map_err(|e| e.to_string())?;
        ensure!(r.n_a >= 0.0 && r.n_b >= 0.0 && r.n_a + r.n_b <= p.pool_size + 1e-9, "infeasible {r:?}");
        let kkt = oracle.j(r.n_a, r.n_b);
        let grid = oracle.grid_min(p.pool_size);
        below_grid = below_grid.max(grid - kkt);
        ensure!(kkt <= grid + 1e-6, "objective {kkt} above grid minimum {grid} on {p:?}");
        let exact = oracle.continuous_min(p.pool_size);
        worst_exact = worst_exact.max((kkt - exact).abs());
        ensure!((kkt - exact).abs() <= 1e-9, "objective {kkt} vs continuous minimum {exact} on {p:?}");

        let q = AllocationProblem { integer_mode: true, ..p };
        let r = solve(&q).map_err(|e| e.to_string())?;
        ensure!(r.n_a.fract() == 0.0 && r.n_b.fract() == 0.0, "non-integer {r:?}");
        ensure!(r.n_a + r.n_b <= q.pool_size.floor(), "over pool {r:?}");
        let exact = oracle.integer_min(q.pool_size);
        ensure!(oracle.j(r.n_a, r.n_b) == exact, "integer {} vs {exact} on {q:?}", oracle.j(r.n_a, r.n_b));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "200 problems, never above the grid minimum (up to {below_grid:.1e} below it), \
         within {worst_exact:.1e} of the continuous minimum, integer exact, {elapsed:.2?}"
    ))
}

/// Gammas on the 0.01 grid where both networks get the same non-zero share.
fn equal_share_set(pool: f64, variant: Variant, a: DemandStats, b: DemandStats) -> Vec<f64> {
    gammas()
        .into_iter()
        .filter(|&gamma| {
            let p = AllocationProblem {
                pool_size: pool,
                gamma,
                variant,
                integer_mode: true,
                stats_a: a,
                stats_b: b,
            };
            let r = solve(&p).unwrap();
            r.n_a > 0.0 && (jain(r.n_a, r.n_b) - 1.0).abs() < 1e-12
        })
        .collect()
}

fn contiguous(set: &[f64]) -> bool {
    !set.is_empty() && set.windows(2).all(|w| ((w[1] - w[0]) - 0.01).abs() < 1e-9)
}

fn contains(set: &[f64], g: f64) -> bool {
    set.iter().any(|&x| (x - g).abs() < 1e-9)
}

fn fairness_at_forty(a: DemandStats, b: DemandStats) -> Check {
    let avg = equal_share_set(40.0, Variant::Avg, a, b);
    let max = equal_share_set(40.0, Variant::Max, a, b);
    ensure!(contiguous(&avg), "avg set not contiguous: {avg:?}");
    ensure!(contains(&avg, 0.78) && contains(&avg, 0.85), "avg set {avg:?} misses [0.78, 0.85]");
    ensure!(contiguous(&max), "max set not contiguous: {max:?}");
    ensure!(contains(&max, 0.48), "max set {max:?} misses 0.48");
    ensure!(max.len() < avg.len(), "max set ({}) not narrower than avg ({})", max.len(), avg.len());
    Ok(format!(
        "avg F=1 on [{}, {}], max F=1 on [{}, {}]",
        avg[0],
        avg[avg.len() - 1],
        max[0],
        max[max.len() - 1]
    ))
}

fn c2_fairness_at_forty() -> Check {
    fairness_at_forty(stats(LTE), stats(NR))
}

fn served_both(pool: f64, variant: Variant, a: DemandStats, b: DemandStats) -> usize {
    gammas()
        .into_iter()
        .filter(|&gamma| {
            let r = solve(&AllocationProblem {
                pool_size: pool,
                gamma,
                variant,
                integer_mode: true,
                stats_a: a,
                stats_b: b,
            })
            .unwrap();
            r.n_a.min(r.n_b) > 0.0
        })
        .count()
}

fn scarcity(a: DemandStats, b: DemandStats) -> Check {
    let avg = served_both(10.0, Variant::Avg, a, b);
    let max = served_both(10.0, Variant::Max, a, b);
    ensure!(avg > max, "avg serves both at {avg} gammas, max at {max}");
    Ok(format!("both served: avg {avg} gammas, max {max} gammas"))
}

fn c3_scarcity() -> Check {
    scarcity(stats(LTE), stats(NR))
}

fn abundance(a: DemandStats, b: DemandStats, pool: f64) -> Check {
    ensure!(pool >= a.maximum + b.maximum, "pool {pool} below the summed peaks");
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for gamma in gammas() {
        let r = solve(&AllocationProblem {
            pool_size: pool,
            gamma,
            variant: Variant::Max,
            integer_mode: false,
            stats_a: a,
            stats_b: b,
        })
        .map_err(|e| e.to_string())?;
        ensure!(r.n_a == a.maximum && r.n_b == b.maximum, "gamma {gamma}: got ({}, {})", r.n_a, r.n_b);
        ensure!(r.objective.abs() < 1e-12, "gamma {gamma}: objective {}", r.objective);
        for _ in 0..5 {
            let da: Vec<f64> = (0..24).map(|_| rng.random_range(0.1..=a.maximum)).collect();
            let db: Vec<f64> = (0..24).map(|_| rng.random_range(0.1..=b.maximum)).collect();
            let sa = prbshare_core::allocate::surplus_deficit(r.n_a, &da).unwrap();
            let sb = prbshare_core::allocate::surplus_deficit(r.n_b, &db).unwrap();
            ensure!(sa >= 0.0 && sb >= 0.0, "gamma {gamma}: surpluses {sa}, {sb}");
        }
    }
    Ok(format!("({}, {}) with zero objective at all 99 gammas", a.maximum, b.maximum))
}

fn c4_abundance() -> Check {
    abundance(stats(LTE), stats(NR), 60.0)
}

fn c5_forecaster_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let split = SplitConfig::default();
    let step = Normal::new(0.0, 2.0).unwrap();
    for i in 0..100 {
        let n = rng.random_range(20..80);
        let mut level: f64 = rng.random_range(10.0..40.0);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                level = (level + step.sample(&mut rng)).abs();
                level
            })
            .collect();
        let s = PrbSeries::from_values(values, "r").unwrap();
        let run = |spec: ModelSpec| walk_forward(&s, &spec, split).map(|r| r.predictions);
        let naive = run(ModelSpec::naive(1)).map_err(|e| e.to_string())?;
        ensure!(run(ModelSpec::ma(1)).unwrap() == naive, "series {i}: MA(1) differs from Naive(1)");
        ensure!(run(ModelSpec::mm(1)).unwrap() == naive, "series {i}: MM(1) differs from Naive(1)");
        let arima = run(ModelSpec::arima(0, 1, 0, ArimaTrend::None)).map_err(|e| e.to_string())?;
        ensure!(arima == naive, "series {i}: ARIMA(0,1,0) differs from Naive(1)");
    }
    Ok("100 series, exact equality".into())
}

/// Forward pass written against the documented layout `[w1, b1, w2, b2]`.
fn oracle_mse(shape: Shape, params: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let (ni, nh) = (shape.n_inputs, shape.n_nodes);
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let mut out = params[nh * ni + 2 * nh];
            for h in 0..nh {
                let mut z = params[nh * ni + h];
                for i in 0..ni {
                    z += params[h * ni + i] * x[i];
                }
                out += params[nh * ni + nh + h] * z.max(0.0);
            }
            (out - y).powi(2)
        })
        .sum();
    total / xs.len() as f64
}

fn c6_gradient_check() -> Check {
    let run = || -> Result<(f64, Vec<Vec<f64>>), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut grads = Vec::new();
        for trial in 0..20 {
            let shape = Shape {
                n_inputs: 1 + trial % 5,
                n_nodes: 2 + (trial * 3) % 11,
            };
            let params = init_params(shape, &mut rng);
            let xs: Vec<Vec<f64>> = (0..10)
                .map(|_| (0..shape.n_inputs).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let ys: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (loss, grad) = loss_and_gradient(shape, &params, &xs, &ys);
            ensure!((loss - oracle_mse(shape, &params, &xs, &ys)).abs() < 1e-12, "loss disagrees with oracle");
            for k in 0..params.len() {
                let (mut up, mut down) = (params.clone(), params.clone());
                up[k] += h;
                down[k] -= h;
                let numeric = (oracle_mse(shape, &up, &xs, &ys) - oracle_mse(shape, &down, &xs, &ys)) / (2.0 * h);
                let scale = grad[k].abs() + numeric.abs();
                let rel = if scale < 1e-10 { 0.0 } else { (grad[k] - numeric).abs() / scale };
                worst = worst.max(rel);
            }
            grads.push(grad);
        }
        Ok((worst, grads))
    };
    let (worst, g1) = run()?;
    let (_, g2) = run()?;
    ensure!(worst < 1e-4, "max relative error {worst:.3e}");
    ensure!(g1 == g2, "gradients differ between identical runs");

    let series: Vec<f64> = (0..120).map(|t| 20.0 + 5.0 * (t as f64 / 4.0).sin()).collect();
    let config = MlpConfig {
        n_inputs: 2,
        n_nodes: 16,
        epochs: 20,
        batch_size: 32,
        seed: 9,
        ..MlpConfig::default()
    };
    let (xs, ys) = prbshare_core::forecast::mlp::lag_pairs(&series, 2);
    let a = MlpModel::train(&xs, &ys, &config).map_err(|e| e.to_string())?;
    let b = MlpModel::train(&xs, &ys, &config).map_err(|e| e.to_string())?;
    ensure!(a.params == b.params, "training is not deterministic");
    Ok(format!("20 configurations, max relative error {worst:.2e}, deterministic"))
}

fn c7_arima() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::with_capacity(2000);
    let mut prev = 0.0;
    for _ in 0..2000 {
        prev = 0.7 * prev + noise.sample(&mut rng);
        x.push(prev);
    }
    let model = fit_arima(&x, 1, 0, 0, ArimaTrend::Constant).map_err(|e| e.to_string())?;
    let phi = model.ar[0];
    ensure!((0.6..=0.8).contains(&phi), "phi estimate {phi}");

    let mut level = 50.0;
    let walk: Vec<f64> = (0..300)
        .map(|_| {
            level += noise.sample(&mut rng);
            level
        })
        .collect();
    let rw = fit_arima(&walk[..200], 0, 1, 0, ArimaTrend::None).map_err(|e| e.to_string())?;
    for end in 200..=300 {
        let f = forecast_arima(&rw, &walk[..end]).map_err(|e| e.to_string())?;
        ensure!(f == walk[end - 1], "forecast {f} != last {}", walk[end - 1]);
    }
    Ok(format!("phi estimate {phi:.4}; (0,1,0) forecasts equal the last value"))
}

fn c8_ets_line() -> Check {
    let s = PrbSeries::from_values((0..30).map(|t| 2.0 + 3.0 * t as f64).collect(), "line").unwrap();
    let r = walk_forward(&s, &ModelSpec::ets(EtsTrend::Additive, false), SplitConfig { train_fraction: 0.67 })
        .map_err(|e| e.to_string())?;
    ensure!(r.test_len == 10, "test segment has {} points", r.test_len);
    ensure!(r.rmse < 0.01, "rmse {}", r.rmse);
    Ok(format!("one-step RMSE over final 10 points {:.2e}", r.rmse))
}

fn c9_hand_trace() -> Check {
    let s = PrbSeries::from_values((1..=10).map(f64::from).collect(), "x").unwrap();
    let naive = walk_forward(&s, &ModelSpec::naive(1), SplitConfig::default()).map_err(|e| e.to_string())?;
    let ma = walk_forward(&s, &ModelSpec::ma(2), SplitConfig::default()).map_err(|e| e.to_string())?;
    ensure!(naive.rmse == 1.0, "naive rmse {}", naive.rmse);
    ensure!(ma.rmse == 1.5, "MA(2) rmse {}", ma.rmse);
    Ok("Naive RMSE 1, MA(2) RMSE 1.5".into())
}

fn c10_convexity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let p = random_problem(&mut rng);
        let report = convexity_check(&p, i).map_err(|e| e.to_string())?;
        ensure!(
            report.hessian_diagonal[0] > 0.0 && report.hessian_diagonal[1] > 0.0,
            "non-positive Hessian diagonal {:?}",
            report.hessian_diagonal
        );
        ensure!(report.midpoint_violations == 0, "midpoint violation on {p:?}");
        // independent midpoint check
        let oracle = Oracle::new(&p);
        for _ in 0..10 {
            let mut pt = || loop {
                let (a, b) = (rng.random_range(0.0..=p.pool_size), rng.random_range(0.0..=p.pool_size));
                if a + b <= p.pool_size {
                    return (a, b);
                }
            };
            let (x, y) = (pt(), pt());
            let gap = oracle.j((x.0 + y.0) / 2.0, (x.1 + y.1) / 2.0) - (oracle.j(x.0, x.1) + oracle.j(y.0, y.1)) / 2.0;
            worst = worst.max(gap);
            ensure!(gap <= 1e-9, "midpoint gap {gap}");
        }
    }
    Ok(format!("1000 problems, worst midpoint gap {worst:.2e}"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn c11_control_loop() -> Check {
    let records = parse_dci_log(&fixture("lte_dci.csv"), Some("2B")).map_err(|e| e.to_string())?;
    let lte = to_series(&records, GRANULARITY_HOUR).map_err(|e| e.to_string())?;
    let nr = PrbSeries::read(&fixture("nr_hour.csv")).map_err(|e| e.to_string())?;
    let config = LoopConfig {
        retrain_every: 120,
        allocate_every: 24,
        pool_size: 40.0,
        gamma: 0.6,
        variant: LoopVariant::AutoFairest,
        grid: vec![
            ModelSpec::naive(1),
            ModelSpec::ma(2),
            ModelSpec::ets(EtsTrend::Additive, true),
            ModelSpec::mlp(2, 16, 10, 32, 0),
        ],
        seed: 2024,
        warmup: 700,
        integer_mode: true,
        split: SplitConfig::default(),
        stats_source: StatsSource::Predicted,
    };
    let a = run_loop(&lte, &nr, &config).map_err(|e| e.to_string())?;
    let b = run_loop(&lte, &nr, &config).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
    ensure!(ja == jb, "transcripts differ between identical runs");
    let mismatched = verify_causality(&a, lte.granularity_ms, &config).map_err(|e| e.to_string())?;
    ensure!(mismatched.is_empty(), "policies at epochs {mismatched:?} not reproduced");
    Ok(format!(
        "{} messages byte-identical; every policy recomputed from prior telemetry",
        a.messages.len()
    ))
}

// ---------------------------------------------------------------------------
// end to end through the command-line tool

fn prbshare(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_prbshare"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn predicted_stats(selected: &Path) -> Result<DemandStats, String> {
    let v = read_json(selected)?;
    serde_json::from_value(v["predicted_stats"].clone()).map_err(|e| e.to_string())
}

struct SweepRow {
    n_a: f64,
    n_b: f64,
    objective: f64,
    fairness: f64,
    surplus_a: f64,
    surplus_b: f64,
}

fn read_sweep(path: &Path) -> Result<Vec<SweepRow>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    ensure!(
        lines.next() == Some("gamma,n_a,n_b,objective,fairness,surplus_a,surplus_b,constraint_active"),
        "unexpected header in {}",
        path.display()
    );
    lines
        .map(|l| {
            let c: Vec<f64> = l.split(',').take(7).map(|v| v.parse().unwrap_or(f64::NAN)).collect();
            Ok(SweepRow {
                n_a: c[1],
                n_b: c[2],
                objective: c[3],
                fairness: c[4],
                surplus_a: c[5],
                surplus_b: c[6],
            })
        })
        .collect()
}

fn set_from_rows(rows: &[SweepRow], keep: impl Fn(&SweepRow) -> bool) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| keep(r))
        .map(|(i, _)| (i + 1) as f64 / 100.0)
        .collect()
}

fn c12_end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();
    let log = fixture("lte_dci.csv").to_string_lossy().into_owned();
    let nr = fixture("nr_hour.csv").to_string_lossy().into_owned();

    prbshare(&["--out", &d("ingest"), "ingest", "--input", &log, "--granularity", "hour", "--dci-format", "2B"])?;
    let lte = d("ingest/lte_hour.csv");
    prbshare(&[
        "--out", &d("f_lte"), "forecast", "--series", &lte, "--preset", "lte-hour", "--statistical-only", "--select",
    ])?;
    prbshare(&[
        "--out", &d("f_nr"), "forecast", "--series", &nr, "--preset", "nr-hour", "--statistical-only", "--select",
    ])?;
    let (plte, pnr) = (d("f_lte/predicted.csv"), d("f_nr/predicted.csv"));
    prbshare(&["--out", &d("sweep"), "sweep", "--lte", &plte, "--nr", &pnr, "--pool", "10,40,50"])?;
    prbshare(&[
        "--out", &d("sweep60"), "sweep", "--lte", &plte, "--nr", &pnr, "--pool", "60", "--variants", "max",
        "--continuous",
    ])?;
    prbshare(&["--seed", "12", "--out", &d("sim"), "simulate", "--lte", &lte, "--nr", &nr, "--pool", "40"])?;
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "pipeline took {elapsed:?}");

    let sa = predicted_stats(&dir.path().join("f_lte/selected_model.json"))?;
    let sb = predicted_stats(&dir.path().join("f_nr/selected_model.json"))?;
    let sweep = |name: &str| read_sweep(&dir.path().join("sweep").join(name));

    // criterion 2 from the sweep files
    let equal = |r: &SweepRow| r.n_a > 0.0 && r.fairness == 1.0;
    let avg40 = set_from_rows(&sweep("sweep_N40_avg.csv")?, equal);
    let max40 = set_from_rows(&sweep("sweep_N40_max.csv")?, equal);
    ensure!(contiguous(&avg40) && contains(&avg40, 0.78) && contains(&avg40, 0.85), "avg N=40 set {avg40:?}");
    ensure!(contiguous(&max40) && contains(&max40, 0.48), "max N=40 set {max40:?}");
    ensure!(max40.len() < avg40.len(), "max set not narrower");
    // and recomputed straight from the pipeline statistics
    fairness_at_forty(sa, sb)?;

    // criterion 3
    let both = |r: &SweepRow| r.n_a.min(r.n_b) > 0.0;
    let avg10 = set_from_rows(&sweep("sweep_N10_avg.csv")?, both).len();
    let max10 = set_from_rows(&sweep("sweep_N10_max.csv")?, both).len();
    ensure!(avg10 > max10, "N=10 both served: avg {avg10}, max {max10}");
    scarcity(sa, sb)?;

    // criterion 4
    let rows60 = read_sweep(&dir.path().join("sweep60/sweep_N60_max.csv"))?;
    ensure!(rows60.len() == 99, "N=60 sweep has {} rows", rows60.len());
    for r in &rows60 {
        ensure!(r.n_a == sa.maximum && r.n_b == sb.maximum, "N=60 allocation ({}, {})", r.n_a, r.n_b);
        ensure!(r.objective.abs() < 1e-12, "N=60 objective {}", r.objective);
        ensure!(r.surplus_a >= 0.0 && r.surplus_b >= 0.0, "N=60 surpluses {} {}", r.surplus_a, r.surplus_b);
    }
    abundance(sa, sb, 60.0)?;

    let summary = read_json(&dir.path().join("sim/summary.json"))?;
    ensure!(summary["allocations"].as_u64().unwrap_or(0) > 0, "simulation made no allocations");

    Ok(format!(
        "pipeline in {elapsed:.2?}; stats LTE ({:.2}, {:.2}, {:.2}) NR ({:.2}, {:.2}, {:.2}); \
         N=40 avg F=1 [{}, {}], max F=1 [{}, {}]; N=10 both served avg {avg10} / max {max10}",
        sa.mean,
        sa.variance,
        sa.maximum,
        sb.mean,
        sb.variance,
        sb.maximum,
        avg40[0],
        avg40[avg40.len() - 1],
        max40[0],
        max40[max40.len() - 1]
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("C1 solver matches brute-force oracles", c1_solver_oracle),
        ("C2 fairness intervals at N_R=40", c2_fairness_at_forty),
        ("C3 scarcity at N_R=10", c3_scarcity),
        ("C4 abundance at N_R=60", c4_abundance),
        ("C5 forecaster identities", c5_forecaster_identities),
        ("C6 MLP gradient check", c6_gradient_check),
        ("C7 ARIMA recovery and random walk", c7_arima),
        ("C8 ETS on an additive trend", c8_ets_line),
        ("C9 walk-forward hand trace", c9_hand_trace),
        ("C10 convexity self-check", c10_convexity),
        ("C11 control-loop determinism and causality", c11_control_loop),
        ("C12 end-to-end desk-scale run", c12_end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
