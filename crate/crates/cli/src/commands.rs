use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use prbshare_core::allocate::{
    convexity_check, evaluate, gamma_grid, solve, stats_from_series, stats_from_values, AllocationProblem,
    AllocationResult, DemandStats, EvaluationRecord, Variant,
};
use prbshare_core::control::{
    derive_seed, run_loop, transcript_report, verify_causality, LoopConfig, LoopVariant, MessageKind, StatsSource,
    Transcript,
};
use prbshare_core::forecast::presets::{parse_grid, Preset};
use prbshare_core::forecast::{check_series_len, grid_search, ModelKind, ModelSpec, SplitConfig};
use prbshare_core::ingest::{parse_dci_log, to_series};
use prbshare_core::series::{GRANULARITY_HOUR, GRANULARITY_MINUTE, GRANULARITY_MS};
use prbshare_core::synthgen::{generate_surrogate, similarity_report, SimilarityReport, SynthConfig};
use prbshare_core::PrbSeries;

use crate::manifest::Recorder;
use crate::{
    AllocateArgs, Cli, Command, ForecastArgs, Granularity, IngestArgs, ReportArgs, SimulateArgs, SweepArgs,
    SynthArgs,
};

/// A failed command, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, unreadable or invalid inputs.
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<prbshare_core::Error> for Failure {
    fn from(e: prbshare_core::Error) -> Self {
        match e {
            prbshare_core::Error::Numerical(_) => Failure::Runtime(e.into()),
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

type Outcome<T = ()> = Result<T, Failure>;

pub fn run(cli: &Cli) -> Outcome {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.command {
        Command::Ingest(args) => ingest(cli, args),
        Command::Synth(args) => synth(cli, args),
        Command::Forecast(args) => forecast(cli, args),
        Command::Allocate(args) => allocate(cli, args),
        Command::Sweep(args) => sweep(cli, args),
        Command::Simulate(args) => simulate(cli, args),
        Command::Report(args) => report(cli, args),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_series(path: &Path) -> Outcome<PrbSeries> {
    PrbSeries::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_series(rec: &mut Recorder, name: &str, series: &PrbSeries) -> Outcome {
    let csv_path = rec.output_path(&format!("{name}.csv"));
    rec.output_path(&format!("{name}.json"));
    series.write(&csv_path).map_err(runtime)
}

fn csv_text<S: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Outcome<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header).map_err(runtime)?;
    for row in rows {
        wtr.write_record(row).map_err(runtime)?;
    }
    let bytes = wtr.into_inner().map_err(|e| runtime(anyhow!("{e}")))?;
    String::from_utf8(bytes).map_err(runtime)
}

fn granularity_ms(g: Granularity) -> i64 {
    match g {
        Granularity::Ms => GRANULARITY_MS,
        Granularity::Minute => GRANULARITY_MINUTE,
        Granularity::Hour => GRANULARITY_HOUR,
    }
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    records: usize,
    dci_format: Option<&'a str>,
    length: usize,
    granularity_ms: i64,
    gap_count: usize,
}

fn ingest(cli: &Cli, args: &IngestArgs) -> Outcome {
    let records = parse_dci_log(&args.input, args.dci_format.as_deref())?;
    let series = to_series(&records, granularity_ms(args.granularity))?.with_label(&args.label);
    let default_name = format!(
        "{}_{}",
        args.label.to_ascii_lowercase(),
        format!("{:?}", args.granularity).to_ascii_lowercase()
    );
    let name = args.name.clone().unwrap_or(default_name);

    let mut rec = Recorder::new("ingest", &cli.out, args)?;
    rec.input(&args.input);
    write_series(&mut rec, &name, &series)?;
    rec.write_json(
        "ingest_summary.json",
        &IngestSummary {
            records: records.len(),
            dci_format: args.dci_format.as_deref(),
            length: series.len(),
            granularity_ms: series.granularity_ms,
            gap_count: series.gap_count,
        },
    )?;
    rec.finish()?;
    println!(
        "ingested {} records into {} points ({} empty) -> {}",
        records.len(),
        series.len(),
        series.gap_count,
        cli.out.join(format!("{name}.csv")).display()
    );
    Ok(())
}

fn write_similarity(rec: &mut Recorder, report: &SimilarityReport) -> Outcome {
    rec.write_json("similarity.json", report)?;
    let rows = report
        .cdf
        .iter()
        .map(|p| vec![p.value.to_string(), p.cdf_a.to_string(), p.cdf_b.to_string()]);
    let text = csv_text(&["value", "cdf_a", "cdf_b"], rows)?;
    rec.write_text("cdf.csv", &text)?;
    Ok(())
}

fn synth(cli: &Cli, args: &SynthArgs) -> Outcome {
    let reference = read_series(&args.reference)?;
    let config = match &cli.config {
        Some(path) => read_json::<SynthConfig>(path)?,
        None => SynthConfig {
            seed: cli.seed.unwrap_or(0),
            block_len: args.block_len,
            jitter_std: args.jitter,
            target_len: args.target_len.unwrap_or(reference.len()),
        },
    };
    let surrogate = generate_surrogate(&reference, &config)?.with_label(&args.label);
    let similarity = similarity_report(&reference, &surrogate, args.bins)?;

    let mut rec = Recorder::new("synth", &cli.out, &config)?;
    rec.input(&args.reference);
    write_series(&mut rec, &args.name, &surrogate)?;
    write_similarity(&mut rec, &similarity)?;
    rec.finish()?;
    println!(
        "surrogate of {} points, KS statistic {:.4}",
        surrogate.len(),
        similarity.ks_statistic
    );
    Ok(())
}

fn load_grid(grid_file: Option<&Path>, preset: &str, statistical_only: bool, seed: Option<u64>) -> Outcome<Vec<ModelSpec>> {
    let mut grid = match grid_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_grid(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => preset.parse::<Preset>()?.grid(),
    };
    if statistical_only {
        grid.retain(|s| s.kind() != ModelKind::MLP);
        if grid.is_empty() {
            return Err(usage("grid has no statistical models"));
        }
    }
    if let Some(seed) = seed {
        for (i, spec) in grid.iter_mut().enumerate() {
            if spec.kind() == ModelKind::MLP {
                spec.seed = derive_seed(seed, i as u64);
            }
        }
    }
    Ok(grid)
}

#[derive(Serialize)]
struct ForecastReports<'a> {
    series: String,
    train_fraction: f64,
    ranked: &'a [prbshare_core::forecast::FitReport],
    failures: &'a [prbshare_core::forecast::FailedSpec],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectedModel {
    pub spec: ModelSpec,
    pub rmse: f64,
    pub train_len: usize,
    pub test_len: usize,
    /// Statistics of the walk-forward predictions over the test segment.
    pub predicted_stats: DemandStats,
    /// Statistics of the observed test segment.
    pub observed_stats: DemandStats,
}

fn forecast(cli: &Cli, args: &ForecastArgs) -> Outcome {
    let series = read_series(&args.series)?;
    check_series_len(&series)?;
    let grid_file = args.grid.as_deref().or(cli.config.as_deref());
    let grid = load_grid(grid_file, &args.preset, args.statistical_only, cli.seed)?;
    let split = SplitConfig {
        train_fraction: args.train_fraction,
    };
    split.validate()?;

    let outcome = grid_search(&series, &grid, split)?;
    let mut rec = Recorder::new("forecast", &cli.out, &(&grid, split))?;
    rec.input(&args.series);
    rec.write_json(
        "reports.json",
        &ForecastReports {
            series: series.label.clone(),
            train_fraction: split.train_fraction,
            ranked: &outcome.ranked,
            failures: &outcome.failures,
        },
    )?;

    let rows = outcome.ranked.iter().enumerate().map(|(i, r)| {
        vec![
            (i + 1).to_string(),
            r.spec.kind().to_string(),
            r.spec.params_key(),
            r.rmse.to_string(),
            r.train_len.to_string(),
            r.test_len.to_string(),
        ]
    });
    let text = csv_text(&["rank", "kind", "params", "rmse", "train_len", "test_len"], rows)?;
    rec.write_text("rmse_comparison.csv", &text)?;

    let mut rows = Vec::new();
    for (i, r) in outcome.ranked.iter().enumerate() {
        for (j, p) in r.predictions.iter().enumerate() {
            let t = r.train_len + j;
            rows.push(vec![
                (i + 1).to_string(),
                r.spec.kind().to_string(),
                t.to_string(),
                series.values[t].to_string(),
                p.to_string(),
            ]);
        }
    }
    let text = csv_text(&["rank", "kind", "t_index", "observed", "predicted"], rows)?;
    rec.write_text("predictions.csv", &text)?;

    if args.select {
        let best = outcome.ranked.first().ok_or_else(|| {
            runtime(anyhow!(
                "every model failed: {}",
                outcome
                    .failures
                    .iter()
                    .map(|f| format!("{} ({})", f.spec, f.reason))
                    .collect::<Vec<_>>()
                    .join("; ")
            ))
        })?;
        let selected = SelectedModel {
            spec: best.spec.clone(),
            rmse: best.rmse,
            train_len: best.train_len,
            test_len: best.test_len,
            predicted_stats: stats_from_values(&best.predictions)?,
            observed_stats: stats_from_values(&series.values[best.train_len..])?,
        };
        rec.write_json("selected_model.json", &selected)?;
        let predicted = PrbSeries::new(
            series.start_time_ms + best.train_len as i64 * series.granularity_ms,
            series.granularity_ms,
            best.predictions.clone(),
            format!("{} predicted", series.label),
        )?;
        write_series(&mut rec, "predicted", &predicted)?;
    }
    rec.finish()?;

    println!("{:<6} {:<6} {:>10}  params", "rank", "kind", "rmse");
    for (i, r) in outcome.ranked.iter().enumerate() {
        println!("{:<6} {:<6} {:>10.4}  {}", i + 1, r.spec.kind().to_string(), r.rmse, r.spec.params_key());
    }
    for f in &outcome.failures {
        println!("failed {}: {}", f.spec, f.reason);
    }
    Ok(())
}

#[derive(Serialize)]
struct AllocationOutput {
    problem: AllocationProblem,
    result: AllocationResult,
    convexity: prbshare_core::allocate::ConvexityReport,
}

fn allocate(cli: &Cli, args: &AllocateArgs) -> Outcome {
    let path = args
        .problem
        .as_deref()
        .or(cli.config.as_deref())
        .ok_or_else(|| usage("allocate needs --problem or --config"))?;
    let problem: AllocationProblem = read_json(path)?;
    let result = solve(&problem)?;
    let convexity = convexity_check(&problem, cli.seed.unwrap_or(0))?;

    let mut rec = Recorder::new("allocate", &cli.out, &problem)?;
    rec.input(path);
    rec.write_json(
        "allocation.json",
        &AllocationOutput {
            problem,
            result,
            convexity,
        },
    )?;
    rec.finish()?;
    println!(
        "n_a = {}, n_b = {}, objective = {:.6}, fairness = {:.4}{}",
        result.n_a,
        result.n_b,
        result.objective,
        result.fairness,
        if result.constraint_active { " (pool exhausted)" } else { "" }
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatsPair {
    pub stats_a: DemandStats,
    pub stats_b: DemandStats,
}

#[derive(Serialize)]
struct SweepEntry {
    pool_size: f64,
    variant: Variant,
    /// Gammas at which both networks receive the same non-zero share.
    equal_share_gammas: Vec<f64>,
    /// Number of gammas at which neither network is starved.
    both_served: usize,
    file: String,
}

#[derive(Serialize)]
struct SweepConfig<'a> {
    stats: StatsPair,
    pools: &'a [f64],
    variants: &'a [Variant],
    gamma_step: f64,
    integer_mode: bool,
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Outcome {
    let mut inputs = Vec::new();
    let stats_file = args.stats.as_deref().or(cli.config.as_deref());
    let stats = match (stats_file, &args.lte, &args.nr) {
        (Some(path), _, _) => {
            inputs.push(path.to_path_buf());
            let pair: StatsPair = read_json(path)?;
            pair.stats_a.validate()?;
            pair.stats_b.validate()?;
            pair
        }
        (None, Some(lte), Some(nr)) => {
            inputs.push(lte.clone());
            inputs.push(nr.clone());
            StatsPair {
                stats_a: stats_from_series(&read_series(lte)?)?,
                stats_b: stats_from_series(&read_series(nr)?)?,
            }
        }
        _ => return Err(usage("sweep needs --stats, or both --lte and --nr")),
    };

    let demand_a = args.demand_lte.as_ref().or(args.lte.as_ref());
    let demand_b = args.demand_nr.as_ref().or(args.nr.as_ref());
    let demands = match (demand_a, demand_b) {
        (Some(a), Some(b)) => {
            for p in [a, b] {
                if !inputs.contains(p) {
                    inputs.push(p.clone());
                }
            }
            Some((read_series(a)?.values, read_series(b)?.values))
        }
        (None, None) => None,
        _ => return Err(usage("surplus evaluation needs demand for both networks")),
    };

    let variants = args
        .variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.pool.is_empty() || variants.is_empty() {
        return Err(usage("need at least one pool size and one variant"));
    }
    let gammas = gamma_grid(args.gamma_step)?;
    let integer_mode = !args.continuous;

    let config = SweepConfig {
        stats,
        pools: &args.pool,
        variants: &variants,
        gamma_step: args.gamma_step,
        integer_mode,
    };
    let mut rec = Recorder::new("sweep", &cli.out, &config)?;
    for p in &inputs {
        rec.input(p);
    }

    let mut entries = Vec::new();
    for &pool in &args.pool {
        for &variant in &variants {
            let mut rows = Vec::with_capacity(gammas.len());
            let mut equal_share_gammas = Vec::new();
            let mut both_served = 0;
            for &gamma in &gammas {
                let problem = AllocationProblem {
                    pool_size: pool,
                    gamma,
                    variant,
                    integer_mode,
                    stats_a: stats.stats_a,
                    stats_b: stats.stats_b,
                };
                let alloc = solve(&problem)?;
                let surplus = match &demands {
                    Some((a, b)) => {
                        let r: EvaluationRecord = evaluate(&problem, &alloc, a, b)?;
                        (r.surplus_a.to_string(), r.surplus_b.to_string())
                    }
                    None => (String::new(), String::new()),
                };
                if alloc.n_a > 0.0 && alloc.n_b > 0.0 {
                    both_served += 1;
                }
                if alloc.n_a > 0.0 && alloc.fairness == 1.0 {
                    equal_share_gammas.push(gamma);
                }
                rows.push(vec![
                    gamma.to_string(),
                    alloc.n_a.to_string(),
                    alloc.n_b.to_string(),
                    alloc.objective.to_string(),
                    alloc.fairness.to_string(),
                    surplus.0,
                    surplus.1,
                    alloc.constraint_active.to_string(),
                ]);
            }
            let file = format!("sweep_N{pool}_{variant}.csv");
            let text = csv_text(
                &[
                    "gamma",
                    "n_a",
                    "n_b",
                    "objective",
                    "fairness",
                    "surplus_a",
                    "surplus_b",
                    "constraint_active",
                ],
                rows,
            )?;
            rec.write_text(&file, &text)?;
            entries.push(SweepEntry {
                pool_size: pool,
                variant,
                equal_share_gammas,
                both_served,
                file,
            });
        }
    }
    rec.write_json("sweep_summary.json", &serde_json::json!({ "stats": stats, "sweeps": entries }))?;
    rec.finish()?;

    for e in &entries {
        let span = match (e.equal_share_gammas.first(), e.equal_share_gammas.last()) {
            (Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
            _ => "none".into(),
        };
        println!(
            "N={} {}: equal share for gamma in {span}, both served at {} gammas -> {}",
            e.pool_size, e.variant, e.both_served, e.file
        );
    }
    Ok(())
}

/// What `simulate` stores so a transcript can be re-verified later.
#[derive(Debug, Serialize, Deserialize)]
pub struct StoredSimulation {
    pub granularity_ms: i64,
    pub config: LoopConfig,
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Outcome {
    let seed = cli
        .seed
        .ok_or_else(|| usage("simulate requires --seed for reproducibility"))?;
    let lte = read_series(&args.lte)?;
    let nr = read_series(&args.nr)?;

    let mut config = match &cli.config {
        Some(path) => read_json::<LoopConfig>(path)?,
        None => LoopConfig {
            retrain_every: 168,
            allocate_every: 24,
            pool_size: 40.0,
            gamma: 0.5,
            variant: LoopVariant::AutoFairest,
            grid: load_grid(args.grid.as_deref(), &args.preset, true, None)?,
            seed,
            warmup: ((0.66 * lte.len() as f64).floor() as usize).max(prbshare_core::control::MIN_WARMUP),
            integer_mode: true,
            split: SplitConfig::default(),
            stats_source: StatsSource::Predicted,
        },
    };
    config.seed = seed;
    if cli.config.is_some() && args.grid.is_some() {
        config.grid = load_grid(args.grid.as_deref(), &args.preset, false, None)?;
    }
    if let Some(v) = args.retrain_every {
        config.retrain_every = v;
    }
    if let Some(v) = args.allocate_every {
        config.allocate_every = v;
    }
    if let Some(v) = args.pool {
        config.pool_size = v;
    }
    if let Some(v) = args.gamma {
        config.gamma = v;
    }
    if let Some(v) = &args.variant {
        config.variant = v.parse()?;
    }
    if let Some(v) = args.warmup {
        config.warmup = v;
    }
    if args.observed_stats {
        config.stats_source = StatsSource::Observed;
    }
    if args.continuous {
        config.integer_mode = false;
    }

    let transcript = run_loop(&lte, &nr, &config)?;
    let summary = transcript_report(&transcript)?;

    let mut rec = Recorder::new("simulate", &cli.out, &config)?;
    rec.input(&args.lte);
    rec.input(&args.nr);
    let path = rec.output_path("transcript.jsonl");
    transcript.write_jsonl(&path).map_err(runtime)?;
    let rows = transcript.evaluations.iter().map(|e| {
        vec![
            e.epoch.to_string(),
            e.window_len.to_string(),
            e.variant.to_string(),
            e.record.allocation.n_a.to_string(),
            e.record.allocation.n_b.to_string(),
            e.record.fairness.to_string(),
            e.record.surplus_a.to_string(),
            e.record.surplus_b.to_string(),
        ]
    });
    let text = csv_text(
        &["epoch", "window_len", "variant", "n_a", "n_b", "fairness", "surplus_a", "surplus_b"],
        rows,
    )?;
    rec.write_text("evaluations.csv", &text)?;
    rec.write_json("summary.json", &summary)?;
    rec.write_json(
        "simulation.json",
        &StoredSimulation {
            granularity_ms: lte.granularity_ms,
            config: config.clone(),
        },
    )?;
    rec.finish()?;

    println!(
        "{} policies, {} allocations; mean surplus LTE {:.4}, NR {:.4}; mean fairness {:.4}",
        transcript.count(MessageKind::A1Policy),
        summary.allocations,
        summary.mean_surplus_a,
        summary.mean_surplus_b,
        summary.mean_fairness
    );
    Ok(())
}

fn report(cli: &Cli, args: &ReportArgs) -> Outcome {
    if let Some(paths) = &args.compare {
        let (a, b) = (read_series(&paths[0])?, read_series(&paths[1])?);
        let similarity = similarity_report(&a, &b, args.bins)?;
        let mut rec = Recorder::new("report", &cli.out, &args)?;
        rec.input(&paths[0]);
        rec.input(&paths[1]);
        write_similarity(&mut rec, &similarity)?;
        rec.finish()?;
        println!(
            "KS statistic {:.4}; means {:.3} vs {:.3}, variances {:.3} vs {:.3}, maxima {:.3} vs {:.3}",
            similarity.ks_statistic,
            similarity.a.mean,
            similarity.b.mean,
            similarity.a.variance,
            similarity.b.variance,
            similarity.a.maximum,
            similarity.b.maximum
        );
        return Ok(());
    }

    let path = args
        .transcript
        .as_deref()
        .ok_or_else(|| usage("report needs --transcript or --compare"))?;
    let transcript = Transcript::read_jsonl(path)?;
    let summary = transcript_report(&transcript)?;
    let mut rec = Recorder::new("report", &cli.out, &args)?;
    rec.input(path);

    let mut causality = None;
    if args.verify {
        let stored_path = cli
            .config
            .as_deref()
            .ok_or_else(|| usage("--verify needs --config pointing at simulation.json"))?;
        rec.input(stored_path);
        let stored: StoredSimulation = read_json(stored_path)?;
        let mismatched = verify_causality(&transcript, stored.granularity_ms, &stored.config)?;
        causality = Some(serde_json::json!({
            "policies_checked": transcript.count(MessageKind::A1Policy),
            "mismatched_epochs": mismatched,
        }));
        if !mismatched.is_empty() {
            rec.write_json("report.json", &serde_json::json!({ "summary": summary, "causality": causality }))?;
            rec.finish()?;
            return Err(runtime(anyhow!(
                "policies at epochs {mismatched:?} do not follow from the telemetry before them"
            )));
        }
    }
    rec.write_json("report.json", &serde_json::json!({ "summary": summary, "causality": causality }))?;
    rec.finish()?;
    println!("{}", serde_json::to_string_pretty(&summary).map_err(runtime)?);
    Ok(())
}
