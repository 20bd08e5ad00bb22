//! Replayable simulation of the RIC control loop.
//!
//! Epochs are series indices. The first `warmup` values are history the
//! non-real-time controller already holds; the loop then runs over epochs
//! `warmup..n`. At every `retrain_every`-th loop epoch the RAN reports
//! telemetry (O1), the non-real-time role ranks the model grid per network and
//! publishes the winners with the demand statistics of their predictions
//! (A1). At every `allocate_every`-th loop epoch the near-real-time role solves
//! the partition from the latest policy and configures it (E2); the allocation
//! is then scored against the actual demand until the next allocation.
//!
//! A policy published at epoch `e` only ever sees values with index `< e`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocate::{
    evaluate, solve, stats_from_values, validate_gamma, AllocationProblem, AllocationResult, DemandStats,
    EvaluationRecord, Variant,
};
use crate::error::{Error, Result};
use crate::forecast::{grid_search, ModelKind, ModelSpec, SplitConfig};
use crate::series::PrbSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopVariant {
    Max,
    Avg,
    /// Solve both objectives and keep the fairer allocation (ties go to avg).
    #[serde(alias = "auto_fairest", alias = "AutoFairest")]
    AutoFairest,
}

impl std::str::FromStr for LoopVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "max" => Ok(LoopVariant::Max),
            "avg" => Ok(LoopVariant::Avg),
            "autofairest" => Ok(LoopVariant::AutoFairest),
            other => Err(Error::invalid(format!("unknown loop variant '{other}'"))),
        }
    }
}

/// Which demand profile feeds the allocation statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsSource {
    /// Walk-forward predictions of the selected model over its test segment.
    #[default]
    Predicted,
    /// The observed values of that same test segment.
    Observed,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub retrain_every: usize,
    pub allocate_every: usize,
    pub pool_size: f64,
    pub gamma: f64,
    pub variant: LoopVariant,
    pub grid: Vec<ModelSpec>,
    pub seed: u64,
    /// Values available before the first loop epoch.
    pub warmup: usize,
    #[serde(default = "default_true")]
    pub integer_mode: bool,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub stats_source: StatsSource,
}

pub const MIN_WARMUP: usize = 20;

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.allocate_every == 0 {
            return Err(Error::invalid("allocate_every must be >= 1"));
        }
        if self.retrain_every < self.allocate_every {
            return Err(Error::invalid(format!(
                "retrain_every ({}) must be >= allocate_every ({})",
                self.retrain_every, self.allocate_every
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("loop needs a non-empty model grid"));
        }
        if self.warmup < MIN_WARMUP {
            return Err(Error::invalid(format!("warmup must be >= {MIN_WARMUP}, got {}", self.warmup)));
        }
        if !(self.pool_size.is_finite() && self.pool_size > 0.0) {
            return Err(Error::invalid(format!("pool size must be > 0, got {}", self.pool_size)));
        }
        validate_gamma(self.gamma)?;
        self.split.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    O1Telemetry,
    A1Policy,
    E2Allocation,
}

/// Newly reported demand for both networks, covering epochs
/// `start_epoch..start_epoch + lte.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryChunk {
    pub start_epoch: usize,
    pub lte: Vec<f64>,
    pub nr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkPolicy {
    pub model: ModelSpec,
    pub rmse: f64,
    pub stats: DemandStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub lte: NetworkPolicy,
    pub nr: NetworkPolicy,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2Config {
    pub variant: Variant,
    pub allocation: AllocationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    O1Telemetry(TelemetryChunk),
    A1Policy(Policy),
    E2Allocation(E2Config),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub epoch: usize,
    pub payload: Payload,
}

impl ControlMessage {
    fn new(epoch: usize, payload: Payload) -> Self {
        let kind = match payload {
            Payload::O1Telemetry(_) => MessageKind::O1Telemetry,
            Payload::A1Policy(_) => MessageKind::A1Policy,
            Payload::E2Allocation(_) => MessageKind::E2Allocation,
        };
        ControlMessage { kind, epoch, payload }
    }

    pub fn validate(&self) -> Result<()> {
        let matches = matches!(
            (self.kind, &self.payload),
            (MessageKind::O1Telemetry, Payload::O1Telemetry(_))
                | (MessageKind::A1Policy, Payload::A1Policy(_))
                | (MessageKind::E2Allocation, Payload::E2Allocation(_))
        );
        if !matches {
            return Err(Error::invalid(format!(
                "{:?} message at epoch {} carries a mismatched payload",
                self.kind, self.epoch
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochEvaluation {
    pub epoch: usize,
    /// Number of epochs the allocation stayed in force.
    pub window_len: usize,
    pub variant: Variant,
    #[serde(flatten)]
    pub record: EvaluationRecord,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<ControlMessage>,
    pub evaluations: Vec<EpochEvaluation>,
}

/// Fixed derivation of per-network model seeds from the loop seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn network_policy(history: &[f64], granularity_ms: i64, stream: u64, config: &LoopConfig) -> Result<NetworkPolicy> {
    let series = PrbSeries::new(0, granularity_ms, history.to_vec(), "history")?;
    let seed = derive_seed(config.seed, stream);
    let grid: Vec<ModelSpec> = config
        .grid
        .iter()
        .map(|s| ModelSpec {
            seed: if s.kind() == ModelKind::MLP { seed } else { s.seed },
            ..s.clone()
        })
        .collect();
    let outcome = grid_search(&series, &grid, config.split)?;
    let best = outcome.ranked.first().ok_or_else(|| {
        let reasons: Vec<_> = outcome.failures.iter().map(|f| format!("{}: {}", f.spec, f.reason)).collect();
        Error::invalid(format!("no model in the grid succeeded ({})", reasons.join("; ")))
    })?;
    let stats = match config.stats_source {
        StatsSource::Predicted => stats_from_values(&best.predictions)?,
        StatsSource::Observed => stats_from_values(&history[best.train_len..])?,
    };
    Ok(NetworkPolicy {
        model: best.spec.clone(),
        rmse: best.rmse,
        stats,
    })
}

/// The non-real-time role: model selection and demand statistics from the
/// data reported so far.
pub fn compute_policy(lte: &[f64], nr: &[f64], granularity_ms: i64, config: &LoopConfig) -> Result<Policy> {
    Ok(Policy {
        lte: network_policy(lte, granularity_ms, 0, config)?,
        nr: network_policy(nr, granularity_ms, 1, config)?,
        gamma: config.gamma,
    })
}

/// The near-real-time role: solve the partition for the current policy.
pub fn allocate_from_policy(policy: &Policy, config: &LoopConfig) -> Result<(AllocationProblem, E2Config)> {
    let problem = |variant| AllocationProblem {
        pool_size: config.pool_size,
        gamma: policy.gamma,
        variant,
        integer_mode: config.integer_mode,
        stats_a: policy.lte.stats,
        stats_b: policy.nr.stats,
    };
    let pick = |variant| -> Result<(AllocationProblem, E2Config)> {
        let p = problem(variant);
        let allocation = solve(&p)?;
        Ok((p, E2Config { variant, allocation }))
    };
    match config.variant {
        LoopVariant::Max => pick(Variant::Max),
        LoopVariant::Avg => pick(Variant::Avg),
        LoopVariant::AutoFairest => {
            let max = pick(Variant::Max)?;
            let avg = pick(Variant::Avg)?;
            if max.1.allocation.fairness > avg.1.allocation.fairness {
                Ok(max)
            } else {
                Ok(avg)
            }
        }
    }
}

pub fn run_loop(lte: &PrbSeries, nr: &PrbSeries, config: &LoopConfig) -> Result<Transcript> {
    config.validate()?;
    if lte.len() != nr.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: LTE {} vs NR {}",
            lte.len(),
            nr.len()
        )));
    }
    if lte.granularity_ms != nr.granularity_ms {
        return Err(Error::invalid(format!(
            "series granularities differ: LTE {} ms vs NR {} ms",
            lte.granularity_ms, nr.granularity_ms
        )));
    }
    let n = lte.len();
    if n < MIN_WARMUP {
        return Err(Error::InsufficientHistory {
            needed: MIN_WARMUP,
            available: n,
        });
    }
    if config.warmup >= n {
        return Err(Error::invalid(format!("warmup {} leaves no loop epochs in {n} values", config.warmup)));
    }

    let mut transcript = Transcript::default();
    let mut reported = 0;
    let mut policy: Option<Policy> = None;
    for epoch in config.warmup..n {
        let k = epoch - config.warmup;
        if k.is_multiple_of(config.retrain_every) {
            transcript.messages.push(ControlMessage::new(
                epoch,
                Payload::O1Telemetry(TelemetryChunk {
                    start_epoch: reported,
                    lte: lte.values[reported..epoch].to_vec(),
                    nr: nr.values[reported..epoch].to_vec(),
                }),
            ));
            reported = epoch;
            let p = compute_policy(&lte.values[..epoch], &nr.values[..epoch], lte.granularity_ms, config)?;
            transcript
                .messages
                .push(ControlMessage::new(epoch, Payload::A1Policy(p.clone())));
            policy = Some(p);
        }
        if k.is_multiple_of(config.allocate_every) {
            let p = policy.as_ref().expect("first loop epoch always publishes a policy");
            let (problem, e2) = allocate_from_policy(p, config)?;
            let end = (epoch + config.allocate_every).min(n);
            let record = evaluate(&problem, &e2.allocation, &lte.values[epoch..end], &nr.values[epoch..end])?;
            transcript.evaluations.push(EpochEvaluation {
                epoch,
                window_len: end - epoch,
                variant: e2.variant,
                record,
            });
            transcript
                .messages
                .push(ControlMessage::new(epoch, Payload::E2Allocation(e2)));
        }
    }
    Ok(transcript)
}

/// Recomputes every A1 policy from the O1 telemetry that precedes it in the
/// transcript. Returns the epochs whose recomputed policy differs.
pub fn verify_causality(transcript: &Transcript, granularity_ms: i64, config: &LoopConfig) -> Result<Vec<usize>> {
    let mut lte = Vec::new();
    let mut nr = Vec::new();
    let mut mismatched = Vec::new();
    for msg in &transcript.messages {
        msg.validate()?;
        match &msg.payload {
            Payload::O1Telemetry(chunk) => {
                if chunk.start_epoch != lte.len() || chunk.lte.len() != chunk.nr.len() {
                    return Err(Error::invalid(format!(
                        "telemetry at epoch {} is not contiguous with earlier reports",
                        msg.epoch
                    )));
                }
                if chunk.start_epoch + chunk.lte.len() > msg.epoch {
                    return Err(Error::invalid(format!(
                        "telemetry at epoch {} reports future data",
                        msg.epoch
                    )));
                }
                lte.extend_from_slice(&chunk.lte);
                nr.extend_from_slice(&chunk.nr);
            }
            Payload::A1Policy(policy) => {
                let recomputed = compute_policy(&lte, &nr, granularity_ms, config)?;
                if &recomputed != policy || lte.len() > msg.epoch {
                    mismatched.push(msg.epoch);
                }
            }
            Payload::E2Allocation(_) => {}
        }
    }
    Ok(mismatched)
}

impl Transcript {
    pub fn count(&self, kind: MessageKind) -> usize {
        self.messages.iter().filter(|m| m.kind == kind).count()
    }

    /// One JSON document per line, one line per message.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads the message lines back; evaluations are not part of the
    /// message stream and come back empty.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut messages = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let msg: ControlMessage = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                line: i as u64 + 1,
                reason: e.to_string(),
            })?;
            msg.validate()?;
            messages.push(msg);
        }
        Ok(Transcript {
            messages,
            evaluations: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub allocations: usize,
    pub mean_surplus_a: f64,
    pub mean_surplus_b: f64,
    pub mean_fairness: f64,
    pub message_counts: BTreeMap<MessageKind, usize>,
    /// Per network, how often each model family was selected.
    pub selected_models: BTreeMap<String, BTreeMap<ModelKind, usize>>,
    pub variant_counts: BTreeMap<String, usize>,
}

/// Aggregates a transcript. Allocation statistics come from the evaluation
/// records when present, otherwise from the E2 messages alone (surpluses
/// then read as NaN).
pub fn transcript_report(transcript: &Transcript) -> Result<TranscriptSummary> {
    if transcript.messages.is_empty() {
        return Err(Error::invalid("transcript is empty"));
    }
    let mut message_counts = BTreeMap::new();
    let mut selected_models: BTreeMap<String, BTreeMap<ModelKind, usize>> = BTreeMap::new();
    let mut variant_counts = BTreeMap::new();
    let mut e2_fairness = Vec::new();
    for m in &transcript.messages {
        *message_counts.entry(m.kind).or_insert(0) += 1;
        match &m.payload {
            Payload::A1Policy(p) => {
                for (net, np) in [("lte", &p.lte), ("nr", &p.nr)] {
                    *selected_models
                        .entry(net.to_string())
                        .or_default()
                        .entry(np.model.kind())
                        .or_insert(0) += 1;
                }
            }
            Payload::E2Allocation(e2) => {
                *variant_counts.entry(e2.variant.to_string()).or_insert(0) += 1;
                e2_fairness.push(e2.allocation.fairness);
            }
            Payload::O1Telemetry(_) => {}
        }
    }

    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
        if c == 0 {
            f64::NAN
        } else {
            s / c as f64
        }
    };
    let evals = &transcript.evaluations;
    let (allocations, sa, sb, fair) = if evals.is_empty() {
        (
            e2_fairness.len(),
            f64::NAN,
            f64::NAN,
            mean(&mut e2_fairness.iter().copied()),
        )
    } else {
        (
            evals.len(),
            mean(&mut evals.iter().map(|e| e.record.surplus_a)),
            mean(&mut evals.iter().map(|e| e.record.surplus_b)),
            mean(&mut evals.iter().map(|e| e.record.fairness)),
        )
    };

    Ok(TranscriptSummary {
        allocations,
        mean_surplus_a: sa,
        mean_surplus_b: sb,
        mean_fairness: fair,
        message_counts,
        selected_models,
        variant_counts,
    })
}
