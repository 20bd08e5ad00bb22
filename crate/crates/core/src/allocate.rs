//! Intent-weighted partitioning of a shared PRB pool between two networks.
//!
//! Both objectives are separable convex quadratics in the allocations. With
//! per-network coefficients `(m, k)` each can be written as
//!
//! ```text
//! J = 1 + g * n_a * (k_a * n_a - 2 * m_a) + (1 - g) * n_b * (k_b * n_b - 2 * m_b)
//! ```
//!
//! * max-demand objective: `m = 1/M`, `k = 1/M^2` where `M` is the peak demand;
//! * expected objective: `m ~ E[1/D]`, `k ~ E[1/D^2]` from second-order Taylor
//!   expansions around the mean demand.
//!
//! The unconstrained minimizer of each term is `m/k`. When the two targets do
//! not fit in the pool, the optimum lies on `n_a + n_b = N` and the remaining
//! one-dimensional quadratic has a closed-form vertex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, PrbSeries};

/// Mean, variance and peak of a demand profile, in PRBs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub mean: f64,
    pub variance: f64,
    pub maximum: f64,
}

impl DemandStats {
    pub fn new(mean: f64, variance: f64, maximum: f64) -> Result<Self> {
        let s = DemandStats {
            mean,
            variance,
            maximum,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean.is_finite() && self.mean > 0.0) {
            return Err(Error::invalid(format!("mean demand must be > 0, got {}", self.mean)));
        }
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::invalid(format!("variance must be >= 0, got {}", self.variance)));
        }
        if !(self.maximum.is_finite() && self.maximum >= self.mean) {
            return Err(Error::invalid(format!(
                "maximum {} must be finite and >= mean {}",
                self.maximum, self.mean
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(alias = "Max")]
    Max,
    #[serde(alias = "Avg")]
    Avg,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Max => "max",
            Variant::Avg => "avg",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(Variant::Max),
            "avg" => Ok(Variant::Avg),
            other => Err(Error::invalid(format!("unknown variant '{other}' (expected max or avg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationProblem {
    pub pool_size: f64,
    /// Priority of network A (LTE); `1 - gamma` goes to B (NR).
    pub gamma: f64,
    pub variant: Variant,
    #[serde(default)]
    pub integer_mode: bool,
    pub stats_a: DemandStats,
    pub stats_b: DemandStats,
}

impl AllocationProblem {
    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma)?;
        if !(self.pool_size.is_finite() && self.pool_size > 0.0) {
            return Err(Error::invalid(format!("pool size must be > 0, got {}", self.pool_size)));
        }
        self.stats_a.validate()?;
        self.stats_b.validate()
    }

    /// `(m, k)` for each network.
    pub fn coefficients(&self) -> Result<[(f64, f64); 2]> {
        Ok(match self.variant {
            Variant::Max => [peak_coefficients(&self.stats_a), peak_coefficients(&self.stats_b)],
            Variant::Avg => [inv_moments(&self.stats_a)?, inv_moments(&self.stats_b)?],
        })
    }
}

pub fn validate_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie strictly inside (0, 1), got {gamma}")));
    }
    Ok(())
}

fn peak_coefficients(stats: &DemandStats) -> (f64, f64) {
    (1.0 / stats.maximum, 1.0 / (stats.maximum * stats.maximum))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub n_a: f64,
    pub n_b: f64,
    pub objective: f64,
    pub fairness: f64,
    pub constraint_active: bool,
}

/// Population mean, variance and maximum of a strictly positive series.
pub fn stats_from_series(series: &PrbSeries) -> Result<DemandStats> {
    stats_from_values(&series.values)
}

pub fn stats_from_values(values: &[f64]) -> Result<DemandStats> {
    if values.is_empty() {
        return Err(Error::invalid("demand series is empty"));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(Error::invalid(format!("demand value {v} at index {i} is not > 0")));
    }
    DemandStats::new(series::mean(values), series::variance(values), series::max(values))
}

/// Second-order Taylor approximations `(E[1/D], E[1/D^2])`.
pub fn inv_moments(stats: &DemandStats) -> Result<(f64, f64)> {
    let (mu, var) = (stats.mean, stats.variance);
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::invalid(format!("mean demand must be > 0, got {mu}")));
    }
    let m = 1.0 / mu + var / mu.powi(3);
    let k = 1.0 / (mu * mu) + 3.0 * var / mu.powi(4);
    Ok((m, k))
}

pub fn objective(problem: &AllocationProblem, n_a: f64, n_b: f64) -> Result<f64> {
    let g = problem.gamma;
    Ok(match problem.variant {
        Variant::Max => {
            let (ma, mb) = (problem.stats_a.maximum, problem.stats_b.maximum);
            g * ((n_a - ma) / ma).powi(2) + (1.0 - g) * ((n_b - mb) / mb).powi(2)
        }
        Variant::Avg => {
            let [(m_a, k_a), (m_b, k_b)] = problem.coefficients()?;
            1.0 + g * n_a * (n_a * k_a - 2.0 * m_a) + (1.0 - g) * n_b * (n_b * k_b - 2.0 * m_b)
        }
    })
}

/// Minimizer of the objective restricted to `n_a + n_b = total`, clipped
/// to `[0, total]`.
fn line_vertex(gamma: f64, [(m_a, k_a), (m_b, k_b)]: [(f64, f64); 2], total: f64) -> f64 {
    let num = gamma * m_a + (1.0 - gamma) * (k_b * total - m_b);
    let den = gamma * k_a + (1.0 - gamma) * k_b;
    (num / den).clamp(0.0, total)
}

/// Exact minimizer from the KKT conditions; in integer mode, the best lattice
/// point next to it.
pub fn solve(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let coef = problem.coefficients()?;
    let targets = [coef[0].0 / coef[0].1, coef[1].0 / coef[1].1];

    let (n_a, n_b, active) = if problem.integer_mode {
        solve_integer(problem, coef, targets)?
    } else {
        let pool = problem.pool_size;
        let ta = targets[0].clamp(0.0, pool);
        let tb = targets[1].clamp(0.0, pool);
        if ta + tb <= pool {
            (ta, tb, false)
        } else {
            let a = line_vertex(problem.gamma, coef, pool);
            (a, pool - a, true)
        }
    };

    Ok(AllocationResult {
        n_a,
        n_b,
        objective: objective(problem, n_a, n_b)?,
        fairness: fairness_or_equal(n_a, n_b),
        constraint_active: active,
    })
}

fn solve_integer(
    problem: &AllocationProblem,
    coef: [(f64, f64); 2],
    targets: [f64; 2],
) -> Result<(f64, f64, bool)> {
    let pool = problem.pool_size.floor();
    let ta = targets[0].clamp(0.0, pool);
    let tb = targets[1].clamp(0.0, pool);
    let active = ta + tb > pool;

    let mut candidates = Vec::with_capacity(8);
    for a in [ta.floor(), ta.ceil()] {
        for b in [tb.floor(), tb.ceil()] {
            if a + b <= pool {
                candidates.push((a, b));
            }
        }
    }
    let v = line_vertex(problem.gamma, coef, pool);
    for a in [v.floor(), v.ceil()] {
        candidates.push((a, pool - a));
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for (a, b) in candidates {
        let j = objective(problem, a, b)?;
        let better = match best {
            None => true,
            Some((ba, bb, bj)) => j < bj || (j == bj && (a > ba || (a == ba && b > bb))),
        };
        if better {
            best = Some((a, b, j));
        }
    }
    let (a, b, _) = best.expect("candidate set is never empty");
    Ok((a, b, active && a + b == pool))
}

/// Average normalized surplus (> 0) or deficit (< 0) of a fixed allocation
/// against a demand sequence.
pub fn surplus_deficit(n_star: f64, demands: &[f64]) -> Result<f64> {
    if demands.is_empty() {
        return Err(Error::invalid("no demands to evaluate against"));
    }
    if let Some((i, d)) = demands.iter().enumerate().find(|(_, d)| d.is_nan() || **d <= 0.0) {
        return Err(Error::invalid(format!("demand {d} at index {i} is not > 0")));
    }
    Ok(demands.iter().map(|d| (n_star - d) / d).sum::<f64>() / demands.len() as f64)
}

/// Jain's fairness index for two allocations.
pub fn jain_index(n_a: f64, n_b: f64) -> Result<f64> {
    let sq = n_a * n_a + n_b * n_b;
    if sq == 0.0 {
        return Err(Error::invalid("fairness of an empty allocation is undefined"));
    }
    Ok((n_a + n_b).powi(2) / (2.0 * sq))
}

/// Jain's index, taking an all-zero allocation as equal (index 1).
fn fairness_or_equal(n_a: f64, n_b: f64) -> f64 {
    jain_index(n_a, n_b).unwrap_or(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub gamma: f64,
    pub pool_size: f64,
    pub surplus_a: f64,
    pub surplus_b: f64,
    pub fairness: f64,
    pub allocation: AllocationResult,
}

pub fn evaluate(
    problem: &AllocationProblem,
    allocation: &AllocationResult,
    demands_a: &[f64],
    demands_b: &[f64],
) -> Result<EvaluationRecord> {
    Ok(EvaluationRecord {
        gamma: problem.gamma,
        pool_size: problem.pool_size,
        surplus_a: surplus_deficit(allocation.n_a, demands_a)?,
        surplus_b: surplus_deficit(allocation.n_b, demands_b)?,
        fairness: allocation.fairness,
        allocation: *allocation,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn gamma_sweep(
    stats_a: DemandStats,
    stats_b: DemandStats,
    pool_size: f64,
    variant: Variant,
    integer_mode: bool,
    gammas: &[f64],
    demands_a: &[f64],
    demands_b: &[f64],
) -> Result<Vec<EvaluationRecord>> {
    if gammas.is_empty() {
        return Err(Error::invalid("no gamma values to sweep"));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let problem = AllocationProblem {
                pool_size,
                gamma,
                variant,
                integer_mode,
                stats_a,
                stats_b,
            };
            let allocation = solve(&problem)?;
            evaluate(&problem, &allocation, demands_a, demands_b)
        })
        .collect()
}

/// `step, 2*step, ...` strictly below 1, rounded to 12 decimals so that
/// e.g. 0.01 * 80 prints as 0.8.
pub fn gamma_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::invalid(format!("gamma step must lie in (0, 1), got {step}")));
    }
    let mut out = Vec::new();
    let mut k = 1u32;
    loop {
        let g = (f64::from(k) * step * 1e12).round() / 1e12;
        if g >= 1.0 {
            break;
        }
        out.push(g);
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Analytic second derivatives in `n_a` and `n_b`; the mixed partials
    /// are identically zero.
    pub hessian_diagonal: [f64; 2],
    pub leading_minor: f64,
    pub determinant: f64,
    pub hessian_positive: bool,
    pub segments_checked: usize,
    pub midpoint_violations: usize,
    /// Largest `J(mid) - (J(p) + J(q)) / 2` seen.
    pub worst_midpoint_gap: f64,
    pub convex: bool,
}

pub const MIDPOINT_TOLERANCE: f64 = 1e-9;

/// Sylvester test on the analytic Hessian plus a randomized midpoint check of
/// [`objective`] over feasible segments.
pub fn convexity_check(problem: &AllocationProblem, seed: u64) -> Result<ConvexityReport> {
    problem.validate()?;
    let [(_, k_a), (_, k_b)] = problem.coefficients()?;
    let g = problem.gamma;
    let diag = [2.0 * g * k_a, 2.0 * (1.0 - g) * k_b];
    let det = diag[0] * diag[1];
    let hessian_positive = diag[0] > 0.0 && det > 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = problem.pool_size;
    let mut feasible = || loop {
        let a = rng.random_range(0.0..=pool);
        let b = rng.random_range(0.0..=pool);
        if a + b <= pool {
            return (a, b);
        }
    };
    const SEGMENTS: usize = 100;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..SEGMENTS {
        let (pa, pb) = feasible();
        let (qa, qb) = feasible();
        let mid = objective(problem, (pa + qa) / 2.0, (pb + qb) / 2.0)?;
        let chord = (objective(problem, pa, pb)? + objective(problem, qa, qb)?) / 2.0;
        let gap = mid - chord;
        worst = worst.max(gap);
        if gap > MIDPOINT_TOLERANCE {
            violations += 1;
        }
    }

    Ok(ConvexityReport {
        hessian_diagonal: diag,
        leading_minor: diag[0],
        determinant: det,
        hessian_positive,
        segments_checked: SEGMENTS,
        midpoint_violations: violations,
        worst_midpoint_gap: worst,
        convex: hessian_positive && violations == 0,
    })
}
