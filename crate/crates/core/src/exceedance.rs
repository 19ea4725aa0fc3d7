//! Brute-force Monte Carlo estimates of `P(max_i X(t_i) + g(t_i) > u)` on
//! grids, grid-bias extrapolation, and ratio reports against asymptotics.

use serde::{Deserialize, Serialize};

use crate::asymptotics::ApproxResult;
use crate::error::{ensure, Error, Result};
use crate::rng::{map_chunks, substream};
use crate::sim::{strided_max, CorrelationModel, Grid, PathSampler};

/// Events needed before an estimate is used in a ratio report.
pub const MIN_REPORT_EVENTS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub n: u64,
    pub grid_step: f64,
    pub seed: u64,
}

impl MCEstimate {
    fn from_hits(hits: u64, n: u64, grid_step: f64, seed: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            p_hat: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            grid_step,
            seed,
        }
    }

    pub fn hits(&self) -> f64 {
        (self.p_hat * self.n as f64).round()
    }
}

/// Hit counts `[level][threshold]` on nested sub-grids of `grid`, all
/// levels and thresholds sharing each simulated path.
fn nested_counts(
    model: &CorrelationModel,
    trend: &[f64],
    us: &[f64],
    grid: &Grid,
    strides: &[usize],
    n: u64,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    grid.require_same_len(trend.len(), "trend")?;
    ensure!(n >= 1, "n must be at least 1");
    ensure!(us.iter().all(|u| !u.is_nan()), "thresholds must not be NaN");
    ensure!(
        trend.iter().all(|g| !g.is_nan()),
        "trend values must not be NaN"
    );
    for &s in strides {
        ensure!(
            s >= 1 && (grid.len() - 1) % s == 0,
            "stride {s} does not divide the grid of {} points",
            grid.len()
        );
    }
    let sampler = PathSampler::new(model, grid)?;
    let m = grid.len();
    let parts = map_chunks(n, |range| {
        let mut counts = vec![vec![0u64; us.len()]; strides.len()];
        let mut path = vec![0.0; m];
        for r in range {
            sampler.fill(&mut substream(seed, r), &mut path);
            for (x, g) in path.iter_mut().zip(trend) {
                *x += g;
            }
            for (level, &s) in counts.iter_mut().zip(strides) {
                let sup = strided_max(&path, s);
                for (c, &u) in level.iter_mut().zip(us) {
                    *c += u64::from(sup > u);
                }
            }
        }
        counts
    });
    let mut total = vec![vec![0u64; us.len()]; strides.len()];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            for (a, b) in t.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    Ok(total)
}

/// Fraction of `n` replications whose grid maximum of path plus trend
/// exceeds `u`.
pub fn mc_sup_prob(
    model: &CorrelationModel,
    trend: &[f64],
    u: f64,
    grid: &Grid,
    n: u64,
    seed: u64,
) -> Result<MCEstimate> {
    Ok(mc_sup_probs(model, trend, &[u], grid, n, seed)?.remove(0))
}

/// [`mc_sup_prob`] at several thresholds on the same paths.
pub fn mc_sup_probs(
    model: &CorrelationModel,
    trend: &[f64],
    us: &[f64],
    grid: &Grid,
    n: u64,
    seed: u64,
) -> Result<Vec<MCEstimate>> {
    let counts = nested_counts(model, trend, us, grid, &[1], n, seed)?;
    Ok(counts[0]
        .iter()
        .map(|&h| MCEstimate::from_hits(h, n, grid.step(), seed))
        .collect())
}

/// Estimates on the grids `grid.coarsen(2^k)` for `k = levels−1, …, 0`
/// (coarsest first), all computed from the same fine paths.
pub fn mc_sup_prob_nested(
    model: &CorrelationModel,
    trend: &[f64],
    u: f64,
    grid: &Grid,
    levels: usize,
    n: u64,
    seed: u64,
) -> Result<Vec<MCEstimate>> {
    ensure!(levels >= 1 && levels < 30, "levels must lie in 1..30");
    let strides: Vec<usize> = (0..levels).rev().map(|k| 1usize << k).collect();
    let counts = nested_counts(model, trend, &[u], grid, &strides, n, seed)?;
    Ok(counts
        .iter()
        .zip(&strides)
        .map(|(c, &s)| MCEstimate::from_hits(c[0], n, grid.step() * s as f64, seed))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasStatus {
    /// Differences between levels are significant and shrink geometrically.
    Corrected,
    /// All levels agree exactly.
    Negligible,
    /// Differences are within noise or do not shrink; finest estimate returned.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub estimate: MCEstimate,
    pub status: BiasStatus,
    /// Fitted exponent of `p(h) ≈ p₀ − A·h^κ`.
    pub kappa: Option<f64>,
    /// `p₀` minus the finest-grid estimate.
    pub bias: f64,
}

/// Standard error of a difference of nested common-random-number
/// estimates. The finer grid's maximum dominates the coarser one path by
/// path, so the difference is the fraction of paths hitting only on the
/// finer grid.
fn nested_difference_stderr(d: f64, n: u64) -> f64 {
    let q = d.abs().min(1.0);
    (q * (1.0 - q) / n as f64).sqrt()
}

/// Extrapolates the last three estimates, taken at steps `h, h/2, h/4` on
/// common random numbers, to `h → 0` under `p(h) ≈ p₀ − A·h^κ`.
pub fn refine_extrapolate(estimates: &[MCEstimate]) -> Result<Refined> {
    ensure!(
        estimates.len() >= 3,
        "refinement needs at least three grid levels, got {}",
        estimates.len()
    );
    let first = estimates[0];
    for w in estimates.windows(2) {
        ensure!(
            (w[0].grid_step / w[1].grid_step - 2.0).abs() < 1e-9,
            "grid steps must halve from one level to the next"
        );
        ensure!(
            w[1].seed == first.seed && w[1].n == first.n,
            "levels must share seed and replication count"
        );
    }
    let k = estimates.len();
    let [p1, p2, p3] = [estimates[k - 3], estimates[k - 2], estimates[k - 1]].map(|e| e.p_hat);
    let finest = estimates[k - 1];
    let n = finest.n;
    let (d1, d2) = (p2 - p1, p3 - p2);
    if d1 == 0.0 && d2 == 0.0 {
        return Ok(Refined {
            estimate: finest,
            status: BiasStatus::Negligible,
            kappa: None,
            bias: 0.0,
        });
    }
    let (s1, s2) = (
        nested_difference_stderr(d1, n),
        nested_difference_stderr(d2, n),
    );
    let significant = d1.abs() > 2.0 * s1 && d2.abs() > 2.0 * s2;
    let shrinking = d1.signum() == d2.signum() && d2.abs() < d1.abs();
    if !(significant && shrinking) {
        return Ok(Refined {
            estimate: finest,
            status: BiasStatus::Unresolved,
            kappa: None,
            bias: 0.0,
        });
    }
    let kappa = (d1 / d2).log2();
    let gap = d1 - d2;
    let bias = d2 * d2 / gap;
    // delta method, treating the three inputs as independent
    let g1 = -d2 * d2 / (gap * gap);
    let g2 = (2.0 * d2 * gap + d2 * d2) / (gap * gap);
    let stderr = (finest.stderr.powi(2) + (g1 * s1).powi(2) + (g2 * s2).powi(2)).sqrt();
    let p0 = (p3 + bias).clamp(0.0, 1.0);
    Ok(Refined {
        estimate: MCEstimate {
            p_hat: p0,
            stderr,
            ..finest
        },
        status: BiasStatus::Corrected,
        kappa: Some(kappa),
        bias,
    })
}

/// Trend of the discounted risk reserve after the time change
/// `τ = e^{−2δt}`: ruin before time `t` is `max_{τ ≥ e^{−2δt}} X(τ) − r(1 − √τ) > u`
/// with `X` the [`CorrelationModel::RiskTimeChange`] process and `r = c/δ`.
pub fn ruin_time_change_trend(c: f64, delta: f64, grid: &Grid) -> Result<Vec<f64>> {
    ensure!(c > 0.0 && delta > 0.0, "c and delta must be positive");
    ensure!(
        grid.start() >= 0.0 && grid.end() <= 1.0,
        "time-changed grid must lie in [0, 1]"
    );
    let r = c / delta;
    Ok(grid
        .points()
        .iter()
        .map(|t| -r * (1.0 - t.sqrt()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Largest accepted `|ratio − 1|` at the last threshold, beyond noise.
    pub tolerance: f64,
    /// Noise allowance in standard errors.
    pub z: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.1,
            z: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub u: f64,
    pub mc: MCEstimate,
    pub p_asymptotic: f64,
    pub p_exact: Option<f64>,
    /// `p_mc / p_asymptotic`.
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// 95% interval for the ratio.
    pub ci: (f64, f64),
    pub ratio_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// `|ratio − 1|` never grows beyond noise and ends within tolerance.
    pub passed: bool,
}

/// Tabulates Monte Carlo estimates against an asymptotic formula over
/// increasing thresholds.
pub fn asymptotic_validation<A, M>(
    u_schedule: &[f64],
    asymptotic: A,
    mc: M,
    exact: Option<&dyn Fn(f64) -> Result<f64>>,
    options: ValidationOptions,
) -> Result<ValidationReport>
where
    A: Fn(f64) -> Result<ApproxResult>,
    M: Fn(f64) -> Result<MCEstimate>,
{
    ensure!(!u_schedule.is_empty(), "u schedule is empty");
    ensure!(
        u_schedule.windows(2).all(|w| w[0] < w[1]),
        "u schedule must increase"
    );
    let mut rows = Vec::with_capacity(u_schedule.len());
    for &u in u_schedule {
        let est = mc(u)?;
        if est.p_hat * (est.n as f64) < MIN_REPORT_EVENTS {
            return Err(Error::InsufficientEvents {
                hits: est.hits() as u64,
                required: MIN_REPORT_EVENTS as u64,
            });
        }
        let asym = asymptotic(u)?.value;
        ensure!(asym > 0.0, "asymptotic value underflows at u = {u}");
        let ratio = est.p_hat / asym;
        let ratio_stderr = est.stderr / asym;
        let p_exact = exact.map(|f| f(u)).transpose()?;
        rows.push(ValidationRow {
            u,
            mc: est,
            p_asymptotic: asym,
            p_exact,
            ratio,
            ratio_stderr,
            ci: (ratio - 1.96 * ratio_stderr, ratio + 1.96 * ratio_stderr),
            ratio_exact: p_exact.map(|p| p / asym),
        });
    }
    let toward_one = rows.windows(2).all(|w| {
        (w[1].ratio - 1.0).abs()
            <= (w[0].ratio - 1.0).abs() + options.z * (w[0].ratio_stderr + w[1].ratio_stderr)
    });
    let last = rows.last().unwrap();
    let close = (last.ratio - 1.0).abs() <= options.tolerance + options.z * last.ratio_stderr;
    Ok(ValidationReport {
        passed: toward_one && close,
        rows,
    })
}
