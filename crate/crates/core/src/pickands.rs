//! Monte Carlo estimation of Pickands and Piterbarg constants.
//!
//! All estimates are taken on the lattice `hℤ` intersected with the
//! requested interval, so they are discrete-grid constants and carry a
//! downward grid bias. Two estimators are available:
//!
//! * [`Estimator::Direct`] averages `sup_i exp(W(t_i) − f(t_i))` with
//!   `W(t) = √(2a)·B_α(t) − a|t|^α`, exactly as in the definition.
//! * [`Estimator::ShiftAveraged`] picks a lattice point `t_j` with
//!   probability `∝ e^{−f(t_j)}`, samples `W` centred at `t_j` and returns
//!   `Z·max_i e^{v_i} / Σ_i e^{v_i}` with `v_i = W(t_i − t_j) − f(t_i)` and
//!   `Z = Σ_j e^{−f(t_j)}`. Because `e^{W(t_j)}` is a unit-mean density under
//!   which `W(· + t_j) − W(t_j)` is again distributed as `W`, this is unbiased
//!   for the same expectation, and it is bounded by `Z`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{map_chunks, substream};
use crate::sim::{CorrelationModel, Grid, PathSampler};
use crate::stats::Moments;
use crate::trend::{c0star_probe, c0star_probe_two_sided, TrendFunction};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Direct,
    #[default]
    ShiftAveraged,
}

/// Replication count, master seed and estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McBudget {
    pub n: u64,
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
}

impl McBudget {
    pub fn new(n: u64, seed: u64) -> Self {
        Self {
            n,
            seed,
            estimator: Estimator::default(),
        }
    }

    pub fn with_estimator(self, estimator: Estimator) -> Self {
        Self { estimator, ..self }
    }
}

/// `P^f_{α,a}[start, end]` on the lattice with spacing `grid_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiterbargSpec {
    pub alpha: f64,
    pub a: f64,
    pub trend: TrendFunction,
    pub start: f64,
    pub end: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    pub grid_step: f64,
    pub interval: (f64, f64),
    pub extrapolated: bool,
    /// Finite-interval estimates behind an extrapolated value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Sub-lattice `{k·stride·h} ∩ [start, end]` of the base lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
    pub stride: usize,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            stride: 1,
        }
    }
}

/// Estimates on several windows computed from the same sampled paths.
#[derive(Debug, Clone)]
pub struct Profile {
    pub estimates: Vec<ConstantEstimate>,
    moments: Moments,
}

impl Profile {
    /// `Σ w_i·value_i` and its standard error, accounting for the common
    /// random numbers shared by all windows.
    pub fn combine(&self, weights: &[f64]) -> (f64, f64) {
        assert_eq!(weights.len(), self.estimates.len(), "one weight per window");
        let value = weights
            .iter()
            .zip(&self.moments.mean)
            .map(|(w, m)| w * m)
            .sum();
        (value, self.moments.stderr_of(weights))
    }

    pub fn covariance_of_means(&self, i: usize, j: usize) -> f64 {
        self.moments.covariance(i, j) / self.moments.n.max(1) as f64
    }
}

struct WindowPlan {
    /// Base-lattice indices of the window points.
    idx: Vec<usize>,
    f: Vec<f64>,
    /// Normalized cumulative selection weights `∝ e^{−f}`.
    cumulative: Vec<f64>,
    log_z: f64,
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Runs every window on common paths of `√(2a)·B_α − a|t|^α`.
pub fn piterbarg_profile(
    alpha: f64,
    a: f64,
    trend: &TrendFunction,
    grid_step: f64,
    windows: &[Window],
    budget: McBudget,
) -> Result<Profile> {
    ensure!(
        alpha > 0.0 && alpha <= 2.0,
        "alpha must lie in (0, 2], got {alpha}"
    );
    ensure!(a > 0.0 && a.is_finite(), "a must be positive, got {a}");
    ensure!(
        grid_step > 0.0 && grid_step.is_finite(),
        "grid_step must be positive, got {grid_step}"
    );
    ensure!(!windows.is_empty(), "at least one window is required");
    trend.validate()?;
    let h = grid_step;
    let mut k_lo = 0i64;
    let mut k_hi = 0i64;
    let mut ranges = Vec::with_capacity(windows.len());
    for w in windows {
        ensure!(
            w.start.is_finite() && w.end.is_finite(),
            "window bounds must be finite"
        );
        ensure!(
            w.start <= w.end,
            "window needs start <= end, got [{}, {}]",
            w.start,
            w.end
        );
        ensure!(w.stride >= 1, "window stride must be positive");
        let s = w.stride as i64;
        let lo = (w.start / (h * s as f64) - 1e-9).ceil() as i64 * s;
        let hi = (w.end / (h * s as f64) + 1e-9).floor() as i64 * s;
        ensure!(
            lo <= hi,
            "no lattice point of step {} in [{}, {}]",
            h * s as f64,
            w.start,
            w.end
        );
        k_lo = k_lo.min(lo);
        k_hi = k_hi.max(hi);
        ranges.push((lo, hi, s));
    }
    let base_len = (k_hi - k_lo + 1) as usize;
    let origin = (-k_lo) as usize;
    let time = |k: i64| k as f64 * h;

    let plans = ranges
        .iter()
        .map(|&(lo, hi, s)| {
            let ks: Vec<i64> = (lo..=hi).step_by(s as usize).collect();
            let f: Vec<f64> = ks.iter().map(|&k| trend.eval(time(k))).collect();
            if let Some(bad) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "trend is not finite at t = {} inside the window",
                    time(ks[bad])
                )));
            }
            let log_z = log_sum_exp(f.iter().map(|v| -v));
            let mut acc = 0.0;
            let cumulative = f
                .iter()
                .map(|v| {
                    acc += (-v - log_z).exp();
                    acc
                })
                .collect();
            let idx = ks.iter().map(|&k| (k - k_lo) as usize).collect();
            Ok(WindowPlan {
                idx,
                f,
                cumulative,
                log_z,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // a|k·h|^α for every lattice offset, indexed by |k|
    let drift: Vec<f64> = (0..base_len)
        .map(|k| a * (k as f64 * h).powf(alpha))
        .collect();
    let scale = (2.0 * a).sqrt();
    // B_α on {h, 2h, ...}; the lattice origin value B_α(0) = 0 is prepended
    let sampler = if base_len > 1 {
        let rel = Grid::new((1..base_len).map(|k| k as f64 * h).collect())?;
        Some(PathSampler::new(&CorrelationModel::Fbm { alpha }, &rel)?)
    } else {
        None
    };

    let partials = map_chunks(budget.n, |range| {
        let mut moments = Moments::new(plans.len());
        let mut path = vec![0.0; base_len];
        let mut row = vec![0.0; plans.len()];
        let mut v = Vec::new();
        for r in range {
            let mut rng = substream(budget.seed, r);
            let u: f64 = rng.random();
            if let Some(s) = &sampler {
                s.fill(&mut rng, &mut path[1..]);
            }
            let p0 = path[origin];
            for (out, plan) in row.iter_mut().zip(&plans) {
                *out = match budget.estimator {
                    Estimator::Direct => plan
                        .idx
                        .iter()
                        .zip(&plan.f)
                        .map(|(&i, f)| scale * (path[i] - p0) - drift[i.abs_diff(origin)] - f)
                        .fold(f64::NEG_INFINITY, f64::max)
                        .exp(),
                    Estimator::ShiftAveraged => {
                        let pick = plan
                            .cumulative
                            .partition_point(|&c| c < u)
                            .min(plan.idx.len() - 1);
                        let j = plan.idx[pick];
                        let pj = path[j];
                        v.clear();
                        v.extend(
                            plan.idx
                                .iter()
                                .zip(&plan.f)
                                .map(|(&i, f)| scale * (path[i] - pj) - drift[i.abs_diff(j)] - f),
                        );
                        let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let sum: f64 = v.iter().map(|x| (x - vmax).exp()).sum();
                        (plan.log_z - sum.ln()).exp()
                    }
                };
            }
            moments.push(&row);
        }
        moments
    });
    let mut moments = Moments::new(plans.len());
    for p in &partials {
        moments.merge(p);
    }
    let estimates = ranges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi, s))| ConstantEstimate {
            value: moments.mean[i],
            stderr: moments.stderr(i),
            n: budget.n,
            grid_step: h * s as f64,
            interval: (time(lo), time(hi)),
            extrapolated: false,
            trajectory: Vec::new(),
        })
        .collect();
    Ok(Profile { estimates, moments })
}

/// `P^f_{α,a}[S, T]` on the lattice of spacing `grid_step`.
pub fn piterbarg_estimate(spec: &PiterbargSpec, budget: McBudget) -> Result<ConstantEstimate> {
    ensure!(
        spec.start < spec.end,
        "need S < T, got [{}, {}]",
        spec.start,
        spec.end
    );
    let p = piterbarg_profile(
        spec.alpha,
        spec.a,
        &spec.trend,
        spec.grid_step,
        &[Window::new(spec.start, spec.end)],
        budget,
    )?;
    Ok(p.estimates.into_iter().next().expect("one window"))
}

/// `H_α[0, T]`; `T = 0` gives the single-point value 1.
pub fn pickands_estimate(
    alpha: f64,
    t: f64,
    grid_step: f64,
    budget: McBudget,
) -> Result<ConstantEstimate> {
    ensure!(t >= 0.0 && t.is_finite(), "T must be non-negative, got {t}");
    let p = piterbarg_profile(
        alpha,
        1.0,
        &TrendFunction::Zero,
        grid_step,
        &[Window::new(0.0, t)],
        budget,
    )?;
    Ok(p.estimates.into_iter().next().expect("one window"))
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    ensure!(schedule.len() >= 2, "schedule needs at least two entries");
    ensure!(
        schedule[0] > 0.0
            && schedule.windows(2).all(|w| w[0] < w[1])
            && schedule.iter().all(|t| t.is_finite()),
        "schedule must be positive, finite and strictly increasing"
    );
    Ok(())
}

/// Optional grid-bias correction: every window is also evaluated on the
/// `coarse_stride`-times coarser sub-lattice and the pair is combined as
/// `(s^κ·v_fine − v_coarse)/(s^κ − 1)` with `κ = α/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRefinement {
    pub coarse_stride: usize,
}

fn refinement_weights(alpha: f64, refine: Option<GridRefinement>) -> Result<Vec<(usize, f64)>> {
    Ok(match refine {
        None => vec![(1, 1.0)],
        Some(GridRefinement { coarse_stride }) => {
            ensure!(coarse_stride >= 2, "coarse_stride must be at least 2");
            let g = (coarse_stride as f64).powf(alpha / 2.0);
            vec![(1, g / (g - 1.0)), (coarse_stride, -1.0 / (g - 1.0))]
        }
    })
}

/// Runs `intervals` (with optional grid refinement) and returns the
/// profile together with, per interval, the weight vector producing its
/// (refined) estimate.
fn run_intervals(
    alpha: f64,
    a: f64,
    trend: &TrendFunction,
    grid_step: f64,
    intervals: &[(f64, f64)],
    budget: McBudget,
    refine: Option<GridRefinement>,
) -> Result<(Profile, Vec<Vec<f64>>)> {
    let parts = refinement_weights(alpha, refine)?;
    let mut windows = Vec::new();
    for &(s, t) in intervals {
        for &(stride, _) in &parts {
            windows.push(Window {
                start: s,
                end: t,
                stride,
            });
        }
    }
    let profile = piterbarg_profile(alpha, a, trend, grid_step, &windows, budget)?;
    let k = parts.len();
    let weights = (0..intervals.len())
        .map(|i| {
            let mut w = vec![0.0; windows.len()];
            for (p, &(_, c)) in parts.iter().enumerate() {
                w[i * k + p] = c;
            }
            w
        })
        .collect();
    Ok((profile, weights))
}

/// `H_α = lim H_α[0,T]/T`, from an affine fit of `H_α[0,T]/T` in `1/T`
/// over the schedule. All schedule points share the same paths.
pub fn pickands_limit(
    alpha: f64,
    grid_step: f64,
    budget: McBudget,
    schedule: &[f64],
    refine: Option<GridRefinement>,
) -> Result<ConstantEstimate> {
    check_schedule(schedule)?;
    let intervals: Vec<(f64, f64)> = schedule.iter().map(|&t| (0.0, t)).collect();
    let (profile, per_t) = run_intervals(
        alpha,
        1.0,
        &TrendFunction::Zero,
        grid_step,
        &intervals,
        budget,
        refine,
    )?;
    let k = schedule.len() as f64;
    let xs: Vec<f64> = schedule.iter().map(|t| 1.0 / t).collect();
    let xbar = xs.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let mut total = vec![0.0; per_t[0].len()];
    let mut trajectory = Vec::new();
    for ((w, &x), &t) in per_t.iter().zip(&xs).zip(schedule) {
        // intercept of the least-squares line through (1/T, H[0,T]/T)
        let c = (1.0 / k - xbar * (x - xbar) / sxx) * x;
        for (acc, wi) in total.iter_mut().zip(w) {
            *acc += c * wi;
        }
        let (value, stderr) = profile.combine(w);
        trajectory.push(TrajectoryPoint { t, value, stderr });
    }
    let (value, stderr) = profile.combine(&total);
    Ok(ConstantEstimate {
        value,
        stderr,
        n: budget.n,
        grid_step,
        interval: (0.0, f64::INFINITY),
        extrapolated: true,
        trajectory,
    })
}

/// Convergence rule and extrapolation settings for [`piterbarg_limit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    pub schedule: Vec<f64>,
    /// Relative tolerance on successive estimates (on top of twice their
    /// standard error).
    pub tol: f64,
    #[serde(default)]
    pub refine: Option<GridRefinement>,
}

/// Solves `(e^{−κt3} − e^{−κt2})/(e^{−κt2} − e^{−κt1}) = ratio` for `κ > 0`.
fn exponential_rate(t: [f64; 3], ratio: f64) -> Option<f64> {
    let g =
        |k: f64| ((-k * t[2]).exp() - (-k * t[1]).exp()) / ((-k * t[1]).exp() - (-k * t[0]).exp());
    let upper = (t[2] - t[1]) / (t[1] - t[0]);
    if !(ratio > 0.0 && ratio < upper) {
        return None;
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    while g(hi) > ratio {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `v(∞)` under `v(T) = v(∞) − A·e^{−κT}` through three points.
fn exponential_limit(t: [f64; 3], v: [f64; 3]) -> Option<f64> {
    let kappa = exponential_rate(t, (v[2] - v[1]) / (v[1] - v[0]))?;
    let (e2, e3) = ((-kappa * t[1]).exp(), (-kappa * t[2]).exp());
    Some(v[2] + (v[2] - v[1]) * e3 / (e2 - e3))
}

/// `P^f_{α,a}[S, ∞)` (or `(−∞, ∞)` when `start = −∞`, growing both ends
/// symmetrically): evaluates the schedule on common paths and stops at the
/// first point whose change from the previous one is within
/// `tol·|value| + 2·stderr(change)`.
pub fn piterbarg_limit(
    alpha: f64,
    a: f64,
    trend: &TrendFunction,
    start: f64,
    grid_step: f64,
    budget: McBudget,
    options: &LimitOptions,
) -> Result<ConstantEstimate> {
    let schedule = &options.schedule;
    check_schedule(schedule)?;
    ensure!(options.tol > 0.0, "tol must be positive");
    let two_sided = start == f64::NEG_INFINITY;
    ensure!(
        two_sided || start.is_finite(),
        "start must be finite or -inf"
    );
    ensure!(
        two_sided || schedule[0] > start,
        "schedule must exceed the start {start}"
    );
    let probes = [10.0, 100.0, 1000.0];
    let report = if two_sided {
        c0star_probe_two_sided(trend, 0.01, 50.0, &probes)
    } else {
        c0star_probe(trend, 0.01, 50.0, &probes)
    };
    ensure!(
        report.grows && report.decays,
        "trend fails the polynomial growth probe; the limit need not exist"
    );
    let intervals: Vec<(f64, f64)> = schedule
        .iter()
        .map(|&t| if two_sided { (-t, t) } else { (start, t) })
        .collect();
    let (profile, per_t) = run_intervals(
        alpha,
        a,
        trend,
        grid_step,
        &intervals,
        budget,
        options.refine,
    )?;
    let trajectory: Vec<TrajectoryPoint> = per_t
        .iter()
        .zip(schedule)
        .map(|(w, &t)| {
            let (value, stderr) = profile.combine(w);
            TrajectoryPoint { t, value, stderr }
        })
        .collect();
    let diff = |i: usize, j: usize| -> Vec<f64> {
        per_t[i].iter().zip(&per_t[j]).map(|(a, b)| a - b).collect()
    };
    let significant = |i: usize| {
        let (d, se) = profile.combine(&diff(i, i - 1));
        (d, d.abs() > 2.0 * se)
    };
    let interval_of = |t: f64| {
        if two_sided {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (start, t)
        }
    };
    for k in 1..schedule.len() {
        let (d, se) = profile.combine(&diff(k, k - 1));
        let v = trajectory[k].value;
        if d.abs() > options.tol * v.abs() + 2.0 * se {
            continue;
        }
        let mut estimate = ConstantEstimate {
            value: v,
            stderr: trajectory[k].stderr,
            n: budget.n,
            grid_step,
            interval: (interval_of(schedule[k]).0, f64::INFINITY),
            extrapolated: true,
            trajectory: trajectory.clone(),
        };
        if k >= 2 {
            let (d1, s1) = significant(k - 1);
            let (d2, s2) = significant(k);
            if s1 && s2 && d1.signum() == d2.signum() && d2.abs() < d1.abs() {
                let ts = [schedule[k - 2], schedule[k - 1], schedule[k]];
                let vs = [
                    trajectory[k - 2].value,
                    trajectory[k - 1].value,
                    trajectory[k].value,
                ];
                if let Some(limit) = exponential_limit(ts, vs) {
                    // delta method with a numerical gradient
                    let mut w = vec![0.0; per_t[0].len()];
                    for p in 0..3 {
                        let step = 1e-6 * vs[p].abs().max(1e-12);
                        let mut bumped = vs;
                        bumped[p] += step;
                        let g = exponential_limit(ts, bumped).map_or(0.0, |l| (l - limit) / step);
                        for (acc, x) in w.iter_mut().zip(&per_t[k - 2 + p]) {
                            *acc += g * x;
                        }
                    }
                    estimate.value = limit;
                    estimate.stderr = profile.combine(&w).1;
                }
            }
        }
        return Ok(estimate);
    }
    Err(Error::ScheduleExhausted {
        trajectory: trajectory
            .iter()
            .map(|p| (p.t, p.value, p.stderr))
            .collect(),
    })
}
