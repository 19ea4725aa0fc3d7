//! Conditional distribution of the first passage time `τ_u` given
//! `τ_u ≤ T`: limiting CDFs in rescaled time and a Monte Carlo estimator.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    branch, exp_neg_integral, infimum, Branch, ConstantsProvider, Eta, PeakPosition, RegimeParams,
    TIE_TOL,
};
use crate::error::{ensure, Error, Result};
use crate::rng::{map_chunks, substream};
use crate::sim::{CorrelationModel, Grid, PathSampler};
use crate::trend::TrendFunction;

/// Minimum number of conditioning events for an empirical CDF.
pub const MIN_EVENTS: u64 = 100;

const Z95: f64 = 1.959_963_984_540_054;

/// Limiting CDF of `u^λ(τ_u − t₀)` for a maximizer at `position`, whose
/// constant is selected by `br`.
fn peak_cdf(
    x: f64,
    br: Branch,
    alpha: f64,
    a: f64,
    f: &TrendFunction,
    position: PeakPosition,
    provider: &dyn ConstantsProvider,
) -> Result<f64> {
    ensure!(!x.is_nan(), "x must not be NaN");
    if position == PeakPosition::RightBoundary {
        // t₀ = T: only x < 0 is reachable; mass to the left of x is that of [−x, ∞)
        ensure!(
            x <= 0.0,
            "x must be nonpositive when the maximizer is the right endpoint, got {x}"
        );
        let y = -x;
        return match br {
            Branch::Below => {
                let (near, far) = (
                    exp_neg_integral(f, 0.0, y)?,
                    exp_neg_integral(f, y, f64::INFINITY)?,
                );
                Ok(if far <= near {
                    far / (near + far)
                } else {
                    1.0 - near / (near + far)
                })
            }
            Branch::Tie => {
                let part = provider.piterbarg(alpha, a, f, y, f64::INFINITY)?.value;
                Ok(part / provider.piterbarg(alpha, a, f, 0.0, f64::INFINITY)?.value)
            }
            Branch::Above => Ok((-f.eval(x)).exp()),
        };
    }
    let (lo, hi) = position.range();
    ensure!(
        x >= lo,
        "x = {x} lies below the admissible range starting at {lo}"
    );
    let x = x.min(hi);
    if x == lo {
        return Ok(if br == Branch::Above {
            (-f.eval(lo)).exp()
        } else {
            0.0
        });
    }
    match br {
        Branch::Below => {
            // the smaller side carries the quadrature error, keeping the tails monotone
            let left = exp_neg_integral(f, lo, x)?;
            let right = exp_neg_integral(f, x, hi)?;
            Ok(if left <= right {
                left / (left + right)
            } else {
                1.0 - right / (left + right)
            })
        }
        Branch::Tie if x == hi => Ok(1.0),
        Branch::Tie => {
            let part = provider.piterbarg(alpha, a, f, lo, x)?.value;
            Ok((part / provider.piterbarg(alpha, a, f, lo, hi)?.value).clamp(0.0, 1.0))
        }
        Branch::Above => Ok((-infimum(f, lo, x)).exp()),
    }
}

/// Limiting `P(u^{1/γ}(τ_u − t₀) ≤ x | τ_u ≤ T)` for a locally stationary
/// process with trend `g ≈ g_m − c|t − t₀|^γ`.
pub fn cond_passage_cdf_locstat(
    x: f64,
    alpha: f64,
    gamma: f64,
    a: f64,
    c: f64,
    position: PeakPosition,
    provider: &dyn ConstantsProvider,
) -> Result<f64> {
    ensure!(
        alpha > 0.0 && alpha <= 2.0,
        "alpha must lie in (0, 2], got {alpha}"
    );
    ensure!(
        gamma > 0.0 && a > 0.0 && c > 0.0,
        "gamma, a and c must be positive"
    );
    let f = TrendFunction::AbsPowerTwoSided { c, gamma };
    peak_cdf(
        x,
        branch(alpha, 2.0 * gamma, TIE_TOL),
        alpha,
        a,
        &f,
        position,
        provider,
    )
}

/// Limiting `P(u^{2/β*}(τ_u − t₀) ≤ x | τ_u ≤ T)` for a non-stationary
/// process, with `f` from [`RegimeParams::limit_trend`]. For a moving
/// maximizer the centre is `t_u` instead of `t₀`.
pub fn cond_passage_cdf_nonstat(
    x: f64,
    p: &RegimeParams,
    provider: &dyn ConstantsProvider,
) -> Result<f64> {
    p.validate()?;
    let f = p.limit_trend();
    peak_cdf(
        x,
        p.branch(),
        p.alpha,
        p.a / (p.sigma * p.sigma),
        &f,
        p.position,
        provider,
    )
}

/// Limiting CDF of the general limit theorem on `[x1, x2]`.
pub fn cond_passage_cdf_general(
    x: f64,
    eta: Eta,
    alpha: f64,
    f: &TrendFunction,
    x1: f64,
    x2: f64,
    provider: &dyn ConstantsProvider,
) -> Result<f64> {
    ensure!(x1 < x2, "x1 must be below x2");
    ensure!(x >= x1 && x <= x2, "x = {x} outside [{x1}, {x2}]");
    match eta {
        Eta::Infinite => Ok(exp_neg_integral(f, x1, x)? / exp_neg_integral(f, x1, x2)?),
        Eta::Finite(eta) => {
            if x == x2 {
                return Ok(1.0);
            }
            if x == x1 {
                return Ok(0.0);
            }
            let part = provider.piterbarg(alpha, eta, f, x1, x)?.value;
            Ok(part / provider.piterbarg(alpha, eta, f, x1, x2)?.value)
        }
        Eta::Zero => Ok((-infimum(f, x1, x)).exp()),
    }
}

/// Limiting CDF of `u²(e^{−2δτ_u} − (c/(δu + c))²)` given ruin, for the
/// risk model with constant force of interest: `P^h[−r², x]/P^h[−r², ∞)`.
pub fn ruin_passage_cdf(
    x: f64,
    c: f64,
    delta: f64,
    sigma: f64,
    provider: &dyn ConstantsProvider,
) -> Result<f64> {
    let h = TrendFunction::ruin_h(c, delta, sigma)?;
    let r = c / delta;
    cond_passage_cdf_general(
        x,
        Eta::Finite(delta / (sigma * sigma)),
        1.0,
        &h,
        -r * r,
        f64::INFINITY,
        provider,
    )
}

/// Map from grid time to rescaled time, `x = scale·(t − t_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageScaling {
    pub t_ref: f64,
    pub scale: f64,
}

impl PassageScaling {
    /// Brownian bridge with drift `−ct`: `t_u = u/(c + 2u)`, scale `u`.
    pub fn bridge(u: f64, c: f64) -> Self {
        Self {
            t_ref: u / (c + 2.0 * u),
            scale: u,
        }
    }

    /// Centre at the grid point minimizing `(u − g(t))/σ(t)`.
    pub fn at_most_likely(
        model: &CorrelationModel,
        grid: &Grid,
        trend: &[f64],
        u: f64,
        scale: f64,
    ) -> Result<Self> {
        grid.require_same_len(trend.len(), "trend")?;
        let mut best = (f64::INFINITY, grid.start());
        for (&t, &g) in grid.points().iter().zip(trend) {
            let sd = model.covariance(t, t)?.sqrt();
            if sd > 0.0 {
                let z = (u - g) / sd;
                if z < best.0 {
                    best = (z, t);
                }
            }
        }
        ensure!(best.0.is_finite(), "every grid point has zero variance");
        Ok(Self {
            t_ref: best.1,
            scale,
        })
    }

    pub fn apply(&self, t: f64) -> f64 {
        self.scale * (t - self.t_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub p: f64,
    /// 95% Wilson interval.
    pub lower: f64,
    pub upper: f64,
}

/// Empirical conditional CDF of the rescaled first exceedance time, one
/// point per grid time at which some path first exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub points: Vec<CdfPoint>,
    pub events: u64,
    pub n: u64,
    pub grid_step: f64,
    pub seed: u64,
    pub scaling: PassageScaling,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if k == 0.0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let upper = if k == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lower, upper)
}

impl EmpiricalCdf {
    /// Right-continuous step function at `x`.
    pub fn at(&self, x: f64) -> CdfPoint {
        let i = self.points.partition_point(|pt| pt.x <= x);
        if i == 0 {
            let (lower, upper) = wilson(0, self.events, Z95);
            CdfPoint {
                x,
                p: 0.0,
                lower,
                upper,
            }
        } else {
            CdfPoint {
                x,
                ..self.points[i - 1]
            }
        }
    }

    /// `max |F̂(x) − F(x)|` over `xs`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, xs: &[f64], cdf: F) -> f64 {
        xs.iter()
            .map(|&x| (self.at(x).p - cdf(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Simulates `n` paths and records, among those whose grid maximum of
/// path plus trend exceeds `u`, the first grid time of exceedance.
pub fn mc_conditional_passage(
    model: &CorrelationModel,
    trend: &[f64],
    u: f64,
    grid: &Grid,
    n: u64,
    seed: u64,
    scaling: PassageScaling,
) -> Result<EmpiricalCdf> {
    grid.require_same_len(trend.len(), "trend")?;
    ensure!(n >= 1, "n must be at least 1");
    ensure!(!u.is_nan(), "u must not be NaN");
    ensure!(
        trend.iter().all(|g| !g.is_nan()),
        "trend values must not be NaN"
    );
    let sampler = PathSampler::new(model, grid)?;
    let m = grid.len();
    let parts = map_chunks(n, |range| {
        let mut counts = vec![0u64; m];
        let mut path = vec![0.0; m];
        for r in range {
            sampler.fill(&mut substream(seed, r), &mut path);
            if let Some(i) = path.iter().zip(trend).position(|(x, g)| x + g > u) {
                counts[i] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; m];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    let events: u64 = counts.iter().sum();
    if events < MIN_EVENTS {
        return Err(Error::InsufficientEvents {
            hits: events,
            required: MIN_EVENTS,
        });
    }
    let mut cumulative = 0;
    let points = counts
        .iter()
        .zip(grid.points())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &t)| {
            cumulative += c;
            let (lower, upper) = wilson(cumulative, events, Z95);
            CdfPoint {
                x: scaling.apply(t),
                p: cumulative as f64 / events as f64,
                lower,
                upper,
            }
        })
        .collect();
    Ok(EmpiricalCdf {
        points,
        events,
        n,
        grid_step: grid.step(),
        seed,
        scaling,
    })
}

/// `P(τ_u ≤ s | τ_u ≤ 1)` for the Brownian bridge with drift `−ct`,
/// from the Brownian-motion representation `X(t) = (1 − t)W(t/(1 − t))`.
pub fn bridge_passage_cdf(s: f64, u: f64, c: f64) -> f64 {
    use crate::special::normal_tail;
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    // hitting u + (u + c)·v by a Brownian motion, in the time v = s/(1 − s)
    let (a, b) = (u, u + c);
    let v = s / (1.0 - s);
    let hit = normal_tail((a + b * v) / v.sqrt())
        + (-2.0 * a * b).exp() * normal_tail((a - b * v) / v.sqrt());
    hit / (-2.0 * a * b).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::ClosedForm;
    use crate::special::{normal_cdf, normal_tail};

    const INF: f64 = f64::INFINITY;

    #[test]
    fn exponential_limit_for_linear_trend_at_left_endpoint() {
        for x in [0.1, 0.5, 2.0] {
            let v = cond_passage_cdf_locstat(
                x,
                1.0,
                1.0,
                0.7,
                1.3,
                PeakPosition::LeftBoundary,
                &ClosedForm,
            )
            .unwrap();
            assert!((v - (1.0 - (-1.3 * x).exp())).abs() < 1e-9);
        }
        let full = cond_passage_cdf_locstat(
            INF,
            1.0,
            1.0,
            0.7,
            1.3,
            PeakPosition::LeftBoundary,
            &ClosedForm,
        );
        assert!((full.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steep_trend_supremum_form() {
        let v =
            cond_passage_cdf_locstat(0.0, 2.0, 0.5, 1.0, 1.0, PeakPosition::Interior, &ClosedForm)
                .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = cond_passage_cdf_locstat(
            -1.0,
            2.0,
            0.5,
            1.0,
            1.0,
            PeakPosition::Interior,
            &ClosedForm,
        )
        .unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-9);
        // right endpoint: e^{−c|x|^γ}
        let v = cond_passage_cdf_locstat(
            -4.0,
            2.0,
            0.5,
            1.0,
            1.0,
            PeakPosition::RightBoundary,
            &ClosedForm,
        )
        .unwrap();
        assert!((v - (-2.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn right_endpoint_integral_form() {
        // ∫_{−x}^∞ e^{−t}dt / ∫_0^∞ e^{−t}dt = e^{x}
        for x in [-0.1, -1.0, -3.0] {
            let v = cond_passage_cdf_locstat(
                x,
                1.0,
                1.0,
                1.0,
                1.0,
                PeakPosition::RightBoundary,
                &ClosedForm,
            )
            .unwrap();
            assert!((v - x.exp()).abs() < 1e-9);
        }
        assert!(cond_passage_cdf_locstat(
            0.5,
            1.0,
            1.0,
            1.0,
            1.0,
            PeakPosition::RightBoundary,
            &ClosedForm
        )
        .is_err());
    }

    fn bridge(u: f64) -> RegimeParams {
        RegimeParams::new(1.0, 2.0, 2.0, 1.0, u).with_sigma(0.5)
    }

    #[test]
    fn bridge_limits() {
        let c = 0.5;
        for x in [-0.4, -0.1, 0.0, 0.2, 0.5] {
            let v = cond_passage_cdf_nonstat(x, &bridge(2.0), &ClosedForm).unwrap();
            assert!((v - normal_cdf(4.0 * x)).abs() < 1e-8, "x = {x}");

            if x <= c / 4.0 {
                let half = bridge(2.0).at(PeakPosition::NearRight(c / 4.0));
                let v = cond_passage_cdf_nonstat(x, &half, &ClosedForm).unwrap();
                assert!((v - normal_cdf(4.0 * x) / normal_cdf(c)).abs() < 1e-8);
            }

            // ∫_{−∞}^{4x} e^{−(|t| + c)²/2} dt / (2√(2π)Ψ(c))
            let two_sided = bridge(2.0).with_trend(c, 1.0);
            let v = cond_passage_cdf_nonstat(x, &two_sided, &ClosedForm).unwrap();
            let s = 4.0 * x;
            let expected = if s <= 0.0 {
                normal_tail(c - s) / (2.0 * normal_tail(c))
            } else {
                1.0 - normal_tail(c + s) / (2.0 * normal_tail(c))
            };
            assert!((v - expected).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn general_cdf_endpoints() {
        let f = TrendFunction::Linear { c: 1.0 };
        assert_eq!(
            cond_passage_cdf_general(0.0, Eta::Infinite, 1.0, &f, 0.0, 3.0, &ClosedForm).unwrap(),
            0.0
        );
        let top =
            cond_passage_cdf_general(3.0, Eta::Infinite, 1.0, &f, 0.0, 3.0, &ClosedForm).unwrap();
        assert!((top - 1.0).abs() < 1e-12);
        let top = cond_passage_cdf_general(INF, Eta::Finite(1.0), 1.0, &f, 0.0, INF, &ClosedForm)
            .unwrap();
        assert_eq!(top, 1.0);
        let sup = cond_passage_cdf_general(2.0, Eta::Zero, 1.0, &f, 1.0, 3.0, &ClosedForm).unwrap();
        assert!((sup - (-1.0_f64).exp()).abs() < 1e-12);
        assert!(
            cond_passage_cdf_general(4.0, Eta::Infinite, 1.0, &f, 0.0, 3.0, &ClosedForm).is_err()
        );
    }

    #[test]
    fn integral_cdf_splits_additively() {
        let f = TrendFunction::AbsPowerTwoSided { c: 0.8, gamma: 1.7 };
        let full = exp_neg_integral(&f, -INF, INF).unwrap();
        let left = exp_neg_integral(&f, -INF, 0.3).unwrap();
        let right = exp_neg_integral(&f, 0.3, INF).unwrap();
        assert!((left + right - full).abs() < 2e-8);
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.403_831_4).abs() < 1e-6 && (hi - 0.596_168_6).abs() < 1e-6);
        assert_eq!(wilson(0, 10, Z95).0, 0.0);
        assert_eq!(wilson(10, 10, Z95).1, 1.0);
    }

    #[test]
    fn certain_exceedance_is_a_step_at_the_first_point() {
        let grid = Grid::uniform(0.0, 1.0, 32).unwrap();
        let model = CorrelationModel::fbm(1.0).unwrap();
        let trend = vec![10.0; grid.len()];
        let scaling = PassageScaling {
            t_ref: 0.5,
            scale: 2.0,
        };
        let cdf = mc_conditional_passage(&model, &trend, 1.0, &grid, 500, 1, scaling).unwrap();
        assert_eq!(cdf.events, 500);
        assert_eq!(cdf.points.len(), 1);
        assert_eq!(cdf.points[0].x, -1.0);
        assert_eq!(cdf.points[0].p, 1.0);
    }

    #[test]
    fn rare_exceedance_is_reported() {
        let grid = Grid::uniform(0.0, 1.0, 32).unwrap();
        let model = CorrelationModel::BrownianBridge;
        let trend = vec![0.0; grid.len()];
        let err = mc_conditional_passage(
            &model,
            &trend,
            3.0,
            &grid,
            1000,
            1,
            PassageScaling::bridge(3.0, 0.0),
        );
        assert!(matches!(
            err,
            Err(Error::InsufficientEvents {
                required: MIN_EVENTS,
                ..
            })
        ));
    }

    #[test]
    fn bridge_empirical_cdf_matches_exact_finite_u_law() {
        let (u, c) = (1.0, 0.5);
        let grid = Grid::uniform(0.0, 1.0, 1024).unwrap();
        let trend: Vec<f64> = grid.points().iter().map(|t| -c * t).collect();
        let scaling = PassageScaling::bridge(u, c);
        let cdf = mc_conditional_passage(
            &CorrelationModel::BrownianBridge,
            &trend,
            u,
            &grid,
            200_000,
            5,
            scaling,
        )
        .unwrap();
        assert!(cdf.points.windows(2).all(|w| w[0].p <= w[1].p));
        assert_eq!(cdf.points.last().unwrap().p, 1.0);
        // the discrete grid detects crossings late, so compare on a coarse scale
        for s in [0.2, 0.3, 0.4, 0.6] {
            let x = scaling.apply(s);
            let emp = cdf.at(x).p;
            assert!(
                (emp - bridge_passage_cdf(s, u, c)).abs() < 0.03,
                "s = {s}: {emp}"
            );
        }
    }

    #[test]
    fn bridge_exact_law_is_a_distribution() {
        let (u, c) = (1.5, 0.5);
        let v: Vec<f64> = (0..=100)
            .map(|i| bridge_passage_cdf(i as f64 / 100.0, u, c))
            .collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert_eq!(v[0], 0.0);
        assert!((v[99] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn most_likely_point_of_the_drifted_bridge() {
        let (u, c) = (1.5, 0.5);
        let grid = Grid::uniform(0.0, 1.0, 4096).unwrap();
        let trend: Vec<f64> = grid.points().iter().map(|t| -c * t).collect();
        let s =
            PassageScaling::at_most_likely(&CorrelationModel::BrownianBridge, &grid, &trend, u, u)
                .unwrap();
        assert!((s.t_ref - PassageScaling::bridge(u, c).t_ref).abs() <= grid.step());
    }
}
