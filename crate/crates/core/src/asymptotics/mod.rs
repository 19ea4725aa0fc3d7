//! Exact asymptotic approximations of `P(sup X(t) + g(t) > u)` and of the
//! ruin probability of the risk model with constant force of interest.
//!
//! Every approximation has the form `C·u^κ·Ψ(x_u)`; the constant `C` is
//! chosen by comparing the local correlation exponent `α` with the
//! exponent `β*` of the variance-plus-trend profile at the maximizer.

mod constants;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quad::integrate_exp_neg;
use crate::special::{gamma, log_normal_tail};
use crate::trend::TrendFunction;

pub use constants::{
    Cached, Chain, ClosedForm, ConstantSource, ConstantsProvider, MonteCarlo, ProvidedConstant,
};

/// Tolerance for exponent comparisons; `|α − β*| ≤ TIE_TOL` is a tie.
pub const TIE_TOL: f64 = 1e-9;

/// Which case of the piecewise constant applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `α < β*`: Pickands constant times an integral.
    Below,
    /// `α = β*`: Piterbarg constant.
    Tie,
    /// `α > β*`: the constant is 1.
    Above,
}

pub fn branch(alpha: f64, beta_star: f64, tie_tol: f64) -> Branch {
    if (alpha - beta_star).abs() <= tie_tol {
        Branch::Tie
    } else if alpha < beta_star {
        Branch::Below
    } else {
        Branch::Above
    }
}

/// Limit ratio `η` of the local scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Eta {
    Zero,
    Finite(f64),
    Infinite,
}

/// Where the maximizer `t₀` sits relative to the parameter set. The near
/// variants cover maximizers at distance `d·u^{-λ}` inside an endpoint,
/// whose rescaled range is `[−d, ∞)` or `(−∞, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "d", rename_all = "snake_case")]
pub enum PeakPosition {
    Interior,
    LeftBoundary,
    RightBoundary,
    NearLeft(f64),
    NearRight(f64),
}

impl PeakPosition {
    /// Rescaled integration range around `t₀`.
    pub fn range(self) -> (f64, f64) {
        match self {
            Self::Interior => (f64::NEG_INFINITY, f64::INFINITY),
            Self::LeftBoundary => (0.0, f64::INFINITY),
            Self::RightBoundary => (f64::NEG_INFINITY, 0.0),
            Self::NearLeft(d) => (-d, f64::INFINITY),
            Self::NearRight(d) => (f64::NEG_INFINITY, d),
        }
    }

    /// Multiplier `Q = 2` for interior maximizers, 1 at an endpoint.
    pub fn q(self) -> f64 {
        if self == Self::Interior {
            2.0
        } else {
            1.0
        }
    }

    /// Lower end `υ` of the one-sided range: `−∞` in the interior, 0 at the endpoints.
    pub fn upsilon(self) -> f64 {
        if self == Self::Interior {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    pub fn validate(self) -> Result<()> {
        if let Self::NearLeft(d) | Self::NearRight(d) = self {
            ensure!(
                d.is_finite() && d >= 0.0,
                "boundary distance must be finite and nonnegative, got {d}"
            );
        }
        Ok(())
    }
}

/// `g(t) ≈ g(t₀) − c|t − t₀|^γ` near the maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPeak {
    pub c: f64,
    pub gamma: f64,
}

/// Mean and standard deviation at the `u`-dependent maximizer `t_u` of
/// `(u − g(t))/σ(t)`, when that point moves with `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingPeak {
    pub g: f64,
    pub sigma: f64,
}

/// Local description of the problem at the maximizer of `σ` (and of `g`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub alpha: f64,
    pub a: f64,
    /// `1 − σ(t₀ + t)/σ ≈ b|t|^β`.
    pub beta: f64,
    pub b: f64,
    #[serde(default)]
    pub trend: Option<TrendPeak>,
    pub sigma: f64,
    pub position: PeakPosition,
    /// `g(t₀)`.
    #[serde(default)]
    pub g_m: f64,
    pub u: f64,
    #[serde(default)]
    pub moving_peak: Option<MovingPeak>,
}

impl RegimeParams {
    /// Unit variance at an interior maximizer, no trend.
    pub fn new(alpha: f64, a: f64, beta: f64, b: f64, u: f64) -> Self {
        Self {
            alpha,
            a,
            beta,
            b,
            trend: None,
            sigma: 1.0,
            position: PeakPosition::Interior,
            g_m: 0.0,
            u,
            moving_peak: None,
        }
    }

    pub fn with_trend(mut self, c: f64, gamma: f64) -> Self {
        self.trend = Some(TrendPeak { c, gamma });
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn at(mut self, position: PeakPosition) -> Self {
        self.position = position;
        self
    }

    pub fn with_peak_value(mut self, g_m: f64) -> Self {
        self.g_m = g_m;
        self
    }

    pub fn with_moving_peak(mut self, g: f64, sigma: f64) -> Self {
        self.moving_peak = Some(MovingPeak { g, sigma });
        self
    }

    pub fn at_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    /// `β* = min(β, 2γ)`.
    pub fn beta_star(&self) -> f64 {
        match self.trend {
            Some(TrendPeak { gamma, .. }) => self.beta.min(2.0 * gamma),
            None => self.beta,
        }
    }

    /// Time scaling exponent `λ = 2/β*`.
    pub fn lambda(&self) -> f64 {
        2.0 / self.beta_star()
    }

    pub fn branch(&self) -> Branch {
        branch(self.alpha, self.beta_star(), TIE_TOL)
    }

    pub fn eta(&self) -> Eta {
        match self.branch() {
            Branch::Below => Eta::Infinite,
            Branch::Tie => Eta::Finite(self.a / (self.sigma * self.sigma)),
            Branch::Above => Eta::Zero,
        }
    }

    /// Limit exponent `f(t) = (b/σ³)|t|^β·1{β=β*} + (c/σ²)|t|^γ·1{2γ=β*}`.
    pub fn limit_trend(&self) -> TrendFunction {
        let bs = self.beta_star();
        let s = self.sigma;
        let mut terms = Vec::new();
        if (self.beta - bs).abs() <= TIE_TOL {
            terms.push(TrendFunction::AbsPowerTwoSided {
                c: self.b / (s * s * s),
                gamma: self.beta,
            });
        }
        if let Some(TrendPeak { c, gamma }) = self.trend {
            if (2.0 * gamma - bs).abs() <= TIE_TOL {
                terms.push(TrendFunction::AbsPowerTwoSided {
                    c: c / (s * s),
                    gamma,
                });
            }
        }
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            TrendFunction::Sum { terms }
        }
    }

    /// Argument of `Ψ`: `(u − g(t_u))/σ(t_u)` for a moving peak, `(u − g_m)/σ` otherwise.
    pub fn tail_argument(&self) -> f64 {
        match self.moving_peak {
            Some(MovingPeak { g, sigma }) => (self.u - g) / sigma,
            None => (self.u - self.g_m) / self.sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.alpha > 0.0 && self.alpha <= 2.0,
            "alpha must lie in (0, 2], got {}",
            self.alpha
        );
        for (name, v) in [
            ("a", self.a),
            ("beta", self.beta),
            ("b", self.b),
            ("sigma", self.sigma),
        ] {
            ensure!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
        }
        if let Some(TrendPeak { c, gamma }) = self.trend {
            ensure!(
                c > 0.0 && c.is_finite(),
                "trend c must be positive, got {c}"
            );
            ensure!(
                gamma > 0.0 && gamma.is_finite(),
                "trend gamma must be positive, got {gamma}"
            );
        }
        if let Some(MovingPeak { g, sigma }) = self.moving_peak {
            ensure!(
                g.is_finite() && sigma > 0.0 && sigma.is_finite(),
                "moving peak needs finite g and sigma > 0"
            );
        }
        ensure!(self.u.is_finite(), "u must be finite");
        ensure!(self.g_m.is_finite(), "g_m must be finite");
        self.position.validate()
    }
}

/// Evaluated approximation `constant·u^exponent·Ψ(tail_argument)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub value: f64,
    /// Natural log of `value`; finite even where `value` underflows.
    pub log_value: f64,
    pub branch: Branch,
    pub constant: f64,
    pub constant_source: ConstantSource,
    pub exponent: f64,
    pub tail_argument: f64,
}

impl ApproxResult {
    fn new(
        constant: ProvidedConstant,
        branch: Branch,
        u: f64,
        exponent: f64,
        tail_argument: f64,
    ) -> Self {
        let power = if exponent == 0.0 {
            0.0
        } else {
            exponent * u.ln()
        };
        let log_value = constant.value.ln() + power + log_normal_tail(tail_argument);
        Self {
            value: log_value.exp(),
            log_value,
            branch,
            constant: constant.value,
            constant_source: constant.source,
            exponent,
            tail_argument,
        }
    }
}

fn one() -> ProvidedConstant {
    ProvidedConstant {
        value: 1.0,
        source: ConstantSource::ClosedForm,
    }
}

/// `H_α·factor`, keeping a Monte Carlo provenance of `H_α` if there is one.
fn scaled_pickands(h: ProvidedConstant, factor: f64, quadrature: bool) -> ProvidedConstant {
    let source = match h.source {
        ConstantSource::ClosedForm if quadrature => ConstantSource::Quadrature,
        s => s,
    };
    ProvidedConstant {
        value: h.value * factor,
        source,
    }
}

/// `∫ e^{−f}` over `[lo, hi]`.
pub fn exp_neg_integral(f: &TrendFunction, lo: f64, hi: f64) -> Result<f64> {
    Ok(integrate_exp_neg(|t| f.eval(t), lo, hi)?.value)
}

/// Piterbarg constant over a rescaled peak range. Left-unbounded ranges
/// are passed through unchanged; providers mirror them as needed.
fn piterbarg_over(
    provider: &dyn ConstantsProvider,
    alpha: f64,
    a: f64,
    f: &TrendFunction,
    (lo, hi): (f64, f64),
) -> Result<ProvidedConstant> {
    provider.piterbarg(alpha, a, f, lo, hi)
}

fn check_u(u: f64) -> Result<()> {
    ensure!(
        u > 0.0 && u.is_finite(),
        "u must be positive and finite, got {u}"
    );
    Ok(())
}

/// Classical approximation for a process without trend whose variance
/// peaks at `t₀` with `σ(t₀) = 1`:
/// `C₀·u^{(2/α − 2/β)₊}·Ψ(u)`, where `C₀ = a^{1/α}b^{−1/β}Γ(1/β + 1)H_α`
/// for `α < β`, `P^{(b/a)|t|^α}_{α,1}[0, ∞)` for `α = β` and 1 for `α > β`.
/// `trend`, `sigma`, `g_m` and `position` are ignored.
pub fn classic_nonstationary(
    p: &RegimeParams,
    provider: &dyn ConstantsProvider,
) -> Result<ApproxResult> {
    p.validate()?;
    check_u(p.u)?;
    let (alpha, beta) = (p.alpha, p.beta);
    let br = branch(alpha, beta, TIE_TOL);
    let constant = match br {
        Branch::Below => {
            let factor = p.a.powf(1.0 / alpha) * p.b.powf(-1.0 / beta) * gamma(1.0 / beta + 1.0);
            scaled_pickands(provider.pickands(alpha)?, factor, false)
        }
        Branch::Tie => {
            let f = TrendFunction::AbsPowerTwoSided {
                c: p.b / p.a,
                gamma: alpha,
            };
            provider.piterbarg(alpha, 1.0, &f, 0.0, f64::INFINITY)?
        }
        Branch::Above => one(),
    };
    let exponent = (2.0 / alpha - 2.0 / beta).max(0.0);
    Ok(ApproxResult::new(constant, br, p.u, exponent, p.u))
}

/// One maximizer of a locally stationary process with trend
/// `g(t) ≈ g_m − c|t − t₀|^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPeak {
    /// Local correlation coefficient `a(t₀)`.
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
    pub position: PeakPosition,
}

fn peak_constant(
    alpha: f64,
    peak: &StationaryPeak,
    provider: &dyn ConstantsProvider,
) -> Result<ProvidedConstant> {
    let StationaryPeak {
        a,
        c,
        gamma: g,
        position,
    } = *peak;
    ensure!(a > 0.0 && a.is_finite(), "a must be positive, got {a}");
    ensure!(c > 0.0 && c.is_finite(), "c must be positive, got {c}");
    ensure!(g > 0.0 && g.is_finite(), "gamma must be positive, got {g}");
    position.validate()?;
    let f = TrendFunction::AbsPowerTwoSided { c, gamma: g };
    Ok(match branch(alpha, 2.0 * g, TIE_TOL) {
        Branch::Below => {
            let scale = a.powf(1.0 / alpha);
            match position {
                PeakPosition::NearLeft(_) | PeakPosition::NearRight(_) => {
                    let (lo, hi) = position.range();
                    let integral = exp_neg_integral(&f, lo, hi)?;
                    scaled_pickands(provider.pickands(alpha)?, scale * integral, true)
                }
                _ => {
                    let integral = position.q() * c.powf(-1.0 / g) * gamma(1.0 / g + 1.0);
                    scaled_pickands(provider.pickands(alpha)?, scale * integral, false)
                }
            }
        }
        Branch::Tie => {
            let range = match position {
                PeakPosition::NearLeft(_) | PeakPosition::NearRight(_) => position.range(),
                // f is even, so the right endpoint mirrors onto [0, ∞)
                _ => (position.upsilon(), f64::INFINITY),
            };
            piterbarg_over(provider, alpha, a, &f, range)?
        }
        Branch::Above => one(),
    })
}

/// Locally stationary process with a trend peaking at `t₀`:
/// `C_{t₀}·u^{(2/α − 1/γ)₊}·Ψ(u − g_m)`.
pub fn locally_stationary_trend(
    u: f64,
    alpha: f64,
    peak: StationaryPeak,
    g_m: f64,
    provider: &dyn ConstantsProvider,
) -> Result<ApproxResult> {
    locally_stationary_multi_peak(u, alpha, &[peak], g_m, provider)
}

/// Several maximizers sharing `g_m` and `γ`: the constants add up.
pub fn locally_stationary_multi_peak(
    u: f64,
    alpha: f64,
    peaks: &[StationaryPeak],
    g_m: f64,
    provider: &dyn ConstantsProvider,
) -> Result<ApproxResult> {
    check_u(u)?;
    ensure!(
        alpha > 0.0 && alpha <= 2.0,
        "alpha must lie in (0, 2], got {alpha}"
    );
    ensure!(g_m.is_finite(), "g_m must be finite");
    let first = peaks
        .first()
        .ok_or_else(|| Error::Precondition("at least one peak is required".into()))?;
    let g = first.gamma;
    if peaks.iter().any(|p| (p.gamma - g).abs() > TIE_TOL) {
        return Err(Error::Unsupported(
            "peaks with different trend exponents gamma".into(),
        ));
    }
    let mut total = 0.0;
    let mut source = ConstantSource::ClosedForm;
    for peak in peaks {
        let c = peak_constant(alpha, peak, provider)?;
        total += c.value;
        source = match (source, c.source) {
            (ConstantSource::MonteCarlo { estimate }, _)
            | (_, ConstantSource::MonteCarlo { estimate }) => {
                ConstantSource::MonteCarlo { estimate }
            }
            (ConstantSource::Quadrature, _) | (_, ConstantSource::Quadrature) => {
                ConstantSource::Quadrature
            }
            _ => ConstantSource::ClosedForm,
        };
    }
    let br = branch(alpha, 2.0 * g, TIE_TOL);
    let exponent = (2.0 / alpha - 1.0 / g).max(0.0);
    Ok(ApproxResult::new(
        ProvidedConstant {
            value: total,
            source,
        },
        br,
        u,
        exponent,
        u - g_m,
    ))
}

/// Non-stationary process with trend:
/// `C₀·u^{(2/α − 2/β*)₊}·Ψ((u − g(t₀))/σ)`, with `C₀` equal to
/// `σ^{−2/α}a^{1/α}H_α∫e^{−f}` for `α < β*`, `P^f_{α,a/σ²}` for `α = β*`
/// and 1 for `α > β*`, all over the rescaled peak range, and `f` from
/// [`RegimeParams::limit_trend`].
pub fn nonstationary_trend(
    p: &RegimeParams,
    provider: &dyn ConstantsProvider,
) -> Result<ApproxResult> {
    p.validate()?;
    check_u(p.u)?;
    let br = p.branch();
    let f = p.limit_trend();
    let range = p.position.range();
    let constant = match br {
        Branch::Below => {
            let integral = exp_neg_integral(&f, range.0, range.1)?;
            let scale = p.sigma.powf(-2.0 / p.alpha) * p.a.powf(1.0 / p.alpha);
            scaled_pickands(provider.pickands(p.alpha)?, scale * integral, true)
        }
        Branch::Tie => piterbarg_over(provider, p.alpha, p.a / (p.sigma * p.sigma), &f, range)?,
        Branch::Above => one(),
    };
    let exponent = (2.0 / p.alpha - 2.0 / p.beta_star()).max(0.0);
    Ok(ApproxResult::new(
        constant,
        br,
        p.u,
        exponent,
        p.tail_argument(),
    ))
}

/// Form of the constant when `η = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroEtaForm {
    /// `sup_{[x1,x2]} e^{−f}`, for families whose variance maximizer may lie
    /// outside the limiting window.
    #[default]
    Supremum,
    /// 1, when the window contains the variance maximizer.
    One,
}

/// Constant `C` of the general limit theorem.
#[allow(clippy::too_many_arguments)]
pub fn general_constant(
    eta: Eta,
    alpha: f64,
    f: &TrendFunction,
    x1: f64,
    x2: f64,
    zero_form: ZeroEtaForm,
    provider: &dyn ConstantsProvider,
) -> Result<ProvidedConstant> {
    ensure!(x1 < x2, "x1 must be below x2, got [{x1}, {x2}]");
    ensure!(!x1.is_nan() && !x2.is_nan(), "range must not be NaN");
    match eta {
        Eta::Infinite => {
            let integral = exp_neg_integral(f, x1, x2)?;
            Ok(scaled_pickands(provider.pickands(alpha)?, integral, true))
        }
        Eta::Finite(eta) => {
            ensure!(
                eta > 0.0 && eta.is_finite(),
                "finite eta must be positive, got {eta}"
            );
            provider.piterbarg(alpha, eta, f, x1, x2)
        }
        Eta::Zero => Ok(match zero_form {
            ZeroEtaForm::One => one(),
            ZeroEtaForm::Supremum => ProvidedConstant {
                value: (-infimum(f, x1, x2)).exp(),
                source: ConstantSource::Quadrature,
            },
        }),
    }
}

/// `inf f` over `[x1, x2]` by a grid scan refined around the best point.
/// Infinite ends are cut at ±1000.
pub(crate) fn infimum(f: &TrendFunction, x1: f64, x2: f64) -> f64 {
    let lo = x1.max(-1e3);
    let hi = x2.min(1e3);
    let mut best = f64::INFINITY;
    let mut at = lo;
    let consider = |t: f64, best: &mut f64, at: &mut f64| {
        let v = f.eval(t);
        if v < *best {
            *best = v;
            *at = t;
        }
    };
    if x1 <= 0.0 && 0.0 <= x2 {
        consider(0.0, &mut best, &mut at);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..6 {
        let m = 2000;
        for i in 0..=m {
            consider(a + (b - a) * i as f64 / m as f64, &mut best, &mut at);
        }
        let w = (b - a) / m as f64;
        a = (at - w).max(lo);
        b = (at + w).min(hi);
    }
    best
}

/// `P^h_{1,δ/σ²}[−r², ∞)·Ψ(√(2δu² + 4cu)/σ)` with `h` the ruin trend and
/// `r = c/δ`.
pub fn ruin_asymptotic(
    u: f64,
    c: f64,
    delta: f64,
    sigma: f64,
    provider: &dyn ConstantsProvider,
) -> Result<ApproxResult> {
    check_u(u)?;
    let h = TrendFunction::ruin_h(c, delta, sigma)?;
    let r = c / delta;
    let constant = provider.piterbarg(1.0, delta / (sigma * sigma), &h, -r * r, f64::INFINITY)?;
    let x = (2.0 * delta * u * u + 4.0 * c * u).sqrt() / sigma;
    Ok(ApproxResult::new(constant, Branch::Tie, u, 0.0, x))
}

fn check_ruin(c: f64, delta: f64, sigma: f64) -> Result<()> {
    for (name, v) in [("c", c), ("delta", delta), ("sigma", sigma)] {
        ensure!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
    }
    Ok(())
}

/// Natural log of [`ruin_exact`].
pub fn ruin_exact_log(u: f64, c: f64, delta: f64, sigma: f64) -> Result<f64> {
    check_ruin(c, delta, sigma)?;
    ensure!(u >= 0.0 && u.is_finite(), "u must be nonnegative, got {u}");
    let r = c / delta;
    let num = (2.0 * delta).sqrt() * (u + r) / sigma;
    let den = std::f64::consts::SQRT_2 * c / (sigma * delta.sqrt());
    Ok(log_normal_tail(num) - log_normal_tail(den))
}

/// Infinite-horizon ruin probability `Ψ(√(2δ)(u + r)/σ)/Ψ(√2c/(σ√δ))`.
pub fn ruin_exact(u: f64, c: f64, delta: f64, sigma: f64) -> Result<f64> {
    ruin_exact_log(u, c, delta, sigma).map(f64::exp)
}

/// `1/Ψ(√2c/(σ√δ))`, the value of `e^{c²/(σ²δ)}·P^h_{1,δ/σ²}[−r², ∞)`.
pub fn piterbarg_identity_rhs(c: f64, delta: f64, sigma: f64) -> Result<f64> {
    check_ruin(c, delta, sigma)?;
    Ok((-log_normal_tail(std::f64::consts::SQRT_2 * c / (sigma * delta.sqrt()))).exp())
}

#[cfg(test)]
mod tests;
