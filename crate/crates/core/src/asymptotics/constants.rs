//! Sources for the Pickands and Piterbarg constants used by the asymptotic
//! formulas.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pickands::{
    pickands_limit, piterbarg_estimate, piterbarg_limit, ConstantEstimate, LimitOptions, McBudget,
    PiterbargSpec,
};
use crate::special::{normal_cdf, normal_density, normal_tail};
use crate::trend::TrendFunction;

use super::TIE_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantSource {
    ClosedForm,
    Quadrature,
    MonteCarlo { estimate: ConstantEstimate },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvidedConstant {
    pub value: f64,
    pub source: ConstantSource,
}

impl ProvidedConstant {
    fn closed(value: f64) -> Self {
        Self {
            value,
            source: ConstantSource::ClosedForm,
        }
    }

    pub fn estimate(&self) -> Option<&ConstantEstimate> {
        match &self.source {
            ConstantSource::MonteCarlo { estimate } => Some(estimate),
            _ => None,
        }
    }
}

/// Supplies `H_α` and `P^f_{α,a}[start, end]`.
pub trait ConstantsProvider: Sync {
    fn pickands(&self, alpha: f64) -> Result<ProvidedConstant>;
    fn piterbarg(
        &self,
        alpha: f64,
        a: f64,
        f: &TrendFunction,
        start: f64,
        end: f64,
    ) -> Result<ProvidedConstant>;
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= TIE_TOL * y.abs().max(1.0)
}

/// Known exact values; everything else is [`Error::ConstantUnavailable`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

/// Slope `c` if `f(t) = c·t` on `[0, ∞)`.
fn linear_slope(f: &TrendFunction) -> Option<f64> {
    match *f {
        TrendFunction::Linear { c } => Some(c),
        TrendFunction::Power { c, gamma } | TrendFunction::AbsPowerTwoSided { c, gamma }
            if close(gamma, 1.0) =>
        {
            Some(c)
        }
        _ => None,
    }
}

impl ClosedForm {
    fn lookup(alpha: f64, a: f64, f: &TrendFunction, start: f64, end: f64) -> Option<f64> {
        if end != f64::INFINITY {
            return None;
        }
        let one_sided = start == 0.0;
        if one_sided {
            if let Some(c) = linear_slope(f) {
                if close(alpha, 1.0) {
                    return Some(1.0 + a / c);
                }
                if close(alpha, 2.0) {
                    let m = c / (2.0 * a).sqrt();
                    return Some(normal_cdf(m) + normal_density(m) / m);
                }
            }
        }
        if close(alpha, 2.0) {
            let quadratic = match *f {
                TrendFunction::AbsPowerTwoSided { c, gamma } if close(gamma, 2.0) => Some(c),
                TrendFunction::Power { c, gamma } if close(gamma, 2.0) && one_sided => Some(c),
                _ => None,
            };
            if let Some(c) = quadratic {
                let full = ((a + c) / c).sqrt();
                if one_sided {
                    return Some(0.5 + 0.5 * full);
                }
                if start == f64::NEG_INFINITY {
                    return Some(full);
                }
            }
        }
        if let TrendFunction::RuinH { delta, sigma, r } = *f {
            if close(alpha, 1.0) && close(a, delta / (sigma * sigma)) && close(start, -r * r) {
                let k = r * delta.sqrt() / sigma;
                return Some((-k * k).exp() / normal_tail(std::f64::consts::SQRT_2 * k));
            }
        }
        None
    }
}

impl ConstantsProvider for ClosedForm {
    fn pickands(&self, alpha: f64) -> Result<ProvidedConstant> {
        if close(alpha, 1.0) {
            Ok(ProvidedConstant::closed(1.0))
        } else if close(alpha, 2.0) {
            Ok(ProvidedConstant::closed(
                std::f64::consts::FRAC_2_SQRT_PI / 2.0,
            ))
        } else {
            Err(Error::ConstantUnavailable(format!(
                "no closed form for the Pickands constant at alpha = {alpha}"
            )))
        }
    }

    fn piterbarg(
        &self,
        alpha: f64,
        a: f64,
        f: &TrendFunction,
        start: f64,
        end: f64,
    ) -> Result<ProvidedConstant> {
        Self::lookup(alpha, a, f, start, end)
            .map(ProvidedConstant::closed)
            .ok_or_else(|| {
                Error::ConstantUnavailable(format!(
                    "no closed form for P^f_{{{alpha},{a}}}[{start}, {end}] with f = {f:?}"
                ))
            })
    }
}

/// Monte Carlo estimates through the pickands module. Infinite ranges go
/// through [`piterbarg_limit`] (a range unbounded only below is mirrored
/// first) and `H_α` through [`pickands_limit`] on `limit.schedule`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub grid_step: f64,
    pub budget: McBudget,
    pub limit: LimitOptions,
}

impl ConstantsProvider for MonteCarlo {
    fn pickands(&self, alpha: f64) -> Result<ProvidedConstant> {
        let estimate = pickands_limit(
            alpha,
            self.grid_step,
            self.budget,
            &self.limit.schedule,
            self.limit.refine,
        )?;
        Ok(mc(estimate))
    }

    fn piterbarg(
        &self,
        alpha: f64,
        a: f64,
        f: &TrendFunction,
        start: f64,
        end: f64,
    ) -> Result<ProvidedConstant> {
        let estimate = match (start.is_finite(), end.is_finite()) {
            (true, true) => piterbarg_estimate(
                &PiterbargSpec {
                    alpha,
                    a,
                    trend: f.clone(),
                    start,
                    end,
                    grid_step: self.grid_step,
                },
                self.budget,
            )?,
            (_, false) => {
                piterbarg_limit(alpha, a, f, start, self.grid_step, self.budget, &self.limit)?
            }
            (false, true) => {
                let mirrored = f.clone().reflected();
                piterbarg_limit(
                    alpha,
                    a,
                    &mirrored,
                    -end,
                    self.grid_step,
                    self.budget,
                    &self.limit,
                )?
            }
        };
        Ok(mc(estimate))
    }
}

fn mc(estimate: ConstantEstimate) -> ProvidedConstant {
    ProvidedConstant {
        value: estimate.value,
        source: ConstantSource::MonteCarlo { estimate },
    }
}

/// Tries each provider in turn, moving on only when one reports
/// [`Error::ConstantUnavailable`].
pub struct Chain(pub Vec<Box<dyn ConstantsProvider>>);

impl Chain {
    fn first<F>(&self, call: F) -> Result<ProvidedConstant>
    where
        F: Fn(&dyn ConstantsProvider) -> Result<ProvidedConstant>,
    {
        let mut last = Error::ConstantUnavailable("no providers configured".into());
        for p in &self.0 {
            match call(p.as_ref()) {
                Err(e @ Error::ConstantUnavailable(_)) => last = e,
                other => return other,
            }
        }
        Err(last)
    }
}

impl ConstantsProvider for Chain {
    fn pickands(&self, alpha: f64) -> Result<ProvidedConstant> {
        self.first(|p| p.pickands(alpha))
    }

    fn piterbarg(
        &self,
        alpha: f64,
        a: f64,
        f: &TrendFunction,
        start: f64,
        end: f64,
    ) -> Result<ProvidedConstant> {
        self.first(|p| p.piterbarg(alpha, a, f, start, end))
    }
}

/// Memoizes another provider, so a sweep over `u` pays for each Monte
/// Carlo constant once.
pub struct Cached<P> {
    inner: P,
    memo: Mutex<Vec<(String, ProvidedConstant)>>,
}

impl<P: ConstantsProvider> Cached<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            memo: Mutex::new(Vec::new()),
        }
    }

    fn get<F: FnOnce() -> Result<ProvidedConstant>>(
        &self,
        key: String,
        compute: F,
    ) -> Result<ProvidedConstant> {
        if let Some((_, v)) = self.memo.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(v.clone());
        }
        let v = compute()?;
        self.memo.lock().unwrap().push((key, v.clone()));
        Ok(v)
    }
}

impl<P: ConstantsProvider> ConstantsProvider for Cached<P> {
    fn pickands(&self, alpha: f64) -> Result<ProvidedConstant> {
        self.get(format!("H {alpha:?}"), || self.inner.pickands(alpha))
    }

    fn piterbarg(
        &self,
        alpha: f64,
        a: f64,
        f: &TrendFunction,
        start: f64,
        end: f64,
    ) -> Result<ProvidedConstant> {
        self.get(format!("P {alpha:?} {a:?} {f:?} {start:?} {end:?}"), || {
            self.inner.piterbarg(alpha, a, f, start, end)
        })
    }
}
