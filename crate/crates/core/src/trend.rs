//! Trend functions `f` entering the Piterbarg-type constants.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrendFunction {
    Zero,
    /// `c·t`.
    Linear {
        c: f64,
    },
    /// `c·t^γ` for `t ≥ 0`, extended oddly to `t < 0`.
    Power {
        c: f64,
        gamma: f64,
    },
    /// `c·|t|^γ`.
    AbsPowerTwoSided {
        c: f64,
        gamma: f64,
    },
    /// `(δ/σ²)·(√(t + r²) − r)²` on `t ≥ −r²`.
    RuinH {
        delta: f64,
        sigma: f64,
        r: f64,
    },
    /// Piecewise-linear interpolation of tabulated values.
    Table {
        points: Vec<f64>,
        values: Vec<f64>,
    },
    /// `t ↦ inner(t + y)`.
    Shifted {
        inner: Box<TrendFunction>,
        y: f64,
    },
    /// `t ↦ inner(−t)`.
    Reflected {
        inner: Box<TrendFunction>,
    },
    Sum {
        terms: Vec<TrendFunction>,
    },
}

impl TrendFunction {
    /// Ruin-model trend for premium rate `c`, force of interest `delta` and volatility `sigma`.
    pub fn ruin_h(c: f64, delta: f64, sigma: f64) -> Result<Self> {
        let f = Self::RuinH {
            delta,
            sigma,
            r: c / delta,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn shifted(self, y: f64) -> Self {
        Self::Shifted {
            inner: Box::new(self),
            y,
        }
    }

    pub fn reflected(self) -> Self {
        Self::Reflected {
            inner: Box::new(self),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, name: &str| -> Result<()> {
            ensure!(x > 0.0 && x.is_finite(), "{name} must be positive, got {x}");
            Ok(())
        };
        match self {
            Self::Zero => Ok(()),
            Self::Linear { c } => positive(*c, "c"),
            Self::Power { c, gamma } | Self::AbsPowerTwoSided { c, gamma } => {
                positive(*c, "c")?;
                positive(*gamma, "gamma")
            }
            Self::RuinH { delta, sigma, r } => {
                positive(*delta, "delta")?;
                positive(*sigma, "sigma")?;
                positive(*r, "r")
            }
            Self::Table { points, values } => {
                ensure!(!points.is_empty(), "trend table is empty");
                ensure!(
                    points.len() == values.len(),
                    "trend table points and values differ in length"
                );
                ensure!(
                    points.windows(2).all(|w| w[0] < w[1]),
                    "trend table points must increase"
                );
                ensure!(
                    points.iter().chain(values).all(|v| v.is_finite()),
                    "trend table entries must be finite"
                );
                if points[0] <= 0.0 && 0.0 <= points[points.len() - 1] {
                    ensure!(
                        interpolate(points, values, 0.0).abs() < 1e-12,
                        "trend table must vanish at 0"
                    );
                }
                Ok(())
            }
            Self::Shifted { inner, y } => {
                ensure!(y.is_finite(), "shift must be finite");
                inner.validate()
            }
            Self::Reflected { inner } => inner.validate(),
            Self::Sum { terms } => terms.iter().try_for_each(Self::validate),
        }
    }

    /// `f(t)`; `+∞` outside the domain.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Linear { c } => c * t,
            Self::Power { c, gamma } => c * t.signum() * t.abs().powf(*gamma),
            Self::AbsPowerTwoSided { c, gamma } => c * t.abs().powf(*gamma),
            Self::RuinH { delta, sigma, r } => {
                let s = t + r * r;
                if s < 0.0 {
                    return f64::INFINITY;
                }
                let d = s.sqrt() - r;
                delta / (sigma * sigma) * d * d
            }
            Self::Table { points, values } => {
                if t < points[0] || t > points[points.len() - 1] {
                    f64::INFINITY
                } else {
                    interpolate(points, values, t)
                }
            }
            Self::Shifted { inner, y } => inner.eval(t + y),
            Self::Reflected { inner } => inner.eval(-t),
            Self::Sum { terms } => terms.iter().map(|f| f.eval(t)).sum(),
        }
    }

    pub fn values(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&t| self.eval(t)).collect()
    }

    /// Closed interval on which `f` is finite.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::RuinH { r, .. } => (-r * r, f64::INFINITY),
            Self::Table { points, .. } => (points[0], points[points.len() - 1]),
            Self::Shifted { inner, y } => {
                let (lo, hi) = inner.domain();
                (lo - y, hi - y)
            }
            Self::Reflected { inner } => {
                let (lo, hi) = inner.domain();
                (-hi, -lo)
            }
            Self::Sum { terms } => terms
                .iter()
                .map(Self::domain)
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (l, h)| {
                    (lo.max(l), hi.min(h))
                }),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

fn interpolate(points: &[f64], values: &[f64], t: f64) -> f64 {
    let i = points.partition_point(|&p| p <= t);
    if i == 0 {
        return values[0];
    }
    if i == points.len() {
        return values[points.len() - 1];
    }
    let (x0, x1) = (points[i - 1], points[i]);
    let w = (t - x0) / (x1 - x0);
    values[i - 1] * (1.0 - w) + values[i] * w
}

/// Growth diagnostics of `f` at one probe magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub t: f64,
    /// `f(t)/|t|^ε1`
    pub lower_ratio: f64,
    /// `f(t)/|t|^ε2`
    pub upper_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub vanishes_at_zero: bool,
    /// Lower ratios increase strictly along every probed direction.
    pub grows: bool,
    /// Upper ratios decrease strictly along every probed direction.
    pub decays: bool,
    pub passed: bool,
}

/// Numerical check of the polynomial growth envelope
/// `f(t)/|t|^ε1 → ∞`, `f(t)/|t|^ε2 → 0` at the given magnitudes on `[0, ∞)`.
pub fn c0star_probe(f: &TrendFunction, eps1: f64, eps2: f64, probes: &[f64]) -> ProbeReport {
    probe(f, eps1, eps2, probes, &[1.0])
}

/// As [`c0star_probe`], on every half-line of the domain of `f` that
/// contains the probes.
pub fn c0star_probe_two_sided(
    f: &TrendFunction,
    eps1: f64,
    eps2: f64,
    probes: &[f64],
) -> ProbeReport {
    probe(f, eps1, eps2, probes, &[1.0, -1.0])
}

fn probe(f: &TrendFunction, eps1: f64, eps2: f64, probes: &[f64], signs: &[f64]) -> ProbeReport {
    let (lo, hi) = f.domain();
    let usable = f.validate().is_ok() && 0.0 < eps1 && eps1 < eps2 && probes.len() >= 2;
    let increasing = probes.windows(2).all(|w| 0.0 < w[0] && w[0] < w[1]);
    let mut rows = Vec::new();
    let mut grows = usable && increasing;
    let mut decays = usable && increasing;
    let mut directions = 0;
    for &sign in signs {
        let ts: Vec<f64> = probes.iter().map(|p| sign * p).collect();
        if !ts.iter().all(|&t| lo <= t && t <= hi) {
            continue;
        }
        directions += 1;
        let dir: Vec<ProbeRow> = ts
            .iter()
            .map(|&t| {
                let v = f.eval(t);
                ProbeRow {
                    t,
                    lower_ratio: v / t.abs().powf(eps1),
                    upper_ratio: v / t.abs().powf(eps2),
                }
            })
            .collect();
        grows &= dir.windows(2).all(|w| w[1].lower_ratio > w[0].lower_ratio);
        decays &= dir
            .windows(2)
            .all(|w| w[1].upper_ratio.abs() < w[0].upper_ratio.abs());
        rows.extend(dir);
    }
    grows &= directions > 0;
    decays &= directions > 0;
    let vanishes_at_zero = !(lo <= 0.0 && 0.0 <= hi) || f.eval(0.0).abs() < 1e-12;
    ProbeReport {
        rows,
        vanishes_at_zero,
        grows,
        decays,
        passed: grows && decays && vanishes_at_zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROBES: [f64; 4] = [10.0, 100.0, 1e3, 1e4];

    #[test]
    fn linear_passes_probe() {
        let linear = TrendFunction::Linear { c: 1.0 };
        assert!(c0star_probe(&linear, 0.5, 2.0, &PROBES).passed);
        // odd, so it fails on the negative half-line
        assert!(!c0star_probe_two_sided(&linear, 0.5, 2.0, &PROBES).passed);
        let abs = TrendFunction::AbsPowerTwoSided { c: 1.0, gamma: 1.0 };
        assert!(c0star_probe_two_sided(&abs, 0.5, 2.0, &PROBES).passed);
    }

    #[test]
    fn zero_fails_probe() {
        assert!(!c0star_probe(&TrendFunction::Zero, 0.5, 2.0, &PROBES).passed);
    }

    #[test]
    fn ruin_h_passes_probe() {
        let h = TrendFunction::ruin_h(1.0, 1.0, 1.0).unwrap();
        let r = c0star_probe_two_sided(&h, 0.5, 2.0, &PROBES);
        assert!(r.passed, "{r:?}");
        assert!(r.rows.iter().all(|row| row.t > 0.0));
        // h(t)/t → δ/σ²
        assert!((h.eval(1e8) / 1e8 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ruin_h_domain_and_shift() {
        let h = TrendFunction::ruin_h(1.0, 1.0, 1.0).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(-1.0), 1.0);
        assert_eq!(h.eval(-1.5), f64::INFINITY);
        let hy = h.clone().shifted(-1.0);
        for t in [0.0, 0.25, 4.0, 9.0] {
            let want: f64 = t - 2.0 * f64::sqrt(t) + 1.0;
            assert!((hy.eval(t) - want).abs() < 1e-12);
        }
        assert_eq!(hy.domain().0, 0.0);
    }

    #[test]
    fn table_interpolates() {
        let f = TrendFunction::Table {
            points: vec![-1.0, 0.0, 2.0],
            values: vec![1.0, 0.0, 4.0],
        };
        f.validate().unwrap();
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(-0.5), 0.5);
        assert_eq!(f.eval(3.0), f64::INFINITY);
        let bad = TrendFunction::Table {
            points: vec![-1.0, 1.0],
            values: vec![1.0, 1.0],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn power_matches_linear_at_unit_exponent() {
        let p = TrendFunction::Power { c: 2.0, gamma: 1.0 };
        let l = TrendFunction::Linear { c: 2.0 };
        for t in [-3.0, -0.5, 0.0, 0.7, 5.0] {
            assert_eq!(p.eval(t), l.eval(t));
        }
    }

    #[test]
    fn sum_adds_terms() {
        let f = TrendFunction::Sum {
            terms: vec![
                TrendFunction::AbsPowerTwoSided { c: 8.0, gamma: 2.0 },
                TrendFunction::AbsPowerTwoSided { c: 2.0, gamma: 1.0 },
            ],
        };
        assert_eq!(f.eval(-0.5), 3.0);
    }
}
