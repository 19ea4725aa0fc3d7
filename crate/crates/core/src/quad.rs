//! Adaptive Gauss–Kronrod quadrature, plus the truncation rule for
//! integrals of `exp(-f)` over unbounded ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute tolerance used for every `∫ exp(-f)` evaluation.
pub const ABS_TOL: f64 = 1e-8;

/// Infinite ranges are cut where the exponent exceeds this value.
pub const TRUNCATION_EXPONENT: f64 = 40.0;

const MAX_SUBDIVISIONS: usize = 4000;

// 15-point Kronrod abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// 7-point Gauss weights attached to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, tol)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    let (value, error) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    while total_err > tol {
        if heap.len() >= MAX_SUBDIVISIONS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}]: error estimate {total_err:.3e} after {} subdivisions",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod(&f, worst.a, mid);
        let (rv, re) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    if !total.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    // re-sum to shed accumulated rounding from the running update
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Finds a finite cut-off beyond which `f` stays above [`TRUNCATION_EXPONENT`],
/// searching outward from `start` in direction `sign`.
/// Finite ranges longer than this are trimmed like infinite ones.
const FAR: f64 = 1e3;

fn cutoff<F: Fn(f64) -> f64>(f: &F, start: f64, sign: f64) -> Result<f64> {
    let mut step = 1.0_f64;
    for _ in 0..80 {
        let x = start + sign * step;
        let y = start + sign * 2.0 * step;
        if f(x) > TRUNCATION_EXPONENT && f(y) > TRUNCATION_EXPONENT {
            return Ok(x);
        }
        step *= 2.0;
    }
    Err(Error::Quadrature(
        "exponent does not exceed the truncation level; integrand does not decay".into(),
    ))
}

/// `∫_lo^hi exp(-f(t)) dt` where either limit may be infinite.
///
/// Unbounded or distant ends are truncated where `f > 40`; the interval is split at 0
/// when it contains the origin, where the exponents used here have a kink.
pub fn integrate_exp_neg<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<QuadResult> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Quadrature(format!("invalid range [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let anchor = 0.0_f64.clamp(lo, hi);
    // far finite ends are trimmed too, or the bulk can fall between nodes
    let a = if lo == f64::NEG_INFINITY {
        cutoff(&f, anchor, -1.0)?.min(anchor)
    } else if lo < anchor - FAR {
        cutoff(&f, anchor, -1.0).map_or(lo, |c| c.min(anchor).max(lo))
    } else {
        lo
    };
    let b = if hi == f64::INFINITY {
        cutoff(&f, anchor.max(a), 1.0)?
    } else if hi > anchor.max(a) + FAR {
        cutoff(&f, anchor.max(a), 1.0).map_or(hi, |c| c.min(hi))
    } else {
        hi
    };
    let g = |t: f64| {
        let v = f(t);
        if v.is_nan() {
            0.0
        } else {
            (-v).exp()
        }
    };
    if a < 0.0 && b > 0.0 {
        let left = integrate(g, a, 0.0, 0.5 * ABS_TOL)?;
        let right = integrate(g, 0.0, b, 0.5 * ABS_TOL)?;
        Ok(QuadResult {
            value: left.value + right.value,
            error: left.error + right.error,
            evaluations: left.evaluations + right.evaluations,
        })
    } else if a < b {
        integrate(g, a, b, ABS_TOL)
    } else {
        Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        })
    }
}
