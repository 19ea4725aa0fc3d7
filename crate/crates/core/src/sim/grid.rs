use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Strictly increasing, finite time points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    step: f64,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        ensure!(!points.is_empty(), "grid needs at least one point");
        ensure!(
            points.iter().all(|t| t.is_finite()),
            "grid points must be finite"
        );
        ensure!(
            points.windows(2).all(|w| w[0] < w[1]),
            "grid points must be strictly increasing"
        );
        let step = if points.len() > 1 {
            (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64
        } else {
            0.0
        };
        Ok(Self { points, step })
    }

    /// `intervals + 1` equally spaced points covering `[start, end]`.
    pub fn uniform(start: f64, end: f64, intervals: usize) -> Result<Self> {
        ensure!(intervals >= 1, "uniform grid needs at least one interval");
        ensure!(
            start < end,
            "uniform grid needs start < end, got [{start}, {end}]"
        );
        let h = (end - start) / intervals as f64;
        let mut points: Vec<f64> = (0..=intervals).map(|i| start + i as f64 * h).collect();
        points[intervals] = end;
        let mut g = Self::new(points)?;
        g.step = h;
        Ok(g)
    }

    /// Lattice `{k·step}` restricted to `[start, end]`; contains 0 whenever
    /// the interval does. Endpoints are snapped to the lattice.
    pub fn lattice(start: f64, end: f64, step: f64) -> Result<Self> {
        ensure!(
            step > 0.0 && step.is_finite(),
            "grid step must be positive, got {step}"
        );
        ensure!(
            start <= end,
            "lattice needs start <= end, got [{start}, {end}]"
        );
        let lo = (start / step - 1e-9).ceil() as i64;
        let hi = (end / step + 1e-9).floor() as i64;
        ensure!(
            lo <= hi,
            "no lattice point with step {step} in [{start}, {end}]"
        );
        let points = (lo..=hi).map(|k| k as f64 * step).collect();
        let mut g = Self::new(points)?;
        g.step = step;
        Ok(g)
    }

    /// `0` followed by points growing geometrically from `first` by `ratio`
    /// until the spacing reaches `max_step`, then uniform up to `end`.
    pub fn geometric(first: f64, ratio: f64, max_step: f64, end: f64) -> Result<Self> {
        ensure!(
            first > 0.0 && first < end,
            "geometric grid needs 0 < first < end"
        );
        ensure!(ratio > 1.0, "geometric ratio must exceed 1, got {ratio}");
        ensure!(max_step > 0.0, "max_step must be positive");
        let mut points = vec![0.0, first];
        let mut t = first;
        loop {
            let next = (t * ratio).min(t + max_step);
            if next >= end {
                break;
            }
            points.push(next);
            t = next;
        }
        if end - t < 0.5 * (t - points[points.len() - 2]) && points.len() > 2 {
            points.pop();
        }
        points.push(end);
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nominal spacing (informational).
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Every `factor`-th point, keeping both ends; requires `(len-1) % factor == 0`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        ensure!(factor >= 1, "coarsening factor must be positive");
        ensure!(
            (self.len() - 1) % factor == 0,
            "grid of {} points cannot be coarsened by {factor}",
            self.len()
        );
        let points = self.points.iter().step_by(factor).copied().collect();
        let mut g = Self::new(points)?;
        g.step = self.step * factor as f64;
        Ok(g)
    }

    /// Index of a point equal to `t` (within 1e-12 relative), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = self.points.partition_point(|&p| p < t - tol);
        (i < self.len() && (self.points[i] - t).abs() <= tol).then_some(i)
    }

    pub(crate) fn require_same_len(&self, other_len: usize, what: &str) -> Result<()> {
        if other_len != self.len() {
            return Err(Error::Precondition(format!(
                "{what} has {other_len} values but the grid has {} points",
                self.len()
            )));
        }
        Ok(())
    }
}
