//! Streaming sample moments with deterministic merging.

/// Mean vector and co-moment matrix of a stream of fixed-length vectors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments {
    pub n: u64,
    pub mean: Vec<f64>,
    /// Sum of outer products of deviations from the running mean.
    pub comoment: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, dx) in self.mean.iter_mut().zip(&delta) {
            *m += dx / n;
        }
        for i in 0..d {
            let after_i = x[i] - self.mean[i];
            for j in 0..d {
                self.comoment[i * d + j] += delta[j] * after_i;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other
            .mean
            .iter()
            .zip(&self.mean)
            .map(|(b, a)| b - a)
            .collect();
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] +=
                    other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, dx) in self.mean.iter_mut().zip(&delta) {
            *m += dx * nb / n;
        }
        self.n += other.n;
    }

    /// Sample covariance (divisor `n − 1`); zero for fewer than two samples.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.n - 1) as f64
    }

    /// Standard error of `Σ w_i·mean_i`.
    pub fn stderr_of(&self, w: &[f64]) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let d = self.dim();
        let mut var = 0.0;
        for i in 0..d {
            for j in 0..d {
                var += w[i] * w[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.n as f64).sqrt()
    }

    pub fn stderr(&self, i: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.covariance(i, i).max(0.0) / self.n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_equals_single_pass() {
        let data: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, (i * i % 7) as f64]).collect();
        let mut whole = Moments::new(2);
        data.iter().for_each(|x| whole.push(x));
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        data[..17].iter().for_each(|x| a.push(x));
        data[17..].iter().for_each(|x| b.push(x));
        a.merge(&b);
        for (x, y) in whole.mean.iter().zip(&a.mean) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in whole.comoment.iter().zip(&a.comoment) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((whole.covariance(0, 0) - 212.5).abs() < 1e-9);
    }

    #[test]
    fn stderr_of_difference() {
        let mut m = Moments::new(2);
        for i in 0..10 {
            let x = i as f64;
            m.push(&[x, x + 1.0]);
        }
        assert!(m.stderr_of(&[1.0, -1.0]) < 1e-12);
        assert!(m.stderr(0) > 0.0);
    }
}
