use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Covariance kernel of the underlying centered Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationModel {
    /// Fractional Brownian motion with `Var B(t) = |t|^alpha`, two-sided.
    Fbm { alpha: f64 },
    /// Stationary unit-variance process with `r(τ) = exp(-a|τ|^alpha)`.
    StationaryPower { alpha: f64, a: f64 },
    /// Brownian bridge on `[0, 1]`.
    BrownianBridge,
    /// Discounted risk reserve after the time change onto `[0, 1]`:
    /// `Cov = σ²/(2δ)·(1 − max(s, t))`.
    RiskTimeChange { delta: f64, sigma: f64 },
    /// Explicit covariance matrix on the listed times.
    CustomCovariance {
        times: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
}

impl CorrelationModel {
    pub fn fbm(alpha: f64) -> Result<Self> {
        let m = Self::Fbm { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn stationary_power(alpha: f64, a: f64) -> Result<Self> {
        let m = Self::StationaryPower { alpha, a };
        m.validate()?;
        Ok(m)
    }

    pub fn risk_time_change(delta: f64, sigma: f64) -> Result<Self> {
        let m = Self::RiskTimeChange { delta, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn custom(times: Vec<f64>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::CustomCovariance { times, matrix };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fbm { alpha } => check_alpha(*alpha),
            Self::StationaryPower { alpha, a } => {
                check_alpha(*alpha)?;
                ensure!(*a > 0.0 && a.is_finite(), "a must be positive, got {a}");
                Ok(())
            }
            Self::BrownianBridge => Ok(()),
            Self::RiskTimeChange { delta, sigma } => {
                ensure!(
                    *delta > 0.0 && delta.is_finite(),
                    "delta must be positive, got {delta}"
                );
                ensure!(
                    *sigma > 0.0 && sigma.is_finite(),
                    "sigma must be positive, got {sigma}"
                );
                Ok(())
            }
            Self::CustomCovariance { times, matrix } => {
                let m = times.len();
                ensure!(m > 0, "custom covariance needs at least one time");
                ensure!(
                    times.windows(2).all(|w| w[0] < w[1]),
                    "custom covariance times must be strictly increasing"
                );
                ensure!(
                    matrix.len() == m && matrix.iter().all(|row| row.len() == m),
                    "custom covariance must be {m}x{m}"
                );
                for i in 0..m {
                    ensure!(
                        matrix[i][i].is_finite(),
                        "custom covariance has non-finite entries"
                    );
                    for j in 0..i {
                        let (x, y) = (matrix[i][j], matrix[j][i]);
                        ensure!(
                            x.is_finite() && y.is_finite(),
                            "custom covariance has non-finite entries"
                        );
                        ensure!(
                            (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())),
                            "custom covariance is not symmetric at ({i}, {j})"
                        );
                    }
                }
                Ok(())
            }
        }
    }

    /// `Cov(X(s), X(t))`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        self.validate()?;
        ensure!(s.is_finite() && t.is_finite(), "times must be finite");
        match self {
            Self::CustomCovariance { times, matrix } => {
                let (i, j) = (lookup(times, s)?, lookup(times, t)?);
                Ok(matrix[i][j])
            }
            Self::BrownianBridge | Self::RiskTimeChange { .. } => {
                ensure!(
                    (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t),
                    "times must lie in [0, 1], got ({s}, {t})"
                );
                Ok(self.kernel(s, t))
            }
            _ => Ok(self.kernel(s, t)),
        }
    }

    /// Unchecked kernel evaluation for validated, in-domain arguments.
    pub(crate) fn kernel(&self, s: f64, t: f64) -> f64 {
        match self {
            Self::Fbm { alpha } => {
                0.5 * (s.abs().powf(*alpha) + t.abs().powf(*alpha) - (t - s).abs().powf(*alpha))
            }
            Self::StationaryPower { alpha, a } => (-a * (t - s).abs().powf(*alpha)).exp(),
            Self::BrownianBridge => s.min(t) - s * t,
            Self::RiskTimeChange { delta, sigma } => {
                sigma * sigma / (2.0 * delta) * (1.0 - s.max(t))
            }
            Self::CustomCovariance { times, matrix } => {
                let i = lookup(times, s).expect("time on custom grid");
                let j = lookup(times, t).expect("time on custom grid");
                matrix[i][j]
            }
        }
    }

    pub(crate) fn check_domain(&self, points: &[f64]) -> Result<()> {
        match self {
            Self::BrownianBridge | Self::RiskTimeChange { .. } => {
                ensure!(
                    points[0] >= 0.0 && points[points.len() - 1] <= 1.0,
                    "grid must lie in [0, 1] for this model"
                );
            }
            Self::CustomCovariance { times, .. } => {
                for &t in points {
                    lookup(times, t)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Values on an increasing grid form a Gauss-Markov sequence.
    pub fn is_markov(&self) -> bool {
        match self {
            Self::Fbm { alpha } | Self::StationaryPower { alpha, .. } => *alpha == 1.0,
            Self::BrownianBridge | Self::RiskTimeChange { .. } => true,
            Self::CustomCovariance { .. } => false,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure!(
        alpha > 0.0 && alpha <= 2.0,
        "alpha must lie in (0, 2], got {alpha}"
    );
    Ok(())
}

fn lookup(times: &[f64], t: f64) -> Result<usize> {
    let tol = 1e-12 * t.abs().max(1.0);
    times
        .iter()
        .position(|&x| (x - t).abs() <= tol)
        .ok_or_else(|| {
            Error::Precondition(format!("time {t} is not on the custom covariance grid"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(
            CorrelationModel::fbm(1.0)
                .unwrap()
                .covariance(0.5, 1.0)
                .unwrap(),
            0.5
        );
        assert_eq!(
            CorrelationModel::fbm(2.0)
                .unwrap()
                .covariance(2.0, 3.0)
                .unwrap(),
            6.0
        );
        assert_eq!(
            CorrelationModel::BrownianBridge
                .covariance(0.5, 0.5)
                .unwrap(),
            0.25
        );
        let risk = CorrelationModel::risk_time_change(2.0, 1.0).unwrap();
        assert_eq!(risk.covariance(0.25, 0.5).unwrap(), 0.125);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CorrelationModel::fbm(0.0).is_err());
        assert!(CorrelationModel::fbm(2.5).is_err());
        assert!(CorrelationModel::stationary_power(1.0, 0.0).is_err());
        assert!(CorrelationModel::risk_time_change(1.0, -1.0).is_err());
        assert!(
            CorrelationModel::custom(vec![0.0, 1.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err()
        );
        assert!(CorrelationModel::BrownianBridge
            .covariance(0.5, 1.5)
            .is_err());
        assert!(CorrelationModel::risk_time_change(1.0, 1.0)
            .unwrap()
            .covariance(-0.1, 0.5)
            .is_err());
    }

    #[test]
    fn custom_lookup() {
        let m =
            CorrelationModel::custom(vec![0.0, 1.0], vec![vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        assert_eq!(m.covariance(1.0, 0.0).unwrap(), 0.5);
        assert!(m.covariance(0.5, 0.0).is_err());
    }

    fn any_model() -> impl Strategy<Value = CorrelationModel> {
        prop_oneof![
            (0.05f64..=2.0).prop_map(|alpha| CorrelationModel::Fbm { alpha }),
            (0.05f64..=2.0, 0.1f64..5.0)
                .prop_map(|(alpha, a)| CorrelationModel::StationaryPower { alpha, a }),
            Just(CorrelationModel::BrownianBridge),
            (0.1f64..3.0, 0.1f64..3.0)
                .prop_map(|(delta, sigma)| CorrelationModel::RiskTimeChange { delta, sigma }),
        ]
    }

    proptest! {
        #[test]
        fn covariance_is_symmetric(model in any_model(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let st = model.covariance(s, t).unwrap();
            let ts = model.covariance(t, s).unwrap();
            prop_assert!((st - ts).abs() <= 1e-15 * st.abs().max(1.0));
        }

        #[test]
        fn fbm_variance_is_power(alpha in 0.01f64..=2.0, t in 0.0f64..100.0) {
            let v = CorrelationModel::Fbm { alpha }.covariance(t, t).unwrap();
            prop_assert!((v - t.powf(alpha)).abs() <= 1e-12 * t.powf(alpha).max(1.0));
        }
    }
}
