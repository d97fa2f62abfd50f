//! Constructed response surfaces with known optima.
//!
//! Each session scales a shared surface by `exp(h * u - h^2 / 2)` where `u` is the
//! session's first user feature, so the mean over a log keeps the surface's argmax.

use serde::{Deserialize, Serialize};

use crate::domain::{KpiVector, Session, Setting};
use crate::error::{Error, Result};

use super::Simulator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Surface {
    /// `intercept + slope . a`
    Linear { intercept: f64, slope: Vec<f64> },
    /// `peak - sum_j curvature_j * (a_j - optimum_j)^2`
    Quadratic {
        peak: f64,
        optimum: Vec<f64>,
        curvature: Vec<f64>,
    },
    /// `base + sum_b height_b * exp(-|a - center_b|^2 / (2 width_b^2))`
    Bumps { base: f64, bumps: Vec<Bump> },
}

impl Surface {
    pub fn constant(value: f64, dims: usize) -> Self {
        Surface::Linear {
            intercept: value,
            slope: vec![0.0; dims],
        }
    }

    pub fn dims(&self) -> Result<usize> {
        let dims = match self {
            Surface::Linear { slope, .. } => slope.len(),
            Surface::Quadratic {
                optimum, curvature, ..
            } => {
                if optimum.len() != curvature.len() {
                    return Err(Error::DimensionMismatch {
                        expected: optimum.len(),
                        actual: curvature.len(),
                    });
                }
                optimum.len()
            }
            Surface::Bumps { bumps, .. } => {
                let dims = bumps.first().map(|b| b.center.len()).ok_or_else(|| {
                    Error::InvalidConfig("bump surface needs at least one bump".into())
                })?;
                for b in bumps {
                    if b.center.len() != dims {
                        return Err(Error::DimensionMismatch {
                            expected: dims,
                            actual: b.center.len(),
                        });
                    }
                    if !(b.width.is_finite() && b.width > 0.0) {
                        return Err(Error::InvalidConfig(format!(
                            "bump width {} must be > 0",
                            b.width
                        )));
                    }
                }
                dims
            }
        };
        Ok(dims)
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        match self {
            Surface::Linear { intercept, slope } => {
                intercept + slope.iter().zip(a).map(|(s, x)| s * x).sum::<f64>()
            }
            Surface::Quadratic {
                peak,
                optimum,
                curvature,
            } => {
                peak - optimum
                    .iter()
                    .zip(curvature)
                    .zip(a)
                    .map(|((o, c), x)| c * (x - o).powi(2))
                    .sum::<f64>()
            }
            Surface::Bumps { base, bumps } => {
                base + bumps
                    .iter()
                    .map(|b| {
                        let r2: f64 = b.center.iter().zip(a).map(|(c, x)| (x - c).powi(2)).sum();
                        b.height * (-r2 / (2.0 * b.width * b.width)).exp()
                    })
                    .sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSimulator {
    pub revenue: Surface,
    pub iy: Surface,
    /// Clicks per impression, in `[0, 1]`.
    pub ctr: f64,
    /// Log-scale spread of the per-session multiplier.
    #[serde(default)]
    pub heterogeneity: f64,
}

impl SurfaceSimulator {
    pub fn dims(&self) -> Result<usize> {
        let r = self.revenue.dims()?;
        let i = self.iy.dims()?;
        if r != i {
            return Err(Error::DimensionMismatch {
                expected: r,
                actual: i,
            });
        }
        if !(0.0..=1.0).contains(&self.ctr) {
            return Err(Error::InvalidConfig(format!(
                "ctr {} outside [0, 1]",
                self.ctr
            )));
        }
        if !(self.heterogeneity.is_finite() && self.heterogeneity >= 0.0) {
            return Err(Error::InvalidConfig("heterogeneity must be >= 0".into()));
        }
        Ok(r)
    }

    pub fn session_scale(&self, session: &Session) -> f64 {
        let u = session.user_features.first().copied().unwrap_or(0.0);
        let h = self.heterogeneity;
        (h * u - 0.5 * h * h).exp()
    }
}

impl Simulator for SurfaceSimulator {
    fn session_kpis(&self, session: &Session, setting: &Setting) -> Result<KpiVector> {
        let dims = self.dims()?;
        if setting.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: setting.dims(),
            });
        }
        let a = setting.values();
        let scale = self.session_scale(session);
        let iy = (scale * self.iy.eval(a)).max(0.0);
        let revenue = (scale * self.revenue.eval(a)).max(0.0);
        let clicks = self.ctr * iy;
        let rpm = if iy == 0.0 {
            0.0
        } else {
            1000.0 * revenue / iy
        };
        Ok(KpiVector {
            rpm,
            clicks,
            iy,
            revenue,
            n_sessions: 1,
        })
    }

    fn check_dims(&self, dims: usize) -> Result<()> {
        let own = self.dims()?;
        if own != dims {
            return Err(Error::DimensionMismatch {
                expected: own,
                actual: dims,
            });
        }
        Ok(())
    }
}
