//! Uniform time grids and Loschmidt-echo time series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelParams;

/// Times `t_k = k·dt` for `k = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Grid covering `[0, t_max]`; `t_max` must be a multiple of `dt` to within rounding.
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::param("t_max", format!("must be non-negative, got {t_max}")));
        }
        let steps = t_max / dt;
        let n_steps = steps.round();
        if (steps - n_steps).abs() > 1e-6 {
            return Err(Error::param("t_max", format!("{t_max} is not a multiple of dt = {dt}")));
        }
        Ok(Self {
            dt,
            n_steps: n_steps as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_max(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Index of the grid point at `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k as usize > self.n_steps {
            None
        } else {
            Some(k as usize)
        }
    }

    /// The same horizon with a step `factor` times finer.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt / factor as f64,
            n_steps: self.n_steps * factor,
        }
    }
}

/// `ln L(t_k)` on a time grid, together with the quench that produced it.
///
/// For the momentum solver the stored value is the sum of per-mode log-echoes,
/// i.e. the log-echo of the whole chain.
#[derive(Clone, Debug, Serialize)]
pub struct EchoSeries {
    pub grid: TimeGrid,
    pub log_echo: Vec<f64>,
    pub n_sites: usize,
    pub h0: f64,
    pub h1: f64,
    pub params: ModelParams,
}

impl EchoSeries {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn echo(&self) -> Vec<f64> {
        self.log_echo.iter().map(|l| l.exp()).collect()
    }

    /// `λ(t) = −ln L(t)/N`.
    pub fn rate(&self) -> Vec<f64> {
        let n = self.n_sites as f64;
        self.log_echo.iter().map(|l| -l / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = TimeGrid::new(200.0, 0.05).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(g.index_of(20.0), Some(400));
        assert_eq!(g.index_of(20.01), None);
        assert_eq!(g.index_of(200.05), None);
        assert!((g.t_max() - 200.0).abs() < 1e-12);
        assert_eq!(g.refined(2).len(), 8001);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(-1.0, 0.1).is_err());
        assert_eq!(TimeGrid::new(0.0, 0.1).unwrap().len(), 1);
    }
}
