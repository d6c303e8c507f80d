//! Basis-function cost model of reuse versus rebuilding at every step.

use crate::error::{Error, Result};

/// `n_hat` homogeneous basis functions per rebuild, `n` subdomains,
/// `t_e` elliptic solves of which `t_m` rebuilt the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub n_hat: usize,
    pub n: usize,
    pub t_e: usize,
    pub t_m: usize,
}

impl CostModel {
    pub fn new(n_hat: usize, n: usize, t_e: usize, t_m: usize) -> Result<Self> {
        if t_e == 0 {
            return Err(Error::Config("cost model needs at least one elliptic solve".into()));
        }
        if t_m > t_e {
            return Err(Error::Config(format!("{t_m} rebuilds exceed {t_e} elliptic solves")));
        }
        Ok(Self { n_hat, n, t_e, t_m })
    }

    /// Relative cost reduction in percent.
    pub fn rcr(&self) -> f64 {
        let (n_hat, n) = (self.n_hat as f64, self.n as f64);
        let reuse = (self.t_e - self.t_m) as f64 / self.t_e as f64;
        let saving = if n_hat + 2.0 * n > 0.0 { 1.0 - 2.0 * n / (n_hat + 2.0 * n) } else { 0.0 };
        100.0 * reuse * saving
    }

    /// Cost of rebuilding at every step, `c_bf` per basis function.
    pub fn cost_mrcm(&self, c_bf: f64) -> f64 {
        c_bf * (self.n_hat + 2 * self.n) as f64 * self.t_e as f64
    }

    /// Cost of rebuilding `t_m` times and reusing otherwise.
    pub fn cost_mpm(&self, c_bf: f64) -> f64 {
        let rebuild = (self.n_hat + 2 * self.n) as f64 * self.t_m as f64;
        let reuse = 2.0 * self.n as f64 * (self.t_e - self.t_m) as f64;
        c_bf * (rebuild + reuse)
    }

    pub fn cost_estimates(&self, c_bf: f64) -> (f64, f64) {
        (self.cost_mrcm(c_bf), self.cost_mpm(c_bf))
    }
}

pub fn rcr(n_hat: usize, n: usize, t_e: usize, t_m: usize) -> Result<f64> {
    Ok(CostModel::new(n_hat, n, t_e, t_m)?.rcr())
}
