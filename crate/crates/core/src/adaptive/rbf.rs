use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian radial-basis network over object velocity with a trailing
/// constant bias feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetwork {
    pub centers: Vec<Vec<f64>>,
    pub width: f64,
}

impl RbfNetwork {
    /// `n × n` grid of centres over `[lo, hi]²`.
    pub fn grid(n: usize, lo: f64, hi: f64, width: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "RBF grid needs at least one point per axis".into(),
            ));
        }
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        let at = |i: usize| if n > 1 { lo + step * i as f64 } else { 0.5 * (lo + hi) };
        let mut centers = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                centers.push(vec![at(i), at(j)]);
            }
        }
        let net = Self { centers, width };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidParameter("RBF network needs at least one centre".into()));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidParameter("RBF width must be positive".into()));
        }
        let d = self.centers[0].len();
        if self.centers.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidParameter("RBF centres must share a dimension".into()));
        }
        Ok(())
    }

    /// Number of features, including the bias.
    pub fn len(&self) -> usize {
        self.centers.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn input_dim(&self) -> usize {
        self.centers[0].len()
    }
}

/// `Φ = (exp(−‖x − c_i‖² / 2σ²) …, 1)`. Only the first `input_dim` entries
/// of `x` are used.
pub fn rbf_features(net: &RbfNetwork, x: &[f64]) -> DVector<f64> {
    let d = net.input_dim().min(x.len());
    let inv = 1.0 / (2.0 * net.width * net.width);
    let mut phi = DVector::zeros(net.len());
    for (i, c) in net.centers.iter().enumerate() {
        let r2: f64 = c.iter().zip(&x[..d]).map(|(ci, xi)| (xi - ci).powi(2)).sum();
        phi[i] = (-r2 * inv).exp();
    }
    phi[net.centers.len()] = 1.0;
    phi
}
