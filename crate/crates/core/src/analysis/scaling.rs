use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::critical_exponent;
use crate::measures::Exponent;

/// Growth exponent `σ(p)` of `‖e_λ‖_p / ‖e_λ‖_2` on an `n`-manifold:
/// `n(1/2 - 1/p) - 1/2` for `p ≥ p_c`, `((n-1)/2)(1/2 - 1/p)` for `2 ≤ p ≤ p_c`.
pub fn sigma(n: usize, p: Exponent) -> Result<f64> {
    if n < 2 {
        return Err(Error::param(format!("dimension {n} < 2")));
    }
    let inv = p.reciprocal();
    if p.value() < 2.0 {
        return Err(Error::param(format!("σ(p) needs p ≥ 2, got {p}")));
    }
    let n = n as f64;
    let pc = 2.0 * (n + 1.0) / (n - 1.0);
    if p.value() >= pc {
        Ok(n * (0.5 - inv) - 0.5)
    } else {
        Ok((n - 1.0) / 2.0 * (0.5 - inv))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub n: usize,
    pub p: Exponent,
    pub sigma: f64,
}

impl ScalingLaw {
    pub fn new(n: usize, p: Exponent) -> Result<Self> {
        Ok(Self { n, p, sigma: sigma(n, p)? })
    }

    pub fn critical(n: usize) -> Result<Self> {
        Self::new(n, Exponent::Finite(critical_exponent(n)))
    }
}

/// Least-squares fit of `log value = a + slope · log λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Minimum number of points and ratio `λ_max/λ_min` accepted by [`fit_scaling`].
pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_FIT_SPAN: f64 = 8.0;

pub fn fit_scaling(label: impl Into<String>, points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::param(format!("{} points, need at least {MIN_FIT_POINTS}", points.len())));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::param("scaling fit needs positive finite data"));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < MIN_FIT_SPAN * (1.0 - 1e-12) {
        return Err(Error::param(format!("λ span {} below {MIN_FIT_SPAN}", hi / lo)));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (rss / (m - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        label: label.into(),
        points: points.to_vec(),
        exponent: slope,
        stderr,
        intercept,
        lambda_min: lo,
        lambda_max: hi,
    })
}
