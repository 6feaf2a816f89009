use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::special::{gegenbauer_normalized, sphere_frequency, zonal_peak};
use crate::error::{Error, Result};

/// Comparison of the normalized zonal profile with its oscillatory model
/// `A (sin d)^{-(n-1)/2} cos(N_k d + γ)`, `N_k = (2k+n-1)/2`, `γ = -(n-1)π/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarbouxReport {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    /// Least-squares amplitude `A`.
    pub amplitude: f64,
    /// `max |Z(d)(sin d)^{(n-1)/2} - A cos(N_k d + γ)|`.
    pub max_abs_deviation: f64,
    /// Same deviation weighted by `λ d`; bounded when the model holds.
    pub max_scaled_deviation: f64,
    pub d_min: f64,
    pub d_max: f64,
}

/// Evaluate the comparison over `d_values`, each in `[1/λ, π - 1/λ]`.
///
/// The envelope uses `sin d` rather than `d`: the two agree to `O(d²)`, but
/// only the former keeps the deviation `O((λd)^{-1})` on the whole range up
/// to the antipode.
pub fn darboux_compare(n: usize, k: usize, d_values: &[f64]) -> Result<DarbouxReport> {
    if n < 2 {
        return Err(Error::param(format!("dimension {n} < 2")));
    }
    if k == 0 {
        return Err(Error::param("degree must be positive"));
    }
    if d_values.is_empty() {
        return Err(Error::param("no distances given"));
    }
    let lambda = sphere_frequency(n, k);
    let lo = 1.0 / lambda;
    let hi = PI - 1.0 / lambda;
    if let Some(d) = d_values.iter().find(|&&d| !(d >= lo - 1e-15 && d <= hi + 1e-15)) {
        return Err(Error::param(format!("distance {d} outside [{lo}, {hi}]")));
    }
    let nk = (2 * k + n - 1) as f64 / 2.0;
    let gamma = -((n - 1) as f64) * PI / 4.0;
    let half = (n - 1) as f64 / 2.0;
    let peak = zonal_peak(n, k);
    let pairs: Vec<(f64, f64)> = d_values
        .iter()
        .map(|&d| {
            let y = peak * gegenbauer_normalized(n, k, d.cos()) * d.sin().powf(half);
            (y, (nk * d + gamma).cos())
        })
        .collect();
    let syc: f64 = pairs.iter().map(|(y, c)| y * c).sum();
    let scc: f64 = pairs.iter().map(|(_, c)| c * c).sum();
    let amplitude = if scc > 0.0 { syc / scc } else { 0.0 };
    let mut max_abs = 0.0f64;
    let mut max_scaled = 0.0f64;
    for (&d, (y, c)) in d_values.iter().zip(&pairs) {
        let dev = (y - amplitude * c).abs();
        max_abs = max_abs.max(dev);
        max_scaled = max_scaled.max(dev * lambda * d);
    }
    Ok(DarbouxReport {
        n,
        k,
        lambda,
        amplitude,
        max_abs_deviation: max_abs,
        max_scaled_deviation: max_scaled,
        d_min: d_values.iter().copied().fold(f64::INFINITY, f64::min),
        d_max: d_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
