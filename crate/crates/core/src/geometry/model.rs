use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    RoundSphere,
    FlatTorus,
}

/// Largest torus dimension with point storage.
pub const MAX_TORUS_DIM: usize = 3;

/// A compact model manifold: the unit round sphere `S^n` or the flat torus
/// `R^n / (2πZ)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    pub kind: ManifoldKind,
    pub n: usize,
    pub volume: f64,
    pub inj: f64,
}

impl ManifoldModel {
    pub fn sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("sphere dimension must be >= 2, got {n}")));
        }
        Ok(Self { kind: ManifoldKind::RoundSphere, n, volume: sphere_area(n), inj: PI })
    }

    pub fn torus(n: usize) -> Result<Self> {
        if !(2..=MAX_TORUS_DIM).contains(&n) {
            return Err(Error::param(format!(
                "torus dimension must be in 2..={MAX_TORUS_DIM}, got {n}"
            )));
        }
        Ok(Self { kind: ManifoldKind::FlatTorus, n, volume: (2.0 * PI).powi(n as i32), inj: PI })
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == ManifoldKind::RoundSphere
    }

    pub fn is_torus(&self) -> bool {
        self.kind == ManifoldKind::FlatTorus
    }

    /// Critical exponent `2(n+1)/(n-1)`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n)
    }

    /// Closed-form measure of a geodesic ball of radius `r ≤ inj`.
    ///
    /// Torus balls are Euclidean balls (embedded for `r ≤ π`). Sphere balls
    /// are caps, `|S^{n-1}| ∫_0^r sin^{n-1}`.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let n = self.n;
        match self.kind {
            ManifoldKind::FlatTorus => unit_ball_volume(n) * r.powi(n as i32),
            ManifoldKind::RoundSphere => {
                if n == 2 {
                    2.0 * PI * (1.0 - r.cos())
                } else {
                    // Simpson on a fine panel; the integrand is smooth.
                    let m = 2000;
                    let h = r / m as f64;
                    let f = |s: f64| s.sin().powi(n as i32 - 1);
                    let mut acc = f(0.0) + f(r);
                    for i in 1..m {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        acc += w * f(i as f64 * h);
                    }
                    sphere_area(n - 1) * acc * h / 3.0
                }
            }
        }
    }
}

/// `2(n+1)/(n-1)`.
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * (n as f64 + 1.0) / (n as f64 - 1.0)
}

/// Surface measure `|S^n|` of the unit n-sphere in `R^{n+1}`.
pub fn sphere_area(n: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^n| = 2π/(n-1) |S^{n-2}|
    let (mut even, mut odd) = (2.0, 2.0 * PI);
    if n == 0 {
        return even;
    }
    if n == 1 {
        return odd;
    }
    let mut k = 1;
    while k < n {
        k += 1;
        let next = 2.0 * PI / (k as f64 - 1.0);
        if k % 2 == 0 {
            even *= next;
        } else {
            odd *= next;
        }
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Volume of the Euclidean unit ball in `R^n`, `|S^{n-1}|/n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    sphere_area(n - 1) / n as f64
}
