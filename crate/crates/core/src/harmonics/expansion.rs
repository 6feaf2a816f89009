use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::special::{
    gegenbauer_normalized, normalized_assoc_legendre, sphere_frequency, zonal_peak,
};
use crate::geometry::{dot3, Point};

/// Identifies one basis function of a model eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// L²-normalized zonal harmonic of degree `k` on `S^n` with pole `pole`.
    Zonal { n: usize, k: usize, pole: Point },
    /// `scale · (x_1 + i x_2)^k` on `S^2`.
    HighestWeight { k: usize, scale: f64 },
    /// Orthonormal `P̄_k^{|m|}(cos θ) e^{imφ}` on `S^2`.
    SphereHarmonic { k: usize, m: i64 },
    /// `(2π)^{-n/2} e^{i m·x}` on `T^n`.
    TorusWave { m: Vec<i64> },
}

impl Mode {
    pub fn frequency(&self) -> f64 {
        match self {
            Mode::Zonal { n, k, .. } => sphere_frequency(*n, *k),
            Mode::HighestWeight { k, .. } | Mode::SphereHarmonic { k, .. } => sphere_frequency(2, *k),
            Mode::TorusWave { m } => (m.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt(),
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            Mode::Zonal { k, .. } | Mode::HighestWeight { k, .. } | Mode::SphereHarmonic { k, .. } => {
                Some(*k)
            }
            Mode::TorusWave { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralTerm {
    pub frequency: f64,
    pub mode: Mode,
    pub coefficient: Complex64,
}

/// Finite expansion `Σ c_j e_j` over orthonormal model modes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralExpansion {
    pub terms: Vec<SpectralTerm>,
}

impl SpectralExpansion {
    pub fn single(mode: Mode, coefficient: Complex64) -> Self {
        Self { terms: vec![SpectralTerm { frequency: mode.frequency(), mode, coefficient }] }
    }

    pub fn coefficient_norm_sq(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.norm_sqr()).sum()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.iter().filter_map(|t| t.mode.degree()).max()
    }

    pub fn max_torus_index(&self) -> i64 {
        self.terms
            .iter()
            .filter_map(|t| match &t.mode {
                Mode::TorusWave { m } => m.iter().map(|x| x.abs()).max(),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Terms whose frequency lies in `[lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.frequency >= lo && t.frequency < hi)
                .cloned()
                .collect(),
        }
    }

    /// Multiply each coefficient by `f(frequency)`.
    pub fn map_coefficients(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| SpectralTerm { coefficient: t.coefficient * f(t.frequency), ..t.clone() })
                .collect(),
        }
    }
}

/// `(2π)^{-n/2}` for `n = 1, 2`.
const TORUS_AMP: [f64; 2] = [0.398_942_280_401_432_7, 0.159_154_943_091_895_34];

/// Evaluates an expansion pointwise, caching associated Legendre tables for
/// consecutive points on the same colatitude row.
pub(crate) struct Evaluator<'a> {
    expansion: &'a SpectralExpansion,
    degrees: Vec<usize>,
    cached_theta: f64,
    tables: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(expansion: &'a SpectralExpansion) -> Self {
        let mut degrees: Vec<usize> = expansion
            .terms
            .iter()
            .filter_map(|t| match t.mode {
                Mode::SphereHarmonic { k, .. } => Some(k),
                _ => None,
            })
            .collect();
        degrees.sort_unstable();
        degrees.dedup();
        let tables = vec![Vec::new(); degrees.len()];
        Self { expansion, degrees, cached_theta: f64::NAN, tables, scratch: Vec::new() }
    }

    pub fn eval(&mut self, p: &Point) -> Complex64 {
        if !self.degrees.is_empty() && p.theta().to_bits() != self.cached_theta.to_bits() {
            let (s, c) = p.theta().sin_cos();
            for (i, &k) in self.degrees.iter().enumerate() {
                normalized_assoc_legendre(k, c, s, &mut self.scratch);
                self.tables[i].clone_from(&self.scratch);
            }
            self.cached_theta = p.theta();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.expansion.terms {
            if term.coefficient == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = match &term.mode {
                Mode::Zonal { n, k, pole } => {
                    let t = dot3(p.xyz(), pole.xyz()).clamp(-1.0, 1.0);
                    Complex64::new(zonal_peak(*n, *k) * gegenbauer_normalized(*n, *k, t), 0.0)
                }
                Mode::HighestWeight { k, scale } => {
                    let v = p.xyz();
                    let rho = v[0].hypot(v[1]);
                    let arg = *k as f64 * v[1].atan2(v[0]);
                    Complex64::from_polar(scale * rho.powi(*k as i32), arg)
                }
                Mode::SphereHarmonic { k, m } => {
                    let i = self.degrees.binary_search(k).expect("degree cached");
                    let plm = self.tables[i][m.unsigned_abs() as usize];
                    Complex64::from_polar(plm, *m as f64 * p.phi())
                }
                Mode::TorusWave { m } => {
                    let c = p.coords();
                    let phase: f64 = m.iter().zip(c).map(|(&mi, &x)| mi as f64 * x).sum();
                    let amp = match m.len() {
                        1 => TORUS_AMP[0],
                        2 => TORUS_AMP[1],
                        _ => TAU.powf(-(m.len() as f64) / 2.0),
                    };
                    let (s, c) = phase.sin_cos();
                    Complex64::new(amp * c, amp * s)
                }
            };
            acc += term.coefficient * v;
        }
        acc
    }
}
