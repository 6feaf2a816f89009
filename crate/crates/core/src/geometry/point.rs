use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::model::{ManifoldKind, ManifoldModel, MAX_TORUS_DIM};
use crate::error::{Error, Result};

/// A point on a model manifold.
///
/// Sphere points carry colatitude `θ ∈ [0, π]` measured from the pole
/// `e_{n+1}` and azimuth `φ ∈ [0, 2π)`, with the embedded unit vector cached
/// as `(sin θ cos φ, sin θ sin φ, cos θ)`. For `n > 2` every point the crate
/// constructs lies on the totally geodesic 2-sphere spanned by `e_1, e_2,
/// e_{n+1}`, so three embedded coordinates are exact there.
///
/// Torus points hold `n ≤ 3` coordinates in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    kind: ManifoldKind,
    dim: u8,
    coords: [f64; 3],
    xyz: [f64; 3],
}

impl Point {
    pub fn sphere(n: usize, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !theta.is_finite() {
            return Err(Error::param(format!("colatitude {theta} outside [0, π]")));
        }
        if !phi.is_finite() {
            return Err(Error::param("non-finite azimuth"));
        }
        let phi = phi.rem_euclid(TAU);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(Self {
            kind: ManifoldKind::RoundSphere,
            dim: n as u8,
            coords: [theta, phi, 0.0],
            xyz: [st * cp, st * sp, ct],
        })
    }

    /// Sphere point from an embedded vector in the `(e_1, e_2, e_{n+1})` span.
    pub fn sphere_from_vec(n: usize, v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::param("zero or non-finite embedded vector"));
        }
        let u = [v[0] / norm, v[1] / norm, v[2] / norm];
        let theta = (u[0].hypot(u[1])).atan2(u[2]);
        let phi = u[1].atan2(u[0]).rem_euclid(TAU);
        Ok(Self { kind: ManifoldKind::RoundSphere, dim: n as u8, coords: [theta, phi, 0.0], xyz: u })
    }

    pub fn north_pole(n: usize) -> Self {
        Self::sphere(n, 0.0, 0.0).expect("valid")
    }

    pub fn torus(coords: &[f64]) -> Result<Self> {
        let n = coords.len();
        if !(1..=MAX_TORUS_DIM).contains(&n) {
            return Err(Error::param(format!("torus point dimension {n} unsupported")));
        }
        let mut c = [0.0; 3];
        for (dst, &x) in c.iter_mut().zip(coords) {
            if !x.is_finite() {
                return Err(Error::param("non-finite torus coordinate"));
            }
            *dst = x.rem_euclid(TAU);
            // rem_euclid can round up to exactly 2π
            if *dst >= TAU {
                *dst = 0.0;
            }
        }
        Ok(Self { kind: ManifoldKind::FlatTorus, dim: n as u8, coords: c, xyz: [0.0; 3] })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn theta(&self) -> f64 {
        self.coords[0]
    }

    pub fn phi(&self) -> f64 {
        self.coords[1]
    }

    /// Intrinsic coordinates (sphere: `θ, φ`; torus: the `n` angles).
    pub fn coords(&self) -> &[f64] {
        match self.kind {
            ManifoldKind::RoundSphere => &self.coords[..2],
            ManifoldKind::FlatTorus => &self.coords[..self.dim as usize],
        }
    }

    /// Embedded unit vector (sphere only).
    pub fn xyz(&self) -> [f64; 3] {
        self.xyz
    }

    pub fn antipode(&self) -> Self {
        match self.kind {
            ManifoldKind::RoundSphere => {
                let v = self.xyz;
                Self::sphere_from_vec(self.dim(), [-v[0], -v[1], -v[2]]).expect("unit vector")
            }
            ManifoldKind::FlatTorus => {
                let mut c = [0.0; 3];
                for (i, x) in self.coords().iter().enumerate() {
                    c[i] = x + PI;
                }
                Self::torus(&c[..self.dim()]).expect("finite")
            }
        }
    }

    pub(crate) fn check_on(&self, model: &ManifoldModel) -> Result<()> {
        if self.kind != model.kind {
            return Err(Error::param(format!(
                "point on {:?} used with {:?} model",
                self.kind, model.kind
            )));
        }
        if self.dim() != model.n {
            return Err(Error::DimensionMismatch { expected: model.n, found: self.dim() });
        }
        Ok(())
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Great-circle distance between unit vectors.
///
/// Evaluated as `2 atan2(|x-y|, |x+y|)`, which equals `arccos(x·y)` but keeps
/// full relative precision for nearly coincident and nearly antipodal pairs.
pub(crate) fn sphere_distance(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let s = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
    2.0 * norm3(d).atan2(norm3(s))
}

/// Flat-torus distance: per-axis wraparound then Euclidean norm.
pub(crate) fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).abs().rem_euclid(TAU);
            let d = d.min(TAU - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Geodesic distance on the model.
pub fn geodesic_distance(model: &ManifoldModel, x: &Point, y: &Point) -> Result<f64> {
    x.check_on(model)?;
    y.check_on(model)?;
    Ok(match model.kind {
        ManifoldKind::RoundSphere => sphere_distance(x.xyz, y.xyz),
        ManifoldKind::FlatTorus => torus_distance(x.coords(), y.coords()),
    })
}
