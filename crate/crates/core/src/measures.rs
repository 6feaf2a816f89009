//! Norms and statistics of sampled fields: `L^p(M)`, `L²(B_r(x))`, sups
//! over center sets, tube masses and the equidistribution statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{
    cross3, gauss_gegenbauer, norm3, BallSpec, CenterLayout, CenterSet, ManifoldKind,
    ManifoldModel, Point, TubeSpec,
};
use crate::harmonics::{EigenfunctionField, ModulusSymmetry};
use crate::numeric::{det_max_by, det_sum_by};

/// An `L^p` exponent, `1 ≤ p ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(Exponent::Infinity);
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param(format!("exponent {p} not in [1, ∞]")));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/p`, zero at infinity.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            _ => {
                let p: f64 = t.parse().map_err(|_| Error::param(format!("bad exponent {s:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Measurable subset of the model with a known volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    Whole,
    /// Geodesic ball; a spherical cap on the sphere.
    Ball { center: Point, radius: f64 },
    /// Tube about a great circle of `S^2`.
    Tube { normal: [f64; 3], width: f64 },
    /// Coordinate box `Π [lo_a, hi_a)` in `[0, 2π)^n` on the torus.
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn ball(spec: &BallSpec) -> Self {
        Region::Ball { center: spec.center, radius: spec.radius }
    }

    pub fn tube(spec: &TubeSpec) -> Self {
        Region::Tube { normal: spec.normal, width: spec.width }
    }

    /// Volume in closed form where one is known.
    pub fn closed_form_volume(&self, model: &ManifoldModel) -> Option<f64> {
        match self {
            Region::Whole => Some(model.volume),
            Region::Ball { radius, .. } => Some(model.ball_volume(*radius)),
            Region::Tube { width, .. } if model.is_sphere() && model.n == 2 => {
                Some(4.0 * PI * width.min(PI / 2.0).sin())
            }
            Region::Rectangle { lo, hi } => Some(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
            _ => None,
        }
    }

    /// Grid nodes inside the region, ascending.
    pub fn indices(&self, field: &EigenfunctionField) -> Result<Vec<usize>> {
        let grid = &field.grid;
        match self {
            Region::Whole => Ok((0..grid.len()).collect()),
            Region::Ball { center, radius } => {
                let ball = BallSpec::new(&grid.model, *center, *radius)?;
                grid.ball_indices(&ball)
            }
            Region::Tube { normal, width } => grid.tube_indices(&TubeSpec::with_normal(*normal, *width)?),
            Region::Rectangle { lo, hi } => {
                if !grid.model.is_torus() {
                    return Err(Error::unsupported("rectangles are torus regions"));
                }
                if lo.len() != grid.model.n || hi.len() != grid.model.n {
                    return Err(Error::DimensionMismatch { expected: grid.model.n, found: lo.len() });
                }
                if lo.iter().zip(hi).any(|(a, b)| !(0.0 <= *a && a < b && *b <= TAU)) {
                    return Err(Error::param("rectangle sides must satisfy 0 ≤ lo < hi ≤ 2π"));
                }
                Ok((0..grid.len())
                    .into_par_iter()
                    .filter(|&i| {
                        grid.nodes[i].coords().iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| a <= x && x < b)
                    })
                    .collect())
            }
        }
    }
}

/// One norm measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub field_id: String,
    pub lambda: f64,
    pub p: Exponent,
    pub value: f64,
    pub region: Region,
}

fn power_sum(field: &EigenfunctionField, idx: Option<&[usize]>, p: Exponent) -> f64 {
    let w = &field.grid.weights;
    let f = &field.samples;
    let len = idx.map_or(f.len(), |s| s.len());
    let at = |j: usize| idx.map_or(j, |s| s[j]);
    match p {
        Exponent::Infinity => det_max_by(len, |j| f[at(j)].norm()).max(0.0),
        Exponent::Finite(q) if q == 2.0 => det_sum_by(len, |j| w[at(j)] * f[at(j)].norm_sqr()),
        Exponent::Finite(q) => det_sum_by(len, |j| w[at(j)] * f[at(j)].norm_sqr().powf(q / 2.0)),
    }
}

fn norm_from(field: &EigenfunctionField, idx: Option<&[usize]>, p: Exponent) -> f64 {
    let q = match p {
        Exponent::Infinity => return power_sum(field, idx, p),
        Exponent::Finite(q) if q == 2.0 => return power_sum(field, idx, p).sqrt(),
        Exponent::Finite(q) => q,
    };
    // scale by the max so |f|^q neither underflows nor overflows
    let peak = power_sum(field, idx, Exponent::Infinity);
    if peak == 0.0 {
        return 0.0;
    }
    let w = &field.grid.weights;
    let f = &field.samples;
    let len = idx.map_or(f.len(), |s| s.len());
    let at = |j: usize| idx.map_or(j, |s| s[j]);
    let s = det_sum_by(len, |j| w[at(j)] * (f[at(j)].norm() / peak).powf(q));
    peak * s.powf(1.0 / q)
}

/// `(Σ w_i |f_i|^p)^{1/p}` over the whole grid; grid max for `p = ∞`.
pub fn lp_norm(field: &EigenfunctionField, p: Exponent) -> NormReport {
    NormReport {
        field_id: field.id.clone(),
        lambda: field.lambda,
        p,
        value: norm_from(field, None, p),
        region: Region::Whole,
    }
}

/// `L^p` norm over a region, on the field's grid.
pub fn lp_norm_region(field: &EigenfunctionField, region: &Region, p: Exponent) -> Result<NormReport> {
    let idx = region.indices(field)?;
    Ok(NormReport {
        field_id: field.id.clone(),
        lambda: field.lambda,
        p,
        value: norm_from(field, Some(&idx), p),
        region: region.clone(),
    })
}

/// How `L²(B_r)` masses are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallMethod {
    /// Sum over the grid nodes inside the ball.
    Grid,
    /// Geodesic polar Gauss rule around the center with exact field values.
    Polar,
    /// `Grid` when `r ≥ 10·spacing`, otherwise `Polar`.
    Auto,
}

impl BallMethod {
    fn resolve(self, field: &EigenfunctionField, r: f64) -> BallMethod {
        match self {
            BallMethod::Auto if r >= 10.0 * field.grid.spacing => BallMethod::Grid,
            BallMethod::Auto => BallMethod::Polar,
            m => m,
        }
    }
}

fn check_radius(field: &EigenfunctionField, r: f64) -> Result<()> {
    let inj = field.model.inj;
    if !(r > 0.0 && r <= inj * (1.0 + 1e-12)) {
        return Err(Error::param(format!("ball radius {r} outside (0, inj]")));
    }
    if field.lambda > 0.0 && r < (1.0 - 1e-12) / field.lambda {
        return Err(Error::param(format!("ball radius {r} below 1/λ = {}", 1.0 / field.lambda)));
    }
    Ok(())
}

/// `Σ_{B_r} w|f|²` on the grid.
fn ball_mass_grid(field: &EigenfunctionField, center: &Point, r: f64) -> Result<f64> {
    if r < field.grid.spacing {
        return Err(Error::resolution(format!(
            "ball radius {r} below grid spacing {}",
            field.grid.spacing
        )));
    }
    let ball = BallSpec::new(&field.model, *center, r)?;
    let idx = field.grid.ball_indices(&ball)?;
    if idx.is_empty() {
        return Err(Error::resolution("ball contains no grid nodes"));
    }
    Ok(power_sum(field, Some(&idx), Exponent::Finite(2.0)))
}

/// Polar rule on `B_r(center)`: nodes and weights.
pub fn polar_ball_rule(model: &ManifoldModel, center: &Point, r: f64, lambda: f64) -> Result<(Vec<Point>, Vec<f64>)> {
    center.check_on(model)?;
    let lr = (lambda * r).max(0.0);
    let nr = 12 + (1.5 * lr).ceil() as usize;
    let na = 16 + (4.0 * lr).ceil() as usize;
    let (t, w) = gauss_gegenbauer(nr, 0.0);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    match (model.kind, model.n) {
        (ManifoldKind::RoundSphere, 2) => {
            let c = center.xyz();
            let helper = if c[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
            let e1 = unit(cross3(c, helper));
            let e2 = cross3(c, e1);
            for (ti, wi) in t.iter().zip(&w) {
                let s = 0.5 * r * (ti + 1.0);
                let (ss, cs) = s.sin_cos();
                let ws = 0.5 * r * wi * ss * TAU / na as f64;
                for j in 0..na {
                    let (sa, ca) = (TAU * j as f64 / na as f64).sin_cos();
                    let v = [
                        cs * c[0] + ss * (ca * e1[0] + sa * e2[0]),
                        cs * c[1] + ss * (ca * e1[1] + sa * e2[1]),
                        cs * c[2] + ss * (ca * e1[2] + sa * e2[2]),
                    ];
                    pts.push(Point::sphere_from_vec(2, unit(v))?);
                    wts.push(ws);
                }
            }
        }
        (ManifoldKind::FlatTorus, 2) => {
            let c = center.coords();
            for (ti, wi) in t.iter().zip(&w) {
                let s = 0.5 * r * (ti + 1.0);
                let ws = 0.5 * r * wi * s * TAU / na as f64;
                for j in 0..na {
                    let (sa, ca) = (TAU * j as f64 / na as f64).sin_cos();
                    pts.push(Point::torus(&[c[0] + s * ca, c[1] + s * sa])?);
                    wts.push(ws);
                }
            }
        }
        (ManifoldKind::FlatTorus, 3) => {
            let c = center.coords();
            let (u, uw) = gauss_gegenbauer(na / 2 + 1, 0.0);
            for (ti, wi) in t.iter().zip(&w) {
                let s = 0.5 * r * (ti + 1.0);
                for (z, zw) in u.iter().zip(&uw) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let ws = 0.5 * r * wi * s * s * zw * TAU / na as f64;
                    for j in 0..na {
                        let (sa, ca) = (TAU * j as f64 / na as f64).sin_cos();
                        pts.push(Point::torus(&[
                            c[0] + s * rho * ca,
                            c[1] + s * rho * sa,
                            c[2] + s * z,
                        ])?);
                        wts.push(ws);
                    }
                }
            }
        }
        _ => return Err(Error::unsupported("polar ball rules need S^2, T^2 or T^3")),
    }
    Ok((pts, wts))
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn ball_mass_polar(field: &EigenfunctionField, center: &Point, r: f64) -> Result<f64> {
    let (pts, wts) = polar_ball_rule(&field.model, center, r, field.lambda.max(1.0))?;
    const CH: usize = 1024;
    let vals: Vec<f64> = pts
        .par_chunks(CH)
        .flat_map_iter(|c| field.values_at(c).into_iter().map(|v| v.norm_sqr()))
        .collect();
    Ok(det_sum_by(vals.len(), |i| wts[i] * vals[i]))
}

/// `‖f‖_{L²(B_r(center))}`.
pub fn l2_ball_norm_with(
    field: &EigenfunctionField,
    center: &Point,
    r: f64,
    method: BallMethod,
) -> Result<NormReport> {
    check_radius(field, r)?;
    let mass = match method.resolve(field, r) {
        BallMethod::Polar => ball_mass_polar(field, center, r)?,
        _ => ball_mass_grid(field, center, r)?,
    };
    Ok(NormReport {
        field_id: field.id.clone(),
        lambda: field.lambda,
        p: Exponent::Finite(2.0),
        value: mass.max(0.0).sqrt(),
        region: Region::Ball { center: *center, radius: r },
    })
}

/// Grid version of [`l2_ball_norm_with`].
pub fn l2_ball_norm(field: &EigenfunctionField, center: &Point, r: f64) -> Result<NormReport> {
    l2_ball_norm_with(field, center, r, BallMethod::Grid)
}

/// Result of a sup over a finite center set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupBallReport {
    pub value: f64,
    pub argmax: Point,
    pub r: f64,
    /// Center spacing; the value is a lower bound for the true sup.
    pub spacing: f64,
    pub centers: usize,
}

/// Center set sufficient for the sup of ball masses of `field` at radius `r`.
///
/// Uses the symmetry of `|f|` when present: a meridian for axially
/// symmetric moduli, one center for a constant modulus, a full net otherwise.
pub fn centers_for(field: &EigenfunctionField, r: f64) -> Result<CenterSet> {
    let spacing = 0.5 * r;
    match field.modulus_symmetry() {
        ModulusSymmetry::Translation => Ok(CenterSet::single(field.grid.nodes[0])),
        ModulusSymmetry::Axial(a) if field.model.n == 2 => {
            CenterSet::meridian(&Point::sphere_from_vec(2, a)?, spacing)
        }
        _ => CenterSet::net(&field.model, spacing),
    }
}

/// `max_{x ∈ centers} ‖f‖_{L²(B_r(x))}`.
pub fn sup_ball_norm(
    field: &EigenfunctionField,
    r: f64,
    centers: &CenterSet,
    method: BallMethod,
) -> Result<SupBallReport> {
    if centers.points.is_empty() {
        return Err(Error::param("empty center set"));
    }
    if centers.layout != CenterLayout::Single && centers.spacing > 0.5 * r * (1.0 + 1e-9) {
        return Err(Error::param(format!(
            "center spacing {} coarser than r/2 = {}",
            centers.spacing,
            0.5 * r
        )));
    }
    let vals: Vec<Result<f64>> = centers
        .points
        .par_iter()
        .map(|c| l2_ball_norm_with(field, c, r, method).map(|n| n.value))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in vals.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(SupBallReport {
        value: best.0,
        argmax: centers.points[best.1],
        r,
        spacing: centers.spacing,
        centers: centers.points.len(),
    })
}

/// `∫_tube |f|²` on `S^2`.
pub fn tube_mass(field: &EigenfunctionField, tube: &TubeSpec) -> Result<f64> {
    if !field.model.is_sphere() {
        return Err(Error::unsupported("tube masses are sphere-only"));
    }
    if tube.width < field.grid.spacing {
        return Err(Error::resolution(format!(
            "tube width {} below grid spacing {}",
            tube.width, field.grid.spacing
        )));
    }
    let idx = field.grid.tube_indices(tube)?;
    Ok(power_sum(field, Some(&idx), Exponent::Finite(2.0)))
}

/// Equidistribution statistic for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeReport {
    pub region: Region,
    /// `∫_Ω |f|²`.
    pub mass: f64,
    /// `|Ω|` as measured by the quadrature.
    pub volume: f64,
    pub closed_form_volume: Option<f64>,
    /// `|∫_Ω |f|² - |Ω|/|M||`.
    pub statistic: f64,
}

/// `|∫_Ω |f|² - |Ω|/|M||`, with `|Ω|` the quadrature measure of `Ω` so the
/// statistic vanishes exactly for constant moduli.
pub fn qe_statistic(field: &EigenfunctionField, region: &Region) -> Result<QeReport> {
    let idx = region.indices(field)?;
    if idx.is_empty() {
        return Err(Error::resolution("region contains no grid nodes"));
    }
    let w = &field.grid.weights;
    let volume = det_sum_by(idx.len(), |j| w[idx[j]]);
    let mass = power_sum(field, Some(&idx), Exponent::Finite(2.0));
    let total = field.grid.total_weight();
    Ok(QeReport {
        region: region.clone(),
        mass,
        volume,
        closed_form_volume: region.closed_form_volume(&field.model),
        statistic: (mass - volume / total).abs(),
    })
}

/// Both sides of `‖f‖_{L²(B)} ≤ ‖f‖_{L^p(B)} |B|^{1/2-1/p}` on a grid ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub l2: f64,
    pub lp: f64,
    pub volume: f64,
    pub bound: f64,
}

impl HolderCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.l2 <= self.bound * (1.0 + slack)
    }
}

pub fn holder_check(field: &EigenfunctionField, center: &Point, r: f64, p: Exponent) -> Result<HolderCheck> {
    let region = Region::Ball { center: *center, radius: r };
    let idx = region.indices(field)?;
    if idx.is_empty() {
        return Err(Error::resolution("ball contains no grid nodes"));
    }
    let w = &field.grid.weights;
    let volume = det_sum_by(idx.len(), |j| w[idx[j]]);
    let l2 = norm_from(field, Some(&idx), Exponent::Finite(2.0));
    let lp = norm_from(field, Some(&idx), p);
    let bound = lp * volume.powf(0.5 - p.reciprocal());
    Ok(HolderCheck { l2, lp, volume, bound })
}
