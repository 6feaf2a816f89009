use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

use super::gauss::gauss_gegenbauer;
use super::model::{ManifoldKind, ManifoldModel};
use super::point::{dot3, sphere_distance, torus_distance, Point};
use crate::error::{Error, Result};

/// Hard cap on grid size, to turn runaway configurations into errors.
pub const MAX_GRID_NODES: usize = 40_000_000;

/// How the nodes of a grid are laid out; drives fast ball enumeration.
#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    /// `S^2`: Gauss–Legendre rows in `cos θ` (ascending `θ`) times `n_phi`
    /// uniform azimuths starting at `φ = 0`. Node `(i, j)` has index `i*n_phi + j`.
    SphereProduct { thetas: Vec<f64>, n_phi: usize },
    /// Axisymmetric rule on `S^n`: one node per row at `φ = 0`, weight
    /// `|S^{n-1}| w_i` from the Gauss rule for `(1-t²)^{(n-2)/2}`.
    /// Integrates functions of `θ` only.
    SphereZonal { thetas: Vec<f64> },
    /// Uniform `m^n` product grid on the torus, row-major in the axes.
    TorusProduct { per_axis: usize },
    /// A restriction of another grid; `indices` point into the parent.
    Subset { indices: Vec<usize> },
}

/// Positive-weight quadrature rule realizing `∫_M · dV`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub model: ManifoldModel,
    pub resolution: usize,
    pub layout: GridLayout,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly (sphere), or the largest
    /// `|m_i - m'_i|` for which torus exponentials are integrated exactly.
    pub exactness_degree: usize,
    /// Node spacing used by the resolution checks.
    pub spacing: f64,
}

/// Geodesic ball `B_r(center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(model: &ManifoldModel, center: Point, radius: f64) -> Result<Self> {
        center.check_on(model)?;
        if !(radius > 0.0 && radius <= model.inj * (1.0 + 1e-12)) {
            return Err(Error::param(format!(
                "ball radius {radius} outside (0, inj = {}]",
                model.inj
            )));
        }
        Ok(Self { center, radius: radius.min(model.inj) })
    }
}

/// Tube of half-width `width` about the great circle with unit normal `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    pub normal: [f64; 3],
    pub width: f64,
}

impl TubeSpec {
    /// Tube about the great circle in the plane spanned by `u` and `v`.
    pub fn from_plane(u: [f64; 3], v: [f64; 3], width: f64) -> Result<Self> {
        let c = super::point::cross3(u, v);
        let norm = super::point::norm3(c);
        if !(norm > 1e-12) {
            return Err(Error::param("tube plane vectors are parallel"));
        }
        Self::with_normal([c[0] / norm, c[1] / norm, c[2] / norm], width)
    }

    pub fn with_normal(normal: [f64; 3], width: f64) -> Result<Self> {
        let norm = super::point::norm3(normal);
        if !(norm > 0.0) {
            return Err(Error::param("zero tube normal"));
        }
        if !(width > 0.0 && width <= PI) {
            return Err(Error::param(format!("tube width {width} outside (0, π]")));
        }
        Ok(Self { normal: [normal[0] / norm, normal[1] / norm, normal[2] / norm], width })
    }

    /// Tube about the equator `x_3 = 0`.
    pub fn equatorial(width: f64) -> Result<Self> {
        Self::with_normal([0.0, 0.0, 1.0], width)
    }

    /// Distance from a sphere point to the core geodesic.
    pub fn distance(&self, p: &Point) -> f64 {
        dot3(self.normal, p.xyz()).abs().min(1.0).asin()
    }
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::numeric::det_sum(&self.weights)
    }

    /// Index of the node closest to `target`.
    pub fn nearest_node(&self, target: &Point) -> Result<usize> {
        target.check_on(&self.model)?;
        let d: Vec<f64> = self.nodes.par_iter().map(|p| self.distance(p, target)).collect();
        Ok(d
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty grid"))
    }

    fn distance(&self, a: &Point, b: &Point) -> f64 {
        match self.model.kind {
            ManifoldKind::RoundSphere => sphere_distance(a.xyz(), b.xyz()),
            ManifoldKind::FlatTorus => torus_distance(a.coords(), b.coords()),
        }
    }

    /// Indices of nodes with `d(center, node) ≤ r`, ascending.
    ///
    /// Uses the layout to visit only candidate rows/azimuth windows; the
    /// membership test itself is always the exact geodesic distance.
    pub fn ball_indices(&self, ball: &BallSpec) -> Result<Vec<usize>> {
        ball.center.check_on(&self.model)?;
        let r = ball.radius;
        let c = &ball.center;
        let mut out = Vec::new();
        match &self.layout {
            GridLayout::SphereProduct { thetas, n_phi } => {
                let n_phi = *n_phi;
                let dphi = TAU / n_phi as f64;
                let (tc, pc) = (c.theta(), c.phi());
                let lo = thetas.partition_point(|&t| t < tc - r - 1e-12);
                let hi = thetas.partition_point(|&t| t <= tc + r + 1e-12);
                for (i, &ti) in thetas.iter().enumerate().take(hi).skip(lo) {
                    let denom = tc.sin() * ti.sin();
                    let half = if denom < 1e-300 {
                        PI
                    } else {
                        let q = (r.cos() - tc.cos() * ti.cos()) / denom;
                        if q <= -1.0 {
                            PI
                        } else if q > 1.0 {
                            // row may still touch through rounding; one candidate
                            0.0
                        } else {
                            q.acos()
                        }
                    };
                    let base = i * n_phi;
                    if half >= PI - dphi {
                        for j in 0..n_phi {
                            if sphere_distance(self.nodes[base + j].xyz(), c.xyz()) <= r {
                                out.push(base + j);
                            }
                        }
                    } else {
                        let jlo = ((pc - half) / dphi).floor() as i64 - 1;
                        let jhi = ((pc + half) / dphi).ceil() as i64 + 1;
                        let mut row: Vec<usize> = (jlo..=jhi)
                            .map(|j| j.rem_euclid(n_phi as i64) as usize)
                            .filter(|&j| sphere_distance(self.nodes[base + j].xyz(), c.xyz()) <= r)
                            .map(|j| base + j)
                            .collect();
                        row.sort_unstable();
                        row.dedup();
                        out.extend(row);
                    }
                }
            }
            GridLayout::SphereZonal { thetas } => {
                let tc = c.theta();
                let on_axis = tc < 1e-12 || (PI - tc) < 1e-12;
                if !on_axis {
                    return Err(Error::unsupported(
                        "zonal grids only support balls centred on the axis",
                    ));
                }
                for (i, &t) in thetas.iter().enumerate() {
                    if (t - tc).abs() <= r {
                        out.push(i);
                    }
                }
            }
            GridLayout::TorusProduct { per_axis } => {
                let m = *per_axis;
                let h = TAU / m as f64;
                let n = self.model.n;
                let cc = c.coords();
                let span = |x: f64| {
                    let lo = ((x - r) / h).floor() as i64 - 1;
                    let hi = ((x + r) / h).ceil() as i64 + 1;
                    if hi - lo + 1 >= m as i64 {
                        (0..m as i64).collect::<Vec<_>>()
                    } else {
                        (lo..=hi).collect()
                    }
                };
                let axes: Vec<Vec<usize>> = cc
                    .iter()
                    .map(|&x| {
                        let mut v: Vec<usize> =
                            span(x).into_iter().map(|j| j.rem_euclid(m as i64) as usize).collect();
                        v.sort_unstable();
                        v.dedup();
                        v
                    })
                    .collect();
                let mut idx = vec![0usize; n];
                loop {
                    let mut flat = 0;
                    for (a, &k) in idx.iter().enumerate() {
                        flat = flat * m + axes[a][k];
                    }
                    if torus_distance(self.nodes[flat].coords(), cc) <= r {
                        out.push(flat);
                    }
                    // odometer
                    let mut a = n;
                    loop {
                        if a == 0 {
                            out.sort_unstable();
                            return Ok(out);
                        }
                        a -= 1;
                        idx[a] += 1;
                        if idx[a] < axes[a].len() {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
            }
            GridLayout::Subset { .. } => {
                for (i, p) in self.nodes.iter().enumerate() {
                    if self.distance(p, c) <= r {
                        out.push(i);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Indices of nodes within `width` of the tube's core geodesic.
    pub fn tube_indices(&self, tube: &TubeSpec) -> Result<Vec<usize>> {
        if !self.model.is_sphere() {
            return Err(Error::unsupported("tubes are only implemented on the sphere"));
        }
        if self.model.n != 2 {
            return Err(Error::unsupported("tubes need a full S^2 grid"));
        }
        let s = tube.width.sin();
        let full = tube.width >= PI / 2.0;
        Ok((0..self.nodes.len())
            .into_par_iter()
            .filter(|&i| full || dot3(tube.normal, self.nodes[i].xyz()).abs() <= s)
            .collect())
    }

    /// Subgrid built from indices into `self`.
    pub fn subset(&self, indices: Vec<usize>) -> QuadratureGrid {
        let nodes = indices.iter().map(|&i| self.nodes[i]).collect();
        let weights = indices.iter().map(|&i| self.weights[i]).collect();
        QuadratureGrid {
            model: self.model,
            resolution: self.resolution,
            layout: GridLayout::Subset { indices },
            nodes,
            weights,
            exactness_degree: 0,
            spacing: self.spacing,
        }
    }

    /// Parent indices of a subset grid (identity otherwise).
    pub fn parent_indices(&self) -> Option<&[usize]> {
        match &self.layout {
            GridLayout::Subset { indices } => Some(indices),
            _ => None,
        }
    }
}

/// Build the default quadrature grid for `model`.
///
/// `S^2`: `resolution` Gauss–Legendre rows times `2·resolution` azimuths,
/// exact through degree `2·resolution - 1`. `S^n, n > 2`: the axisymmetric
/// rule. Torus: `resolution^n` equispaced nodes.
pub fn build_grid(model: &ManifoldModel, resolution: usize) -> Result<QuadratureGrid> {
    if resolution < 2 {
        return Err(Error::resolution(format!("grid resolution {resolution} < 2")));
    }
    match model.kind {
        ManifoldKind::RoundSphere if model.n == 2 => sphere_product(model, resolution),
        ManifoldKind::RoundSphere => build_zonal_grid(model, resolution),
        ManifoldKind::FlatTorus => torus_product(model, resolution),
    }
}

fn sphere_product(model: &ManifoldModel, res: usize) -> Result<QuadratureGrid> {
    let n_phi = 2 * res;
    if res.saturating_mul(n_phi) > MAX_GRID_NODES {
        return Err(Error::resolution(format!("sphere grid {res}x{n_phi} exceeds node cap")));
    }
    let (t, w) = gauss_gegenbauer(res, 0.0);
    // ascending θ = descending t
    let thetas: Vec<f64> = t.iter().rev().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
    let row_w: Vec<f64> = w.iter().rev().copied().collect();
    let dphi = TAU / n_phi as f64;
    let nodes: Vec<Point> = (0..res * n_phi)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_phi, idx % n_phi);
            Point::sphere(2, thetas[i], j as f64 * dphi).expect("in range")
        })
        .collect();
    let weights: Vec<f64> = (0..res * n_phi).map(|idx| row_w[idx / n_phi] * dphi).collect();
    Ok(QuadratureGrid {
        model: *model,
        resolution: res,
        layout: GridLayout::SphereProduct { thetas, n_phi },
        nodes,
        weights,
        exactness_degree: 2 * res - 1,
        spacing: PI / res as f64,
    })
}

/// One-dimensional rule in `θ` integrating axisymmetric functions on `S^n`
/// (any `n ≥ 2`) exactly through polynomial degree `2·resolution - 1`.
pub fn build_zonal_grid(model: &ManifoldModel, res: usize) -> Result<QuadratureGrid> {
    if !model.is_sphere() {
        return Err(Error::unsupported("zonal grids are sphere-only"));
    }
    if res < 2 {
        return Err(Error::resolution(format!("grid resolution {res} < 2")));
    }
    let n = model.n;
    let alpha = (n as f64 - 2.0) / 2.0;
    let (t, w) = gauss_gegenbauer(res, alpha);
    let shell = super::model::sphere_area(n - 1);
    let thetas: Vec<f64> = t.iter().rev().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
    let weights: Vec<f64> = w.iter().rev().map(|x| x * shell).collect();
    let nodes = thetas.iter().map(|&th| Point::sphere(n, th, 0.0).expect("in range")).collect();
    Ok(QuadratureGrid {
        model: *model,
        resolution: res,
        layout: GridLayout::SphereZonal { thetas },
        nodes,
        weights,
        exactness_degree: 2 * res - 1,
        spacing: PI / res as f64,
    })
}

fn torus_product(model: &ManifoldModel, m: usize) -> Result<QuadratureGrid> {
    let n = model.n;
    let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(m));
    let total = match total {
        Some(t) if t <= MAX_GRID_NODES => t,
        _ => return Err(Error::resolution(format!("torus grid {m}^{n} exceeds node cap"))),
    };
    let h = TAU / m as f64;
    let nodes: Vec<Point> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut c = [0.0; 3];
            for a in (0..n).rev() {
                c[a] = (idx % m) as f64 * h;
                idx /= m;
            }
            Point::torus(&c[..n]).expect("finite")
        })
        .collect();
    let w = h.powi(n as i32);
    Ok(QuadratureGrid {
        model: *model,
        resolution: m,
        layout: GridLayout::TorusProduct { per_axis: m },
        nodes,
        weights: vec![w; total],
        exactness_degree: m - 1,
        spacing: h,
    })
}

/// Subgrid of nodes inside `B_r(center)`, original weights kept.
pub fn restrict_to_ball(grid: &QuadratureGrid, ball: &BallSpec) -> Result<QuadratureGrid> {
    if ball.radius < grid.spacing {
        return Err(Error::resolution(format!(
            "ball radius {} below grid spacing {}",
            ball.radius, grid.spacing
        )));
    }
    let idx = grid.ball_indices(ball)?;
    if idx.is_empty() {
        return Err(Error::resolution("ball contains no grid nodes"));
    }
    Ok(grid.subset(idx))
}

/// Subgrid of nodes inside the tube (sphere only).
pub fn restrict_to_tube(grid: &QuadratureGrid, tube: &TubeSpec) -> Result<QuadratureGrid> {
    if !grid.model.is_sphere() {
        return Err(Error::unsupported("tubes are only implemented on the sphere"));
    }
    if tube.width < grid.spacing {
        return Err(Error::resolution(format!(
            "tube width {} below grid spacing {}",
            tube.width, grid.spacing
        )));
    }
    let idx = grid.tube_indices(tube)?;
    if idx.is_empty() {
        return Err(Error::resolution("tube contains no grid nodes"));
    }
    Ok(grid.subset(idx))
}
