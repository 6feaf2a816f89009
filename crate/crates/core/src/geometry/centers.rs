use std::f64::consts::{PI, TAU};

use super::model::{ManifoldKind, ManifoldModel};
use super::point::{cross3, norm3, Point};
use crate::error::{Error, Result};

/// Default cap on generated center counts.
pub const DEFAULT_CENTER_CAP: usize = 5_000_000;

/// Area per Fibonacci point, in units of `spacing²`. Chosen so the lattice
/// covering radius stays below `spacing` (measured worst case ≈ 0.83·spacing).
const FIB_CELL: f64 = 1.4;

/// How a center set relates to the manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterLayout {
    /// Every point of `M` is within `spacing` of some center.
    Net,
    /// Points along the geodesic from `axis` to its antipode; covers `M` up
    /// to rotations about `axis`.
    Meridian { axis: [f64; 3] },
    /// One center; used when the measured quantity is translation invariant.
    Single,
}

#[derive(Debug, Clone)]
pub struct CenterSet {
    pub points: Vec<Point>,
    pub spacing: f64,
    pub layout: CenterLayout,
}

/// Deterministic `spacing`-net on the model.
///
/// Sphere `S^2`: Fibonacci lattice with `⌈4π/(1.4 spacing²)⌉` points (at
/// least 2). Torus: uniform lattice with `⌈2π/spacing⌉` points per axis.
pub fn generate_centers(model: &ManifoldModel, spacing: f64) -> Result<Vec<Point>> {
    generate_centers_capped(model, spacing, DEFAULT_CENTER_CAP)
}

pub fn generate_centers_capped(model: &ManifoldModel, spacing: f64, cap: usize) -> Result<Vec<Point>> {
    if !(spacing > 0.0 && spacing <= model.inj) {
        return Err(Error::param(format!("center spacing {spacing} outside (0, inj]")));
    }
    match model.kind {
        ManifoldKind::RoundSphere => {
            if model.n != 2 {
                return Err(Error::unsupported("center nets are implemented on S^2 only"));
            }
            let count = ((4.0 * PI / (FIB_CELL * spacing * spacing)).ceil() as usize).max(2);
            if count > cap {
                return Err(Error::param(format!("{count} centers exceed cap {cap}")));
            }
            Ok(fibonacci_sphere(count))
        }
        ManifoldKind::FlatTorus => {
            let m = ((TAU / spacing) - 1e-9).ceil().max(1.0) as usize;
            let n = model.n;
            let count = (0..n).try_fold(1usize, |a, _| a.checked_mul(m));
            match count {
                Some(c) if c <= cap => {}
                _ => return Err(Error::param(format!("{m}^{n} centers exceed cap {cap}"))),
            }
            let h = TAU / m as f64;
            let total = m.pow(n as u32);
            Ok((0..total)
                .map(|mut idx| {
                    let mut c = [0.0; 3];
                    for a in (0..n).rev() {
                        c[a] = (idx % m) as f64 * h;
                        idx /= m;
                    }
                    Point::torus(&c[..n]).expect("finite")
                })
                .collect())
        }
    }
}

/// `count` points `z_i = 1 - (2i+1)/count`, `φ_i = i·golden angle`.
pub fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z: f64 = 1.0 - (2 * i + 1) as f64 / count as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            Point::sphere(2, theta, i as f64 * golden).expect("in range")
        })
        .collect()
}

impl CenterSet {
    pub fn net(model: &ManifoldModel, spacing: f64) -> Result<Self> {
        Ok(Self { points: generate_centers(model, spacing)?, spacing, layout: CenterLayout::Net })
    }

    /// Centers every `spacing` along the half great circle from `axis` to
    /// `-axis` (sphere `S^2`).
    pub fn meridian(axis: &Point, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing <= PI) {
            return Err(Error::param(format!("meridian spacing {spacing} outside (0, π]")));
        }
        let a = axis.xyz();
        // any unit vector orthogonal to the axis
        let helper = if a[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let mut e = cross3(a, helper);
        let ne = norm3(e);
        e = [e[0] / ne, e[1] / ne, e[2] / ne];
        let steps = (PI / spacing).ceil() as usize;
        let points = (0..=steps)
            .map(|i| {
                let s = (i as f64 * PI / steps as f64).min(PI);
                let (sn, cs) = s.sin_cos();
                Point::sphere_from_vec(
                    axis.dim(),
                    [cs * a[0] + sn * e[0], cs * a[1] + sn * e[1], cs * a[2] + sn * e[2]],
                )
                .expect("unit vector")
            })
            .collect();
        Ok(Self { points, spacing: PI / steps as f64, layout: CenterLayout::Meridian { axis: a } })
    }

    pub fn single(center: Point) -> Self {
        Self { points: vec![center], spacing: 0.0, layout: CenterLayout::Single }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point::{dot3, sphere_distance, torus_distance};

    fn axis_angle(axis: [f64; 3], p: &Point) -> f64 {
        dot3(axis, p.xyz()).clamp(-1.0, 1.0).acos()
    }

    fn covering_radius_sphere(centers: &[Point], probes: usize) -> f64 {
        // probe with a denser Fibonacci set plus the poles
        let mut probe = fibonacci_sphere(probes);
        probe.push(Point::north_pole(2));
        probe.push(Point::north_pole(2).antipode());
        probe
            .iter()
            .map(|p| {
                centers.iter().map(|c| sphere_distance(c.xyz(), p.xyz())).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn torus_lattice_counts_and_gap() {
        let m = ManifoldModel::torus(2).unwrap();
        let c = generate_centers(&m, TAU / 16.0).unwrap();
        assert_eq!(c.len(), 256);
        let spacing = TAU / 16.0;
        // max gap: half-diagonal of a lattice cell
        for i in 0..50 {
            let p = [i as f64 * 0.123 % TAU, i as f64 * 0.731 % TAU];
            let d = c.iter().map(|q| torus_distance(q.coords(), &p)).fold(f64::INFINITY, f64::min);
            assert!(d <= spacing);
        }
        assert!(generate_centers(&m, PI).unwrap().len() >= 2);
    }

    #[test]
    fn fibonacci_net_covers_within_spacing() {
        let m = ManifoldModel::sphere(2).unwrap();
        for spacing in [PI, 1.0, 0.5, 0.25, 0.12] {
            let c = generate_centers(&m, spacing).unwrap();
            let probes = (40.0 / (spacing * spacing)) as usize + 500;
            let rad = covering_radius_sphere(&c, probes);
            assert!(rad <= spacing, "spacing {spacing}: covering radius {rad}");
        }
    }

    #[test]
    fn halving_spacing_quadruples_sphere_count() {
        let m = ManifoldModel::sphere(2).unwrap();
        for s in [0.8, 0.4, 0.2, 0.1] {
            let a = generate_centers(&m, s).unwrap().len() as f64;
            let b = generate_centers(&m, s / 2.0).unwrap().len() as f64;
            assert!((b / a - 4.0).abs() <= 1.0, "{s}: {}", b / a);
        }
        assert!(generate_centers(&m, PI).unwrap().len() >= 2);
    }

    #[test]
    fn cap_is_enforced() {
        let m = ManifoldModel::sphere(2).unwrap();
        assert!(generate_centers_capped(&m, 0.001, 1000).is_err());
        assert!(generate_centers(&m, 0.0).is_err());
    }

    #[test]
    fn meridian_runs_pole_to_pole() {
        let axis = Point::sphere(2, 0.4, 1.0).unwrap();
        let c = CenterSet::meridian(&axis, 0.1).unwrap();
        assert!(axis_angle(axis.xyz(), &c.points[0]) < 1e-12);
        assert!((axis_angle(axis.xyz(), c.points.last().unwrap()) - PI).abs() < 1e-12);
        assert!(c.spacing <= 0.1);
    }
}
