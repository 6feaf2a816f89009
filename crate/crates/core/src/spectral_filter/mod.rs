//! The window `ρ`, the operators `T_{λ,r}`, their kernels on spheres, and
//! unit-band cluster projections.

mod rho;

pub use rho::{make_rho, Rho, RhoKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sphere_area, ManifoldModel, Point};
use crate::harmonics::{
    harmonic_dimension, sphere_frequency, EigenfunctionField, GegenbauerIter,
};

/// Multiplier tolerance used to pick kernel truncation degrees.
pub const KERNEL_TAIL: f64 = 1e-10;

/// Data `(ρ, λ, r)` of `T_{λ,r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFilterSpec {
    pub rho: RhoKind,
    pub lambda: f64,
    pub r: f64,
}

impl WindowFilterSpec {
    pub fn new(rho: RhoKind, lambda: f64, r: f64) -> Self {
        Self { rho, lambda, r }
    }

    /// `λ ≥ 1` and `1/λ ≤ r ≤ inj`.
    pub fn check(&self, model: &ManifoldModel) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::param(format!("λ = {} below 1", self.lambda)));
        }
        let lo = 1.0 / self.lambda;
        if !(self.r >= lo * (1.0 - 1e-12) && self.r <= model.inj * (1.0 + 1e-12)) {
            return Err(Error::param(format!(
                "r = {} outside [1/λ, inj] = [{lo}, {}]",
                self.r, model.inj
            )));
        }
        Ok(())
    }
}

/// `ρ(r(λ-λ_j)) + ρ(r(λ+λ_j))`.
pub fn multiplier(rho: &Rho, spec: &WindowFilterSpec, lambda_j: f64) -> f64 {
    rho.eval(spec.r * (spec.lambda - lambda_j)) + rho.eval(spec.r * (spec.lambda + lambda_j))
}

/// `T_{λ,r} f`, by scaling each spectral coefficient and resynthesizing.
pub fn apply_filter(field: &EigenfunctionField, spec: &WindowFilterSpec) -> Result<EigenfunctionField> {
    spec.check(&field.model)?;
    let rho = make_rho(spec.rho)?;
    let exp = field.expansion.map_coefficients(|f| multiplier(&rho, spec, f));
    Ok(field.with_expansion(exp, format!("T[{}]({})", spec.lambda, field.id)))
}

/// Projection onto frequencies in `[k, k+1)`; may be the zero field.
pub fn cluster_project(field: &EigenfunctionField, k: usize) -> EigenfunctionField {
    let exp = field.expansion.restrict(k as f64, k as f64 + 1.0);
    field.with_expansion(exp, format!("chi{k}({})", field.id))
}

/// One value of the kernel of `T_{λ,r}` on a sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterKernelSample {
    pub x: Point,
    pub y: Point,
    pub distance: f64,
    pub value: f64,
    pub k_max: usize,
}

/// Smallest degree past which every multiplier is below [`KERNEL_TAIL`].
pub fn default_kmax(model: &ManifoldModel, spec: &WindowFilterSpec) -> Result<usize> {
    let rho = make_rho(spec.rho)?;
    let s = rho.tail_threshold(KERNEL_TAIL)?;
    let target = spec.lambda + s / spec.r;
    let mut k = target.floor().max(0.0) as usize;
    while sphere_frequency(model.n, k + 1) - spec.lambda < s / spec.r {
        k += 1;
    }
    Ok(k)
}

fn kernel_weights(model: &ManifoldModel, spec: &WindowFilterSpec, k_max: usize) -> Result<Vec<f64>> {
    if !model.is_sphere() {
        return Err(Error::unsupported("filter kernels are implemented on spheres"));
    }
    spec.check(model)?;
    let rho = make_rho(spec.rho)?;
    let s = rho.tail_threshold(KERNEL_TAIL)?;
    let next = sphere_frequency(model.n, k_max + 1);
    if spec.r * (next - spec.lambda) < s {
        return Err(Error::param(format!(
            "k_max = {k_max} truncates multipliers above {KERNEL_TAIL}"
        )));
    }
    let area = sphere_area(model.n);
    Ok((0..=k_max)
        .map(|k| {
            multiplier(&rho, spec, sphere_frequency(model.n, k)) * harmonic_dimension(model.n, k) / area
        })
        .collect())
}

fn kernel_sum(n: usize, weights: &[f64], t: f64) -> f64 {
    let mut it = GegenbauerIter::new(n, t);
    weights.iter().map(|w| w * it.next_value()).sum()
}

/// `K(x,y) = Σ_{k ≤ k_max} [ρ(r(λ-λ_k)) + ρ(r(λ+λ_k))] (d_k/|S^n|) G_k(cos d(x,y))`.
pub fn filter_kernel(
    model: &ManifoldModel,
    spec: &WindowFilterSpec,
    x: &Point,
    y: &Point,
    k_max: usize,
) -> Result<FilterKernelSample> {
    let weights = kernel_weights(model, spec, k_max)?;
    let d = crate::geometry::geodesic_distance(model, x, y)?;
    Ok(FilterKernelSample { x: *x, y: *y, distance: d, value: kernel_sum(model.n, &weights, d.cos()), k_max })
}

/// Kernel as a function of distance, at each of `distances`.
pub fn kernel_profile(
    model: &ManifoldModel,
    spec: &WindowFilterSpec,
    distances: &[f64],
    k_max: usize,
) -> Result<Vec<f64>> {
    let weights = kernel_weights(model, spec, k_max)?;
    use rayon::prelude::*;
    Ok(distances.par_iter().map(|d| kernel_sum(model.n, &weights, d.cos())).collect())
}
