//! Model eigenfunctions on `S^n` and `T^n` as sampled fields.

mod darboux;
mod expansion;
mod field;
mod special;

pub use darboux::{darboux_compare, DarbouxReport};
pub use expansion::{Mode, SpectralExpansion, SpectralTerm};
pub use field::{
    highest_weight_constant, highest_weight_field, random_window_field, synthesize, torus_wave,
    window_modes, zonal_field, EigenfunctionField, FieldKind, ModulusSymmetry,
};
pub use special::{
    harmonic_dimension, legendre_like_eval, normalized_assoc_legendre, sphere_frequency,
    zonal_peak,
};
pub(crate) use special::GegenbauerIter;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ManifoldModel, Point};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    // Spherical Laplacian by centered differences in (θ, φ), applied to the
    // pointwise evaluator.
    fn fd_laplacian(f: &EigenfunctionField, theta: f64, phi: f64, h: f64) -> Complex64 {
        let at = |t: f64, p: f64| f.value_at(&Point::sphere(2, t, p).unwrap());
        let c = at(theta, phi);
        let ftt = (at(theta + h, phi) - 2.0 * c + at(theta - h, phi)) / (h * h);
        let ft = (at(theta + h, phi) - at(theta - h, phi)) / (2.0 * h);
        let fpp = (at(theta, phi + h) - 2.0 * c + at(theta, phi - h)) / (h * h);
        let s = theta.sin();
        ftt + ft * (theta.cos() / s) + fpp / (s * s)
    }

    #[test]
    fn eigen_equation_by_finite_differences() {
        let model = ManifoldModel::sphere(2).unwrap();
        let grid = std::sync::Arc::new(crate::geometry::build_grid(&model, 40).unwrap());
        let pole = Point::sphere(2, 0.7, 0.3).unwrap();
        for k in [1usize, 5, 16, 32] {
            let z = zonal_field(&model, k, &pole, grid.clone()).unwrap();
            let q = highest_weight_field(&model, k, grid.clone()).unwrap();
            let h = 1e-3 / k as f64;
            let ev = (k * (k + 1)) as f64;
            for f in [&z, &q] {
                for &(t, p) in &[(0.9, 0.1), (1.4, 2.0), (2.2, 4.0), (1.57, 5.5)] {
                    let v = f.value_at(&Point::sphere(2, t, p).unwrap());
                    if v.norm() < 1e-3 * zonal_peak(2, k) {
                        continue;
                    }
                    let lap = fd_laplacian(f, t, p, h);
                    let rel = (lap + ev * v).norm() / (ev * v.norm());
                    assert!(rel <= 1e-3, "k={k} {:?} rel={rel}", f.kind);
                }
            }
        }
    }

    #[test]
    fn highest_weight_constant_grows_like_k_quarter() {
        let ks = [16usize, 32, 64, 128, 256];
        let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
        let ys: Vec<f64> = ks.iter().map(|&k| highest_weight_constant(k).ln()).collect();
        let mx = xs.iter().sum::<f64>() / 5.0;
        let my = ys.iter().sum::<f64>() / 5.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 0.25).abs() < 0.05, "{slope}");
        assert!((highest_weight_constant(0) - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn dimension_matches_frequency_power() {
        // d_k ≈ λ^{n-1} up to a dimensional constant 2/(n-1)!
        for n in 2..=4usize {
            let k = 400;
            let fact: f64 = (1..n).map(|i| i as f64).product();
            let ratio = harmonic_dimension(n, k) / sphere_frequency(n, k).powi(n as i32 - 1);
            assert!((ratio * fact / 2.0 - 1.0).abs() < 0.02, "n={n}: {ratio}");
        }
    }
}
