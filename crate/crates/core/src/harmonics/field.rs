use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::expansion::{Evaluator, Mode, SpectralExpansion, SpectralTerm};
use super::special::sphere_frequency;
use crate::error::{Error, Result};
use crate::geometry::{GridLayout, ManifoldKind, ManifoldModel, Point, QuadratureGrid};
use crate::numeric::det_sum_by;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zonal,
    HighestWeight,
    TorusWave,
    RandomWindow,
}

/// Symmetry of `|f|` that lets a sup over centers shrink to fewer centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusSymmetry {
    None,
    /// Invariant under rotations fixing this unit vector.
    Axial([f64; 3]),
    /// Constant modulus is translation invariant (single torus mode).
    Translation,
}

/// A sampled eigenfunction or spectral-window function.
#[derive(Debug, Clone)]
pub struct EigenfunctionField {
    pub id: String,
    pub model: ManifoldModel,
    pub kind: FieldKind,
    /// Nominal frequency.
    pub lambda: f64,
    pub expansion: SpectralExpansion,
    pub grid: Arc<QuadratureGrid>,
    pub samples: Vec<Complex64>,
    pub seed: Option<u64>,
}

const CHUNK: usize = 2048;

/// Evaluate an expansion at every node of `grid`.
pub fn synthesize(expansion: &SpectralExpansion, grid: &QuadratureGrid) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut ev = Evaluator::new(expansion);
        let base = c * CHUNK;
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = ev.eval(&grid.nodes[base + i]);
        }
    });
    out
}

impl EigenfunctionField {
    fn build(
        id: String,
        kind: FieldKind,
        lambda: f64,
        expansion: SpectralExpansion,
        grid: Arc<QuadratureGrid>,
        seed: Option<u64>,
    ) -> Self {
        let samples = synthesize(&expansion, &grid);
        Self { id, model: grid.model, kind, lambda, expansion, grid, samples, seed }
    }

    /// Same field metadata with a new expansion, resynthesized on the same grid.
    pub fn with_expansion(&self, expansion: SpectralExpansion, id: String) -> Self {
        Self::build(id, self.kind, self.lambda, expansion, self.grid.clone(), self.seed)
    }

    /// Exact pointwise value from the expansion.
    pub fn value_at(&self, p: &Point) -> Complex64 {
        Evaluator::new(&self.expansion).eval(p)
    }

    /// Batch evaluation at arbitrary points.
    pub fn values_at(&self, points: &[Point]) -> Vec<Complex64> {
        let mut ev = Evaluator::new(&self.expansion);
        points.iter().map(|p| ev.eval(p)).collect()
    }

    /// `Σ w_i |f_i|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        det_sum_by(self.samples.len(), |i| self.grid.weights[i] * self.samples[i].norm_sqr())
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.expansion.max_degree()
    }

    pub fn modulus_symmetry(&self) -> ModulusSymmetry {
        let terms = &self.expansion.terms;
        if terms.is_empty() {
            return ModulusSymmetry::Translation;
        }
        match &terms[0].mode {
            Mode::Zonal { pole, .. } => {
                let same = terms.iter().all(|t| matches!(&t.mode, Mode::Zonal { pole: q, .. } if q == pole));
                if same {
                    return ModulusSymmetry::Axial(pole.xyz());
                }
            }
            Mode::HighestWeight { .. } => {
                if terms.iter().all(|t| matches!(t.mode, Mode::HighestWeight { .. })) {
                    return ModulusSymmetry::Axial([0.0, 0.0, 1.0]);
                }
            }
            Mode::SphereHarmonic { m, .. } => {
                if terms.iter().all(|t| matches!(t.mode, Mode::SphereHarmonic { m: q, .. } if q == *m)) {
                    return ModulusSymmetry::Axial([0.0, 0.0, 1.0]);
                }
            }
            Mode::TorusWave { .. } => {
                if terms.len() == 1 {
                    return ModulusSymmetry::Translation;
                }
            }
        }
        ModulusSymmetry::None
    }
}

fn check_degree(grid: &QuadratureGrid, k: usize) -> Result<()> {
    if grid.resolution < k + 1 {
        return Err(Error::resolution(format!(
            "grid resolution {} cannot normalize degree {k} (needs >= {})",
            grid.resolution,
            k + 1
        )));
    }
    Ok(())
}

fn require_sphere(grid: &QuadratureGrid) -> Result<()> {
    if grid.model.kind != ManifoldKind::RoundSphere {
        return Err(Error::unsupported("field requires a sphere model"));
    }
    Ok(())
}

/// `Z(x) = √(d_k/|S^n|) G_k(cos d(x, pole))`, the normalized zonal harmonic.
pub fn zonal_field(
    model: &ManifoldModel,
    k: usize,
    pole: &Point,
    grid: Arc<QuadratureGrid>,
) -> Result<EigenfunctionField> {
    if grid.model != *model {
        return Err(Error::param("grid built for a different model"));
    }
    require_sphere(&grid)?;
    pole.check_on(model)?;
    check_degree(&grid, k)?;
    if let GridLayout::SphereZonal { .. } = grid.layout {
        if pole.theta() > 1e-12 {
            return Err(Error::unsupported("zonal grids need the pole on the axis"));
        }
    }
    let n = model.n;
    let exp = SpectralExpansion::single(Mode::Zonal { n, k, pole: *pole }, Complex64::new(1.0, 0.0));
    Ok(EigenfunctionField::build(
        format!("zonal_k{k}"),
        FieldKind::Zonal,
        sphere_frequency(n, k),
        exp,
        grid,
        None,
    ))
}

/// Closed form `c_k` with `∫_{S^2} |c_k (x_1+ix_2)^k|² = 1`:
/// `c_k² = Π_{j=1..k} ((2j+1)/(2j)) / (4π)`.
pub fn highest_weight_constant(k: usize) -> f64 {
    let mut c2 = 0.25 / std::f64::consts::PI;
    for j in 1..=k {
        c2 *= (2 * j + 1) as f64 / (2 * j) as f64;
    }
    c2.sqrt()
}

/// `Q = c_k (x_1 + i x_2)^k` on `S^2`, `c_k` fixed by the grid quadrature.
pub fn highest_weight_field(
    model: &ManifoldModel,
    k: usize,
    grid: Arc<QuadratureGrid>,
) -> Result<EigenfunctionField> {
    if grid.model != *model {
        return Err(Error::param("grid built for a different model"));
    }
    require_sphere(&grid)?;
    if model.n != 2 {
        return Err(Error::unsupported("highest-weight harmonics are implemented on S^2 only"));
    }
    check_degree(&grid, k)?;
    let mass = det_sum_by(grid.len(), |i| {
        let v = grid.nodes[i].xyz();
        grid.weights[i] * (v[0] * v[0] + v[1] * v[1]).powi(k as i32)
    });
    let scale = 1.0 / mass.sqrt();
    let exp = SpectralExpansion::single(Mode::HighestWeight { k, scale }, Complex64::new(1.0, 0.0));
    Ok(EigenfunctionField::build(
        format!("hw_k{k}"),
        FieldKind::HighestWeight,
        sphere_frequency(2, k),
        exp,
        grid,
        None,
    ))
}

/// Plane wave `(2π)^{-n/2} e^{i m·x}` on `T^n`.
pub fn torus_wave(model: &ManifoldModel, m: &[i64], grid: Arc<QuadratureGrid>) -> Result<EigenfunctionField> {
    if grid.model != *model {
        return Err(Error::param("grid built for a different model"));
    }
    if !model.is_torus() {
        return Err(Error::unsupported("torus waves need a torus model"));
    }
    if m.len() != model.n {
        return Err(Error::DimensionMismatch { expected: model.n, found: m.len() });
    }
    let mode = Mode::TorusWave { m: m.to_vec() };
    let lambda = mode.frequency();
    let id = format!(
        "torus_m{}",
        m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("_")
    );
    Ok(EigenfunctionField::build(
        id,
        FieldKind::TorusWave,
        lambda,
        SpectralExpansion::single(mode, Complex64::new(1.0, 0.0)),
        grid,
        None,
    ))
}

/// Modes of the model with frequency in `[lo, hi)`, in a fixed order.
pub fn window_modes(model: &ManifoldModel, lo: f64, hi: f64) -> Result<Vec<Mode>> {
    let mut out = Vec::new();
    match model.kind {
        ManifoldKind::RoundSphere => {
            if model.n != 2 {
                return Err(Error::unsupported("random windows are implemented on S^2 only"));
            }
            let kmax = hi.max(0.0).ceil() as usize + 1;
            for k in 0..=kmax {
                let f = sphere_frequency(2, k);
                if f >= lo && f < hi {
                    for m in -(k as i64)..=(k as i64) {
                        out.push(Mode::SphereHarmonic { k, m });
                    }
                }
            }
        }
        ManifoldKind::FlatTorus => {
            let b = hi.max(0.0).ceil() as i64;
            let n = model.n;
            let side = (2 * b + 1) as usize;
            let total = side.pow(n as u32);
            if total > 50_000_000 {
                return Err(Error::param("window too large to enumerate"));
            }
            for mut idx in 0..total {
                let mut m = vec![0i64; n];
                for a in (0..n).rev() {
                    m[a] = (idx % side) as i64 - b;
                    idx /= side;
                }
                let f = (m.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
                if f >= lo && f < hi {
                    out.push(Mode::TorusWave { m });
                }
            }
        }
    }
    Ok(out)
}

/// Unit-norm random combination of the modes with frequency in
/// `[lambda, lambda + width)`, coefficients i.i.d. standard complex Gaussian.
pub fn random_window_field(
    model: &ManifoldModel,
    lambda: f64,
    width: f64,
    seed: u64,
    grid: Arc<QuadratureGrid>,
) -> Result<EigenfunctionField> {
    if grid.model != *model {
        return Err(Error::param("grid built for a different model"));
    }
    if !(width > 0.0) || !lambda.is_finite() {
        return Err(Error::param("window width must be positive"));
    }
    let modes = window_modes(model, lambda, lambda + width)?;
    if modes.is_empty() {
        return Err(Error::EmptyWindow { lo: lambda, hi: lambda + width });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms: Vec<SpectralTerm> = modes
        .into_iter()
        .map(|mode| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            SpectralTerm { frequency: mode.frequency(), mode, coefficient: Complex64::new(re, im) }
        })
        .collect();
    let norm = terms.iter().map(|t| t.coefficient.norm_sqr()).sum::<f64>().sqrt();
    for t in &mut terms {
        t.coefficient /= norm;
    }
    let expansion = SpectralExpansion { terms };
    if let Some(k) = expansion.max_degree() {
        check_degree(&grid, k)?;
    }
    if model.is_torus() {
        let need = 2 * expansion.max_torus_index() as usize + 1;
        if grid.resolution < need {
            return Err(Error::resolution(format!(
                "torus grid {} cannot resolve index {}",
                grid.resolution,
                expansion.max_torus_index()
            )));
        }
    }
    Ok(EigenfunctionField::build(
        format!("window_l{lambda}_w{width}_s{seed}"),
        FieldKind::RandomWindow,
        lambda,
        expansion,
        grid,
        Some(seed),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, build_zonal_grid, TubeSpec};
    use std::f64::consts::PI;

    fn s2_grid(res: usize) -> Arc<QuadratureGrid> {
        Arc::new(build_grid(&ManifoldModel::sphere(2).unwrap(), res).unwrap())
    }

    #[test]
    fn zonal_normalization_and_peak() {
        let g = s2_grid(24);
        let m = g.model;
        let pole = Point::sphere(2, 0.3, 1.1).unwrap();
        let z = zonal_field(&m, 10, &pole, g.clone()).unwrap();
        assert!((z.l2_norm_sq() - 1.0).abs() < 1e-8);
        assert!((z.lambda - 110f64.sqrt()).abs() < 1e-12);
        let peak = z.value_at(&pole).re;
        assert!((peak - (21.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);
        assert!((peak - 1.292721).abs() < 1e-6);
        let z0 = zonal_field(&m, 0, &pole, g).unwrap();
        assert!(z0.samples.iter().all(|v| (v.re - (4.0 * PI).powf(-0.5)).abs() < 1e-14));
    }

    #[test]
    fn zonal_samples_depend_only_on_distance() {
        let g = s2_grid(30);
        let z = zonal_field(&g.model, 12, &Point::north_pole(2), g.clone()).unwrap();
        if let GridLayout::SphereProduct { n_phi, .. } = &g.layout {
            for row in z.samples.chunks(*n_phi) {
                let v0 = row[0];
                assert!(row.iter().all(|v| (v - v0).norm() <= 1e-8));
            }
        }
    }

    #[test]
    fn zonal_orthogonality_same_pole() {
        let g = s2_grid(40);
        let pole = Point::sphere(2, 1.0, 2.0).unwrap();
        let a = zonal_field(&g.model, 7, &pole, g.clone()).unwrap();
        let b = zonal_field(&g.model, 12, &pole, g.clone()).unwrap();
        let ip: f64 = (0..g.len()).map(|i| g.weights[i] * (a.samples[i] * b.samples[i].conj()).re).sum();
        assert!(ip.abs() < 1e-8);
    }

    #[test]
    fn zonal_on_higher_spheres() {
        for n in 3..=5 {
            let m = ManifoldModel::sphere(n).unwrap();
            let g = Arc::new(build_zonal_grid(&m, 40).unwrap());
            let z = zonal_field(&m, 20, &Point::north_pole(n), g).unwrap();
            assert!((z.l2_norm_sq() - 1.0).abs() < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn low_resolution_is_rejected() {
        let g = s2_grid(10);
        assert!(matches!(
            zonal_field(&g.model, 10, &Point::north_pole(2), g.clone()),
            Err(Error::Resolution(_))
        ));
        assert!(highest_weight_field(&g.model.clone(), 12, g).is_err());
    }

    #[test]
    fn highest_weight_properties() {
        let g = s2_grid(70);
        let q = highest_weight_field(&g.model, 64, g.clone()).unwrap();
        assert!((q.l2_norm_sq() - 1.0).abs() < 1e-10);
        let scale = match q.expansion.terms[0].mode {
            Mode::HighestWeight { scale, .. } => scale,
            _ => unreachable!(),
        };
        assert!((scale - highest_weight_constant(64)).abs() < 1e-10 * scale);
        assert!(q.value_at(&Point::north_pole(2)).norm() == 0.0);
        assert!(q.value_at(&Point::north_pole(2).antipode()).norm() == 0.0);
        let eq = q.value_at(&Point::sphere(2, PI / 2.0, 0.4).unwrap()).norm();
        assert!((eq - scale).abs() < 1e-12 * scale);
        let max = q.samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max <= scale * (1.0 + 1e-12));
    }

    #[test]
    fn highest_weight_beam_mass_stable_in_k() {
        // mass within c·k^{-1/2} of the equator tends to erf(c); c = 1
        let g = s2_grid(260);
        let mut masses = Vec::new();
        for k in [32usize, 64, 128, 256] {
            let q = highest_weight_field(&g.model, k, g.clone()).unwrap();
            let tube = TubeSpec::equatorial((k as f64).powf(-0.5)).unwrap();
            let idx = g.tube_indices(&tube).unwrap();
            let mass: f64 = idx.iter().map(|&i| g.weights[i] * q.samples[i].norm_sqr()).sum();
            masses.push(mass);
        }
        for m in &masses {
            assert!(*m > 0.6 && *m < 1.0, "{masses:?}");
        }
        assert!((masses[0] - masses[3]).abs() < 0.1, "{masses:?}");
    }

    #[test]
    fn torus_wave_basics() {
        let t = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&t, 32).unwrap());
        let e = torus_wave(&t, &[3, 4], g.clone()).unwrap();
        assert_eq!(e.lambda, 5.0);
        assert!((e.l2_norm_sq() - 1.0).abs() < 1e-12);
        assert!(e.samples.iter().all(|v| (v.norm() - 1.0 / (2.0 * PI)).abs() < 1e-14));
        let e0 = torus_wave(&t, &[0, 0], g.clone()).unwrap();
        assert_eq!(e0.lambda, 0.0);
        assert!(torus_wave(&t, &[1, 2, 3], g).is_err());
    }

    #[test]
    fn random_window_determinism_and_norm() {
        let g = s2_grid(40);
        let a = random_window_field(&g.model, 20.0, 1.0, 7, g.clone()).unwrap();
        let b = random_window_field(&g.model, 20.0, 1.0, 7, g.clone()).unwrap();
        let c = random_window_field(&g.model, 20.0, 1.0, 8, g.clone()).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
        assert!((a.expansion.coefficient_norm_sq() - 1.0).abs() < 1e-10);
        assert!((a.l2_norm_sq() - 1.0).abs() < 1e-8);
        // [20, 21) holds exactly degree 20 (λ_20 = √420 ≈ 20.49)
        assert_eq!(a.expansion.terms.len(), 41);
    }

    #[test]
    fn random_window_single_torus_mode_is_the_wave() {
        let t = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&t, 32).unwrap());
        // |m| ∈ [0, 0.5) holds only m = 0
        let f = random_window_field(&t, 0.0, 0.5, 3, g.clone()).unwrap();
        assert_eq!(f.expansion.terms.len(), 1);
        let e = torus_wave(&t, &[0, 0], g).unwrap();
        let phase = f.samples[0] / e.samples[0];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        for (a, b) in f.samples.iter().zip(&e.samples) {
            assert!((a - phase * b).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let t = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&t, 32).unwrap());
        // no |m| in [1.1, 1.3)
        assert!(matches!(
            random_window_field(&t, 1.1, 0.2, 1, g),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn random_sphere_window_is_an_eigenfunction_mix_with_unit_l2() {
        let g = s2_grid(60);
        let f = random_window_field(&g.model, 30.0, 3.0, 11, g.clone()).unwrap();
        let degrees: std::collections::BTreeSet<usize> =
            f.expansion.terms.iter().filter_map(|t| t.mode.degree()).collect();
        assert_eq!(degrees.into_iter().collect::<Vec<_>>(), vec![30, 31, 32]);
        assert!((f.l2_norm_sq() - 1.0).abs() < 1e-8);
        // pointwise evaluation agrees with grid synthesis
        for i in [0, 17, 5000, g.len() - 1] {
            assert!((f.value_at(&g.nodes[i]) - f.samples[i]).norm() < 1e-12);
        }
    }
}
