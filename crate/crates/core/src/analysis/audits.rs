use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::report::{AuditMetadata, AuditPoint, AuditReport};
use super::scaling::{fit_scaling, sigma};
use crate::error::{Error, Result};
use crate::geometry::{critical_exponent, ManifoldModel, Point, QuadratureGrid};
use crate::harmonics::{
    harmonic_dimension, highest_weight_field, random_window_field, sphere_frequency, torus_wave,
    window_modes, zonal_field, EigenfunctionField, Mode, SpectralExpansion, SpectralTerm,
};
use crate::measures::{centers_for, holder_check, lp_norm, sup_ball_norm, BallMethod, Exponent};
use crate::spectral_filter::{apply_filter, make_rho, multiplier, RhoKind, WindowFilterSpec};
use num_complex::Complex64;

fn in_range(field: &EigenfunctionField, r: f64) -> bool {
    let lo = if field.lambda > 0.0 { 1.0 / field.lambda } else { 0.0 };
    r >= lo * (1.0 - 1e-12) && r <= field.model.inj * (1.0 + 1e-12)
}

/// `sup_x ‖f‖_{L²(B_r(x))}` over the symmetry-reduced center set.
pub fn sup_ball(field: &EigenfunctionField, r: f64) -> Result<f64> {
    let centers = centers_for(field, r)?;
    Ok(sup_ball_norm(field, r, &centers, BallMethod::Auto)?.value)
}

fn metadata(fields: &[&EigenfunctionField]) -> AuditMetadata {
    AuditMetadata {
        seed: fields.iter().find_map(|f| f.seed),
        resolution: fields.first().map(|f| f.grid.resolution),
        rho_kind: None,
        covering_constant: None,
    }
}

/// Ratio `‖e‖_{p_c} / [λ^{σ(p_c)} (r^{-(n+1)/4} sup_x ‖e‖_{L²(B_r(x))})^{2/(n+1)}]`
/// for every field and every admissible `r`.
pub fn audit_critical_localized(fields: &[EigenfunctionField], r_values: &[f64]) -> Result<AuditReport> {
    let mut jobs = Vec::new();
    for f in fields {
        for &r in r_values {
            if in_range(f, r) {
                jobs.push((f, r));
            }
        }
    }
    let points: Vec<AuditPoint> = jobs
        .par_iter()
        .map(|&(f, r)| {
            let n = f.model.n as f64;
            let pc = Exponent::Finite(critical_exponent(f.model.n));
            let lhs = lp_norm(f, pc).value;
            let m = sup_ball(f, r)?;
            let rhs = f.lambda.max(1.0).powf(sigma(f.model.n, pc)?) * (r.powf(-(n + 1.0) / 4.0) * m).powf(2.0 / (n + 1.0));
            Ok(AuditPoint::new(f.id.clone(), &[("lambda", f.lambda), ("r", r)], lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&EigenfunctionField> = fields.iter().collect();
    Ok(AuditReport::new("critical_localized", points, metadata(&refs)))
}

/// Parameters of the operator-norm audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorAuditSpec {
    pub lambda: f64,
    pub r: f64,
    pub rho: RhoKind,
    pub exponents: Vec<Exponent>,
    pub seed: u64,
    /// Random windows centered at `λ`; at least 20.
    pub trials: usize,
    /// Off-center windows at `λ ± j/r`, `j = 1..=offsets`.
    pub offsets: usize,
    /// Add the extremals nearest `λ` (zonal and highest weight on `S^2`, a
    /// plane wave on the torus) and the kernel trial.
    pub extremals: bool,
}

impl OperatorAuditSpec {
    pub fn new(lambda: f64, r: f64) -> Self {
        Self {
            lambda,
            r,
            rho: RhoKind::default(),
            exponents: vec![Exponent::Finite(6.0), Exponent::Infinity],
            seed: 1,
            trials: 20,
            offsets: 2,
            extremals: true,
        }
    }
}

/// Extremal eigenfunctions with frequency in `[λ - 1/2, λ + 1/2)`.
fn extremals(model: &ManifoldModel, grid: &Arc<QuadratureGrid>, lambda: f64) -> Result<Vec<EigenfunctionField>> {
    let mut out = Vec::new();
    if model.is_sphere() && model.n == 2 {
        let k = lambda.max(0.0).floor() as usize;
        for k in [k.saturating_sub(1), k, k + 1] {
            if (-0.5..0.5).contains(&(sphere_frequency(2, k) - lambda)) {
                let pole = grid.nodes[0];
                out.push(zonal_field(model, k, &pole, grid.clone())?);
                out.push(highest_weight_field(model, k, grid.clone())?);
            }
        }
    } else if model.is_torus() {
        let m = lambda.round();
        if (-0.5..0.5).contains(&(m - lambda)) {
            let mut v = vec![0i64; model.n];
            v[0] = m as i64;
            out.push(torus_wave(model, &v, grid.clone())?);
        }
    }
    Ok(out)
}

/// Multipliers below this level are dropped from [`kernel_trial`]; the
/// dropped part carries well under 1% of the kernel's `L²` mass.
pub const KERNEL_TRIAL_TAIL: f64 = 1e-2;

/// Frequency band `[λ - S/r, λ + S/r]` outside which `ρ(r(λ - λ_j)) ≤`
/// [`KERNEL_TRIAL_TAIL`].
pub fn kernel_trial_band(spec: &WindowFilterSpec) -> Result<(f64, f64)> {
    let s = make_rho(spec.rho)?.tail_threshold(KERNEL_TRIAL_TAIL)?;
    Ok(((spec.lambda - s / spec.r).max(0.0), spec.lambda + s / spec.r))
}

/// Grid resolution for [`audit_operator_bound`]: three nodes per unit of the
/// highest frequency in the kernel band (`3k + 1` rows on the sphere).
pub fn operator_audit_resolution(model: &ManifoldModel, spec: &WindowFilterSpec) -> Result<usize> {
    let hi = kernel_trial_band(spec)?.1.ceil() as usize + 1;
    Ok(if model.is_sphere() { 3 * hi + 1 } else { 3 * hi })
}

/// The kernel `y ↦ K(x_0, y)` of `T_{λ,r}` at `x_0 =` the first grid node,
/// normalized in `L²`. For `p = ∞` it attains `‖T‖_{L²→L^∞}`.
pub fn kernel_trial(
    model: &ManifoldModel,
    grid: &Arc<QuadratureGrid>,
    spec: &WindowFilterSpec,
) -> Result<EigenfunctionField> {
    let rho = make_rho(spec.rho)?;
    let (lo, hi) = kernel_trial_band(spec)?;
    let x0 = grid.nodes[0];
    let (base, mut terms) = if model.is_sphere() && model.n == 2 {
        let k_hi = hi.ceil() as usize + 1;
        let base = zonal_field(model, k_hi, &x0, grid.clone())?;
        let terms: Vec<SpectralTerm> = (0..=k_hi)
            .map(|k| (k, sphere_frequency(2, k)))
            .filter(|&(_, f)| f >= lo && f <= hi)
            .map(|(k, f)| {
                let c = multiplier(&rho, spec, f) * (harmonic_dimension(2, k) / (4.0 * std::f64::consts::PI)).sqrt();
                SpectralTerm { frequency: f, mode: Mode::Zonal { n: 2, k, pole: x0 }, coefficient: Complex64::new(c, 0.0) }
            })
            .collect();
        (base, terms)
    } else if model.is_torus() {
        let modes = window_modes(model, lo, hi + 1e-9)?;
        let b = modes.iter().map(|m| match m {
            Mode::TorusWave { m } => m.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0),
            _ => 0,
        });
        let need = 2 * b.max().unwrap_or(0) as usize + 1;
        if grid.resolution < need {
            return Err(Error::resolution(format!("kernel trial needs torus resolution {need}")));
        }
        let base = torus_wave(model, &vec![0; model.n], grid.clone())?;
        let phase0: Vec<f64> = x0.coords().to_vec();
        let terms = modes
            .into_iter()
            .map(|mode| {
                let f = mode.frequency();
                let ph = match &mode {
                    Mode::TorusWave { m } => -m.iter().zip(&phase0).map(|(&a, &x)| a as f64 * x).sum::<f64>(),
                    _ => 0.0,
                };
                SpectralTerm { frequency: f, mode, coefficient: Complex64::from_polar(multiplier(&rho, spec, f), ph) }
            })
            .collect();
        (base, terms)
    } else {
        return Err(Error::unsupported("kernel trials need S^2 or a torus"));
    };
    let norm = terms.iter().map(|t| t.coefficient.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::EmptyWindow { lo, hi });
    }
    for t in &mut terms {
        t.coefficient /= norm;
    }
    Ok(base.with_expansion(SpectralExpansion { terms }, format!("kernel_l{}_r{}", spec.lambda, spec.r)))
}

/// Ratios `‖T_{λ,r} f‖_p / (r^{-1/2} λ^{σ(p)} ‖f‖_2)` over a trial set.
pub fn audit_operator_bound(
    model: &ManifoldModel,
    grid: &Arc<QuadratureGrid>,
    spec: &OperatorAuditSpec,
) -> Result<AuditReport> {
    if spec.trials < 20 {
        return Err(Error::param(format!("{} trials, need at least 20", spec.trials)));
    }
    let filter = WindowFilterSpec::new(spec.rho, spec.lambda, spec.r);
    filter.check(model)?;
    let mut trials: Vec<EigenfunctionField> = Vec::new();
    let lo = (spec.lambda - 0.5).max(0.0);
    for t in 0..spec.trials {
        trials.push(random_window_field(model, lo, 1.0, spec.seed.wrapping_add(t as u64), grid.clone())?);
    }
    for j in 1..=spec.offsets {
        for sign in [-1.0, 1.0] {
            let c = spec.lambda + sign * j as f64 / spec.r;
            if c - 0.5 < 0.0 {
                continue;
            }
            let seed = spec.seed.wrapping_add(1000 + 2 * j as u64 + (sign > 0.0) as u64);
            match random_window_field(model, c - 0.5, 1.0, seed, grid.clone()) {
                Ok(f) => trials.push(f),
                Err(Error::EmptyWindow { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if spec.extremals {
        trials.extend(extremals(model, grid, spec.lambda)?);
        if model.is_torus() || model.n == 2 {
            trials.push(kernel_trial(model, grid, &filter)?);
        }
    }
    let jobs: Vec<(&EigenfunctionField, Exponent)> =
        trials.iter().flat_map(|f| spec.exponents.iter().map(move |p| (f, *p))).collect();
    let filtered: Vec<EigenfunctionField> =
        trials.iter().map(|f| apply_filter(f, &filter)).collect::<Result<_>>()?;
    let points: Vec<AuditPoint> = jobs
        .iter()
        .map(|&(f, p)| {
            let i = trials.iter().position(|t| std::ptr::eq(t, f)).expect("trial");
            let tf = &filtered[i];
            let lhs = lp_norm(tf, p).value;
            let f2 = lp_norm(f, Exponent::Finite(2.0)).value;
            let rhs = spec.r.powf(-0.5) * spec.lambda.powf(sigma(model.n, p)?) * f2;
            Ok(AuditPoint::new(
                format!("{}|p={p}", f.id),
                &[("lambda", spec.lambda), ("r", spec.r), ("p_inv", p.reciprocal())],
                lhs,
                rhs,
            ))
        })
        .collect::<Result<_>>()?;
    let md = AuditMetadata {
        seed: Some(spec.seed),
        resolution: Some(grid.resolution),
        rho_kind: Some(spec.rho.name().to_string()),
        covering_constant: None,
    };
    Ok(AuditReport::new("operator_bound", points, md))
}

/// Ratios of `‖e‖_p` to the right side of the localized bound at each `r`:
/// `λ^{σ(p)} [sup_x r^{-p/(2(p-2))} ‖e‖_{L²(B_r(x))}]^{(p-2)/p}` for
/// `2 < p < ∞`, and `λ^{(n-1)/2} sup_x r^{-1/2} ‖e‖_{L²(B_r(x))}` for `p = ∞`.
pub fn audit_localized(field: &EigenfunctionField, r_values: &[f64], p: Exponent) -> Result<AuditReport> {
    if let Exponent::Finite(q) = p {
        if q <= 2.0 {
            return Err(Error::param("localized audit needs p > 2"));
        }
    }
    let lhs = lp_norm(field, p).value;
    let lam = field.lambda.max(1.0);
    let s = sigma(field.model.n, p)?;
    let rs: Vec<f64> = r_values.iter().copied().filter(|&r| in_range(field, r)).collect();
    let points: Vec<AuditPoint> = rs
        .par_iter()
        .map(|&r| {
            let m = sup_ball(field, r)?;
            let rhs = match p {
                Exponent::Infinity => lam.powf(s) * r.powf(-0.5) * m,
                Exponent::Finite(q) => lam.powf(s) * (r.powf(-q / (2.0 * (q - 2.0))) * m).powf((q - 2.0) / q),
            };
            Ok(AuditPoint::new(field.id.clone(), &[("lambda", field.lambda), ("r", r), ("p_inv", p.reciprocal())], lhs, rhs))
        })
        .collect::<Result<_>>()?;
    Ok(AuditReport::new("localized", points, metadata(&[field])))
}

/// Scale schedule `r(λ)` for the small-scale improvement audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum RSchedule {
    /// `r = λ^{-a}`.
    Power { a: f64 },
    /// `r` fixed.
    Constant { r: f64 },
}

impl RSchedule {
    pub fn at(&self, lambda: f64) -> f64 {
        match self {
            RSchedule::Power { a } => lambda.powf(-a),
            RSchedule::Constant { r } => *r,
        }
    }
}

/// Dyadic radii `inj/2, inj/4, ...` down to `1/λ`.
pub fn dyadic_radii(model: &ManifoldModel, lambda: f64) -> Vec<f64> {
    let lo = if lambda > 0.0 { 1.0 / lambda } else { model.inj / 64.0 };
    let mut r = model.inj / 2.0;
    let mut out = Vec::new();
    while r >= lo * (1.0 - 1e-12) {
        out.push(r);
        r /= 2.0;
    }
    out.reverse();
    out
}

/// Tolerance on the fitted ball-law exponent `n/2`.
pub const BALL_LAW_TOLERANCE: f64 = 0.1;

/// Given fields for which `sup_x ‖e‖_{L²(B_r(x))} ≲ r^{n/2}`, audit
/// `‖e‖_{p_c} ≤ C (r(λ) λ)^{σ(p_c)}`. Fields whose measured ball-law
/// exponent differs from `n/2` by more than [`BALL_LAW_TOLERANCE`] are
/// flagged and left out of the ratio table.
pub fn audit_small_scale(fields: &[EigenfunctionField], schedule: RSchedule) -> Result<AuditReport> {
    let mut points = Vec::new();
    let mut flags = Vec::new();
    let mut fits = Vec::new();
    for f in fields {
        let n = f.model.n;
        let radii = dyadic_radii(&f.model, f.lambda);
        let masses: Vec<(f64, f64)> = radii
            .par_iter()
            .map(|&r| Ok((r, sup_ball(f, r)?)))
            .collect::<Result<_>>()?;
        let fit = match fit_scaling(format!("ball_law:{}", f.id), &masses) {
            Ok(fit) => fit,
            Err(e) => {
                flags.push(format!("{}: ball law not measurable ({e})", f.id));
                continue;
            }
        };
        let beta = fit.exponent;
        fits.push(fit);
        if (beta - n as f64 / 2.0).abs() > BALL_LAW_TOLERANCE {
            flags.push(format!("{}: ball-law exponent {beta:.4} differs from n/2 = {}", f.id, n as f64 / 2.0));
            continue;
        }
        let pc = Exponent::Finite(critical_exponent(n));
        let lam = f.lambda.max(1.0);
        let r = schedule.at(lam).min(f.model.inj);
        let lhs = lp_norm(f, pc).value;
        let rhs = (r * lam).powf(sigma(n, pc)?);
        points.push(AuditPoint::new(f.id.clone(), &[("lambda", f.lambda), ("r", r), ("ball_law", beta)], lhs, rhs));
    }
    let refs: Vec<&EigenfunctionField> = fields.iter().collect();
    let mut report = AuditReport::new("small_scale", points, metadata(&refs));
    report.flags = flags;
    report.fits = fits;
    Ok(report)
}

/// `r^{-1/2} sup_x ‖e‖_{L²(B_r(x))}` for each field and admissible `r`
/// (the trivial bound, with `C = 1`).
pub fn audit_trivial_bound(fields: &[EigenfunctionField], r_values: &[f64]) -> Result<AuditReport> {
    let mut jobs = Vec::new();
    for f in fields {
        for &r in r_values {
            if in_range(f, r) {
                jobs.push((f, r));
            }
        }
    }
    let points: Vec<AuditPoint> = jobs
        .par_iter()
        .map(|&(f, r)| Ok(AuditPoint::new(f.id.clone(), &[("lambda", f.lambda), ("r", r)], sup_ball(f, r)?, r.sqrt())))
        .collect::<Result<_>>()?;
    let refs: Vec<&EigenfunctionField> = fields.iter().collect();
    Ok(AuditReport::new("trivial_bound", points, metadata(&refs)))
}

/// `‖e‖_{L²(B)} / (‖e‖_{L^p(B)} |B|^{1/2-1/p})` over fields, centers and radii.
pub fn audit_holder(
    fields: &[EigenfunctionField],
    centers: &[Point],
    r_values: &[f64],
    p: Exponent,
) -> Result<AuditReport> {
    let mut jobs = Vec::new();
    for f in fields {
        for (ci, c) in centers.iter().enumerate() {
            for &r in r_values {
                if r >= f.grid.spacing && r <= f.model.inj {
                    jobs.push((f, ci, *c, r));
                }
            }
        }
    }
    let points: Vec<AuditPoint> = jobs
        .par_iter()
        .map(|&(f, ci, c, r)| {
            let h = holder_check(f, &c, r, p)?;
            Ok(AuditPoint::new(f.id.clone(), &[("center", ci as f64), ("r", r)], h.l2, h.bound))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&EigenfunctionField> = fields.iter().collect();
    Ok(AuditReport::new("holder", points, metadata(&refs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn dyadic_radii_cover_range() {
        let m = ManifoldModel::sphere(2).unwrap();
        let r = dyadic_radii(&m, 64.0);
        assert_eq!(r.last().copied(), Some(PI / 2.0));
        assert!(r[0] >= 1.0 / 64.0 && r[0] < 2.0 / 64.0);
    }

    #[test]
    fn torus_localized_closed_form() {
        // constant modulus: ‖e‖_6 = (2π)^{-1} (4π²)^{1/6}, sup m = r/(2√π)
        let m = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&m, 64).unwrap());
        let e = torus_wave(&m, &[8, 0], g).unwrap();
        let rs = dyadic_radii(&m, 8.0);
        let rep = audit_localized(&e, &rs, Exponent::Finite(6.0)).unwrap();
        for p in &rep.points {
            let r = p.param("r").unwrap();
            let lhs = (2.0 * PI).powi(-1) * (4.0 * PI * PI).powf(1.0 / 6.0);
            let rhs = 8f64.powf(1.0 / 6.0) * r.powf(-0.5) * (r / (2.0 * PI.sqrt())).powf(2.0 / 3.0);
            // grid ball masses at large r carry lattice-boundary error
            assert!((p.ratio - lhs / rhs).abs() < 1e-2 * p.ratio, "{} vs {}", p.ratio, lhs / rhs);
        }
        // largest at the smallest scale, decreasing like (λr)^{-1/6}
        let first = rep.points.iter().min_by(|a, b| a.params["r"].total_cmp(&b.params["r"])).unwrap();
        assert!((first.ratio - rep.max_ratio).abs() < 1e-15);
    }

    #[test]
    fn improvement_flags_zonal_and_accepts_waves() {
        let t = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&t, 96).unwrap());
        let waves: Vec<_> = [16i64, 32].iter().map(|&m| torus_wave(&t, &[m, 0], g.clone()).unwrap()).collect();
        let rep = audit_small_scale(&waves, RSchedule::Power { a: 0.5 }).unwrap();
        assert!(rep.flags.is_empty(), "{:?}", rep.flags);
        assert_eq!(rep.points.len(), 2);
        for fit in &rep.fits {
            assert!((fit.exponent - 1.0).abs() < 2e-2, "{}", fit.exponent);
        }
        let s = ManifoldModel::sphere(2).unwrap();
        let gs = Arc::new(build_grid(&s, 80).unwrap());
        let z = zonal_field(&s, 32, &Point::north_pole(2), gs).unwrap();
        let rep = audit_small_scale(&[z], RSchedule::Power { a: 0.5 }).unwrap();
        assert!(rep.points.is_empty());
        assert_eq!(rep.flags.len(), 1);
        let rep = audit_small_scale(&waves, RSchedule::Constant { r: PI }).unwrap();
        assert!(rep.all_finite() && rep.max_ratio > 0.0);
    }

    #[test]
    fn operator_audit_zero_field_and_requirements() {
        let m = ManifoldModel::torus(2).unwrap();
        let g = Arc::new(build_grid(&m, 64).unwrap());
        let mut spec = OperatorAuditSpec::new(10.0, 0.5);
        spec.trials = 5;
        assert!(audit_operator_bound(&m, &g, &spec).is_err());
        spec.trials = 20;
        let rep = audit_operator_bound(&m, &g, &spec).unwrap();
        assert!(rep.all_finite());
        assert!(rep.points.len() >= 2 * 21);
        let e = torus_wave(&m, &[10, 0], g.clone()).unwrap();
        let zero = e.with_expansion(e.expansion.map_coefficients(|_| 0.0), "zero".into());
        let tf = apply_filter(&zero, &WindowFilterSpec::new(spec.rho, 10.0, 0.5)).unwrap();
        assert_eq!(AuditPoint::new("z", &[], lp_norm(&tf, Exponent::Finite(6.0)).value, 1.0).ratio, 0.0);
    }

    #[test]
    fn kernel_trial_attains_two_to_infinity_norm() {
        let m = ManifoldModel::torus(2).unwrap();
        let spec = WindowFilterSpec::new(RhoKind::default(), 6.0, 1.0);
        let g = Arc::new(build_grid(&m, operator_audit_resolution(&m, &spec).unwrap()).unwrap());
        let k = kernel_trial(&m, &g, &spec).unwrap();
        assert!((k.l2_norm_sq() - 1.0).abs() < 1e-10);
        let tk = apply_filter(&k, &spec).unwrap();
        let rho = make_rho(spec.rho).unwrap();
        let (lo, hi) = kernel_trial_band(&spec).unwrap();
        let s2: f64 = window_modes(&m, lo, hi + 1e-9)
            .unwrap()
            .iter()
            .map(|md| multiplier(&rho, &spec, md.frequency()).powi(2))
            .sum();
        let sup = lp_norm(&tk, Exponent::Infinity).value;
        assert!((sup - s2.sqrt() / (2.0 * PI)).abs() < 1e-9 * sup, "{sup}");
    }

    #[test]
    fn theorem_audit_finite() {
        let s = ManifoldModel::sphere(2).unwrap();
        let g = Arc::new(build_grid(&s, 64).unwrap());
        let fields = vec![
            zonal_field(&s, 20, &g.nodes[0], g.clone()).unwrap(),
            highest_weight_field(&s, 20, g.clone()).unwrap(),
        ];
        let rep = audit_critical_localized(&fields, &dyadic_radii(&s, fields[0].lambda)).unwrap();
        assert!(rep.all_finite());
        assert!(rep.max_ratio < 10.0 && rep.min_ratio > 0.05, "{} {}", rep.min_ratio, rep.max_ratio);
    }
}
