//! Acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use eigenloc::analysis::{
    audit_holder, audit_operator_bound, audit_critical_localized, fit_scaling, operator_audit_resolution,
    sup_ball, OperatorAuditSpec,
};
use eigenloc::covering::{build_covering, covering_chain_audit, BallCovering};
use eigenloc::geometry::{build_grid, ManifoldModel, Point, QuadratureGrid};
use eigenloc::harmonics::{
    highest_weight_field, random_window_field, sphere_frequency, torus_wave, zonal_field,
    EigenfunctionField,
};
use eigenloc::measures::{l2_ball_norm_with, lp_norm, qe_statistic, BallMethod, Exponent, Region};
use eigenloc::spectral_filter::{
    apply_filter, default_kmax, kernel_profile, make_rho, RhoKind, WindowFilterSpec,
};

const KS: [usize; 5] = [16, 32, 64, 128, 256];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sphere() -> ManifoldModel {
    ManifoldModel::sphere(2).unwrap()
}

fn torus() -> ManifoldModel {
    ManifoldModel::torus(2).unwrap()
}

/// Grid with resolution `3k + 1`; the zonal pole sits on its first node.
fn sphere_grid(k: usize) -> Arc<QuadratureGrid> {
    Arc::new(build_grid(&sphere(), 3 * k + 1).unwrap())
}

fn zonal(k: usize, g: &Arc<QuadratureGrid>) -> EigenfunctionField {
    zonal_field(&g.model, k, &g.nodes[0], g.clone()).unwrap()
}

fn highest(k: usize, g: &Arc<QuadratureGrid>) -> EigenfunctionField {
    highest_weight_field(&g.model, k, g.clone()).unwrap()
}

fn dyadic_down(top: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = top;
    while r >= floor * (1.0 - 1e-12) {
        out.push(r);
        r /= 2.0;
    }
    out
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

fn exponent_table() -> Outcome {
    let mut z_inf = Vec::new();
    let mut z6 = Vec::new();
    let mut q4 = Vec::new();
    let mut q6 = Vec::new();
    for k in KS {
        let g = sphere_grid(k);
        let z = zonal(k, &g);
        let q = highest(k, &g);
        z_inf.push((z.lambda, lp_norm(&z, Exponent::Infinity).value));
        z6.push((z.lambda, lp_norm(&z, Exponent::Finite(6.0)).value));
        q4.push((q.lambda, lp_norm(&q, Exponent::Finite(4.0)).value));
        q6.push((q.lambda, lp_norm(&q, Exponent::Finite(6.0)).value));
    }
    let rows = [
        ("Z inf", z_inf, 0.5),
        ("Z 6", z6, 1.0 / 6.0),
        ("Q 4", q4, 0.125),
        ("Q 6", q6, 1.0 / 6.0),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, pts, target) in rows {
        let fit = fit_scaling(name, &pts).map_err(|e| e.to_string())?;
        ok &= (fit.exponent - target).abs() <= 0.05;
        detail.push(format!("{name}: {:.4} (target {target:.4})", fit.exponent));
    }
    check(ok, detail.join(", "))
}

fn zonal_ball_law() -> Outcome {
    let k = 128;
    let g = sphere_grid(k);
    let z = zonal(k, &g);
    let radii = dyadic_down(FRAC_PI_4, 1.0 / z.lambda);
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| l2_ball_norm_with(&z, &g.nodes[0], r, BallMethod::Polar).unwrap().value / r.sqrt())
        .collect();
    let s = spread(&ratios);
    check(s <= 4.0, format!("{} radii, max/min = {s:.4}", radii.len()))
}

fn highest_weight_small_balls() -> Outcome {
    let mut pts = Vec::new();
    let mut plateau = Vec::new();
    for k in KS {
        let g = sphere_grid(k);
        let q = highest(k, &g);
        let r = 1.0 / q.lambda;
        pts.push((r, sup_ball(&q, r).map_err(|e| e.to_string())? / r.sqrt()));
        let eq = Point::sphere(2, FRAC_PI_2, 0.0).unwrap();
        let ratios: Vec<f64> = dyadic_down(FRAC_PI_2, q.lambda.powf(-0.5))
            .iter()
            .map(|&r| l2_ball_norm_with(&q, &eq, r, BallMethod::Polar).unwrap().value / r.sqrt())
            .collect();
        plateau.push(spread(&ratios));
    }
    let fit = fit_scaling("Q r=1/lambda", &pts).map_err(|e| e.to_string())?;
    let worst = plateau.iter().cloned().fold(0.0, f64::max);
    check(
        (fit.exponent - 0.25).abs() <= 0.07 && worst <= 4.0,
        format!("slope {:.4} (target 0.25), plateau max/min {worst:.4}", fit.exponent),
    )
}

fn filter_identity() -> Outcome {
    let s2 = sphere();
    let t2 = torus();
    let gs = Arc::new(build_grid(&s2, 97).unwrap());
    let gt = Arc::new(build_grid(&t2, 64).unwrap());
    let fields: Vec<(EigenfunctionField, f64)> = vec![
        (zonal(8, &gs), 0.5),
        (zonal(16, &gs), 0.25),
        (zonal(32, &gs), 1.0),
        (highest(24, &gs), 0.1),
        (highest(32, &gs), PI),
        (zonal_field(&s2, 20, &Point::sphere(2, 1.0, 0.5).unwrap(), gs.clone()).unwrap(), 0.3),
        (torus_wave(&t2, &[3, 4], gt.clone()).unwrap(), 0.5),
        (torus_wave(&t2, &[10, 0], gt.clone()).unwrap(), 0.1),
        (torus_wave(&t2, &[-7, 2], gt.clone()).unwrap(), PI),
        (torus_wave(&t2, &[12, -9], gt.clone()).unwrap(), 1.0),
    ];
    let rho = make_rho(RhoKind::default()).unwrap();
    let mut worst = 0.0f64;
    for (f, r) in &fields {
        let spec = WindowFilterSpec::new(RhoKind::default(), f.lambda, *r);
        let tf = apply_filter(f, &spec).map_err(|e| e.to_string())?;
        let factor = 1.0 + rho.eval(2.0 * r * f.lambda);
        for (a, b) in tf.samples.iter().zip(&f.samples) {
            let want = b * factor;
            if want.norm() > 1e-8 {
                worst = worst.max((a - want).norm() / want.norm());
            }
        }
    }
    check(worst <= 1e-10, format!("{} pairs, max relative error {worst:.3e}", fields.len()))
}

fn huygens_support() -> Outcome {
    let m = sphere();
    let mut ok = true;
    let mut detail = Vec::new();
    for (lambda, r) in [(16.0, 0.125), (32.0, 0.25), (64.0, 0.5)] {
        let spec = WindowFilterSpec::new(RhoKind::default(), lambda, r);
        let kmax = default_kmax(&m, &spec).map_err(|e| e.to_string())?;
        let d: Vec<f64> = (0..=2000).map(|i| 1.2 * r + (PI - 1.2 * r) * i as f64 / 2000.0).collect();
        let prof = kernel_profile(&m, &spec, &d, kmax).map_err(|e| e.to_string())?;
        let k0 = kernel_profile(&m, &spec, &[0.0], kmax).map_err(|e| e.to_string())?[0];
        let tail = prof.iter().map(|v| v.abs()).fold(0.0, f64::max) / k0;
        ok &= tail <= 1e-3;
        detail.push(format!("lambda r = {}: {tail:.2e}", lambda * r));
    }
    check(ok, detail.join(", "))
}

fn operator_bound() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let cases: [(ManifoldModel, f64, f64); 2] = [(torus(), 16.0, 0.5), (sphere(), 8.0, 0.5)];
    for (model, lambda, r) in cases {
        let mut maxes = Vec::new();
        for l in [lambda, 2.0 * lambda] {
            let spec = OperatorAuditSpec::new(l, r);
            let res = operator_audit_resolution(&model, &WindowFilterSpec::new(spec.rho, l, r)).unwrap();
            let grid = Arc::new(build_grid(&model, res).unwrap());
            let rep = audit_operator_bound(&model, &grid, &spec).map_err(|e| e.to_string())?;
            let trials = rep.points.iter().filter(|p| p.label.starts_with("window")).count() / 2;
            ok &= trials >= 20 && rep.all_finite();
            maxes.push(rep.max_ratio);
        }
        let change = (maxes[1] / maxes[0] - 1.0).abs();
        ok &= maxes[0].is_finite() && change < 0.1;
        detail.push(format!(
            "{:?} lambda {lambda}->{}: max {:.4} -> {:.4} ({:.1}%)",
            model.kind,
            2.0 * lambda,
            maxes[0],
            maxes[1],
            100.0 * change
        ));
    }
    check(ok, detail.join("; "))
}

fn theorem_audit() -> Outcome {
    let mut fields = Vec::new();
    for k in KS {
        let g = sphere_grid(k);
        fields.push(zonal(k, &g));
        fields.push(highest(k, &g));
    }
    let gw = Arc::new(build_grid(&sphere(), 64).unwrap());
    for (l, seed) in [(8.0, 1), (16.0, 2)] {
        fields.push(random_window_field(&sphere(), l, 1.0, seed, gw.clone()).unwrap());
    }
    let lam_max = sphere_frequency(2, 256);
    let radii = dyadic_down(FRAC_PI_2, 1.0 / lam_max);
    let rep = audit_critical_localized(&fields, &radii).map_err(|e| e.to_string())?;
    let q_sharp: Vec<f64> = fields
        .iter()
        .filter(|f| f.id.starts_with("hw_"))
        .map(|q| {
            let r = 1.0 / q.lambda;
            let single = audit_critical_localized(std::slice::from_ref(q), &[r]).unwrap();
            single.points[0].ratio
        })
        .collect();
    let (lo, hi) = (
        q_sharp.iter().cloned().fold(f64::MAX, f64::min),
        q_sharp.iter().cloned().fold(0.0, f64::max),
    );
    check(
        rep.all_finite() && rep.max_ratio.is_finite() && lo >= 0.05 && hi <= 20.0,
        format!(
            "{} points, max ratio {:.4}; Q at r = 1/lambda in [{lo:.4}, {hi:.4}]",
            rep.points.len(),
            rep.max_ratio
        ),
    )
}

fn covering_sweep(model: &ManifoldModel, grid: &QuadratureGrid, radii: &[f64]) -> Result<Vec<BallCovering>, String> {
    radii.iter().map(|&r| build_covering(model, r, grid).map_err(|e| e.to_string())).collect()
}

fn covering_constants() -> Outcome {
    let s2 = sphere();
    let t2 = torus();
    let gs = Arc::new(build_grid(&s2, 256).unwrap());
    let gt = Arc::new(build_grid(&t2, 256).unwrap());
    let sweeps = [
        (covering_sweep(&s2, &gs, &[0.8, 0.4, 0.2, 0.1])?, gs.clone()),
        (covering_sweep(&t2, &gt, &[2.0 * PI / 8.0, 2.0 * PI / 16.0, 2.0 * PI / 32.0])?, gt.clone()),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (covs, grid) in &sweeps {
        ok &= covs.iter().all(|c| c.min_cover >= 1);
        let a: Vec<u32> = covs.iter().map(|c| c.overlap).collect();
        let (amin, amax) = (*a.iter().min().unwrap(), *a.iter().max().unwrap());
        ok &= amax - amin <= 2 && covs.windows(2).all(|w| (w[0].overlap as i64 - w[1].overlap as i64).abs() <= 1);
        let ratios: Vec<f64> = covs.windows(2).map(|w| w[1].count as f64 / w[0].count as f64).collect();
        ok &= ratios.iter().all(|q| (q / 4.0 - 1.0).abs() <= 0.25);
        let fields: Vec<EigenfunctionField> = if grid.model.is_sphere() {
            vec![zonal(40, grid), highest(40, grid)]
        } else {
            vec![
                torus_wave(&grid.model, &[5, 3], grid.clone()).unwrap(),
                random_window_field(&grid.model, 12.0, 1.0, 3, grid.clone()).unwrap(),
            ]
        };
        let mut flags = 0;
        for c in covs {
            for f in &fields {
                let rep = covering_chain_audit(f, c, Exponent::Finite(6.0)).map_err(|e| e.to_string())?;
                flags += rep.flags.len();
            }
        }
        ok &= flags == 0;
        detail.push(format!(
            "{:?}: A = {a:?}, N ratios {:?}, chain violations {flags}",
            grid.model.kind,
            ratios.iter().map(|q| (q * 100.0).round() / 100.0).collect::<Vec<_>>()
        ));
    }
    check(ok, detail.join("; "))
}

fn qe_statistic_check() -> Outcome {
    let t2 = torus();
    let gt = Arc::new(build_grid(&t2, 128).unwrap());
    let regions = vec![
        Region::Ball { center: Point::torus(&[0.0, 0.0]).unwrap(), radius: 0.3 },
        Region::Ball { center: Point::torus(&[1.0, 2.0]).unwrap(), radius: 1.5 },
        Region::Rectangle { lo: vec![0.3, 0.3], hi: vec![2.1, 4.0] },
        Region::Rectangle { lo: vec![5.0, 0.0], hi: vec![6.0, 1.0] },
    ];
    let mut worst = 0.0f64;
    for m in [[1i64, 0], [4, -3], [7, 7], [20, 1]] {
        let e = torus_wave(&t2, &m, gt.clone()).unwrap();
        for reg in &regions {
            worst = worst.max(qe_statistic(&e, reg).map_err(|e| e.to_string())?.statistic);
        }
    }
    let k = 128;
    let g = sphere_grid(k);
    let z = zonal(k, &g);
    let cap = Region::Ball { center: g.nodes[0], radius: z.lambda.powf(-0.5) };
    let q = qe_statistic(&z, &cap).map_err(|e| e.to_string())?;
    let share = q.volume / g.total_weight();
    check(
        worst <= 1e-6 && q.statistic > 10.0 * share,
        format!("torus max {worst:.2e}; zonal cap {:.4} vs 10|Omega|/|M| = {:.4}", q.statistic, 10.0 * share),
    )
}

fn holder_consistency() -> Outcome {
    let s2 = sphere();
    let t2 = torus();
    let gs = sphere_grid(64);
    let gt = Arc::new(build_grid(&t2, 128).unwrap());
    let sphere_fields = vec![
        zonal(64, &gs),
        highest(64, &gs),
        random_window_field(&s2, 12.0, 1.0, 5, gs.clone()).unwrap(),
    ];
    let torus_fields = vec![
        torus_wave(&t2, &[5, -2], gt.clone()).unwrap(),
        random_window_field(&t2, 15.0, 1.0, 6, gt.clone()).unwrap(),
    ];
    let sc = vec![gs.nodes[0], Point::sphere(2, FRAC_PI_2, 0.0).unwrap(), Point::sphere(2, 1.0, 0.5).unwrap()];
    let tc = vec![Point::torus(&[0.0, 0.0]).unwrap(), Point::torus(&[2.0, 5.0]).unwrap()];
    let radii = [0.1, 0.2, 0.4, 0.8, 1.6, PI];
    let ps = [Exponent::Finite(3.0), Exponent::Finite(4.0), Exponent::Finite(6.0), Exponent::Finite(10.0), Exponent::Infinity];
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in ps {
        for (fields, centers) in [(&sphere_fields, &sc), (&torus_fields, &tc)] {
            let rep = audit_holder(fields, centers, &radii, p).map_err(|e| e.to_string())?;
            count += rep.points.len();
            worst = worst.max(rep.max_ratio);
        }
    }
    check(worst <= 1.01, format!("{count} measurements, max L2/bound {worst:.6}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exponent table", exponent_table),
        ("zonal ball-law saturation", zonal_ball_law),
        ("highest-weight small balls", highest_weight_small_balls),
        ("filter identity", filter_identity),
        ("Huygens support", huygens_support),
        ("operator-bound audit", operator_bound),
        ("localized bound audit", theorem_audit),
        ("covering constants", covering_constants),
        ("QE statistic", qe_statistic_check),
        ("Holder consistency", holder_consistency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS criterion {:>2} ({name}): {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {d} [{secs:.1}s]", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
