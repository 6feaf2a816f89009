//! Gauss rules for the weight `(1 - t²)^α` on `[-1, 1]`.
//!
//! `α = 0` is Gauss–Legendre; `α = (n-2)/2` integrates zonal functions on
//! `S^n` in the variable `t = cos θ`. Nodes are the zeros of the orthonormal
//! Gegenbauer polynomial of degree `N`, found by Newton iteration on the
//! three-term recurrence; weights follow from the Christoffel–Darboux
//! identity `w_i = 1 / (√β_N p_{N-1}(t_i) p_N'(t_i))`.

use std::f64::consts::PI;

/// Monic recurrence coefficient `β_j` for the weight `(1-t²)^α`.
fn beta(j: usize, alpha: f64) -> f64 {
    let j = j as f64;
    let g = alpha + 0.5;
    j * (j + 2.0 * g - 1.0) / (4.0 * (j + g) * (j + g - 1.0))
}

/// `μ_0 = ∫_{-1}^{1} (1-t²)^α dt`.
fn mass(alpha: f64) -> f64 {
    // ∫ (1-t²)^α = √π Γ(α+1)/Γ(α+3/2); α is a multiple of 1/2 here, so
    // walk the Γ ratio down to α ∈ {0, 1/2} where μ_0 is 2 or π/2.
    let twice = (2.0 * alpha).round();
    if (twice - 2.0 * alpha).abs() < 1e-12 && twice >= 0.0 {
        let mut a = twice as i64;
        let mut scale = 1.0;
        while a >= 2 {
            // μ(α) = μ(α-1) · 2α/(2α+1)
            let al = a as f64 / 2.0;
            scale *= 2.0 * al / (2.0 * al + 1.0);
            a -= 2;
        }
        let base = if a == 0 { 2.0 } else { PI / 2.0 };
        return base * scale;
    }
    // Generic α: composite Simpson in θ (smooth integrand sin^{2α+1}).
    let m = 20_000;
    let h = PI / m as f64;
    let f = |th: f64| th.sin().powf(2.0 * alpha + 1.0);
    let mut acc = f(0.0) + f(PI);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Orthonormal `p_N(t)`, `p_N'(t)` and `p_{N-1}(t)`.
fn eval(n: usize, alpha: f64, inv_sqrt_mu: f64, t: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = inv_sqrt_mu;
    let mut dp = 0.0;
    let mut sb_prev = 0.0;
    for j in 0..n {
        let sb = beta(j + 1, alpha).sqrt();
        let p_next = (t * p - sb_prev * p_prev) / sb;
        let dp_next = (p + t * dp - sb_prev * dp_prev) / sb;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
        sb_prev = sb;
    }
    (p, dp, p_prev)
}

/// Nodes ascending in `t` and matching weights; `Σ w = μ_0`.
pub fn gauss_gegenbauer(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    let mu = mass(alpha);
    let inv = 1.0 / mu.sqrt();
    let sb_n = beta(n, alpha).sqrt();
    let half = n.div_ceil(2);
    let mut pos: Vec<(f64, f64)> = Vec::with_capacity(half);

    for i in 0..half {
        // Largest roots first. Asymptotic guess for the Gegenbauer zeros,
        // then plain Newton; deflate against roots already found so that a
        // poor guess cannot land on a previous zero.
        let theta = PI * (i as f64 + 0.75 + 0.5 * alpha) / (n as f64 + alpha + 0.5);
        let mut t = if n % 2 == 1 && i == half - 1 { 0.0 } else { theta.cos() };
        for _ in 0..100 {
            let (p, dp, _) = eval(n, alpha, inv, t);
            let defl: f64 = pos.iter().map(|&(r, _)| 1.0 / (t - r) + 1.0 / (t + r)).sum();
            let step = p / (dp - p * defl);
            t -= step;
            if step.abs() <= 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        let (_, dp, pm1) = eval(n, alpha, inv, t);
        let w = 1.0 / (sb_n * pm1 * dp);
        pos.push((t, w));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(t, w) in &pos {
        nodes.push(-t);
        weights.push(w);
    }
    let mirror_start = if n % 2 == 1 { half - 1 } else { half };
    for &(t, w) in pos[..mirror_start].iter().rev() {
        nodes.push(t);
        weights.push(w);
    }
    if n % 2 == 1 {
        // The middle root was pushed as -0.0 above; keep it exact.
        nodes[half - 1] = 0.0;
    }
    (nodes, weights)
}
