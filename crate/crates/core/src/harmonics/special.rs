//! Gegenbauer/Legendre kernels and normalized associated Legendre functions.

use crate::error::{Error, Result};
use crate::geometry::sphere_area;

/// `C_k^{(α)}(t) / C_k^{(α)}(1)` with `α = (n-1)/2`, by the normalized
/// three-term recurrence
///
/// ```text
/// G_k = (2(k+α-1)/(k+2α-1)) t G_{k-1} - ((k-1)/(k+2α-1)) G_{k-2}
/// ```
///
/// which keeps every iterate in `[-1, 1]`. For `n = 2` this is `P_k(t)`.
pub fn legendre_like_eval(n: usize, k: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param(format!("dimension {n} < 2")));
    }
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::param(format!("argument {t} outside [-1, 1]")));
    }
    Ok(gegenbauer_normalized(n, k, t.clamp(-1.0, 1.0)))
}

/// Unchecked kernel evaluation; `t` must lie in `[-1, 1]`.
pub(crate) fn gegenbauer_normalized(n: usize, k: usize, t: f64) -> f64 {
    let mut it = GegenbauerIter::new(n, t);
    let mut v = 1.0;
    for _ in 0..=k {
        v = it.next_value();
    }
    v
}

/// Streams `G_0(t), G_1(t), ...` for a fixed argument.
pub(crate) struct GegenbauerIter {
    two_alpha: f64,
    t: f64,
    k: usize,
    prev: f64,
    cur: f64,
}

impl GegenbauerIter {
    pub fn new(n: usize, t: f64) -> Self {
        Self { two_alpha: n as f64 - 1.0, t, k: 0, prev: 0.0, cur: 0.0 }
    }

    pub fn next_value(&mut self) -> f64 {
        let v = match self.k {
            0 => 1.0,
            1 => self.t,
            k => {
                let k = k as f64;
                let a = (2.0 * k + self.two_alpha - 2.0) / (k + self.two_alpha - 1.0);
                let b = (k - 1.0) / (k + self.two_alpha - 1.0);
                a.mul_add(self.t * self.cur, -b * self.prev)
            }
        };
        self.prev = self.cur;
        self.cur = v;
        self.k += 1;
        v
    }
}

/// Dimension `d_k` of degree-`k` spherical harmonics on `S^n`:
/// `C(k+n, n) - C(k+n-2, n)`.
pub fn harmonic_dimension(n: usize, k: usize) -> f64 {
    fn binom(top: i64, bottom: i64) -> f64 {
        if top < bottom || bottom < 0 {
            return 0.0;
        }
        let mut r = 1.0;
        for i in 0..bottom {
            r = r * (top - i) as f64 / (i + 1) as f64;
        }
        r
    }
    let (n, k) = (n as i64, k as i64);
    (binom(k + n, n) - binom(k + n - 2, n)).round()
}

/// Eigenvalue of `√(-Δ)` for degree `k` on `S^n`: `√(k(k+n-1))`.
pub fn sphere_frequency(n: usize, k: usize) -> f64 {
    ((k * (k + n - 1)) as f64).sqrt()
}

/// Peak value `√(d_k/|S^n|)` of the normalized zonal function.
pub fn zonal_peak(n: usize, k: usize) -> f64 {
    (harmonic_dimension(n, k) / sphere_area(n)).sqrt()
}

/// Fully normalized `P̄_k^m(cos θ)` for `m = 0..=k`, such that
/// `P̄_k^m(cos θ) e^{imφ}` is orthonormal on `S^2` for `|m| ≤ k`.
///
/// Column recurrence: `P̄_m^m` from the sectoral seed, then upward in degree
/// with the standard normalized coefficients. Sectoral terms underflow to 0
/// near the poles, which is their correct limit.
pub fn normalized_assoc_legendre(k: usize, cos_t: f64, sin_t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(k + 1, 0.0);
    let mut pmm = (0.25 / std::f64::consts::PI).sqrt();
    for m in 0..=k {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
        }
        if m == k {
            out[m] = pmm;
            break;
        }
        // degree m+1
        let mut p_prev = pmm;
        let mut p = (2.0 * m as f64 + 3.0).sqrt() * cos_t * pmm;
        for l in (m + 2)..=k {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (cos_t * p - b * p_prev);
            p_prev = p;
            p = next;
        }
        out[m] = p;
        if pmm == 0.0 {
            // all higher orders underflow as well
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Legendre by the textbook unnormalized recurrence, the independent oracle.
    fn legendre_oracle(k: usize, t: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, t);
        if k == 0 {
            return 1.0;
        }
        for j in 1..k {
            let p2 = ((2 * j + 1) as f64 * t * p1 - j as f64 * p0) / (j + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn normalized_at_one() {
        for n in 2..7 {
            for k in [0, 1, 5, 40, 300] {
                assert!((legendre_like_eval(n, k, 1.0).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn legendre_values() {
        assert!((legendre_like_eval(2, 2, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((legendre_like_eval(2, 3, 0.5).unwrap() + 0.4375).abs() < 1e-15);
        for k in [7, 64, 255] {
            for t in [-0.93, -0.2, 0.31, 0.999] {
                let a = legendre_like_eval(2, k, t).unwrap();
                assert!((a - legendre_oracle(k, t)).abs() < 1e-12, "k {k} t {t}");
            }
        }
    }

    #[test]
    fn gegenbauer_n3_is_chebyshev_u_ratio() {
        // α = 1: C_k^1 = U_k, U_k(cos θ) = sin((k+1)θ)/sin θ, U_k(1) = k+1
        for k in [0, 3, 17, 128] {
            let th: f64 = 0.731;
            let expect = ((k + 1) as f64 * th).sin() / th.sin() / (k + 1) as f64;
            assert!((legendre_like_eval(3, k, th.cos()).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_argument() {
        assert!(legendre_like_eval(2, 3, 1.5).is_err());
        assert!(legendre_like_eval(1, 3, 0.5).is_err());
    }

    #[test]
    fn harmonic_dimensions() {
        for k in 0..20 {
            assert_eq!(harmonic_dimension(2, k), (2 * k + 1) as f64);
            assert_eq!(harmonic_dimension(3, k), ((k + 1) * (k + 1)) as f64);
        }
        assert_eq!(harmonic_dimension(4, 2), 14.0);
    }

    #[test]
    fn assoc_legendre_orthonormal_in_theta() {
        // ∫ |P̄_k^m|² 2π dt = 1 and orthogonality across degrees for the same m.
        let (t, w) = crate::geometry::gauss_gegenbauer(80, 0.0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &(k1, k2) in &[(10usize, 10usize), (10, 12), (40, 40), (63, 61)] {
            for m in [0usize, 1, 5, 10] {
                let mut s = 0.0;
                for (x, wi) in t.iter().zip(&w) {
                    let st = (1.0 - x * x).sqrt();
                    normalized_assoc_legendre(k1, *x, st, &mut a);
                    normalized_assoc_legendre(k2, *x, st, &mut b);
                    s += wi * a[m] * b[m] * 2.0 * std::f64::consts::PI;
                }
                let expect = if k1 == k2 { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-11, "k {k1},{k2} m {m}: {s}");
            }
        }
    }

    #[test]
    fn assoc_legendre_m0_matches_zonal() {
        let mut a = Vec::new();
        for k in [0, 1, 2, 9, 50] {
            let x: f64 = 0.37;
            normalized_assoc_legendre(k, x, (1.0 - x * x).sqrt(), &mut a);
            let expect = ((2 * k + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt() * legendre_oracle(k, x);
            assert!((a[0] - expect).abs() < 1e-12);
        }
    }
}
