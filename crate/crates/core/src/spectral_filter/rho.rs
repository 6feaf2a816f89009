use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::gauss_gegenbauer;

/// Window profile `ρ` with `ρ ≥ 0`, `ρ(0) = 1` and `supp ρ̂ ⊆ [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoKind {
    /// `ρ = |φ̂|²/φ̂(0)²` for `φ(x) = exp(-a/(1-(x/h)²))` on `|x| < h ≤ 1/2`.
    SmoothBump { sharpness: f64, half_width: f64 },
    /// `ρ(s) = (sin(s/2)/(s/2))²`, `ρ̂(t) = 2π(1-|t|)_+`.
    Fejer,
}

impl Default for RhoKind {
    fn default() -> Self {
        RhoKind::SmoothBump { sharpness: 1.0, half_width: 0.5 }
    }
}

impl RhoKind {
    pub fn name(&self) -> &'static str {
        match self {
            RhoKind::SmoothBump { .. } => "smooth_bump",
            RhoKind::Fejer => "fejer",
        }
    }
}

const PER_UNIT: usize = 64;
const TABLE_END: usize = 512;
const TABLE_NODES: usize = 512;
const PANEL_NODES: usize = 64;

fn rule(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let mut map = RULES.get_or_init(Default::default).lock().expect("rule cache poisoned");
    map.entry(n).or_insert_with(|| Arc::new(gauss_gegenbauer(n, 0.0))).clone()
}

fn bump(a: f64, h: f64, x: f64) -> f64 {
    let u = x / h;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-a / (1.0 - u * u)).exp()
    }
}

/// `φ̂(s)` and `φ̂'(s)` on a fine table, Hermite-cubic in between.
#[derive(Debug)]
struct BumpTable {
    sharpness: f64,
    half_width: f64,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl BumpTable {
    fn build(a: f64, h: f64) -> Self {
        let g = rule(TABLE_NODES);
        let (xs, wphi): (Vec<f64>, Vec<f64>) = g
            .0
            .iter()
            .zip(&g.1)
            .map(|(t, w)| {
                let x = 0.5 * h * (t + 1.0);
                (x, 0.5 * h * w * bump(a, h, x))
            })
            .unzip();
        let count = TABLE_END * PER_UNIT + 1;
        let (value, slope): (Vec<f64>, Vec<f64>) = (0..count)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 / PER_UNIT as f64;
                let mut v = 0.0;
                let mut d = 0.0;
                for (x, wp) in xs.iter().zip(&wphi) {
                    let (sn, cs) = (s * x).sin_cos();
                    v += wp * cs;
                    d -= wp * x * sn;
                }
                (2.0 * v, 2.0 * d)
            })
            .unzip();
        Self { sharpness: a, half_width: h, value, slope }
    }

    fn cached(a: f64, h: f64) -> Arc<Self> {
        static TABLES: OnceLock<Mutex<HashMap<(u64, u64), Arc<BumpTable>>>> = OnceLock::new();
        let mut map = TABLES.get_or_init(Default::default).lock().expect("table cache poisoned");
        map.entry((a.to_bits(), h.to_bits())).or_insert_with(|| Arc::new(Self::build(a, h))).clone()
    }

    /// Composite Gauss–Legendre beyond the table.
    fn direct(&self, s: f64) -> f64 {
        let (a, h) = (self.sharpness, self.half_width);
        let panels = ((s * h / 32.0).ceil() as usize).max(8);
        let g = rule(PANEL_NODES);
        let mut acc = 0.0;
        for p in 0..panels {
            let lo = h * p as f64 / panels as f64;
            let half = 0.5 * h / panels as f64;
            for (t, w) in g.0.iter().zip(&g.1) {
                let x = lo + half * (t + 1.0);
                acc += half * w * bump(a, h, x) * (s * x).cos();
            }
        }
        2.0 * acc
    }

    fn phi_hat(&self, s: f64) -> f64 {
        let s = s.abs();
        let pos = s * PER_UNIT as f64;
        let i = pos.floor() as usize;
        if i + 1 >= self.value.len() {
            return self.direct(s);
        }
        let u = pos - i as f64;
        let dx = 1.0 / PER_UNIT as f64;
        let (y0, y1) = (self.value[i], self.value[i + 1]);
        let (m0, m1) = (self.slope[i] * dx, self.slope[i + 1] * dx);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (3.0 * u2 - 2.0 * u3) * y1 + (u3 - u2) * m1
    }

    fn autocorrelation(&self, t: f64) -> f64 {
        let (a, h) = (self.sharpness, self.half_width);
        let t = t.abs();
        if t >= 2.0 * h {
            return 0.0;
        }
        // ∫ φ(x) φ(t - x) dx over the overlap [t - h, h]
        let (lo, hi) = (t - h, h);
        let panels = 8;
        let g = rule(PANEL_NODES);
        let mut acc = 0.0;
        for p in 0..panels {
            let pa = lo + (hi - lo) * p as f64 / panels as f64;
            let half = 0.5 * (hi - lo) / panels as f64;
            for (x, w) in g.0.iter().zip(&g.1) {
                let y = pa + half * (x + 1.0);
                acc += half * w * bump(a, h, y) * bump(a, h, t - y);
            }
        }
        acc
    }
}

/// Evaluator for `ρ` and `ρ̂`.
#[derive(Debug, Clone)]
pub struct Rho {
    kind: RhoKind,
    table: Option<Arc<BumpTable>>,
    norm: f64,
}

/// Validate shape parameters and build (or fetch) the cached evaluator.
pub fn make_rho(kind: RhoKind) -> Result<Rho> {
    match kind {
        RhoKind::Fejer => Ok(Rho { kind, table: None, norm: 1.0 }),
        RhoKind::SmoothBump { sharpness, half_width } => {
            if !(half_width > 0.0) || half_width > 0.5 {
                return Err(Error::param(format!("bump half width {half_width} not in (0, 1/2]")));
            }
            if !(sharpness > 0.0 && sharpness <= 50.0) {
                return Err(Error::param(format!("bump sharpness {sharpness} not in (0, 50]")));
            }
            let table = BumpTable::cached(sharpness, half_width);
            let norm = table.value[0];
            Ok(Rho { kind, table: Some(table), norm })
        }
    }
}

impl Rho {
    pub fn kind(&self) -> RhoKind {
        self.kind
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.table {
            None => {
                let h = 0.5 * s;
                if h.abs() < 1e-8 {
                    1.0 - h * h / 3.0
                } else {
                    (h.sin() / h).powi(2)
                }
            }
            Some(t) => (t.phi_hat(s) / self.norm).powi(2),
        }
    }

    /// `ρ̂(t) = ∫ ρ(s) e^{-ist} ds` in closed form.
    pub fn hat(&self, t: f64) -> f64 {
        match &self.table {
            None => 2.0 * PI * (1.0 - t.abs()).max(0.0),
            Some(tab) => 2.0 * PI * tab.autocorrelation(t) / (self.norm * self.norm),
        }
    }

    /// `ρ̂(t)` by trapezoidal quadrature of the sampled `ρ` on `[-s_max, s_max]`.
    pub fn hat_numeric(&self, t: f64, s_max: f64) -> f64 {
        let step = 1.0 / PER_UNIT as f64;
        let count = (s_max / step).round() as usize;
        // ρ is even, so ∫ ρ(s) cos(st) ds
        let inner: f64 = (1..count).map(|i| {
            let s = i as f64 * step;
            self.eval(s) * (s * t).cos()
        }).sum();
        let end = self.eval(count as f64 * step) * (count as f64 * step * t).cos();
        step * (self.eval(0.0) + 2.0 * inner + end)
    }

    /// Smallest `S` on a `1/64` lattice with `ρ(s) ≤ eps` for all sampled
    /// `s ≥ S` up to the table end (closed-form envelope for Fejér).
    pub fn tail_threshold(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::param("tail tolerance must be positive"));
        }
        match &self.table {
            None => Ok(2.0 / eps.sqrt()),
            Some(t) => {
                let limit = eps.sqrt() * self.norm;
                let last = t.value.len() - 1;
                if t.value[last].abs() > limit {
                    return Err(Error::param(format!("ρ tail above {eps} at the table end")));
                }
                let mut i = last;
                while i > 0 && t.value[i - 1].abs() <= limit {
                    i -= 1;
                }
                Ok(i as f64 / PER_UNIT as f64)
            }
        }
    }
}
