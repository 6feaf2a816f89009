use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::scaling::ScalingFit;

/// One audited inequality instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs` (zero when both vanish).
    pub ratio: f64,
}

impl AuditPoint {
    pub fn new(label: impl Into<String>, params: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self {
            label: label.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            ratio,
        }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditMetadata {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub rho_kind: Option<String>,
    /// Measured doubled-ball overlap `A`.
    pub covering_constant: Option<u32>,
}

fn param_order(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> std::cmp::Ordering {
    for ((k1, v1), (k2, v2)) in a.iter().zip(b) {
        let c = k1.cmp(k2).then(v1.total_cmp(v2));
        if c.is_ne() {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Ratio table for one audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub audit: String,
    pub points: Vec<AuditPoint>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub metadata: AuditMetadata,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<ScalingFit>,
    /// Hypothesis failures and other caveats, one per line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl AuditReport {
    /// Sorts points by label then parameters so merged parallel results
    /// are reproducible.
    pub fn new(audit: impl Into<String>, mut points: Vec<AuditPoint>, metadata: AuditMetadata) -> Self {
        points.sort_by(|a, b| {
            a.label.cmp(&b.label).then_with(|| param_order(&a.params, &b.params))
        });
        let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
        let min_ratio = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
        Self {
            audit: audit.into(),
            points,
            max_ratio,
            min_ratio: if min_ratio.is_finite() { min_ratio } else { 0.0 },
            metadata,
            fits: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.points.iter().all(|p| p.ratio.is_finite() && p.ratio >= 0.0)
    }

    pub fn with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a AuditPoint> + 'a {
        self.points.iter().filter(move |p| p.label == label)
    }
}
