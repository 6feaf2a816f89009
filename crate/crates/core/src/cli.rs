//! Batch driver: JSON experiment configs in, CSV tables, JSON audit reports
//! and two-column plot data out.

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{
    audit_holder, audit_small_scale, audit_localized, audit_operator_bound, audit_critical_localized,
    fit_scaling, operator_audit_resolution, sigma, AuditMetadata, AuditPoint, AuditReport, OperatorAuditSpec, RSchedule,
};
use crate::covering::{build_covering, covering_chain_audit};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, GridLayout, ManifoldModel, Point, QuadratureGrid, TubeSpec, MAX_TORUS_DIM};
use crate::harmonics::{
    highest_weight_field, random_window_field, sphere_frequency, torus_wave, zonal_field,
    EigenfunctionField,
};
use crate::measures::{lp_norm, qe_statistic, Exponent, Region};
use crate::spectral_filter::{apply_filter, RhoKind, WindowFilterSpec};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

const MIN_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Sphere,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
}

impl ModelSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        match self.kind {
            ModelKind::Sphere => ManifoldModel::sphere(self.n),
            ModelKind::Torus => ManifoldModel::torus(self.n),
        }
    }
}

fn default_width() -> f64 {
    1.0
}

fn one() -> usize {
    1
}

/// One family of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Zonal { k: Vec<usize> },
    HighestWeight { k: Vec<usize> },
    TorusWave { m: Vec<Vec<i64>> },
    /// `count` random unit-norm combinations per window `[λ, λ + width)`,
    /// seeded from the run seed.
    RandomWindow {
        lambda: Vec<f64>,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "one")]
        count: usize,
    },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Zonal { .. } => "zonal",
            FamilySpec::HighestWeight { .. } => "highest_weight",
            FamilySpec::TorusWave { .. } => "torus_wave",
            FamilySpec::RandomWindow { .. } => "random_window",
        }
    }

    fn len(&self) -> usize {
        match self {
            FamilySpec::Zonal { k } | FamilySpec::HighestWeight { k } => k.len(),
            FamilySpec::TorusWave { m } => m.len(),
            FamilySpec::RandomWindow { lambda, count, .. } => lambda.len() * count,
        }
    }

    /// Frequencies of the members.
    fn frequencies(&self, model: &ManifoldModel) -> Vec<f64> {
        match self {
            FamilySpec::Zonal { k } | FamilySpec::HighestWeight { k } => {
                k.iter().map(|&k| sphere_frequency(model.n, k)).collect()
            }
            FamilySpec::TorusWave { m } => m
                .iter()
                .map(|v| v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
                .collect(),
            FamilySpec::RandomWindow { lambda, .. } => lambda.clone(),
        }
    }

    /// Grid resolution needed to resolve every member (sphere degree + 1,
    /// torus `2·max|m| + 1`).
    fn min_resolution(&self, model: &ManifoldModel) -> usize {
        match self {
            FamilySpec::Zonal { k } | FamilySpec::HighestWeight { k } => {
                k.iter().max().map_or(0, |k| k + 1)
            }
            FamilySpec::TorusWave { m } => {
                let b = m.iter().flatten().map(|x| x.unsigned_abs()).max().unwrap_or(0) as usize;
                2 * b + 1
            }
            FamilySpec::RandomWindow { lambda, width, .. } => {
                let hi = lambda.iter().fold(0.0f64, |a, &l| a.max(l + width));
                let b = hi.ceil() as usize + 1;
                if model.is_sphere() {
                    b + 1
                } else {
                    2 * b + 1
                }
            }
        }
    }

    /// Resolution used when the config leaves it open: `3·degree + 1` on the
    /// sphere (the zonal peak lands on the pole row and sup norms settle),
    /// four nodes per wavelength on the torus.
    fn default_resolution(&self, model: &ManifoldModel) -> usize {
        let need = self.min_resolution(model);
        if model.is_sphere() {
            3 * need.saturating_sub(1) + 1
        } else {
            2 * need
        }
    }
}

/// Operator-norm audit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub lambda: Vec<f64>,
    pub r: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub r: Vec<f64>,
}

fn default_out() -> String {
    "out".into()
}

fn default_seed() -> u64 {
    1
}

/// A batch experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub families: Vec<FamilySpec>,
    pub p: Vec<Exponent>,
    /// Radii; dyadic between the smallest `1/λ` and `inj/2` when absent.
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: RhoKind,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub covering: Option<CoveringConfig>,
    #[serde(default)]
    pub schedule: Option<RSchedule>,
}

impl Default for ExperimentConfig {
    /// Zonal and highest-weight sweeps `k = 16, ..., 256` on `S^2`.
    fn default() -> Self {
        let ks = vec![16, 32, 64, 128, 256];
        Self {
            model: ModelSpec { kind: ModelKind::Sphere, n: 2 },
            families: vec![FamilySpec::Zonal { k: ks.clone() }, FamilySpec::HighestWeight { k: ks }],
            p: vec![Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Finite(6.0), Exponent::Infinity],
            r: None,
            rho: RhoKind::default(),
            resolution: None,
            out: default_out(),
            seed: default_seed(),
            filter: Some(FilterConfig { lambda: vec![8.0, 16.0], r: vec![0.5], trials: 20 }),
            covering: Some(CoveringConfig { r: vec![0.8, 0.4, 0.2] }),
            schedule: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        self.model.build().map_err(|e| cfg_err(e.to_string()))
    }

    fn frequencies(&self, model: &ManifoldModel) -> Vec<f64> {
        self.families.iter().flat_map(|f| f.frequencies(model)).collect()
    }

    /// Smallest admissible radius: the smallest `1/λ` over positive frequencies.
    fn r_floor(&self, model: &ManifoldModel) -> f64 {
        self.frequencies(model)
            .into_iter()
            .filter(|&l| l > 0.0)
            .map(|l| 1.0 / l)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn resolution(&self, model: &ManifoldModel) -> usize {
        self.resolution.unwrap_or_else(|| {
            self.families
                .iter()
                .map(|f| f.default_resolution(model))
                .max()
                .unwrap_or(0)
                .max(MIN_RESOLUTION)
        })
    }

    /// The configured radii, or dyadic radii `inj/2, inj/4, ...` down to the
    /// smallest `1/λ`.
    pub fn radii(&self, model: &ManifoldModel) -> Vec<f64> {
        if let Some(r) = &self.r {
            return r.clone();
        }
        let lo = self.r_floor(model);
        let lo = if lo.is_finite() { lo } else { model.inj / 64.0 };
        let mut out = Vec::new();
        let mut r = model.inj / 2.0;
        while r >= lo * (1.0 - 1e-12) {
            out.push(r);
            r /= 2.0;
        }
        out.reverse();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        if self.families.is_empty() {
            return Err(cfg_err("no field families"));
        }
        if self.p.is_empty() {
            return Err(cfg_err("empty p list"));
        }
        for f in &self.families {
            if f.len() == 0 {
                return Err(cfg_err(format!("{} family is empty", f.name())));
            }
            match f {
                FamilySpec::Zonal { .. } | FamilySpec::HighestWeight { .. } if !model.is_sphere() => {
                    return Err(cfg_err(format!("{} needs a sphere model", f.name())));
                }
                FamilySpec::HighestWeight { .. } if model.n != 2 => {
                    return Err(cfg_err("highest_weight needs n = 2"));
                }
                FamilySpec::TorusWave { m } => {
                    if !model.is_torus() {
                        return Err(cfg_err("torus_wave needs a torus model"));
                    }
                    if m.iter().any(|v| v.len() != model.n) {
                        return Err(cfg_err(format!("lattice vectors must have {} entries", model.n)));
                    }
                    if m.iter().flatten().any(|x| x.unsigned_abs() > 1 << 20) {
                        return Err(cfg_err("lattice index too large"));
                    }
                }
                FamilySpec::RandomWindow { lambda, width, .. } => {
                    if model.is_sphere() && model.n != 2 {
                        return Err(cfg_err("random_window on spheres needs n = 2"));
                    }
                    if !(*width > 0.0 && width.is_finite()) {
                        return Err(cfg_err("window width must be positive"));
                    }
                    if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0 && *l <= 1e4)) {
                        return Err(cfg_err("window frequencies must lie in [0, 1e4]"));
                    }
                }
                _ => {}
            }
            if let FamilySpec::Zonal { k } | FamilySpec::HighestWeight { k } = f {
                if k.iter().any(|&k| k > 1 << 16) {
                    return Err(cfg_err("degree too large"));
                }
            }
        }
        if let Some(res) = self.resolution {
            let need = self.families.iter().map(|f| f.min_resolution(&model)).max().unwrap_or(0);
            if res < need.max(2) {
                return Err(cfg_err(format!("resolution {res} below max degree + 1 = {need}")));
            }
        }
        if let Some(r) = &self.r {
            if r.is_empty() {
                return Err(cfg_err("empty r grid"));
            }
            let lo = self.r_floor(&model);
            let lo = if lo.is_finite() { lo } else { 0.0 };
            for &x in r {
                if !(x.is_finite() && x >= lo * (1.0 - 1e-12) && x <= model.inj / 2.0 * (1.0 + 1e-12) && x > 0.0) {
                    return Err(cfg_err(format!("radius {x} outside [{lo}, inj/2]")));
                }
            }
        }
        if let Some(f) = &self.filter {
            if f.lambda.is_empty() || f.r.is_empty() {
                return Err(cfg_err("empty filter sweep"));
            }
            if f.trials < 20 {
                return Err(cfg_err("filter audit needs at least 20 trials"));
            }
            if f.lambda.iter().any(|l| !(l.is_finite() && *l >= 1.0 && *l <= 1e4)) {
                return Err(cfg_err("filter frequencies must lie in [1, 1e4]"));
            }
            if f.r.iter().any(|r| !(r.is_finite() && *r > 0.0 && *r <= model.inj)) {
                return Err(cfg_err("filter radii must lie in (0, inj]"));
            }
        }
        if let Some(c) = &self.covering {
            if c.r.is_empty() {
                return Err(cfg_err("empty covering sweep"));
            }
            if c.r.iter().any(|r| !(r.is_finite() && *r > 0.0 && *r <= model.inj)) {
                return Err(cfg_err("covering radii must lie in (0, inj]"));
            }
        }
        if let Some(RSchedule::Power { a }) = self.schedule {
            if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
                return Err(cfg_err("schedule exponent must lie in [0, 1]"));
            }
        }
        if let Some(RSchedule::Constant { r }) = self.schedule {
            if !(r.is_finite() && r > 0.0 && r <= model.inj) {
                return Err(cfg_err("schedule radius must lie in (0, inj]"));
            }
        }
        if model.is_torus() && model.n > MAX_TORUS_DIM {
            return Err(cfg_err("torus dimension too large"));
        }
        Ok(())
    }
}

/// Pole used for zonal fields: the first grid node on product grids, so the
/// peak is sampled, and the axis on axisymmetric grids.
pub fn zonal_pole(grid: &QuadratureGrid) -> Point {
    match grid.layout {
        GridLayout::SphereProduct { .. } => grid.nodes[0],
        _ => Point::north_pole(grid.model.n),
    }
}

/// Build every field of the config on one shared grid.
pub fn build_fields(cfg: &ExperimentConfig, grid: &Arc<QuadratureGrid>) -> Result<Vec<(String, Vec<EigenfunctionField>)>> {
    let model = grid.model;
    let mut out = Vec::new();
    for (fi, fam) in cfg.families.iter().enumerate() {
        let mut fields = Vec::new();
        match fam {
            FamilySpec::Zonal { k } => {
                let pole = zonal_pole(grid);
                for &k in k {
                    fields.push(zonal_field(&model, k, &pole, grid.clone())?);
                }
            }
            FamilySpec::HighestWeight { k } => {
                for &k in k {
                    fields.push(highest_weight_field(&model, k, grid.clone())?);
                }
            }
            FamilySpec::TorusWave { m } => {
                for v in m {
                    fields.push(torus_wave(&model, v, grid.clone())?);
                }
            }
            FamilySpec::RandomWindow { lambda, width, count } => {
                for (li, &l) in lambda.iter().enumerate() {
                    for c in 0..*count {
                        let seed = cfg
                            .seed
                            .wrapping_mul(1_000_003)
                            .wrapping_add((fi * 65_536 + li * 256 + c) as u64);
                        fields.push(random_window_field(&model, l, *width, seed, grid.clone())?);
                    }
                }
            }
        }
        out.push((fam.name().to_string(), fields));
    }
    Ok(out)
}

/// One row of `norms.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub field_id: String,
    pub lambda: f64,
    pub p: Exponent,
    /// Ball radius; `None` for norms over the whole manifold.
    pub r: Option<f64>,
    pub value: f64,
}

pub const NORMS_HEADER: &str = "field_id,lambda,p,r,value";

/// Twelve significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_norms_csv(rows: &[NormRow]) -> String {
    let mut s = String::from(NORMS_HEADER);
    s.push('\n');
    for row in rows {
        let r = row.r.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", row.field_id, fmt_sig(row.lambda), row.p, r, fmt_sig(row.value));
    }
    s
}

/// Parse a table written by [`write_norms_csv`].
pub fn parse_norms_csv(text: &str) -> Result<Vec<NormRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == NORMS_HEADER => {}
        _ => return Err(cfg_err("norms table: missing header")),
    }
    let num = |s: &str, what: &str, line: usize| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| cfg_err(format!("line {line}: bad {what} {s:?}")))?;
        if !v.is_finite() {
            return Err(cfg_err(format!("line {line}: non-finite {what}")));
        }
        Ok(v)
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(cfg_err(format!("line {line_no}: expected 5 columns, found {}", cols.len())));
        }
        if cols[0].is_empty() {
            return Err(cfg_err(format!("line {line_no}: empty field id")));
        }
        let p: Exponent = cols[2].trim().parse().map_err(|e: Error| cfg_err(format!("line {line_no}: {e}")))?;
        let r = if cols[3].trim().is_empty() { None } else { Some(num(cols[3], "r", line_no)?) };
        rows.push(NormRow {
            field_id: cols[0].to_string(),
            lambda: num(cols[1], "lambda", line_no)?,
            p,
            r,
            value: num(cols[4], "value", line_no)?,
        });
    }
    Ok(rows)
}

/// `audit_<name>.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: u32,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub resolution: usize,
    pub rho_kind: String,
    pub covering_constant: u32,
    pub max_ratio: f64,
    pub reports: Vec<AuditReport>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// L^p norms of every configured field
    Norms,
    /// Norms plus log-log exponent fits per family and p
    Scaling,
    /// Filter identity and operator-norm audit of T_{λ,r}
    FilterAudit,
    /// Ball coverings and the local-to-global chain audit
    CoveringAudit,
    /// Localized-norm audits over the r grid
    TheoremAudit,
    /// Equidistribution statistics on balls and tubes
    Qe,
    /// Summarize the audit files already in the output directory
    Report,
}

#[derive(Debug, Parser)]
#[command(name = "eigenloc", version, about = "L^p norms and ball masses of Laplace eigenfunctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON); built-in default when absent
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid resolution (overrides the config)
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Worker threads, 0 = one per core
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

/// Exit code for an error: 2 for config and output problems, 3 for
/// resolution and precondition failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Shared state of one run.
struct Run {
    cfg: ExperimentConfig,
    hash: String,
    model: ManifoldModel,
    grid: Arc<QuadratureGrid>,
    overlap: u32,
}

impl Run {
    fn new(cfg: ExperimentConfig) -> Result<Self> {
        let model = cfg.model()?;
        let grid = Arc::new(build_grid(&model, cfg.resolution(&model))?);
        // overlap constant at a quarter of the injectivity radius
        let overlap = build_covering(&model, model.inj / 4.0, &grid)?.overlap;
        Ok(Self { hash: cfg.hash(), cfg, model, grid, overlap })
    }

    fn metadata(&self) -> AuditMetadata {
        AuditMetadata {
            seed: Some(self.cfg.seed),
            resolution: Some(self.grid.resolution),
            rho_kind: Some(self.cfg.rho.name().to_string()),
            covering_constant: Some(self.overlap),
        }
    }

    fn stamp(&self, mut r: AuditReport) -> AuditReport {
        let md = self.metadata();
        r.metadata.resolution = md.resolution;
        r.metadata.rho_kind = md.rho_kind;
        r.metadata.covering_constant = r.metadata.covering_constant.or(md.covering_constant);
        r.metadata.seed = r.metadata.seed.or(md.seed);
        r
    }

    fn file(&self, name: &str, reports: Vec<AuditReport>, summary: BTreeMap<String, f64>) -> (String, Vec<u8>) {
        let reports: Vec<AuditReport> = reports.into_iter().map(|r| self.stamp(r)).collect();
        let file = ReportFile {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            resolution: self.grid.resolution,
            rho_kind: self.cfg.rho.name().to_string(),
            covering_constant: self.overlap,
            max_ratio: reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max),
            reports,
            summary,
        };
        let mut bytes = serde_json::to_vec_pretty(&file).expect("report serializes");
        bytes.push(b'\n');
        (format!("audit_{name}.json"), bytes)
    }
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.to_string_lossy().into_owned();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.resolution {
        cfg.resolution = Some(r);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| cfg_err(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".eigenloc_write_probe");
    std::fs::write(&probe, b"").map_err(|e| cfg_err(format!("{} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// Run one subcommand; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if cli.threads > 0 {
        // a global pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let cfg = effective_config(cli)?;
    let out = PathBuf::from(&cfg.out);
    prepare_out(&out)?;
    let outputs = if cli.command == Command::Report {
        cmd_report(&cfg, &out)?
    } else {
        let run = Run::new(cfg)?;
        match cli.command {
            Command::Norms => cmd_norms(&run)?,
            Command::Scaling => cmd_scaling(&run)?,
            Command::FilterAudit => cmd_filter(&run)?,
            Command::CoveringAudit => cmd_covering(&run)?,
            Command::TheoremAudit => cmd_theorem(&run)?,
            Command::Qe => cmd_qe(&run)?,
            Command::Report => unreachable!(),
        }
    };
    let mut written = Vec::new();
    for (name, bytes) in outputs {
        let path = out.join(name);
        std::fs::write(&path, bytes).map_err(|e| cfg_err(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

type Outputs = Vec<(String, Vec<u8>)>;

fn norm_rows(run: &Run, families: &[(String, Vec<EigenfunctionField>)]) -> Vec<NormRow> {
    let mut rows = Vec::new();
    for (_, fields) in families {
        for f in fields {
            for &p in &run.cfg.p {
                rows.push(NormRow { field_id: f.id.clone(), lambda: f.lambda, p, r: None, value: lp_norm(f, p).value });
            }
        }
    }
    rows
}

fn cmd_norms(run: &Run) -> Result<Outputs> {
    let fams = build_fields(&run.cfg, &run.grid)?;
    Ok(vec![("norms.csv".into(), write_norms_csv(&norm_rows(run, &fams)).into_bytes())])
}

fn cmd_scaling(run: &Run) -> Result<Outputs> {
    let fams = build_fields(&run.cfg, &run.grid)?;
    let rows = norm_rows(run, &fams);
    let mut outputs: Outputs = vec![("norms.csv".into(), write_norms_csv(&rows).into_bytes())];
    let mut reports = Vec::new();
    let mut summary = BTreeMap::new();
    for (name, fields) in &fams {
        for &p in &run.cfg.p {
            let mut pts: Vec<(f64, f64)> = fields
                .iter()
                .filter(|f| f.lambda > 0.0)
                .map(|f| (f.lambda, lp_norm(f, p).value))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut dat = String::from("# log_lambda log_value\n");
            for (l, v) in &pts {
                let _ = writeln!(dat, "{} {}", fmt_sig(l.ln()), fmt_sig(v.ln()));
            }
            outputs.push((format!("scaling_{name}_{p}.dat"), dat.into_bytes()));
            let s = sigma(run.model.n, p)?;
            let points = pts
                .iter()
                .map(|&(l, v)| AuditPoint::new(name.clone(), &[("lambda", l), ("p_inv", p.reciprocal())], v, l.powf(s)))
                .collect();
            let mut rep = AuditReport::new(format!("scaling_{name}_{p}"), points, AuditMetadata::default());
            match fit_scaling(format!("{name}_{p}"), &pts) {
                Ok(fit) => {
                    summary.insert(format!("{name}_{p}_exponent"), fit.exponent);
                    summary.insert(format!("{name}_{p}_sigma"), s);
                    rep.fits.push(fit);
                }
                Err(e) => rep.flags.push(format!("no fit: {e}")),
            }
            reports.push(rep);
        }
    }
    outputs.push(run.file("scaling", reports, summary));
    Ok(outputs)
}

fn cmd_filter(run: &Run) -> Result<Outputs> {
    let fc = run
        .cfg
        .filter
        .clone()
        .unwrap_or(FilterConfig { lambda: vec![8.0, 16.0], r: vec![0.5], trials: 20 });
    let mut reports = Vec::new();
    let mut summary = BTreeMap::new();
    // identity T e = [ρ(r(λ-λ_e)) + ρ(r(λ+λ_e))] e on the configured fields
    let fams = build_fields(&run.cfg, &run.grid)?;
    let rho = crate::spectral_filter::make_rho(run.cfg.rho)?;
    let mut ident = Vec::new();
    for (_, fields) in &fams {
        for f in fields.iter().filter(|f| f.lambda >= 1.0) {
            let r = (2.0 / f.lambda).min(run.model.inj);
            let spec = WindowFilterSpec::new(run.cfg.rho, f.lambda, r);
            let tf = apply_filter(f, &spec)?;
            let factor = rho.eval(0.0) + rho.eval(2.0 * r * f.lambda);
            let err = tf
                .samples
                .iter()
                .zip(&f.samples)
                .map(|(a, b)| (a - b * factor).norm())
                .fold(0.0, f64::max);
            let scale = f.samples.iter().map(|b| b.norm() * factor).fold(0.0, f64::max);
            ident.push(AuditPoint::new(f.id.clone(), &[("lambda", f.lambda), ("r", r)], err, scale));
        }
    }
    reports.push(AuditReport::new("filter_identity", ident, AuditMetadata::default()));
    for &r in &fc.r {
        let mut prev: Option<f64> = None;
        let mut lams = fc.lambda.clone();
        lams.sort_by(f64::total_cmp);
        for &l in &lams {
            let mut spec = OperatorAuditSpec::new(l, r);
            spec.rho = run.cfg.rho;
            spec.seed = run.cfg.seed;
            spec.trials = fc.trials;
            // a grid sized to the trial band, independent of the field sweep
            let res = operator_audit_resolution(&run.model, &WindowFilterSpec::new(spec.rho, l, r))?;
            let grid = Arc::new(build_grid(&run.model, res.max(MIN_RESOLUTION))?);
            let rep = audit_operator_bound(&run.model, &grid, &spec)?;
            summary.insert(format!("max_ratio_l{l}_r{r}"), rep.max_ratio);
            if let Some(p) = prev {
                summary.insert(format!("relative_change_l{l}_r{r}"), (rep.max_ratio / p - 1.0).abs());
            }
            prev = Some(rep.max_ratio);
            reports.push(rep);
        }
    }
    Ok(vec![run.file("filter", reports, summary)])
}

fn cmd_covering(run: &Run) -> Result<Outputs> {
    let radii = run.cfg.covering.as_ref().map(|c| c.r.clone()).unwrap_or_else(|| vec![run.model.inj / 4.0]);
    let fams = build_fields(&run.cfg, &run.grid)?;
    let p = Exponent::Finite(run.model.critical_exponent());
    let mut reports = Vec::new();
    let mut summary = BTreeMap::new();
    let mut cover_pts = Vec::new();
    for &r in &radii {
        let cov = build_covering(&run.model, r, &run.grid)?;
        summary.insert(format!("count_r{r}"), cov.count as f64);
        summary.insert(format!("overlap_r{r}"), cov.overlap as f64);
        cover_pts.push(AuditPoint::new(
            "min_cover",
            &[("r", r), ("count", cov.count as f64), ("overlap", cov.overlap as f64)],
            cov.min_cover as f64,
            1.0,
        ));
        for (_, fields) in &fams {
            for f in fields {
                let mut rep = covering_chain_audit(f, &cov, p)?;
                rep.audit = format!("covering_chain_{}", f.id);
                reports.push(rep);
            }
        }
    }
    reports.insert(0, AuditReport::new("covering", cover_pts, AuditMetadata::default()));
    Ok(vec![run.file("covering", reports, summary)])
}

fn cmd_theorem(run: &Run) -> Result<Outputs> {
    let fams = build_fields(&run.cfg, &run.grid)?;
    let all: Vec<EigenfunctionField> = fams.iter().flat_map(|(_, f)| f.iter().cloned()).collect();
    let radii = run.cfg.radii(&run.model);
    let mut reports = vec![audit_critical_localized(&all, &radii)?];
    let mut summary = BTreeMap::new();
    summary.insert("theorem_max_ratio".into(), reports[0].max_ratio);
    summary.insert("theorem_min_ratio".into(), reports[0].min_ratio);
    for &p in run.cfg.p.iter().filter(|p| p.is_infinite() || p.value() > 2.0) {
        for f in &all {
            let mut rep = audit_localized(f, &radii, p)?;
            rep.audit = format!("localized_{}_{p}", f.id);
            reports.push(rep);
        }
    }
    let schedule = run.cfg.schedule.unwrap_or(RSchedule::Power { a: 0.5 });
    reports.push(audit_small_scale(&all, schedule)?);
    let pc = Exponent::Finite(run.model.critical_exponent());
    let mut centers = vec![zonal_pole(&run.grid)];
    if run.model.is_sphere() && run.model.n == 2 {
        centers.push(Point::sphere(2, std::f64::consts::FRAC_PI_2, 0.0)?);
        centers.push(Point::sphere(2, 1.0, 0.5)?);
    } else if run.model.is_torus() {
        centers.push(Point::torus(&vec![1.0; run.model.n])?);
    }
    let hr: Vec<f64> = radii.iter().copied().filter(|&r| r >= run.grid.spacing).collect();
    let holder = audit_holder(&all, &centers, &hr, pc)?;
    summary.insert("holder_max_ratio".into(), holder.max_ratio);
    reports.push(holder);
    Ok(vec![run.file("theorem", reports, summary)])
}

fn qe_regions(grid: &QuadratureGrid, lambda: f64) -> Result<Vec<(String, Region)>> {
    let model = &grid.model;
    let scale = lambda.max(1.0).powf(-0.5).max(2.0 * grid.spacing);
    let mut out = Vec::new();
    if model.is_sphere() {
        let pole = zonal_pole(grid);
        out.push(("pole_cap".to_string(), Region::Ball { center: pole, radius: scale }));
        out.push(("pole_cap_wide".to_string(), Region::Ball { center: pole, radius: model.inj / 4.0 }));
        if model.n == 2 {
            let tube = TubeSpec::equatorial(scale)?;
            out.push(("equator_tube".to_string(), Region::tube(&tube)));
            let off = Point::sphere(2, 1.0, 0.5)?;
            out.push(("ball_off_axis".to_string(), Region::Ball { center: off, radius: 0.5 }));
        }
    } else {
        let zero = vec![0.0; model.n];
        out.push(("ball_small".to_string(), Region::Ball { center: Point::torus(&zero)?, radius: scale }));
        out.push(("ball_wide".to_string(), Region::Ball { center: Point::torus(&zero)?, radius: model.inj / 2.0 }));
        let lo = vec![0.3; model.n];
        let hi = vec![2.1; model.n];
        out.push(("rectangle".to_string(), Region::Rectangle { lo, hi }));
    }
    Ok(out)
}

fn cmd_qe(run: &Run) -> Result<Outputs> {
    let fams = build_fields(&run.cfg, &run.grid)?;
    let total = run.grid.total_weight();
    let mut pts = Vec::new();
    for (_, fields) in &fams {
        for f in fields {
            for (label, region) in qe_regions(&run.grid, f.lambda)? {
                let q = qe_statistic(f, &region)?;
                pts.push(AuditPoint::new(
                    format!("{}|{label}", f.id),
                    &[("lambda", f.lambda)],
                    q.statistic,
                    q.volume / total,
                ));
            }
        }
    }
    let rep = AuditReport::new("qe", pts, AuditMetadata::default());
    let mut summary = BTreeMap::new();
    summary.insert("max_statistic_over_share".into(), rep.max_ratio);
    Ok(vec![run.file("qe", vec![rep], summary)])
}

fn cmd_report(cfg: &ExperimentConfig, out: &Path) -> Result<Outputs> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let n = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            n.starts_with("audit_") && n.ends_with(".json") && n != "audit_summary.json"
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::param(format!("no audit files in {}", out.display())));
    }
    let mut summary = serde_json::Map::new();
    let mut text = String::new();
    for path in &names {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(path)?)
            .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let name = v.get("name").and_then(|n| n.as_str()).unwrap_or("?").to_string();
        let max = v.get("max_ratio").cloned().unwrap_or(serde_json::Value::Null);
        let flags: Vec<serde_json::Value> = v
            .get("reports")
            .and_then(|r| r.as_array())
            .into_iter()
            .flatten()
            .filter_map(|r| r.get("flags").and_then(|f| f.as_array()))
            .flatten()
            .cloned()
            .collect();
        let _ = writeln!(text, "{name:<12} max_ratio={max} flags={}", flags.len());
        summary.insert(
            name,
            serde_json::json!({ "max_ratio": max, "flags": flags, "summary": v.get("summary").cloned().unwrap_or_default() }),
        );
    }
    print!("{text}");
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "name": "summary",
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "audits": summary,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("summary serializes");
    bytes.push(b'\n');
    Ok(vec![("audit_summary.json".into(), bytes)])
}
