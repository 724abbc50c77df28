//! Experiment orchestration: `(n, a)` sweeps over a rounded family, convergence
//! toward the straight polygon, and CSV/JSON/SVG artifacts.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diagnostics::{bg_row, BgOptions, BgReport, DiagnosticsError};
use crate::fem::{assemble_poisson, eigen_min_with, solve_with, FemError, FemSolution};
use crate::geometry::{construct_rounded_domain, select_default_params, select_params_with_rho, GeometryError, Polygon, RoundedDomain, RoundingParams};
use crate::mesh::{mesh_domain, Mesh, MeshError, SizingField};
use crate::norms::{gagliardo_seminorm, ratio_report, NormError};
use crate::svg::{domain_overlay, LinePlot, Series};
use crate::weights::WeightFunction;
use crate::Vec2;

/// Relative tolerance of the inverse iteration for `λ_min`.
pub const EIGEN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("result table is empty")]
    EmptyTable,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl HarnessError {
    /// Short code recorded in result rows.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "config",
            Self::EmptyTable => "empty",
            Self::Io(_) => "io",
            Self::Json(_) => "json",
            Self::Csv(_) => "csv",
            Self::Geometry(_) => "geometry",
            Self::Mesh(_) => "mesh",
            Self::Fem(_) => "fem",
            Self::Norm(_) => "norms",
            Self::Diagnostics(_) => "diagnostics",
        }
    }

    fn row_message(&self) -> String {
        format!("{}: {}", self.code(), self)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Polygon given by preset name or by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonSpec {
    Preset(String),
    Vertices(Vec<[f64; 2]>),
}

impl PolygonSpec {
    pub fn build(&self) -> Result<Polygon> {
        Ok(match self {
            Self::Preset(name) => Polygon::preset(name)?,
            Self::Vertices(v) => Polygon::from_pairs(v)?,
        })
    }
}

/// A number or the keyword `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Value(f64),
    Keyword(String),
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self::Keyword("auto".into())
    }
}

impl ParamSpec {
    fn value(&self, name: &str) -> Result<Option<f64>> {
        match self {
            Self::Value(v) if *v > 0.0 && v.is_finite() => Ok(Some(*v)),
            Self::Value(v) => Err(HarnessError::InvalidConfig(format!("{name} = {v} must be positive"))),
            Self::Keyword(k) if k == "auto" => Ok(None),
            Self::Keyword(k) => Err(HarnessError::InvalidConfig(format!("{name} must be a number or \"auto\", got {k:?}"))),
        }
    }
}

/// Right-hand side `f` of `Δu = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourcePreset {
    /// `f ≡ 1`.
    One,
    /// `f = −2π² sin(πx) sin(πy)`, the Laplacian of `sin(πx) sin(πy)`.
    Sine,
    /// Gaussian `exp(−|x − c|² / (2σ²))`.
    Bump,
    /// Sum of seeded Gaussians with random centers and signed amplitudes.
    RandomBump,
    /// `f ≡ 0`.
    Zero,
}

fn default_polygon() -> PolygonSpec {
    PolygonSpec::Preset("lshape".into())
}
fn default_n_list() -> Vec<u32> {
    vec![1, 2, 4, 8, 16]
}
fn default_a_list() -> Vec<f64> {
    vec![0.3]
}
fn default_source() -> SourcePreset {
    SourcePreset::Sine
}
fn default_bump_width() -> f64 {
    0.1
}
fn default_bump_count() -> usize {
    4
}
fn default_h_max() -> f64 {
    0.1
}
fn default_h_min() -> f64 {
    1e-5
}
fn default_beta() -> f64 {
    0.4
}
fn default_order() -> u8 {
    2
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// Experiment description, read from JSON. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_polygon")]
    pub polygon: PolygonSpec,
    #[serde(default)]
    pub rho: ParamSpec,
    #[serde(default)]
    pub rho_prime: ParamSpec,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u32>,
    #[serde(default = "default_a_list")]
    pub a_list: Vec<f64>,
    #[serde(default = "default_source")]
    pub source: SourcePreset,
    /// Gaussian center for the `bump` source; defaults to the polygon centroid of vertices.
    #[serde(default)]
    pub bump_center: Option<[f64; 2]>,
    #[serde(default = "default_bump_width")]
    pub bump_width: f64,
    #[serde(default = "default_bump_count")]
    pub bump_count: usize,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default = "default_h_min")]
    pub h_min: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Compute `λ_min` of the weighted eigenproblem per `n`.
    #[serde(default = "default_true")]
    pub eigen: bool,
    /// Compute bounded-geometry diagnostics per `n`.
    #[serde(default)]
    pub diagnostics: bool,
    /// Fractional order of the Gagliardo seminorm of `∇u`, if requested.
    #[serde(default)]
    pub gagliardo: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|p| p[1] <= p[0]) {
            return bad(format!("n_list {:?} must be strictly increasing positive integers", self.n_list));
        }
        if self.a_list.is_empty() {
            return bad("a_list is empty".into());
        }
        if let Some(a) = self.a_list.iter().find(|a| !(a.abs() <= 1.0)) {
            return bad(format!("a = {a} outside [-1, 1]"));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_max && self.h_max.is_finite()) {
            return bad(format!("need 0 < h_min = {} <= h_max = {}", self.h_min, self.h_max));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be positive", self.beta));
        }
        if !(self.order == 1 || self.order == 2) {
            return bad(format!("order {} must be 1 or 2", self.order));
        }
        if !(self.bump_width > 0.0) {
            return bad(format!("bump_width = {} must be positive", self.bump_width));
        }
        if let Some(s) = self.gagliardo {
            if !(s > 0.05 && s < 0.95) {
                return bad(format!("gagliardo order {s} outside (0.05, 0.95)"));
            }
        }
        self.rho.value("rho")?;
        self.rho_prime.value("rho_prime")?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Template rounding parameters (`n = 1`).
    pub fn rounding_params(&self, polygon: &Polygon) -> Result<RoundingParams> {
        let params = match (self.rho.value("rho")?, self.rho_prime.value("rho_prime")?) {
            (None, None) => select_default_params(polygon)?,
            (Some(rho), None) => select_params_with_rho(polygon, rho)?,
            (rho, Some(rho_prime)) => {
                let rho = rho.unwrap_or(polygon.r0() / 4.0);
                let p = RoundingParams::new(rho, rho_prime, 1);
                p.validate(polygon)?;
                p
            }
        };
        Ok(params)
    }

    pub fn source(&self, polygon: &Polygon) -> Source {
        Source::new(self, polygon)
    }

    pub fn sizing(&self, w: &WeightFunction) -> Result<SizingField> {
        Ok(SizingField::conformal(w.clone(), self.beta, self.h_min, self.h_max)?)
    }

    pub fn bg_options(&self) -> BgOptions {
        BgOptions { beta: self.beta, h_min: self.h_min, h_max: self.h_max, ..BgOptions::default() }
    }
}

/// Evaluable source term built from a [`SourcePreset`].
#[derive(Debug, Clone)]
pub struct Source {
    preset: SourcePreset,
    /// `(center, amplitude)` of each Gaussian.
    bumps: Vec<(Vec2, f64)>,
    width: f64,
}

impl Source {
    fn new(cfg: &ExperimentConfig, polygon: &Polygon) -> Self {
        let verts = polygon.vertices();
        let centroid = verts.iter().fold(Vec2::zeros(), |s, v| s + v) / verts.len() as f64;
        let bumps = match cfg.source {
            SourcePreset::Bump => {
                let c = cfg.bump_center.map(|c| Vec2::new(c[0], c[1])).unwrap_or(centroid);
                vec![(c, 1.0)]
            }
            SourcePreset::RandomBump => {
                let (lo, hi) = verts.iter().fold((verts[0], verts[0]), |(lo, hi), v| (lo.inf(v), hi.sup(v)));
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let mut out = Vec::with_capacity(cfg.bump_count);
                while out.len() < cfg.bump_count {
                    let c = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                    let amp: f64 = rng.gen_range(-1.0..1.0);
                    if polygon.contains(c) {
                        out.push((c, amp));
                    }
                }
                out
            }
            _ => Vec::new(),
        };
        Self { preset: cfg.source.clone(), bumps, width: cfg.bump_width }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        use std::f64::consts::PI;
        match self.preset {
            SourcePreset::One => 1.0,
            SourcePreset::Zero => 0.0,
            SourcePreset::Sine => -2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin(),
            SourcePreset::Bump | SourcePreset::RandomBump => {
                let s2 = 2.0 * self.width * self.width;
                self.bumps.iter().map(|(c, a)| a * (-(x - c).norm_squared() / s2).exp()).sum()
            }
        }
    }
}

/// One `(n, a)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u32,
    pub a: f64,
    pub h: Option<f64>,
    pub elements: Option<usize>,
    pub dofs: Option<usize>,
    pub cg_iterations: Option<usize>,
    pub l2_f: Option<f64>,
    pub k21a: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub ratio: Option<f64>,
    pub gagliardo: Option<f64>,
    pub lambda_min: Option<f64>,
    pub sup_kappa0: Option<f64>,
    pub sup_kappa1: Option<f64>,
    pub sup_kappa2: Option<f64>,
    pub width_sup: Option<f64>,
    pub reach_min: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn empty(n: u32, a: f64) -> Self {
        Self {
            n,
            a,
            h: None,
            elements: None,
            dofs: None,
            cg_iterations: None,
            l2_f: None,
            k21a: None,
            h1: None,
            h2: None,
            ratio: None,
            gagliardo: None,
            lambda_min: None,
            sup_kappa0: None,
            sup_kappa1: None,
            sup_kappa2: None,
            width_sup: None,
            reach_min: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub version: String,
    pub created_unix: u64,
}

/// Rows in config order (`n` outer, `a` inner) plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub diagnostics: Option<BgReport>,
    pub metadata: Metadata,
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Option<T> {
    if s.is_empty() {
        None
    } else {
        s.parse().ok()
    }
}

const CSV_HEADER: [&str; 19] = [
    "n", "a", "h", "elements", "dofs", "cg_iterations", "l2_f", "k21a", "h1", "h2", "ratio", "gagliardo", "lambda_min", "sup_kappa0",
    "sup_kappa1", "sup_kappa2", "width_sup", "reach_min", "error",
];

impl ResultTable {
    pub fn any_error(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// Ratios for one value of `a`, in `n` order; `None` where the row failed.
    pub fn ratios(&self, a: f64) -> Vec<(u32, Option<f64>)> {
        self.rows.iter().filter(|r| r.a == a).map(|r| (r.n, r.ratio)).collect()
    }

    /// `max / min` of the ratio column for `a`; `None` if any entry is missing.
    pub fn ratio_spread(&self, a: f64) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.ratios(a).into_iter().map(|(_, r)| r).collect();
        let vals = vals?;
        if vals.is_empty() {
            return None;
        }
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(hi / lo)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.write_record([
                r.n.to_string(),
                r.a.to_string(),
                fmt_opt(&r.h),
                fmt_opt(&r.elements),
                fmt_opt(&r.dofs),
                fmt_opt(&r.cg_iterations),
                fmt_opt(&r.l2_f),
                fmt_opt(&r.k21a),
                fmt_opt(&r.h1),
                fmt_opt(&r.h2),
                fmt_opt(&r.ratio),
                fmt_opt(&r.gagliardo),
                fmt_opt(&r.lambda_min),
                fmt_opt(&r.sup_kappa0),
                fmt_opt(&r.sup_kappa1),
                fmt_opt(&r.sup_kappa2),
                fmt_opt(&r.width_sup),
                fmt_opt(&r.reach_min),
                fmt_opt(&r.error),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Rows from a CSV written by [`ResultTable::write_csv`].
    pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = || HarnessError::InvalidConfig(format!("malformed result row {:?}", rec));
            rows.push(ResultRow {
                n: rec[0].parse().map_err(|_| bad())?,
                a: rec[1].parse().map_err(|_| bad())?,
                h: parse_opt(&rec[2]),
                elements: parse_opt(&rec[3]),
                dofs: parse_opt(&rec[4]),
                cg_iterations: parse_opt(&rec[5]),
                l2_f: parse_opt(&rec[6]),
                k21a: parse_opt(&rec[7]),
                h1: parse_opt(&rec[8]),
                h2: parse_opt(&rec[9]),
                ratio: parse_opt(&rec[10]),
                gagliardo: parse_opt(&rec[11]),
                lambda_min: parse_opt(&rec[12]),
                sup_kappa0: parse_opt(&rec[13]),
                sup_kappa1: parse_opt(&rec[14]),
                sup_kappa2: parse_opt(&rec[15]),
                width_sup: parse_opt(&rec[16]),
                reach_min: parse_opt(&rec[17]),
                error: parse_opt(&rec[18]),
            });
        }
        Ok(rows)
    }

    /// Write `results.csv`, `metadata.json` and, when present, `diagnostics.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("results.csv");
        self.write_csv(fs::File::create(&path)?)?;
        written.push(path);
        if let Some(diag) = &self.diagnostics {
            let path = dir.join("diagnostics.csv");
            diag.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
        let path = dir.join("metadata.json");
        fs::write(&path, serde_json::to_string_pretty(&self.metadata)?)?;
        written.push(path);
        Ok(written)
    }
}

/// Mesh of a family member at the configured resolution and order.
pub fn family_mesh(cfg: &ExperimentConfig, domain: &RoundedDomain, w: &WeightFunction) -> Result<Mesh> {
    let mesh = mesh_domain(domain, &cfg.sizing(w)?)?;
    Ok(if cfg.order == 2 { mesh.elevate() } else { mesh })
}

struct CellOutput {
    rows: Vec<ResultRow>,
    diagnostics: Option<crate::diagnostics::BgRow>,
}

fn run_member(cfg: &ExperimentConfig, polygon: &Polygon, params: &RoundingParams, source: &Source, n: u32) -> CellOutput {
    let mut rows: Vec<ResultRow> = cfg.a_list.iter().map(|&a| ResultRow::empty(n, a)).collect();
    let fail = |rows: &mut Vec<ResultRow>, e: HarnessError| {
        for r in rows.iter_mut() {
            r.error.get_or_insert_with(|| e.row_message());
        }
    };
    let domain = match construct_rounded_domain(polygon, &params.at(n)) {
        Ok(d) => d,
        Err(e) => {
            fail(&mut rows, e.into());
            return CellOutput { rows, diagnostics: None };
        }
    };
    let w = WeightFunction::for_domain(&domain);
    let diagnostics = if cfg.diagnostics {
        match bg_row(&domain, &cfg.bg_options()) {
            Ok(bg) => {
                for r in rows.iter_mut() {
                    r.sup_kappa0 = bg.sup_kappa.first().copied();
                    r.sup_kappa1 = bg.sup_kappa.get(1).copied();
                    r.sup_kappa2 = bg.sup_kappa.get(2).copied();
                    r.width_sup = Some(bg.width_sup);
                    r.reach_min = Some(bg.reach_min);
                }
                Some(bg)
            }
            Err(e) => {
                fail(&mut rows, e.into());
                None
            }
        }
    } else {
        None
    };
    if let Err(e) = solve_member(cfg, &domain, &w, source, &mut rows) {
        fail(&mut rows, e);
    }
    CellOutput { rows, diagnostics }
}

fn solve_member(cfg: &ExperimentConfig, domain: &RoundedDomain, w: &WeightFunction, source: &Source, rows: &mut [ResultRow]) -> Result<()> {
    let mesh = Arc::new(family_mesh(cfg, domain, w)?);
    let ops = assemble_poisson(&mesh, cfg.eigen.then_some(w))?;
    let f = |x: Vec2| source.eval(x);
    let (u, rep) = solve_with(mesh.clone(), &ops.stiffness, &f, Some(w))?;
    let lambda = match &ops.weighted_mass {
        Some(mw) => Some(eigen_min_with(&mesh, &ops.stiffness, mw, EIGEN_TOLERANCE)?.lambda),
        None => None,
    };
    let gag = cfg.gagliardo.map(|s| gagliardo_seminorm(&u, s)).transpose()?;
    for row in rows.iter_mut() {
        row.h = Some(mesh.max_edge());
        row.elements = Some(mesh.triangles.len());
        row.dofs = Some(rep.dofs);
        row.cg_iterations = Some(rep.iterations);
        row.lambda_min = lambda;
        row.gagliardo = gag;
        match ratio_report(domain.n(), &u, &f, w, row.a, rep.dofs) {
            Ok(nr) => {
                row.l2_f = Some(nr.l2_f);
                row.k21a = Some(nr.k21a);
                row.h1 = Some(nr.h1);
                row.h2 = Some(nr.h2);
                row.ratio = nr.ratio;
            }
            Err(e) => row.error = Some(HarnessError::from(e).row_message()),
        }
    }
    Ok(())
}

fn now_unix() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Solve and report every `(n, a)` cell. Failures are recorded per row; only
/// configuration errors abort the sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let polygon = cfg.polygon.build()?;
    let params = cfg.rounding_params(&polygon)?;
    let source = cfg.source(&polygon);
    let cells: Vec<CellOutput> = cfg.n_list.par_iter().map(|&n| run_member(cfg, &polygon, &params, &source, n)).collect();
    let mut rows = Vec::new();
    let mut diag = Vec::new();
    for c in cells {
        rows.extend(c.rows);
        diag.extend(c.diagnostics);
    }
    Ok(ResultTable {
        rows,
        diagnostics: cfg.diagnostics.then_some(BgReport { rows: diag }),
        metadata: Metadata { config_hash: cfg.hash(), version: env!("CARGO_PKG_VERSION").to_string(), created_unix: now_unix() },
    })
}

/// `‖u_n − u_∞‖_{L²(Ω_∞)}` for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub l2_difference: Option<f64>,
    /// `ρ/n` fell below `h_min`, or the difference stopped decreasing.
    pub floor: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub a: f64,
    pub reference_elements: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "l2_difference", "floor", "error"])?;
        for r in &self.rows {
            wtr.write_record([r.n.to_string(), fmt_opt(&r.l2_difference), r.floor.to_string(), fmt_opt(&r.error)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Mesh of the straight polygon graded toward its vertices with exponent `1 − a`.
pub fn polygon_mesh(cfg: &ExperimentConfig, polygon: &Polygon, a: f64) -> Result<Mesh> {
    let exponent = (1.0 - a).max(0.05);
    let scale = polygon.r0();
    let sizing = SizingField::graded(polygon.vertices().to_vec(), exponent, scale, cfg.h_min.max(cfg.h_max / 64.0), cfg.h_max)?;
    let mesh = mesh_domain(&polygon.boundary_curve(), &sizing)?;
    Ok(if cfg.order == 2 { mesh.elevate() } else { mesh })
}

/// Compare each `u_n` with the solution on the straight polygon, evaluating
/// `u_n` (extended by zero) at the nodes of the polygon mesh.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let polygon = cfg.polygon.build()?;
    let params = cfg.rounding_params(&polygon)?;
    let source = cfg.source(&polygon);
    let f = |x: Vec2| source.eval(x);
    let a = cfg.a_list[0];
    let ref_mesh = Arc::new(polygon_mesh(cfg, &polygon, a)?);
    let ops = assemble_poisson(&ref_mesh, None)?;
    let (u_inf, _) = solve_with(ref_mesh.clone(), &ops.stiffness, &f, None)?;
    let diffs: Vec<Result<f64>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let domain = construct_rounded_domain(&polygon, &params.at(n))?;
            let w = WeightFunction::for_domain(&domain);
            let mesh = Arc::new(family_mesh(cfg, &domain, &w)?);
            let stiff = assemble_poisson(&mesh, None)?.stiffness;
            let (u_n, _) = solve_with(mesh.clone(), &stiff, &f, None)?;
            let tol = 1e-9 * (1.0 + polygon.r0());
            let diff: Vec<f64> = ref_mesh
                .nodes
                .iter()
                .zip(&u_inf.values)
                .map(|(&x, &v)| u_n.evaluate_near(x, tol).map(|p| p.value).unwrap_or(0.0) - v)
                .collect();
            Ok(FemSolution::from_values(ref_mesh.clone(), diff).l2_error(&|_| 0.0)?)
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(diffs.len());
    for (&n, d) in cfg.n_list.iter().zip(diffs) {
        let below = params.rho / n as f64 <= cfg.h_min;
        let row = match d {
            Ok(v) => {
                let stalled = rows.last().and_then(|r| r.l2_difference).is_some_and(|prev| v > 0.0 && v >= prev);
                ConvergenceRow { n, l2_difference: Some(v), floor: below || stalled, error: None }
            }
            Err(e) => ConvergenceRow { n, l2_difference: None, floor: below, error: Some(e.row_message()) },
        };
        rows.push(row);
    }
    Ok(ConvergenceTable { a, reference_elements: ref_mesh.triangles.len(), rows })
}

/// SVG plots of a sweep: ratio and `λ_min` against `n`, curvature suprema when
/// diagnostics are present, and the family outlines.
pub fn emit_plots(table: &ResultTable, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(HarnessError::EmptyTable);
    }
    fs::create_dir_all(dir)?;
    let mut a_values: Vec<f64> = Vec::new();
    for r in &table.rows {
        if !a_values.contains(&r.a) {
            a_values.push(r.a);
        }
    }
    let mut written = Vec::new();
    let mut save = |name: &str, svg: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, svg)?;
        written.push(path);
        Ok(())
    };
    let ratio = LinePlot {
        title: "Operator ratio against n".into(),
        x_label: "n".into(),
        y_label: "‖u‖_K / ‖f‖".into(),
        log_x: true,
        series: a_values
            .iter()
            .map(|&a| Series {
                name: format!("a = {a}"),
                points: table.ratios(a).into_iter().filter_map(|(n, r)| r.map(|r| (n as f64, r))).collect(),
            })
            .collect(),
    };
    save("ratio.svg", ratio.render())?;
    let mut seen = Vec::new();
    let lambda_points: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| {
            let fresh = !seen.contains(&r.n);
            seen.push(r.n);
            fresh
        })
        .filter_map(|r| r.lambda_min.map(|l| (r.n as f64, l)))
        .collect();
    if !lambda_points.is_empty() {
        let plot = LinePlot {
            title: "Smallest weighted eigenvalue".into(),
            x_label: "n".into(),
            y_label: "λ_min".into(),
            log_x: true,
            series: vec![Series { name: "λ_min".into(), points: lambda_points }],
        };
        save("lambda_min.svg", plot.render())?;
    }
    if let Some(diag) = table.diagnostics.as_ref().filter(|d| !d.rows.is_empty()) {
        let kmax = diag.rows.iter().map(|r| r.sup_kappa.len()).min().unwrap_or(0);
        let plot = LinePlot {
            title: "Boundary curvature suprema".into(),
            x_label: "n".into(),
            y_label: "sup |d^k κ|".into(),
            log_x: true,
            series: (0..kmax)
                .map(|k| Series { name: format!("k = {k}"), points: diag.rows.iter().map(|r| (r.n as f64, r.sup_kappa[k])).collect() })
                .collect(),
        };
        save("curvature.svg", plot.render())?;
    }
    let polygon = cfg.polygon.build()?;
    let params = cfg.rounding_params(&polygon)?;
    let domains: Vec<RoundedDomain> = cfg.n_list.iter().filter_map(|&n| construct_rounded_domain(&polygon, &params.at(n)).ok()).collect();
    if !domains.is_empty() {
        let refs: Vec<&RoundedDomain> = domains.iter().collect();
        save("domains.svg", domain_overlay(&refs))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::is_well_formed;

    fn quick(n_list: Vec<u32>) -> ExperimentConfig {
        ExperimentConfig {
            polygon: PolygonSpec::Preset("square".into()),
            n_list,
            a_list: vec![0.0, 0.5],
            h_max: 0.15,
            beta: 1.2,
            h_min: 1e-3,
            eigen: false,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"polygon": "square", "rho": 0.1, "rho_prime": "auto"}"#).unwrap();
        assert_eq!(cfg.n_list, vec![1, 2, 4, 8, 16]);
        assert_eq!(cfg.rho, ParamSpec::Value(0.1));
        assert!(ExperimentConfig::from_json(r#"{"n_list": [2, 1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"n_list": [0, 1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"a_list": [1.5]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"rho": "big"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"colour": 1}"#).is_err());
        let verts = ExperimentConfig::from_json(r#"{"polygon": [[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(verts.polygon.build().unwrap().len(), 3);
        assert_eq!(cfg.hash(), cfg.clone().hash());
        assert_ne!(cfg.hash(), verts.hash());
    }

    #[test]
    fn random_bumps_are_seeded() {
        let sq = Polygon::preset("square").unwrap();
        let cfg = ExperimentConfig { source: SourcePreset::RandomBump, seed: 7, ..ExperimentConfig::default() };
        let x = Vec2::new(0.3, 0.6);
        assert_eq!(cfg.source(&sq).eval(x), cfg.source(&sq).eval(x));
        let other = ExperimentConfig { seed: 8, ..cfg.clone() };
        assert_ne!(cfg.source(&sq).eval(x), other.source(&sq).eval(x));
    }

    #[test]
    fn sweep_rows_are_independent_and_reproducible() {
        let joint = run_sweep(&quick(vec![1, 2])).unwrap();
        assert_eq!(joint.rows.len(), 4);
        assert!(!joint.any_error(), "{:?}", joint.rows);
        assert!(joint.rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite)));
        let alone = run_sweep(&quick(vec![2])).unwrap();
        assert_eq!(alone.rows[..], joint.rows[2..]);
        let mut a = Vec::new();
        let mut b = Vec::new();
        joint.write_csv(&mut a).unwrap();
        run_sweep(&quick(vec![1, 2])).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let back = ResultTable::read_csv_rows(&a[..]).unwrap();
        assert_eq!(back, joint.rows);
    }

    #[test]
    fn row_failures_are_recorded() {
        let cfg = ExperimentConfig { order: 1, ..quick(vec![1]) };
        let table = run_sweep(&cfg).unwrap();
        assert!(table.any_error());
        assert!(table.rows[0].error.as_deref().unwrap().starts_with("norms:"));
    }

    #[test]
    fn zero_source_converges_trivially() {
        let cfg = ExperimentConfig { source: SourcePreset::Zero, n_list: vec![1, 2], order: 1, h_max: 0.2, ..quick(vec![1]) };
        let table = convergence_study(&cfg).unwrap();
        assert!(table.rows.iter().all(|r| r.l2_difference == Some(0.0)));
    }

    #[test]
    fn square_differences_decrease() {
        let cfg = ExperimentConfig {
            polygon: PolygonSpec::Preset("square".into()),
            n_list: vec![1, 2, 4, 8],
            a_list: vec![0.0],
            h_max: 0.05,
            ..ExperimentConfig::default()
        };
        let table = convergence_study(&cfg).unwrap();
        let d: Vec<f64> = table.rows.iter().map(|r| r.l2_difference.unwrap()).collect();
        assert!(d.windows(2).all(|p| p[1] < p[0]), "{d:?}");
        assert!(table.rows.iter().all(|r| !r.floor));
    }

    #[test]
    fn plots_for_single_row() {
        let dir = std::env::temp_dir().join(format!("kondratiev-plots-{}", std::process::id()));
        let table = ResultTable {
            rows: vec![ResultRow { ratio: Some(1.5), lambda_min: Some(0.1), ..ResultRow::empty(1, 0.3) }],
            diagnostics: None,
            metadata: Metadata { config_hash: String::new(), version: String::new(), created_unix: 0 },
        };
        let cfg = ExperimentConfig { polygon: PolygonSpec::Preset("square".into()), n_list: vec![1, 2, 4], ..ExperimentConfig::default() };
        let files = emit_plots(&table, &cfg, &dir).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            assert!(is_well_formed(&fs::read_to_string(f).unwrap()));
        }
        let empty = ResultTable { rows: vec![], ..table };
        assert!(matches!(emit_plots(&empty, &cfg, &dir), Err(HarnessError::EmptyTable)));
        fs::remove_dir_all(&dir).unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn config_round_trips(steps in proptest::collection::vec(1u32..5, 1..6), a in proptest::collection::vec(-1.0f64..1.0, 1..4), seed in any::<u64>()) {
                let n_list: Vec<u32> = steps.iter().scan(0, |acc, s| { *acc += s; Some(*acc) }).collect();
                let cfg = ExperimentConfig { n_list, a_list: a, seed, ..ExperimentConfig::default() };
                let text = serde_json::to_string(&cfg).unwrap();
                let back = ExperimentConfig::from_json(&text).unwrap();
                prop_assert_eq!(back.hash(), cfg.hash());
                prop_assert_eq!(back, cfg);
            }
        }
    }
}
