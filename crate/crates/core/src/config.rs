//! Run configuration: a versioned TOML schema covering geometry, materials,
//! scaling regime, loads, discretization, solver control, study parameters
//! and output locations.
//!
//! Every key has a documented default, so the minimal valid file is just
//!
//! ```toml
//! schema_version = 1
//! ```
//!
//! Unknown keys are rejected (with a nearest-key suggestion) rather than
//! ignored, so typos cannot silently fall back to defaults. The fully
//! resolved configuration — defaults filled in — can be re-serialized with
//! [`RunConfig::resolved_toml`] and is persisted next to the outputs of
//! every run for provenance.
//!
//! # Schema
//!
//! ```toml
//! schema_version = 1        # required, must be 1
//!
//! [geometry]
//! a = 1.0                   # mid-surface is (-a, b) x (-c, d)
//! b = 1.0
//! c = 1.0
//! d = 1.0
//! rod_length = 1.0
//! clamped_edges = ["left"]  # subset of left / right / bottom / top
//!
//! [material]                # Lame parameters of plate and rod
//! lambda_p = 1.0
//! mu_p = 1.0
//! lambda_r = 1.0
//! mu_r = 1.0
//!
//! [regime]
//! kappa = 3.0               # plate exponent, >= 3 (3 couples the plate)
//! kappa_prime = 3.0         # rod exponent, >= 3 (3 couples the rod)
//! epsilon = 0.1             # rod radius; delta and q_eps are derived
//!
//! [forces]                  # component expression triples; "0" = absent
//! f_p = ["0", "0", "0"]     # over x1, x2 (mid-surface density)
//! f_r = ["0", "0", "0"]     # over x3 (rod axis density)
//! g1 = ["0", "0", "0"]      # over x3 (first-moment density, e1)
//! g2 = ["0", "0", "0"]      # over x3 (first-moment density, e2)
//! # f_r_table / g1_table / g2_table = "profile.csv"  (x3,v1,v2,v3 rows;
//! # alternative to the expression form, linear interpolation)
//!
//! [discretization]
//! n1 = 8                    # plate cells along x1
//! n2 = 8                    # plate cells along x2
//! n_r = 16                  # rod intervals
//! plate_quadrature = 5      # Gauss points per axis per plate cell
//! rod_quadrature = 6        # Gauss points per rod interval
//!
//! [solver]
//! tol = 1e-10               # relative residual tolerance
//! max_iter = 30
//! continuation_steps = 1    # load ramp stages in the coupled regimes
//! # advisory_threshold = 10.0  # warn when N(f_p) + N(f_r) exceeds this
//!
//! [study]
//! deltas = [0.2, 0.1, 0.05, 0.025]   # strictly decreasing
//! mollification = 2         # cutoff index n (junction band (1/n, 2/n))
//! warpings = "optimal"      # or "zero"
//! plate_cells = 16          # 3D-bridge quadrature resolution caps
//! plate_gauss = 3
//! thickness_points = 6
//! disc_radial = 6
//! disc_angular = 12
//! axial_cells = 24
//! axial_gauss = 4
//!
//! [output]
//! dir = "platerod-out"
//! plate_samples = 25        # field-dump grid points per mid-surface axis
//! rod_samples = 51          # field-dump points along the rod
//! ```
//!
//! Force expressions accept numeric literals, `+ - * / ^`, parentheses, the
//! functions `sin cos tan exp log sqrt abs sinh cosh tanh`, the constant
//! `pi`, and the coordinate names listed above.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bridge::{BridgeResolution, WarpingChoice};
use crate::error::{Error, Result};
use crate::limit::Materials;
use crate::model::{Edge, ForceData, Geometry, LameParams, Profile, Table1d};

/// Fully validated run configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub materials: Materials,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub epsilon: f64,
    pub forces: ForceData,
    pub n1: usize,
    pub n2: usize,
    pub n_r: usize,
    pub plate_quadrature: usize,
    pub rod_quadrature: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub continuation_steps: usize,
    pub advisory_threshold: Option<f64>,
    pub deltas: Vec<f64>,
    pub mollification: usize,
    pub warpings: WarpingChoice,
    pub resolution: BridgeResolution,
    pub out_dir: PathBuf,
    pub plate_samples: usize,
    pub rod_samples: usize,
    /// The raw (pre-resolution) schema values, kept to re-serialize the
    /// resolved provenance file deterministically.
    raw: RawConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<i64>,
    #[serde(default)]
    geometry: GeometrySec,
    #[serde(default)]
    material: MaterialSec,
    #[serde(default)]
    regime: RegimeSec,
    #[serde(default)]
    forces: ForcesSec,
    #[serde(default)]
    discretization: DiscretizationSec,
    #[serde(default)]
    solver: SolverSec,
    #[serde(default)]
    study: StudySec,
    #[serde(default)]
    output: OutputSec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySec {
    #[serde(default = "d_one")]
    a: f64,
    #[serde(default = "d_one")]
    b: f64,
    #[serde(default = "d_one")]
    c: f64,
    #[serde(default = "d_one")]
    d: f64,
    #[serde(default = "d_one")]
    rod_length: f64,
    #[serde(default = "d_left")]
    clamped_edges: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSec {
    #[serde(default = "d_one")]
    lambda_p: f64,
    #[serde(default = "d_one")]
    mu_p: f64,
    #[serde(default = "d_one")]
    lambda_r: f64,
    #[serde(default = "d_one")]
    mu_r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeSec {
    #[serde(default = "d_three")]
    kappa: f64,
    #[serde(default = "d_three")]
    kappa_prime: f64,
    #[serde(default = "d_eps")]
    epsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForcesSec {
    #[serde(default = "d_zero3")]
    f_p: [String; 3],
    #[serde(default = "d_zero3")]
    f_r: [String; 3],
    #[serde(default = "d_zero3")]
    g1: [String; 3],
    #[serde(default = "d_zero3")]
    g2: [String; 3],
    f_r_table: Option<String>,
    g1_table: Option<String>,
    g2_table: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscretizationSec {
    #[serde(default = "d_eight")]
    n1: usize,
    #[serde(default = "d_eight")]
    n2: usize,
    #[serde(default = "d_sixteen")]
    n_r: usize,
    #[serde(default = "d_five")]
    plate_quadrature: usize,
    #[serde(default = "d_six")]
    rod_quadrature: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSec {
    #[serde(default = "d_tol")]
    tol: f64,
    #[serde(default = "d_thirty")]
    max_iter: usize,
    #[serde(default = "d_one_usize")]
    continuation_steps: usize,
    advisory_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudySec {
    #[serde(default = "d_deltas")]
    deltas: Vec<f64>,
    #[serde(default = "d_two")]
    mollification: usize,
    #[serde(default = "d_optimal")]
    warpings: String,
    #[serde(default = "d_sixteen")]
    plate_cells: usize,
    #[serde(default = "d_three_usize")]
    plate_gauss: usize,
    #[serde(default = "d_six")]
    thickness_points: usize,
    #[serde(default = "d_six")]
    disc_radial: usize,
    #[serde(default = "d_twelve")]
    disc_angular: usize,
    #[serde(default = "d_twentyfour")]
    axial_cells: usize,
    #[serde(default = "d_four")]
    axial_gauss: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSec {
    #[serde(default = "d_outdir")]
    dir: String,
    #[serde(default = "d_twentyfive")]
    plate_samples: usize,
    #[serde(default = "d_fiftyone")]
    rod_samples: usize,
}

fn d_one() -> f64 {
    1.0
}
fn d_three() -> f64 {
    3.0
}
fn d_eps() -> f64 {
    0.1
}
fn d_tol() -> f64 {
    1e-10
}
fn d_left() -> Vec<String> {
    vec!["left".into()]
}
fn d_zero3() -> [String; 3] {
    ["0".into(), "0".into(), "0".into()]
}
fn d_one_usize() -> usize {
    1
}
fn d_two() -> usize {
    2
}
fn d_three_usize() -> usize {
    3
}
fn d_four() -> usize {
    4
}
fn d_five() -> usize {
    5
}
fn d_six() -> usize {
    6
}
fn d_eight() -> usize {
    8
}
fn d_twelve() -> usize {
    12
}
fn d_sixteen() -> usize {
    16
}
fn d_twentyfour() -> usize {
    24
}
fn d_twentyfive() -> usize {
    25
}
fn d_thirty() -> usize {
    30
}
fn d_fiftyone() -> usize {
    51
}
fn d_deltas() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn d_optimal() -> String {
    "optimal".into()
}
fn d_outdir() -> String {
    "platerod-out".into()
}

impl Default for GeometrySec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for MaterialSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for RegimeSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for ForcesSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for DiscretizationSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for SolverSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for StudySec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}
impl Default for OutputSec {
    fn default() -> Self {
        toml::from_str("").expect("empty section deserializes from defaults")
    }
}

/// Known keys per table, used for typo suggestions before typed parsing.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "schema_version",
            "geometry",
            "material",
            "regime",
            "forces",
            "discretization",
            "solver",
            "study",
            "output",
        ],
    ),
    (
        "geometry",
        &["a", "b", "c", "d", "rod_length", "clamped_edges"],
    ),
    ("material", &["lambda_p", "mu_p", "lambda_r", "mu_r"]),
    ("regime", &["kappa", "kappa_prime", "epsilon"]),
    (
        "forces",
        &[
            "f_p", "f_r", "g1", "g2", "f_r_table", "g1_table", "g2_table",
        ],
    ),
    (
        "discretization",
        &["n1", "n2", "n_r", "plate_quadrature", "rod_quadrature"],
    ),
    (
        "solver",
        &["tol", "max_iter", "continuation_steps", "advisory_threshold"],
    ),
    (
        "study",
        &[
            "deltas",
            "mollification",
            "warpings",
            "plate_cells",
            "plate_gauss",
            "thickness_points",
            "disc_radial",
            "disc_angular",
            "axial_cells",
            "axial_gauss",
        ],
    ),
    ("output", &["dir", "plate_samples", "rod_samples"]),
];

fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggestion(key: &str, known: &[&str]) -> String {
    known
        .iter()
        .map(|k| (edit_distance(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 1 + key.len() / 3)
        .map(|(_, k)| format!(" (did you mean `{k}`?)"))
        .unwrap_or_else(|| format!(" (valid keys: {})", known.join(", ")))
}

/// Reject unknown keys with a nearest-match hint; collects every offender so
/// one pass reports all typos.
fn check_unknown_keys(root: &toml::Table) -> Result<()> {
    let mut errors = Vec::new();
    let (_, top_keys) = SCHEMA[0];
    for (key, val) in root {
        if !top_keys.contains(&key.as_str()) {
            errors.push(format!("unknown key `{key}`{}", suggestion(key, top_keys)));
            continue;
        }
        if key == "schema_version" {
            continue;
        }
        match val.as_table() {
            Some(table) => {
                let Some((_, section_keys)) = SCHEMA.iter().find(|(t, _)| t == key) else {
                    continue;
                };
                for sub in table.keys() {
                    if !section_keys.contains(&sub.as_str()) {
                        errors.push(format!(
                            "unknown key `{sub}` in [{key}]{}",
                            suggestion(sub, section_keys)
                        ));
                    }
                }
            }
            None => errors.push(format!("`{key}` must be a table ([{key}] section)")),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errors.join("; ")))
    }
}

fn parse_edges(names: &[String]) -> Result<Vec<Edge>> {
    if names.is_empty() {
        return Err(Error::Config(
            "geometry.clamped_edges must list at least one edge".into(),
        ));
    }
    let mut edges = Vec::new();
    for n in names {
        let e = match n.as_str() {
            "left" => Edge::Left,
            "right" => Edge::Right,
            "bottom" => Edge::Bottom,
            "top" => Edge::Top,
            other => {
                return Err(Error::Config(format!(
                    "geometry.clamped_edges: unknown edge `{other}` \
                     (expected left, right, bottom or top)"
                )))
            }
        };
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    Ok(edges)
}

/// Load a rod profile table: CSV rows `x3,v1,v2,v3` (a non-numeric first
/// line is treated as a header), strictly increasing in `x3`.
fn load_table(path: &Path) -> Result<Table1d> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read table {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(Error::Config(format!(
                "{}:{}: expected 4 comma-separated columns (x3,v1,v2,v3)",
                path.display(),
                ln + 1
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                xs.push(v[0]);
                vals.push([v[1], v[2], v[3]]);
            }
            Err(_) if ln == 0 => continue, // header row
            Err(e) => {
                return Err(Error::Config(format!(
                    "{}:{}: {e}",
                    path.display(),
                    ln + 1
                )))
            }
        }
    }
    Table1d::new(xs, vals)
}

fn rod_profile(
    name: &str,
    exprs: &[String; 3],
    table: &Option<String>,
    base: &Path,
) -> Result<Profile> {
    match table {
        Some(rel) => {
            if exprs.iter().any(|s| s.trim() != "0") {
                return Err(Error::Config(format!(
                    "forces.{name} and forces.{name}_table are mutually exclusive"
                )));
            }
            Ok(Profile::Table(load_table(&base.join(rel))?))
        }
        None => Profile::from_exprs(exprs, &["x3"])
            .map_err(|e| Error::Config(format!("forces.{name}: {e}"))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(Error::Config(format!(
            "{name} must be at least {min}, got {v}"
        )))
    }
}

/// Parse and validate a configuration file. Table paths inside the file are
/// resolved relative to the file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parse a configuration from text; `base` anchors relative table paths.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
    check_unknown_keys(&doc)?;
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::Config(format!("schema error: {e}")))?;

    match raw.schema_version {
        Some(1) => {}
        Some(v) => {
            return Err(Error::Config(format!(
                "unsupported schema_version {v} (this build reads version 1)"
            )))
        }
        None => {
            return Err(Error::Config(
                "missing `schema_version` (add `schema_version = 1`)".into(),
            ))
        }
    }

    let g = &raw.geometry;
    let geometry = Geometry::new(
        g.a,
        g.b,
        g.c,
        g.d,
        g.rod_length,
        parse_edges(&g.clamped_edges)?,
    )
    .map_err(|e| Error::Config(format!("geometry: {e}")))?;

    let m = &raw.material;
    let materials = Materials {
        plate: LameParams::new(m.lambda_p, m.mu_p)
            .map_err(|e| Error::Config(format!("material: {e}")))?,
        rod: LameParams::new(m.lambda_r, m.mu_r)
            .map_err(|e| Error::Config(format!("material: {e}")))?,
    };

    let r = &raw.regime;
    if r.kappa < 3.0 || r.kappa.is_nan() {
        return Err(Error::Config(format!(
            "regime.kappa must satisfy kappa >= 3, got {}",
            r.kappa
        )));
    }
    if r.kappa_prime < 3.0 || r.kappa_prime.is_nan() {
        return Err(Error::Config(format!(
            "regime.kappa_prime must satisfy kappa_prime >= 3, got {}",
            r.kappa_prime
        )));
    }
    if !(r.epsilon > 0.0 && r.epsilon < 1.0) {
        return Err(Error::Config(format!(
            "regime.epsilon must lie in (0, 1), got {}",
            r.epsilon
        )));
    }

    let f = &raw.forces;
    let forces = ForceData {
        fp: Profile::from_exprs(&f.f_p, &["x1", "x2"])
            .map_err(|e| Error::Config(format!("forces.f_p: {e}")))?,
        fr: rod_profile("f_r", &f.f_r, &f.f_r_table, base)?,
        g1: rod_profile("g1", &f.g1, &f.g1_table, base)?,
        g2: rod_profile("g2", &f.g2, &f.g2_table, base)?,
    };

    let di = &raw.discretization;
    let so = &raw.solver;
    let st = &raw.study;
    let ou = &raw.output;

    if st.deltas.is_empty() {
        return Err(Error::Config("study.deltas must not be empty".into()));
    }
    for &dl in &st.deltas {
        positive("study.deltas entries", dl)?;
        if dl >= 1.0 {
            return Err(Error::Config(format!(
                "study.deltas entries must lie in (0, 1), got {dl}"
            )));
        }
    }
    if !st.deltas.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::Config(
            "study.deltas must be strictly decreasing".into(),
        ));
    }
    let warpings = match st.warpings.as_str() {
        "optimal" => WarpingChoice::Optimal,
        "zero" => WarpingChoice::Zero,
        other => {
            return Err(Error::Config(format!(
                "study.warpings must be \"optimal\" or \"zero\", got \"{other}\""
            )))
        }
    };
    if let Some(t) = so.advisory_threshold {
        positive("solver.advisory_threshold", t)?;
    }

    let cfg = RunConfig {
        geometry,
        materials,
        kappa: r.kappa,
        kappa_prime: r.kappa_prime,
        epsilon: r.epsilon,
        forces,
        n1: at_least("discretization.n1", di.n1, 1)?,
        n2: at_least("discretization.n2", di.n2, 1)?,
        n_r: at_least("discretization.n_r", di.n_r, 1)?,
        plate_quadrature: at_least("discretization.plate_quadrature", di.plate_quadrature, 2)?,
        rod_quadrature: at_least("discretization.rod_quadrature", di.rod_quadrature, 2)?,
        tol: positive("solver.tol", so.tol)?,
        max_iter: at_least("solver.max_iter", so.max_iter, 1)?,
        continuation_steps: at_least("solver.continuation_steps", so.continuation_steps, 1)?,
        advisory_threshold: so.advisory_threshold,
        deltas: st.deltas.clone(),
        mollification: at_least("study.mollification", st.mollification, 2)?,
        warpings,
        resolution: BridgeResolution {
            plate_cells: at_least("study.plate_cells", st.plate_cells, 2)?,
            plate_gauss: at_least("study.plate_gauss", st.plate_gauss, 2)?,
            thickness_points: at_least("study.thickness_points", st.thickness_points, 2)?,
            disc_radial: at_least("study.disc_radial", st.disc_radial, 2)?,
            disc_angular: at_least("study.disc_angular", st.disc_angular, 4)?,
            axial_cells: at_least("study.axial_cells", st.axial_cells, 2)?,
            axial_gauss: at_least("study.axial_gauss", st.axial_gauss, 2)?,
        },
        out_dir: PathBuf::from(&ou.dir),
        plate_samples: at_least("output.plate_samples", ou.plate_samples, 2)?,
        rod_samples: at_least("output.rod_samples", ou.rod_samples, 2)?,
        raw: raw.clone(),
    };
    Ok(cfg)
}

fn toml_str_array(vals: &[String]) -> String {
    let quoted: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", quoted.join(", "))
}

fn toml_f64_array(vals: &[f64]) -> String {
    let formatted: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", formatted.join(", "))
}

impl RunConfig {
    /// Deterministic serialization of the fully resolved configuration
    /// (defaults filled in), persisted next to run outputs for provenance.
    pub fn resolved_toml(&self) -> String {
        let r = &self.raw;
        let mut s = String::new();
        let _ = writeln!(s, "schema_version = 1");
        let _ = writeln!(s);
        let _ = writeln!(s, "[geometry]");
        let _ = writeln!(s, "a = {}", r.geometry.a);
        let _ = writeln!(s, "b = {}", r.geometry.b);
        let _ = writeln!(s, "c = {}", r.geometry.c);
        let _ = writeln!(s, "d = {}", r.geometry.d);
        let _ = writeln!(s, "rod_length = {}", r.geometry.rod_length);
        let _ = writeln!(
            s,
            "clamped_edges = {}",
            toml_str_array(&r.geometry.clamped_edges)
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "[material]");
        let _ = writeln!(s, "lambda_p = {}", r.material.lambda_p);
        let _ = writeln!(s, "mu_p = {}", r.material.mu_p);
        let _ = writeln!(s, "lambda_r = {}", r.material.lambda_r);
        let _ = writeln!(s, "mu_r = {}", r.material.mu_r);
        let _ = writeln!(s);
        let _ = writeln!(s, "[regime]");
        let _ = writeln!(s, "kappa = {}", r.regime.kappa);
        let _ = writeln!(s, "kappa_prime = {}", r.regime.kappa_prime);
        let _ = writeln!(s, "epsilon = {}", r.regime.epsilon);
        let _ = writeln!(s);
        let _ = writeln!(s, "[forces]");
        let _ = writeln!(s, "f_p = {}", toml_str_array(&r.forces.f_p));
        match &r.forces.f_r_table {
            Some(t) => {
                let _ = writeln!(s, "f_r_table = {t:?}");
            }
            None => {
                let _ = writeln!(s, "f_r = {}", toml_str_array(&r.forces.f_r));
            }
        }
        match &r.forces.g1_table {
            Some(t) => {
                let _ = writeln!(s, "g1_table = {t:?}");
            }
            None => {
                let _ = writeln!(s, "g1 = {}", toml_str_array(&r.forces.g1));
            }
        }
        match &r.forces.g2_table {
            Some(t) => {
                let _ = writeln!(s, "g2_table = {t:?}");
            }
            None => {
                let _ = writeln!(s, "g2 = {}", toml_str_array(&r.forces.g2));
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[discretization]");
        let _ = writeln!(s, "n1 = {}", self.n1);
        let _ = writeln!(s, "n2 = {}", self.n2);
        let _ = writeln!(s, "n_r = {}", self.n_r);
        let _ = writeln!(s, "plate_quadrature = {}", self.plate_quadrature);
        let _ = writeln!(s, "rod_quadrature = {}", self.rod_quadrature);
        let _ = writeln!(s);
        let _ = writeln!(s, "[solver]");
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "continuation_steps = {}", self.continuation_steps);
        if let Some(t) = self.advisory_threshold {
            let _ = writeln!(s, "advisory_threshold = {t}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[study]");
        let _ = writeln!(s, "deltas = {}", toml_f64_array(&self.deltas));
        let _ = writeln!(s, "mollification = {}", self.mollification);
        let _ = writeln!(
            s,
            "warpings = {:?}",
            match self.warpings {
                WarpingChoice::Optimal => "optimal",
                WarpingChoice::Zero => "zero",
            }
        );
        let _ = writeln!(s, "plate_cells = {}", self.resolution.plate_cells);
        let _ = writeln!(s, "plate_gauss = {}", self.resolution.plate_gauss);
        let _ = writeln!(s, "thickness_points = {}", self.resolution.thickness_points);
        let _ = writeln!(s, "disc_radial = {}", self.resolution.disc_radial);
        let _ = writeln!(s, "disc_angular = {}", self.resolution.disc_angular);
        let _ = writeln!(s, "axial_cells = {}", self.resolution.axial_cells);
        let _ = writeln!(s, "axial_gauss = {}", self.resolution.axial_gauss);
        let _ = writeln!(s);
        let _ = writeln!(s, "[output]");
        let _ = writeln!(s, "dir = {:?}", r.output.dir);
        let _ = writeln!(s, "plate_samples = {}", self.plate_samples);
        let _ = writeln!(s, "rod_samples = {}", self.rod_samples);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config_str("schema_version = 1\n", Path::new(".")).unwrap();
        assert_eq!(cfg.geometry.a, 1.0);
        assert_eq!(cfg.geometry.rod_length, 1.0);
        assert!(cfg.geometry.clamped(Edge::Left));
        assert!(!cfg.geometry.clamped(Edge::Right));
        assert_eq!(cfg.kappa, 3.0);
        assert_eq!(cfg.epsilon, 0.1);
        assert!(matches!(cfg.forces.fp, Profile::Zero));
        assert_eq!((cfg.n1, cfg.n2, cfg.n_r), (8, 8, 16));
        assert_eq!(cfg.plate_quadrature, 5);
        assert_eq!(cfg.rod_quadrature, 6);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.deltas, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.mollification, 2);
        assert_eq!(cfg.warpings, WarpingChoice::Optimal);
        assert_eq!(cfg.out_dir, PathBuf::from("platerod-out"));
    }

    #[test]
    fn schema_version_is_mandatory_and_checked() {
        let err = parse_config_str("", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("schema_version"));
        let err = parse_config_str("schema_version = 2\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("unsupported"));
    }

    #[test]
    fn small_kappa_is_rejected_naming_the_constraint() {
        let text = "schema_version = 1\n[regime]\nkappa = 2.0\n";
        let err = parse_config_str(text, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kappa >= 3"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_suggestion() {
        let text = "schema_version = 1\n[discretization]\nplate_quadratur = 4\n";
        let err = parse_config_str(text, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("plate_quadratur"), "{msg}");
        assert!(msg.contains("did you mean `plate_quadrature`"), "{msg}");

        let text = "schema_version = 1\n[geometri]\na = 2.0\n";
        let err = parse_config_str(text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("did you mean `geometry`"));

        // Multiple offenders are all reported in one pass.
        let text = "schema_version = 1\n[solver]\ntol2 = 1.0\nmax_iters = 3\n";
        let msg = parse_config_str(text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("tol2") && msg.contains("max_iters"), "{msg}");

        // Keys with no near match still get actionable guidance.
        let text = "schema_version = 1\n[discretization]\nplate_thikness = 0.1\n";
        let msg = parse_config_str(text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("plate_thikness"), "{msg}");
        assert!(msg.contains("valid keys") && msg.contains("plate_quadrature"), "{msg}");
    }

    #[test]
    fn force_expressions_and_validation_errors() {
        let text = r#"
schema_version = 1
[forces]
f_p = ["x1 * x2", "0", "sin(pi * x1)"]
f_r = ["0", "0", "x3^2"]
"#;
        let cfg = parse_config_str(text, Path::new(".")).unwrap();
        assert_eq!(cfg.forces.fp_at(2.0, 3.0)[0], 6.0);
        assert_eq!(cfg.forces.fr_at(2.0)[2], 4.0);

        let bad = "schema_version = 1\n[forces]\nf_p = [\"x3\", \"0\", \"0\"]\n";
        let err = parse_config_str(bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("f_p"));

        let bad = "schema_version = 1\n[study]\ndeltas = [0.1, 0.2]\n";
        let err = parse_config_str(bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("decreasing"));

        let bad = "schema_version = 1\n[geometry]\na = -1.0\n";
        assert!(parse_config_str(bad, Path::new(".")).is_err());
    }

    #[test]
    fn resolved_toml_round_trips_and_is_stable() {
        let text = r#"
schema_version = 1
[regime]
kappa = 4.0
epsilon = 0.2
[study]
warpings = "zero"
deltas = [0.5, 0.25]
"#;
        let cfg = parse_config_str(text, Path::new(".")).unwrap();
        let resolved = cfg.resolved_toml();
        let cfg2 = parse_config_str(&resolved, Path::new(".")).unwrap();
        assert_eq!(cfg2.kappa, 4.0);
        assert_eq!(cfg2.epsilon, 0.2);
        assert_eq!(cfg2.warpings, WarpingChoice::Zero);
        assert_eq!(cfg2.deltas, vec![0.5, 0.25]);
        // Serialization is a fixed point once resolved.
        assert_eq!(resolved, cfg2.resolved_toml());
    }
}
