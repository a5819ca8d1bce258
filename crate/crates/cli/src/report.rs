//! Result documents and file output. Documents serialize with a stable field
//! order, so re-running a command reproduces the file byte for byte apart
//! from the elapsed-time field.

use crate::config::ResolvedConfig;
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Display base for entropies, rates, and exponents. Internals are nats;
/// conversion happens once, at the document boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Bits,
    Nats,
}

impl Base {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Base::Bits => jscc::nats_to_bits(nats),
            Base::Nats => nats,
        }
    }

    pub fn convert_opt(self, nats: Option<f64>) -> Option<f64> {
        nats.map(|v| self.convert(v))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "jscc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Everything a command writes to result.json.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub base: Base,
    pub config: ResolvedConfig,
    #[serde(flatten)]
    pub body: Body,
    pub elapsed_ms: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Exponent(ExponentSection),
    Sweep(SweepSection),
    Bound(BoundSection),
    Simulate(SimulateSection),
    Partition(PartitionSection),
}

/// A maximum together with its maximizing rho.
#[derive(Debug, Serialize, Deserialize)]
pub struct ValueAtRho {
    pub value: f64,
    pub rho_star: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValueAtRate {
    pub value: f64,
    pub rate_star: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpherePacking {
    pub value: f64,
    pub infinite: bool,
    pub rate_star: Option<f64>,
    /// Whether the converse meets the achievable exponent at the minimizing
    /// rate.
    pub tight: Option<bool>,
}

/// Two-class construction attaining the hull-form exponent.
#[derive(Debug, Serialize, Deserialize)]
pub struct Construction {
    pub value: f64,
    /// True when the supporting pair collapsed to one distribution.
    pub degenerate: bool,
    pub rho0: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub gamma0: Option<f64>,
    /// Threshold actually usable as a probability, min(1, gamma0).
    pub gamma: Option<f64>,
    pub q1: Option<Vec<f64>>,
    pub q2: Option<Vec<f64>>,
    pub q_star: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExponentSection {
    pub entropy: f64,
    pub capacity: f64,
    pub critical_rate: f64,
    pub gallager: ValueAtRho,
    pub csiszar_dual: ValueAtRho,
    pub csiszar_primal: ValueAtRate,
    pub sphere_packing: SpherePacking,
    pub construction: Construction,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepSection {
    pub gallager: f64,
    pub csiszar: f64,
    pub construction: Construction,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassTermReport {
    pub class: String,
    pub rho_star: f64,
    /// Per-block exponent of this class's term.
    pub exponent: f64,
    pub log_mass: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BoundSection {
    pub k: usize,
    pub n: usize,
    pub gamma: f64,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// Log of the raw bound, in the display base.
    pub log_total: f64,
    /// -log_total / n, an exponent in the display base.
    pub normalized_exponent: f64,
    pub prefactor: f64,
    pub nonempty_classes: usize,
    pub declared_classes: usize,
    pub display_total: f64,
    pub terms: Vec<ClassTermReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateSection {
    pub mode: String,
    pub k: usize,
    pub n: usize,
    pub gamma: f64,
    pub trials: u64,
    pub seed: Option<u64>,
    pub estimate: f64,
    /// Wilson 95% half-width; zero in exact mode.
    pub half_width: f64,
    pub tie_policy: String,
    pub best_codebook_error: Option<f64>,
    /// Matching analytic bound, for domination checks.
    pub bound: BoundSection,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompositionReport {
    pub counts: Vec<usize>,
    pub class: String,
    /// Sequence count as a decimal string; may exceed what a JSON number
    /// carries exactly.
    pub sequences: String,
    pub log_seq_prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionSection {
    pub k: usize,
    pub gamma: f64,
    pub class_sizes: [String; 2],
    pub class_mass: [f64; 2],
    pub log_class_mass: [f64; 2],
    pub compositions: Vec<CompositionReport>,
}

/// Writes via a temp file in the same directory so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn write_document(out_dir: &Path, doc: &ResultDocument) -> Result<PathBuf, CliError> {
    let path = out_dir.join("result.json");
    let mut bytes = serde_json::to_vec_pretty(doc)
        .map_err(|e| CliError::Io(format!("result.json: {e}")))?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// 12 significant digits, enough to diff regressions in downstream plots.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// RFC-4180 CSV: CRLF line endings, constant column count. Values here never
/// need quoting.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push_str("\r\n");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push_str("\r\n");
    }
    write_atomic(path, text.as_bytes())
}
