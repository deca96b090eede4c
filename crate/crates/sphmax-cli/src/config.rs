//! JSON job configurations. Every subcommand has a matching job structure;
//! the `run` subcommand deserializes a tagged document into [`RunConfig`].
//! Unknown keys are rejected, and exponents are accepted only as exact
//! fraction strings so that region classification never sees a float.

use std::path::PathBuf;
use std::sync::Arc;

use num_rational::Ratio;
use serde::Deserialize;

use sphmax::error::{Error, Result};
use sphmax::functions::{LatticeGrid, TestFunction};
use sphmax::region::Q;

/// Parse an exact fraction: "3/4", "1", or "0".
pub fn parse_fraction(text: &str) -> Result<Q> {
    let bad = || Error::Config(format!("expected an exact fraction like 3/4, got {text:?}"));
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| bad())?;
        let d: i64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Ratio::new(n, d))
    } else {
        let n: i64 = t.parse().map_err(|_| bad())?;
        Ok(Ratio::from_integer(n))
    }
}

/// Parse a comma-separated list of fractions.
pub fn parse_fractions(text: &str) -> Result<Vec<Q>> {
    text.split(',').map(parse_fraction).collect()
}

/// Parse slicing cases like "2,2,1;3,2,1".
pub fn parse_cases(text: &str) -> Result<Vec<(usize, usize, usize)>> {
    text.split(';')
        .map(|case| {
            let parts: Vec<&str> = case.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "expected m,n,k triple, got {case:?}"
                )));
            }
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad integer in case {case:?}")))
                })
                .collect::<Result<_>>()?;
            Ok((nums[0], nums[1], nums[2]))
        })
        .collect()
}

fn default_seed() -> u64 {
    0
}
fn default_nodes() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceCheckJob {
    pub cases: Vec<[usize; 3]>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop1Job {
    pub m: usize,
    pub n: usize,
    /// Exact fractions "a/b".
    pub recips: Vec<String>,
    pub r_list: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub ball_nodes: Option<usize>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
    #[serde(default)]
    pub plot: Option<PathBuf>,
    /// Also run the beyond-critical divergence check at this scan radius.
    #[serde(default)]
    pub divergence_check_r: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop2Job {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r_list: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub ball_nodes: Option<usize>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
    #[serde(default)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma2Job {
    pub r1: f64,
    pub r2: f64,
    pub c: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

fn default_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationJob {
    pub m: usize,
    pub n: usize,
    /// Nodes per mean; 0 selects the standard density for m.
    #[serde(default)]
    pub nodes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Triple-density calibration run: reports the suggested constant
    /// instead of gating against the frozen one.
    #[serde(default)]
    pub calibrate: bool,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionJob {
    pub m: Option<usize>,
    pub n: usize,
    pub recips: Vec<String>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerticesJob {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
}

/// Analytic function descriptions for operator evaluation.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
    },
    RadialPowerLog {
        power: f64,
        log_power: f64,
        cutoff: f64,
    },
    /// A lattice field loaded from CSV (see the lattice CSV layout).
    LatticeCsv {
        path: PathBuf,
    },
}

impl FunctionSpec {
    pub fn build(&self, dim: usize) -> Result<TestFunction> {
        match self {
            FunctionSpec::Constant { value } => Ok(TestFunction::constant(dim, *value)),
            FunctionSpec::Ball { center, radius } => {
                TestFunction::ball_indicator(center.clone(), *radius)
            }
            FunctionSpec::Gaussian { center, width } => {
                TestFunction::gaussian(center.clone(), *width)
            }
            FunctionSpec::RadialPowerLog {
                power,
                log_power,
                cutoff,
            } => TestFunction::radial_power_log(dim, *power, *log_power, *cutoff),
            FunctionSpec::LatticeCsv { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                Ok(TestFunction::LatticeField(Arc::new(LatticeGrid::from_csv(
                    &text,
                )?)))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub half_width: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Mean,
    Maximal,
    MaximalIndependent,
    HardyLittlewood,
    LinearSpherical,
    DominationRatio,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorEvalJob {
    pub op: OperatorKind,
    pub m: usize,
    pub n: usize,
    pub functions: Vec<FunctionSpec>,
    /// Single evaluation point...
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    /// ...or a whole lattice of them (field output as lattice CSV).
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_quad_nodes")]
    pub nodes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub radius_grid: Option<GridSpec>,
    /// Per-factor grids for the independent-dilation operator.
    #[serde(default)]
    pub factor_grids: Option<Vec<GridSpec>>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

fn default_quad_nodes() -> usize {
    10_000
}

/// The full batch configuration: one tagged job.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunConfig {
    SliceCheck(SliceCheckJob),
    OperatorEval(OperatorEvalJob),
    Domination(DominationJob),
    Prop1(Prop1Job),
    Prop2(Prop2Job),
    Lemma2(Lemma2Job),
    Region(RegionJob),
    Vertices(VerticesJob),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config JSON: {e}")))
    }
}
