//! Run configuration: a JSON document whose every field can be overridden
//! from the command line by its dotted path, e.g. `--mc.seed 7`.

use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use rmt_jacobi::model::DEFAULT_MIN_GAP;
use rmt_jacobi::{Beta, CorrelationSpectrum, Domain, EnsembleParams, EvaluationGrid};

use crate::error::{CliError, Result};

/// The 32 correlation eigenvalues of the bundled `outliers32` preset.
pub const OUTLIER_LAMBDAS: [f64; 32] = [
    294.845, 34.679, 30.311, 11.612, 10.733, 9.468, 8.232, 5.307, 4.144, 2.443, 2.429, 2.218, 2.083, 1.986, 1.406,
    1.382, 1.102, 1.001, 0.889, 0.707, 0.693, 0.684, 0.665, 0.63, 0.594, 0.591, 0.576, 0.574, 0.562, 0.467, 0.463,
    0.455,
];

/// Above this size the exact real density gets slow (its double sums grow
/// like `p^4` quadratures).
pub const EXACT_REAL_COST_WARN_P: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: EnsembleParams,
    pub spectrum: SpectrumSource,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Where `Λ` comes from. Exactly one of `lambdas`, `c_f`+`c_b`, `random`
/// and `preset` must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Smallest accepted relative gap between neighbouring eigenvalues. Zero
    /// admits repeated values, which only the asymptotic method handles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
}

const SOURCE_KEYS: [&str; 5] = ["lambdas", "c_f", "c_b", "random", "preset"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpectrum {
    pub count: usize,
    #[serde(default)]
    pub distribution: SpectrumDistribution,
    /// Standard deviation of the Gaussian, or the upper end of the uniform
    /// interval `(0, scale]`.
    #[serde(default = "one")]
    pub scale: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumDistribution {
    /// `|N(0, scale²)|`.
    #[default]
    AbsGaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Mc,
    Exact,
    Asymptotic,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    #[default]
    Jacobi,
    Cl,
}

impl Ensemble {
    pub fn domain(self) -> Domain {
        match self {
            Ensemble::Jacobi => Domain::Jacobi,
            Ensemble::Cl => Domain::CauchyLorentz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    /// Defaults: `±0.999` for Jacobi, `[1e-3, 1e3]` for Cauchy-Lorentz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Defaults to uniform for Jacobi and log for Cauchy-Lorentz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Spacing>,
}

fn default_points() -> usize {
    400
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: default_points(),
            lo: None,
            hi: None,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_samples")]
    pub num_samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    50_000
}

fn default_bins() -> usize {
    60
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
    /// Raw eigenvalues written by `sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_path: Option<PathBuf>,
}

impl OutputSpec {
    pub fn csv_or(&self, command: &str) -> PathBuf {
        self.csv_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("rmt-jacobi-{command}.csv")))
    }

    pub fn json_or(&self, command: &str) -> PathBuf {
        self.json_path
            .clone()
            .unwrap_or_else(|| self.csv_or(command).with_extension("json"))
    }

    pub fn samples_or(&self, command: &str) -> PathBuf {
        self.samples_path
            .clone()
            .unwrap_or_else(|| self.csv_or(command).with_extension("samples.csv"))
    }
}

/// Reads a config (or the sidecar of an earlier run, whose `config` field is
/// used) and applies dotted overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: not valid JSON: {e}", p.display())))?;
            match v {
                Value::Object(mut m) if m.contains_key("command") && m.contains_key("config") => {
                    m.remove("config").unwrap()
                }
                other => other,
            }
        }
        None => Value::Object(Map::new()),
    };
    for (key, value) in parse_overrides(overrides)? {
        apply_override(&mut doc, &key, value)?;
    }
    from_value(doc)
}

pub fn from_value(doc: Value) -> Result<RunConfig> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        CliError::usage(format!("config field `{path}`: {}", e.into_inner()))
    })
}

/// `--a.b=v` and `--a.b v` pairs. Values are read as JSON when they parse,
/// as strings otherwise.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, Value)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CliError::usage(format!("unexpected argument `{arg}`")));
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::usage(format!("override `--{flag}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(CliError::usage(format!("malformed override `--{flag}`")));
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        out.push((key, value));
    }
    Ok(out)
}

/// Sets `key` (dotted) in `doc`, creating objects on the way. Setting one
/// spectrum source drops the others, so a preset can replace a list given
/// in the file.
pub fn apply_override(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() == 2 && parts[0] == "spectrum" && SOURCE_KEYS.contains(&parts[1]) {
        if let Some(Value::Object(s)) = doc.get_mut("spectrum") {
            let keep: &[&str] = match parts[1] {
                "c_f" | "c_b" => &["c_f", "c_b"],
                other => &[other][..],
            };
            for k in SOURCE_KEYS.iter().filter(|k| !keep.contains(k)) {
                s.remove(*k);
            }
        }
    }
    let mut node = doc;
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            let parent = parts[..i].join(".");
            return Err(CliError::usage(format!(
                "cannot set `{key}`: `{parent}` is not an object"
            )));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("override keys are non-empty")
}

impl RunConfig {
    /// The spectrum named by the config, checked against `params`.
    pub fn resolve_spectrum(&self) -> Result<CorrelationSpectrum> {
        let s = &self.spectrum;
        let sources = [
            s.lambdas.is_some(),
            s.c_f.is_some() || s.c_b.is_some(),
            s.random.is_some(),
            s.preset.is_some(),
        ];
        match sources.iter().filter(|b| **b).count() {
            1 => {}
            0 => {
                return Err(CliError::usage(
                    "config field `spectrum`: set one of lambdas, c_f + c_b, random, preset",
                ))
            }
            _ => {
                return Err(CliError::usage(
                    "config field `spectrum`: more than one spectrum source given",
                ))
            }
        }
        let values = if let Some(l) = &s.lambdas {
            l.clone()
        } else if let Some(r) = &s.random {
            draw_random(r)?
        } else if let Some(name) = &s.preset {
            preset(name)?
        } else {
            match (&s.c_f, &s.c_b) {
                (Some(f), Some(b)) => effective_spectrum(f, b)?,
                _ => return Err(CliError::usage("config field `spectrum`: c_f and c_b go together")),
            }
        };
        let gap = s.min_gap.unwrap_or(DEFAULT_MIN_GAP);
        let spec = CorrelationSpectrum::with_min_gap(values, gap)
            .map_err(|e| CliError::usage(format!("config field `spectrum`: {e}")))?;
        spec.check_against(&self.params)
            .map_err(|e| CliError::usage(format!("config field `spectrum`: {e}")))?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<EvaluationGrid> {
        let g = &self.grid;
        let (lo, hi, spacing) = match self.ensemble {
            Ensemble::Jacobi => (
                g.lo.unwrap_or(-0.999),
                g.hi.unwrap_or(0.999),
                g.spacing.unwrap_or(Spacing::Uniform),
            ),
            Ensemble::Cl => (
                g.lo.unwrap_or(1e-3),
                g.hi.unwrap_or(1e3),
                g.spacing.unwrap_or(Spacing::Log),
            ),
        };
        let grid = match spacing {
            Spacing::Uniform => EvaluationGrid::uniform(self.ensemble.domain(), g.points, lo, hi),
            Spacing::Log if self.ensemble == Ensemble::Cl => EvaluationGrid::log_uniform(g.points, lo, hi),
            Spacing::Log => Err(rmt_jacobi::Error::invalid("log spacing needs the cl ensemble")),
        };
        grid.map_err(|e| CliError::usage(format!("config field `grid`: {e}")))
    }

    pub fn mc(&self) -> Result<&McSpec> {
        let mc = self
            .mc
            .as_ref()
            .ok_or_else(|| CliError::usage("config field `mc`: this command needs an mc block"))?;
        if mc.num_samples == 0 {
            return Err(CliError::usage("config field `mc.num_samples`: must be positive"));
        }
        if mc.bins == 0 {
            return Err(CliError::usage("config field `mc.bins`: must be positive"));
        }
        Ok(mc)
    }

    /// Logs the cost warning for slow exact runs.
    pub fn warn_on_cost(&self) {
        let exact = matches!(self.method, MethodChoice::Exact | MethodChoice::All);
        if exact && self.params.beta() == Beta::Real && self.params.p() > EXACT_REAL_COST_WARN_P {
            warn!(
                "exact beta = 1 density at p = {} costs O(p^4) quadratures per point; expect a long run",
                self.params.p()
            );
        }
    }
}

fn preset(name: &str) -> Result<Vec<f64>> {
    match name {
        "outliers32" => Ok(OUTLIER_LAMBDAS.to_vec()),
        other => Err(CliError::usage(format!(
            "config field `spectrum.preset`: unknown preset `{other}` (known: outliers32)"
        ))),
    }
}

fn draw_random(r: &RandomSpectrum) -> Result<Vec<f64>> {
    if r.count == 0 {
        return Err(CliError::usage(
            "config field `spectrum.random.count`: must be positive",
        ));
    }
    if !(r.scale.is_finite() && r.scale > 0.0) {
        return Err(CliError::usage(
            "config field `spectrum.random.scale`: must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut out = Vec::with_capacity(r.count);
    match r.distribution {
        SpectrumDistribution::AbsGaussian => {
            let normal = Normal::new(0.0, r.scale).expect("scale checked above");
            while out.len() < r.count {
                let v: f64 = normal.sample(&mut rng);
                if v != 0.0 {
                    out.push(v.abs());
                }
            }
        }
        SpectrumDistribution::Uniform => {
            for _ in 0..r.count {
                let u: f64 = rand::Rng::random(&mut rng);
                out.push(r.scale * (1.0 - u));
            }
        }
    }
    Ok(out)
}

fn square(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::usage(format!(
            "config field `spectrum.{name}`: must be a non-empty square matrix"
        )));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(CliError::usage(format!(
            "config field `spectrum.{name}`: not symmetric"
        )));
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Eigenvalues of `C_F^{-1/2} C_B C_F^{-1/2}`.
pub fn effective_spectrum(c_f: &[Vec<f64>], c_b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let f = square("c_f", c_f)?;
    let b = square("c_b", c_b)?;
    if f.nrows() != b.nrows() {
        return Err(CliError::usage("config field `spectrum`: c_f and c_b differ in size"));
    }
    let eig = f.symmetric_eigen();
    if eig.eigenvalues.iter().any(|d| !(*d > 0.0)) {
        return Err(CliError::usage("config field `spectrum.c_f`: not positive definite"));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|d| 1.0 / d.sqrt()));
    let root = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let c = &root * b * &root;
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().iter().copied().collect())
}
