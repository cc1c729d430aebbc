//! Experiment configuration: a flat key-value file plus CLI overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use jgsa::{Bandwidth, FileFormat, JgsaParams, KernelSpec};

use crate::HarnessError;

/// Where the experiment's two domains come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// The built-in two-domain mixture benchmark.
    Synthetic { samples_per_class: usize },
    /// Feature files on disk.
    Files {
        source: PathBuf,
        target: PathBuf,
        format: FileFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    None,
    Pca,
    Sa,
    Jgsa,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method, HarnessError> {
        match s {
            "none" => Ok(Method::None),
            "pca" => Ok(Method::Pca),
            "sa" => Ok(Method::Sa),
            "jgsa" => Ok(Method::Jgsa),
            other => Err(HarnessError::Config(format!(
                "unknown method `{other}` (expected none|pca|sa|jgsa)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::None => "none",
            Method::Pca => "pca",
            Method::Sa => "sa",
            Method::Jgsa => "jgsa",
        };
        write!(f, "{s}")
    }
}

/// One experiment: data, method, solver parameters, preprocessing, seed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub method: Method,
    pub params: JgsaParams,
    /// None means "the default for the data source": files are normalized,
    /// synthetic data is not.
    pub normalize: Option<bool>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub subsample_source: Option<usize>,
    pub subsample_target: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synthetic {
                samples_per_class: 100,
            },
            method: Method::Jgsa,
            params: JgsaParams::new(2, 10, 0.1),
            normalize: None,
            seed: 0,
            out: None,
            subsample_source: None,
            subsample_target: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{value}` for key `{key}`")))
}

impl ExperimentConfig {
    pub fn parse_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }

    /// Parses the flat `key = value` format. `#` opens a comment, blank
    /// lines are skipped, keys may appear once.
    pub fn parse_str(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut format: Option<FileFormat> = None;
        let mut source: Option<PathBuf> = None;
        let mut target: Option<PathBuf> = None;
        let mut samples_per_class: usize = 100;
        let mut data_kind: Option<String> = None;
        let mut rbf_bandwidth = Bandwidth::Median;
        let mut kernel_kind = "primal".to_string();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    idx + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(HarnessError::Config(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());

            match key {
                "data" => data_kind = Some(value.to_string()),
                "method" => cfg.method = Method::parse(value)?,
                "k" => cfg.params.k = parse_num(key, value)?,
                "t_max" => cfg.params.t_max = parse_num(key, value)?,
                "beta" => cfg.params.beta = parse_num(key, value)?,
                "lambda" => cfg.params.lambda = parse_num(key, value)?,
                "mu" => cfg.params.mu = parse_num(key, value)?,
                "convergence_tol" => cfg.params.convergence_tol = parse_num(key, value)?,
                "kernel" => kernel_kind = value.to_string(),
                "rbf_bandwidth" => {
                    rbf_bandwidth = if value == "median" {
                        Bandwidth::Median
                    } else {
                        Bandwidth::Fixed(parse_num(key, value)?)
                    }
                }
                "normalize" => cfg.normalize = Some(parse_num::<bool>(key, value)?),
                "seed" => cfg.seed = parse_num(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "samples_per_class" => samples_per_class = parse_num(key, value)?,
                "source" => source = Some(PathBuf::from(value)),
                "target" => target = Some(PathBuf::from(value)),
                "format" => {
                    format = Some(match value {
                        "csv" => FileFormat::Csv,
                        "rawmatrix" => FileFormat::RawMatrix,
                        other => {
                            return Err(HarnessError::Config(format!(
                                "unknown format `{other}` (expected csv|rawmatrix)"
                            )))
                        }
                    })
                }
                "subsample_source" => cfg.subsample_source = Some(parse_num(key, value)?),
                "subsample_target" => cfg.subsample_target = Some(parse_num(key, value)?),
                other => {
                    return Err(HarnessError::Config(format!("unknown key `{other}`")));
                }
            }
        }

        cfg.params.kernel = Self::kernel_from(&kernel_kind, rbf_bandwidth)?;
        cfg.data = match data_kind.as_deref() {
            None | Some("synthetic") => DataSource::Synthetic { samples_per_class },
            Some("files") => {
                let source = source
                    .ok_or_else(|| HarnessError::Config("data = files needs `source`".into()))?;
                let target = target
                    .ok_or_else(|| HarnessError::Config("data = files needs `target`".into()))?;
                DataSource::Files {
                    source,
                    target,
                    format: format.unwrap_or(FileFormat::RawMatrix),
                }
            }
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "unknown data source `{other}` (expected synthetic|files)"
                )))
            }
        };
        cfg.params
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn kernel_from(kind: &str, bandwidth: Bandwidth) -> Result<KernelSpec, HarnessError> {
        match kind {
            "primal" => Ok(KernelSpec::Primal),
            "linear" => Ok(KernelSpec::Linear),
            "rbf" => Ok(KernelSpec::Rbf(bandwidth)),
            other => Err(HarnessError::Config(format!(
                "unknown kernel `{other}` (expected primal|linear|rbf)"
            ))),
        }
    }

    /// Files are unit-normalized per sample by default; synthetic data is
    /// used as generated.
    pub fn effective_normalize(&self) -> bool {
        self.normalize
            .unwrap_or(matches!(self.data, DataSource::Files { .. }))
    }

    /// Canonical ordered key-value echo for reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.data {
            DataSource::Synthetic { samples_per_class } => {
                push("data", "synthetic".into());
                push("samples_per_class", samples_per_class.to_string());
            }
            DataSource::Files {
                source,
                target,
                format,
            } => {
                push("data", "files".into());
                push("source", source.display().to_string());
                push("target", target.display().to_string());
                push(
                    "format",
                    match format {
                        FileFormat::Csv => "csv".into(),
                        FileFormat::RawMatrix => "rawmatrix".into(),
                    },
                );
            }
        }
        push("method", self.method.to_string());
        push("k", self.params.k.to_string());
        push("t_max", self.params.t_max.to_string());
        push("beta", self.params.beta.to_string());
        push("lambda", self.params.lambda.to_string());
        push("mu", self.params.mu.to_string());
        push("convergence_tol", self.params.convergence_tol.to_string());
        push("kernel", self.params.kernel.to_string());
        if let KernelSpec::Rbf(bandwidth) = &self.params.kernel {
            push(
                "rbf_bandwidth",
                match bandwidth {
                    Bandwidth::Median => "median".into(),
                    Bandwidth::Fixed(s) => s.to_string(),
                },
            );
        }
        push("normalize", self.effective_normalize().to_string());
        push("seed", self.seed.to_string());
        if let Some(n) = self.subsample_source {
            push("subsample_source", n.to_string());
        }
        if let Some(n) = self.subsample_target {
            push("subsample_target", n.to_string());
        }
        out
    }
}

/// Flag-level overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub method: Option<String>,
    pub k: Option<usize>,
    pub t_max: Option<usize>,
    pub beta: Option<f64>,
    pub kernel: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl CliOverrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), HarnessError> {
        if let Some(m) = &self.method {
            cfg.method = Method::parse(m)?;
        }
        if let Some(k) = self.k {
            cfg.params.k = k;
        }
        if let Some(t) = self.t_max {
            cfg.params.t_max = t;
        }
        if let Some(b) = self.beta {
            cfg.params.beta = b;
        }
        if let Some(kind) = &self.kernel {
            let bandwidth = match cfg.params.kernel {
                KernelSpec::Rbf(b) => b,
                _ => Bandwidth::Median,
            };
            cfg.params.kernel = ExperimentConfig::kernel_from(kind, bandwidth)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.params
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}
