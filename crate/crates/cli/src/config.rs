//! Experiment configuration: JSON config files whose keys are exactly the
//! `ExperimentConfig` field names, with CLI flags overriding file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Precoder selection, parsed from strings like `tr`, `itr`, `itr:20`,
/// `zf`, `rzf`, `rzf:0.3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PrecoderSpec {
    Tr,
    Itr { iterations: Option<usize> },
    Zf,
    Rzf { alpha: Option<f64> },
}

impl PrecoderSpec {
    /// Stable identifier used in CSV/JSON rows and table headings.
    pub fn label(&self, cfg: &ExperimentConfig) -> String {
        match self {
            PrecoderSpec::Tr => "tr".into(),
            PrecoderSpec::Itr { iterations } => {
                format!("itr:{}", iterations.unwrap_or(cfg.n_max))
            }
            PrecoderSpec::Zf => "zf".into(),
            PrecoderSpec::Rzf { alpha } => format!("rzf:{}", alpha.unwrap_or(cfg.alpha)),
        }
    }

    pub fn iterations(&self, cfg: &ExperimentConfig) -> usize {
        match self {
            PrecoderSpec::Itr { iterations } => iterations.unwrap_or(cfg.n_max),
            _ => 0,
        }
    }
}

impl FromStr for PrecoderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("tr", None) => Ok(PrecoderSpec::Tr),
            ("zf", None) => Ok(PrecoderSpec::Zf),
            ("itr", None) => Ok(PrecoderSpec::Itr { iterations: None }),
            ("itr", Some(a)) => a
                .parse::<usize>()
                .map(|it| PrecoderSpec::Itr {
                    iterations: Some(it),
                })
                .map_err(|_| format!("bad iteration count in '{s}'")),
            ("rzf", None) => Ok(PrecoderSpec::Rzf { alpha: None }),
            ("rzf", Some(a)) => a
                .parse::<f64>()
                .map(|al| PrecoderSpec::Rzf { alpha: Some(al) })
                .map_err(|_| format!("bad alpha in '{s}'")),
            _ => Err(format!(
                "unknown precoder '{s}' (expected tr | itr[:n] | zf | rzf[:alpha])"
            )),
        }
    }
}

impl fmt::Display for PrecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecoderSpec::Tr => write!(f, "tr"),
            PrecoderSpec::Itr { iterations: None } => write!(f, "itr"),
            PrecoderSpec::Itr {
                iterations: Some(n),
            } => write!(f, "itr:{n}"),
            PrecoderSpec::Zf => write!(f, "zf"),
            PrecoderSpec::Rzf { alpha: None } => write!(f, "rzf"),
            PrecoderSpec::Rzf { alpha: Some(a) } => write!(f, "rzf:{a}"),
        }
    }
}

impl TryFrom<String> for PrecoderSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PrecoderSpec> for String {
    fn from(p: PrecoderSpec) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Equivalent-channel evaluation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Linear convolution, the physical transmission path; wrap-around of
    /// frequency-designed filters shows up as reported interference.
    Linear,
    /// Circular evaluation on the precoder's ring, where exact ZF nulls
    /// interference identically.
    Circular,
}

/// Full experiment description. Every field has a default, so config files
/// only need to name what they change.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    /// Channel length in taps; unset means `ceil(8 * tau)` per sweep point.
    pub num_taps: Option<usize>,
    pub normalize_ensemble: bool,
    pub tau_list: Vec<f64>,
    pub d_list: Vec<usize>,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub precoders: Vec<PrecoderSpec>,
    /// ITR iteration cap when the precoder spec does not carry one.
    pub n_max: usize,
    /// ITR convergence tolerance.
    pub epsilon: f64,
    /// RZF regularization when the precoder spec does not carry one.
    pub alpha: f64,
    pub fft_size: Option<usize>,
    pub symbol_power: f64,
    /// Antenna counts for the `compare` table.
    pub m_list: Vec<usize>,
    /// Optional bandwidth-emulation sweep: scales (tau, L) together by each
    /// factor from the base tau, standing in for a bandwidth change at a
    /// fixed physical decay time. This emulates a hardware bandwidth sweep;
    /// it is not one.
    pub bandwidth_factors: Option<Vec<f64>>,
    /// ITR trace decimation: metrics every iteration up to this point...
    pub trace_dense_until: usize,
    /// ...then every this many iterations.
    pub trace_stride: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_users: 2,
            num_antennas: 8,
            num_taps: None,
            normalize_ensemble: true,
            tau_list: vec![5.0],
            d_list: vec![1],
            sigma: 0.1,
            trials: 1,
            seed: 7,
            precoders: vec![PrecoderSpec::Tr],
            n_max: 400,
            epsilon: 1e-3,
            alpha: 0.1,
            fft_size: None,
            symbol_power: 1.0,
            m_list: vec![2, 4],
            bandwidth_factors: None,
            trace_dense_until: 50,
            trace_stride: 10,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("parsing config {}: {e}", path.display())))
    }

    /// File config if given, defaults otherwise.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.num_users == 0 || self.num_antennas == 0 {
            return bad("num_users and num_antennas must be >= 1".into());
        }
        if self.tau_list.is_empty() || self.tau_list.iter().any(|&t| !(t > 0.0)) {
            return bad("tau_list must be non-empty with positive entries".into());
        }
        if self.d_list.is_empty() || self.d_list.iter().any(|&d| d == 0) {
            return bad("d_list must be non-empty with entries >= 1".into());
        }
        if self.precoders.is_empty() {
            return bad("precoders must be non-empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.sigma >= 0.0) {
            return bad("sigma must be non-negative".into());
        }
        if self.n_max == 0 || !(self.epsilon > 0.0) {
            return bad("n_max must be >= 1 and epsilon positive".into());
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be non-negative".into());
        }
        if !(self.symbol_power > 0.0) {
            return bad("symbol_power must be positive".into());
        }
        if self.m_list.is_empty() || self.m_list.iter().any(|&m| m == 0) {
            return bad("m_list must be non-empty with entries >= 1".into());
        }
        if let Some(factors) = &self.bandwidth_factors {
            if factors.is_empty() || factors.iter().any(|&f| !(f > 0.0)) {
                return bad("bandwidth_factors must be non-empty with positive entries".into());
            }
        }
        if self.trace_stride == 0 {
            return bad("trace_stride must be >= 1".into());
        }
        Ok(())
    }

    /// Channel length at a given decay time: the explicit override or
    /// `ceil(8 * tau)`.
    pub fn taps_for(&self, tau: f64) -> Result<usize, CliError> {
        match self.num_taps {
            Some(l) => Ok(l),
            None => trdma_core::default_tap_count(tau).map_err(CliError::from_config_err),
        }
    }
}
