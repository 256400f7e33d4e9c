//! Signal / ISI / IUI / SINR computation from equivalent channels, dB
//! helpers, and the scalar-multiplication complexity model.
//!
//! Per served user `i` the report carries, at symbol power `Ex2`:
//! signal `Ex2 |f[i][i][0]|^2`, own-grid leakage
//! `ISI = Ex2 sum_{k != 0} |f[i][i][k]|^2`, leakage onto other users
//! `IUI = Ex2 sum_{j != i} sum_k |f[j][i][k]|^2` (the k-sum includes 0),
//! and `SINR = signal / (ISI + IUI + sigma^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linksim::EquivalentChannel;

/// Per-user linear power metrics. dB mirrors are derived on demand; exact
/// zeros report `-inf`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct UserMetrics {
    pub user: usize,
    pub signal_power: f64,
    pub isi: f64,
    pub iui: f64,
    pub noise_var: f64,
    pub sinr: f64,
}

impl UserMetrics {
    pub fn interference(&self) -> f64 {
        self.isi + self.iui
    }

    pub fn signal_db(&self) -> f64 {
        db_or_neg_inf(self.signal_power)
    }

    pub fn isi_db(&self) -> f64 {
        db_or_neg_inf(self.isi)
    }

    pub fn iui_db(&self) -> f64 {
        db_or_neg_inf(self.iui)
    }

    pub fn sinr_db(&self) -> f64 {
        db_or_neg_inf(self.sinr)
    }
}

/// Metrics for every stream of an equivalent channel plus run metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precoder: String,
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_taps: usize,
    pub decay_time: f64,
    pub rate_backoff: usize,
    pub noise_sigma: f64,
    /// Algorithm iterations behind the filter (0 for one-shot schemes).
    pub iterations: usize,
    pub seed: u64,
    pub users: Vec<UserMetrics>,
}

impl MetricsReport {
    /// Documented CSV schema, one row per user.
    pub const CSV_HEADER: &'static str =
        "precoder,M,N,L,tau,D,sigma,iterations,user,signal_db,isi_db,iui_db,sinr_db,seed";

    pub fn csv_rows(&self) -> Vec<String> {
        self.users
            .iter()
            .map(|u| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.precoder,
                    self.num_antennas,
                    self.num_users,
                    self.num_taps,
                    self.decay_time,
                    self.rate_backoff,
                    self.noise_sigma,
                    self.iterations,
                    u.user,
                    fmt_db(u.signal_db()),
                    fmt_db(u.isi_db()),
                    fmt_db(u.iui_db()),
                    fmt_db(u.sinr_db()),
                    self.seed,
                )
            })
            .collect()
    }
}

/// Formats a dB value, printing `-inf` below the -100 dB floor.
pub fn fmt_db(db: f64) -> String {
    if db < -100.0 {
        "-inf".to_string()
    } else {
        format!("{db:.6}")
    }
}

/// Computes per-stream metrics; `sigma` is the receiver noise standard
/// deviation and `symbol_power` the mean transmitted symbol power.
pub fn compute_metrics(
    eq: &EquivalentChannel,
    sigma: f64,
    symbol_power: f64,
) -> Result<Vec<UserMetrics>> {
    if eq.k_min() > 0 || eq.k_max() < 0 {
        return Err(Error::MissingCenterOffset);
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParam("sigma must be non-negative".into()));
    }
    if !(symbol_power > 0.0) {
        return Err(Error::InvalidParam("symbol_power must be positive".into()));
    }
    let noise_var = sigma * sigma;
    let mut out = Vec::with_capacity(eq.num_streams());
    for (stream, &user) in eq.served_users().iter().enumerate() {
        if user >= eq.num_receivers() {
            return Err(Error::DimensionMismatch(format!(
                "stream {stream} serves user {user} but only {} receivers exist",
                eq.num_receivers()
            )));
        }
        let signal_power = symbol_power * eq.value(user, stream, 0).norm_sqr();
        let mut isi = 0.0;
        let mut iui = 0.0;
        for j in 0..eq.num_receivers() {
            for k in eq.offsets() {
                if j == user && k == 0 {
                    continue;
                }
                let p = eq.value(j, stream, k).norm_sqr();
                if j == user {
                    isi += p;
                } else {
                    iui += p;
                }
            }
        }
        isi *= symbol_power;
        iui *= symbol_power;
        let sinr = signal_power / (isi + iui + noise_var);
        out.push(UserMetrics {
            user,
            signal_power,
            isi,
            iui,
            noise_var,
            sinr,
        });
    }
    Ok(out)
}

/// `10 log10(x)`; errors on non-positive input.
pub fn to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveDb(x));
    }
    Ok(10.0 * x.log10())
}

fn db_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Ensemble statistic: dB of the mean of linear values (mean-then-log, the
/// aggregation that reproduces array-gain levels exactly).
pub fn mean_db(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParam("mean_db of empty ensemble".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    to_db(mean)
}

/// Complexity formula identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplexityScheme {
    ItrDirect,
    ItrFft,
    Rzf,
}

impl ComplexityScheme {
    pub fn formula_id(&self) -> &'static str {
        match self {
            ComplexityScheme::ItrDirect => "itr-direct",
            ComplexityScheme::ItrFft => "itr-fft",
            ComplexityScheme::Rzf => "rzf",
        }
    }
}

impl std::fmt::Display for ComplexityScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.formula_id())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub scheme: ComplexityScheme,
    pub multiplications: u64,
}

/// Scalar multiplication counts:
/// itr-direct `n' M L + M N^2 L^2`,
/// itr-fft `n' M L + M N^2 L (1 + 2 log2 L)`,
/// rzf `2 L log2 L + L (N^3 + M N)`.
pub fn complexity(
    scheme: ComplexityScheme,
    num_antennas: usize,
    num_users: usize,
    num_taps: usize,
    iterations: usize,
) -> Result<ComplexityEstimate> {
    if num_antennas == 0 || num_users == 0 || num_taps == 0 {
        return Err(Error::InvalidParam("dimensions must be positive".into()));
    }
    let (m, n, l) = (num_antennas as u64, num_users as u64, num_taps as u64);
    let n_iter = iterations as u64;
    let log2_l = || -> Result<u64> {
        if !num_taps.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { len: num_taps });
        }
        Ok(num_taps.trailing_zeros() as u64)
    };
    let multiplications = match scheme {
        ComplexityScheme::ItrDirect => n_iter * m * l + m * n * n * l * l,
        ComplexityScheme::ItrFft => n_iter * m * l + m * n * n * l * (1 + 2 * log2_l()?),
        ComplexityScheme::Rzf => 2 * l * log2_l()? + l * (n * n * n + m * n),
    };
    Ok(ComplexityEstimate {
        scheme,
        multiplications,
    })
}
