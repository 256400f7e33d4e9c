//! Frequency-domain zero-forcing / regularized zero-forcing baseline.
//!
//! Per subcarrier the precoding matrix is `W = H^H (H H^H + alpha I_N)^-1`
//! with `H` the N x M channel gain matrix; `alpha = 0` is plain ZF. The
//! time-domain filters are inverse transforms of the `W` columns with a
//! circular delay of `L-1` taps so the focus aligns with index `L-1`, the
//! same spot as the conventional TR focus, then each user's filter is
//! scaled to unit transmit energy.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::fft::{next_power_of_two, FftEngine};
use crate::linksim::{equivalent_channel, equivalent_channel_circular};
use crate::trcore::{finalize_energy, PrecodeFilter};

#[derive(Clone, Debug)]
pub struct RzfConfig {
    /// Ridge regularization; 0 gives plain ZF.
    pub alpha: f64,
    /// FFT length; defaults to the next power of two >= 2L so circular
    /// wrap-around stays out of the metric window.
    pub fft_size: Option<usize>,
    pub rate_backoff: usize,
}

impl Default for RzfConfig {
    fn default() -> Self {
        RzfConfig {
            alpha: 0.0,
            fft_size: None,
            rate_backoff: 1,
        }
    }
}

impl RzfConfig {
    pub fn validate(&self, num_taps: usize) -> Result<usize> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParam(format!(
                "alpha must be non-negative and finite, got {}",
                self.alpha
            )));
        }
        if self.rate_backoff == 0 {
            return Err(Error::InvalidParam("rate_backoff must be >= 1".into()));
        }
        let n = self
            .fft_size
            .unwrap_or_else(|| next_power_of_two(2 * num_taps));
        if !n.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { len: n });
        }
        if n < num_taps {
            return Err(Error::InvalidParam(format!(
                "fft_size {n} is smaller than the channel length {num_taps}"
            )));
        }
        Ok(n)
    }
}

/// Per-subcarrier channel gain matrices `H(f)`, each N x M row-major.
#[derive(Clone, Debug)]
pub struct FreqChannel {
    h: Vec<Complex64>,
    num_subcarriers: usize,
    num_users: usize,
    num_antennas: usize,
}

impl FreqChannel {
    /// DFT of each (user, antenna) CIR zero-padded to `fft_size` bins.
    pub fn from_channel(ch: &ChannelSet, fft_size: usize) -> Result<Self> {
        if fft_size < ch.num_taps() {
            return Err(Error::InvalidParam(format!(
                "fft_size {fft_size} is smaller than the channel length {}",
                ch.num_taps()
            )));
        }
        let engine = FftEngine::new(fft_size)?;
        let n = ch.num_users();
        let m = ch.num_antennas();
        let mut h = vec![Complex64::default(); fft_size * n * m];
        for j in 0..n {
            for ant in 0..m {
                let spec = engine.forward_padded(ch.cir(j, ant));
                for (f, v) in spec.into_iter().enumerate() {
                    h[(f * n + j) * m + ant] = v;
                }
            }
        }
        Ok(FreqChannel {
            h,
            num_subcarriers: fft_size,
            num_users: n,
            num_antennas: m,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    /// N x M row-major matrix at subcarrier `f`.
    pub fn matrix(&self, f: usize) -> &[Complex64] {
        let size = self.num_users * self.num_antennas;
        &self.h[f * size..(f + 1) * size]
    }

    pub fn entry(&self, f: usize, user: usize, antenna: usize) -> Complex64 {
        self.matrix(f)[user * self.num_antennas + antenna]
    }
}

/// Solves `W = H^H (H H^H + alpha I_N)^-1` for one N x M row-major `H`
/// through a pivoted dense solve of the N x N system; returns `W` as
/// M x N row-major.
pub fn solve_regularized(
    h: &[Complex64],
    num_users: usize,
    num_antennas: usize,
    alpha: f64,
) -> Result<Vec<Complex64>> {
    let (n, m) = (num_users, num_antennas);
    if h.len() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "matrix holds {} entries, expected {}",
            h.len(),
            n * m
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParam("alpha must be non-negative".into()));
    }

    // A = H H^H + alpha I (N x N, Hermitian).
    let mut a = vec![Complex64::default(); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::default();
            for k in 0..m {
                acc += h[r * m + k] * h[c * m + k].conj();
            }
            if r == c {
                acc += alpha;
            }
            a[r * n + c] = acc;
        }
    }

    // Solve A X = H for X (N x M); then W = X^H because A is Hermitian.
    let x = lu_solve(&mut a, n, h, m)?;
    let mut w = vec![Complex64::default(); m * n];
    for r in 0..n {
        for c in 0..m {
            w[c * n + r] = x[r * m + c].conj();
        }
    }
    Ok(w)
}

/// Gaussian elimination with partial pivoting on `a` (n x n), solving for
/// `rhs_cols` right-hand sides stored row-major in `b` (n x rhs_cols).
fn lu_solve(
    a: &mut [Complex64],
    n: usize,
    b: &[Complex64],
    rhs_cols: usize,
) -> Result<Vec<Complex64>> {
    let mut x = b.to_vec();
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        if pivot_mag <= scale * 1e-14 * n as f64 {
            return Err(Error::RankDeficient);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            for k in 0..rhs_cols {
                x.swap(col * rhs_cols + k, pivot_row * rhs_cols + k);
            }
        }
        let pivot = a[col * n + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col] / pivot;
            if factor == Complex64::default() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= factor * v;
            }
            for k in 0..rhs_cols {
                let v = x[col * rhs_cols + k];
                x[r * rhs_cols + k] -= factor * v;
            }
        }
    }
    for r in 0..n {
        let pivot = a[r * n + r];
        for k in 0..rhs_cols {
            x[r * rhs_cols + k] /= pivot;
        }
    }
    Ok(x)
}

/// Builds the RZF precoder: per-subcarrier regularized inversion, inverse
/// transform with an `L-1`-tap circular delay, then per-user energy
/// normalization so the average transmit power matches the other schemes.
pub fn rzf_precode(ch: &ChannelSet, cfg: &RzfConfig) -> Result<PrecodeFilter> {
    let fft_size = cfg.validate(ch.num_taps())?;
    let n = ch.num_users();
    let m = ch.num_antennas();
    if cfg.alpha == 0.0 && n > m {
        return Err(Error::InvalidParam(format!(
            "plain ZF needs num_users <= num_antennas, got {n} > {m}"
        )));
    }
    let freq = FreqChannel::from_channel(ch, fft_size)?;
    let engine = FftEngine::new(fft_size)?;
    let delay = (ch.num_taps() - 1) as f64;

    // Spectra of stream i on antenna m, filled per subcarrier.
    let mut spectra = vec![vec![Complex64::default(); fft_size]; n * m];
    for f in 0..fft_size {
        let w = solve_regularized(freq.matrix(f), n, m, cfg.alpha)
            .map_err(|e| match e {
                Error::RankDeficient => Error::SingularSubcarrier { subcarrier: f },
                other => other,
            })?;
        let phase = Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * (f as f64) * delay / fft_size as f64,
        );
        for ant in 0..m {
            for i in 0..n {
                spectra[i * m + ant][f] = w[ant * n + i] * phase;
            }
        }
    }

    let mut taps = Vec::with_capacity(n * m * fft_size);
    for spectrum in &mut spectra {
        engine.inverse(spectrum);
        taps.extend_from_slice(spectrum);
    }
    let filter = PrecodeFilter::from_parts(
        taps,
        m,
        fft_size,
        (0..n).collect(),
        cfg.rate_backoff,
        ch.num_taps() - 1,
    )?;
    finalize_energy(filter)
}

/// Energy of the linear-convolution tail that wraps around the circular
/// window, per receiver: the artifact a circular evaluation cannot see.
pub fn wrap_artifact_energy(f: &PrecodeFilter, ch: &ChannelSet, fft_size: usize) -> Result<Vec<f64>> {
    let lin = equivalent_channel(f, ch)?;
    let circ_start = (fft_size as i64 - f.focus as i64 + f.rate_backoff as i64 - 1)
        / f.rate_backoff as i64;
    let mut out = vec![0.0; ch.num_users()];
    for (j, energy) in out.iter_mut().enumerate() {
        for i in 0..f.num_streams() {
            for k in lin.k_min()..=lin.k_max() {
                // Full-resolution index focus + kD >= fft_size wraps.
                if k >= circ_start {
                    *energy += lin.value(j, i, k).norm_sqr();
                }
            }
        }
    }
    Ok(out)
}

/// Convenience: circular equivalent channel on the precoder's own ring.
pub fn circular_equivalent(
    f: &PrecodeFilter,
    ch: &ChannelSet,
) -> Result<crate::linksim::EquivalentChannel> {
    equivalent_channel_circular(f, ch, f.filter_len().max(next_power_of_two(ch.num_taps())))
}
