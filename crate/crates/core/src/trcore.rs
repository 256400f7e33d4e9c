//! Conventional time-reversal precoding primitives: normalized TR filters,
//! CIR cross-correlation, and the unit-peak TR atom shared by the TR and
//! iterative-TR precoders.
//!
//! Tap indexing is 0-based. Convolving a length-`L` filter with a
//! length-`L` CIR yields `2L-1` samples whose main focus sits at index
//! `L-1`; correlation lag 0 corresponds to that focus sample.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};

/// Transmit filters `g[stream][antenna][tap]` for one or more served users.
///
/// `served_users[s]` is the user that stream `s` focuses on; `focus` is the
/// index of the intended focus sample in the full-resolution convolution of
/// a stream's filter with a CIR of the channel it was built for.
#[derive(Clone, Debug)]
pub struct PrecodeFilter {
    g: Vec<Complex64>,
    num_streams: usize,
    num_antennas: usize,
    filter_len: usize,
    served_users: Vec<usize>,
    pub rate_backoff: usize,
    pub focus: usize,
}

impl PrecodeFilter {
    pub fn from_parts(
        g: Vec<Complex64>,
        num_antennas: usize,
        filter_len: usize,
        served_users: Vec<usize>,
        rate_backoff: usize,
        focus: usize,
    ) -> Result<Self> {
        let num_streams = served_users.len();
        if rate_backoff == 0 {
            return Err(Error::InvalidParam("rate_backoff must be >= 1".into()));
        }
        if num_streams == 0 || num_antennas == 0 || filter_len == 0 {
            return Err(Error::InvalidParam("empty filter".into()));
        }
        if g.len() != num_streams * num_antennas * filter_len {
            return Err(Error::DimensionMismatch(format!(
                "filter holds {} taps, expected {}",
                g.len(),
                num_streams * num_antennas * filter_len
            )));
        }
        if g.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite filter tap".into()));
        }
        Ok(PrecodeFilter {
            g,
            num_streams,
            num_antennas,
            filter_len,
            served_users,
            rate_backoff,
            focus,
        })
    }

    pub fn num_streams(&self) -> usize {
        self.num_streams
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn filter_len(&self) -> usize {
        self.filter_len
    }

    pub fn served_users(&self) -> &[usize] {
        &self.served_users
    }

    /// Stream index serving `user`, if any.
    pub fn stream_for_user(&self, user: usize) -> Option<usize> {
        self.served_users.iter().position(|&u| u == user)
    }

    pub fn taps(&self, stream: usize, antenna: usize) -> &[Complex64] {
        let start = (stream * self.num_antennas + antenna) * self.filter_len;
        &self.g[start..start + self.filter_len]
    }

    fn taps_mut(&mut self, stream: usize, antenna: usize) -> &mut [Complex64] {
        let start = (stream * self.num_antennas + antenna) * self.filter_len;
        &mut self.g[start..start + self.filter_len]
    }

    /// Transmit energy of one stream, summed over antennas and taps.
    pub fn stream_energy(&self, stream: usize) -> f64 {
        (0..self.num_antennas)
            .map(|m| self.taps(stream, m).iter().map(|t| t.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// CIR cross-correlations `R[j][i][lag]` for lags `-(L-1)..=L-1`, each
/// normalized by the norm of user `i`'s channel.
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    r: Vec<Complex64>,
    num_users: usize,
    num_taps: usize,
}

impl CorrelationTable {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// Largest stored lag, `L-1`.
    pub fn max_lag(&self) -> i64 {
        self.num_taps as i64 - 1
    }

    /// `R[j][i][lag]`; zero outside the stored lag range.
    pub fn value(&self, j: usize, i: usize, lag: i64) -> Complex64 {
        let max = self.max_lag();
        if lag < -max || lag > max {
            return Complex64::default();
        }
        let span = 2 * self.num_taps - 1;
        let idx = (j * self.num_users + i) * span + (lag + max) as usize;
        self.r[idx]
    }
}

/// Computes the correlation table
/// `R[j][i][k] = sum_{k',m} conj(h[i][m][k']) h[j][m][k'+k] / ||h_i||`.
pub fn correlate(ch: &ChannelSet) -> Result<CorrelationTable> {
    let n = ch.num_users();
    let m = ch.num_antennas();
    let l = ch.num_taps();
    let norms: Vec<f64> = (0..n).map(|u| ch.norm(u)).collect::<Result<_>>()?;

    let span = 2 * l - 1;
    let mut r = vec![Complex64::default(); n * n * span];
    for j in 0..n {
        for i in 0..n {
            let base = (j * n + i) * span;
            for ant in 0..m {
                let hi = ch.cir(i, ant);
                let hj = ch.cir(j, ant);
                for lag in -(l as i64 - 1)..=(l as i64 - 1) {
                    let mut acc = Complex64::default();
                    for kp in 0..l as i64 {
                        let idx = kp + lag;
                        if idx >= 0 && idx < l as i64 {
                            acc += hi[kp as usize].conj() * hj[idx as usize];
                        }
                    }
                    r[base + (lag + l as i64 - 1) as usize] += acc;
                }
            }
            let scale = 1.0 / norms[i];
            for v in &mut r[base..base + span] {
                *v *= scale;
            }
        }
    }
    Ok(CorrelationTable {
        r,
        num_users: n,
        num_taps: l,
    })
}

/// Normalized TR filter for `user`: the conjugated, time-flipped CIR
/// divided by the channel norm, `g[m][k] = conj(h[user][m][L-1-k]) / ||h||`.
/// Its transmit energy is 1 and its focused peak equals `||h||`.
pub fn tr_filter(ch: &ChannelSet, user: usize) -> Result<Vec<Vec<Complex64>>> {
    let norm = ch.norm(user)?;
    let l = ch.num_taps();
    Ok((0..ch.num_antennas())
        .map(|m| {
            let cir = ch.cir(user, m);
            (0..l).map(|k| cir[l - 1 - k].conj() / norm).collect()
        })
        .collect())
}

/// A time-shifted TR pulse scaled so its focused peak amplitude at the
/// target user is exactly 1. Tap `k` of `taps` sits at absolute time
/// `k + shift` on the grid where the unshifted TR filter occupies `0..L`.
#[derive(Clone, Debug)]
pub struct TrAtom {
    pub taps: Vec<Vec<Complex64>>,
    pub shift: i64,
}

/// Builds the unit-peak atom `a[m][k] = conj(h[user][m][L-1-k]) / ||h||^2`
/// placed at offset `shift`: summed over antennas, `(a * h_user)` equals 1
/// at full-resolution index `L-1+shift`.
pub fn tr_atom(ch: &ChannelSet, user: usize, shift: i64) -> Result<TrAtom> {
    let norm = ch.norm(user)?;
    let scale = 1.0 / (norm * norm);
    let l = ch.num_taps();
    let taps = (0..ch.num_antennas())
        .map(|m| {
            let cir = ch.cir(user, m);
            (0..l).map(|k| cir[l - 1 - k].conj() * scale).collect()
        })
        .collect();
    Ok(TrAtom { taps, shift })
}

/// Rescales every stream to exactly unit transmit energy. The relative tap
/// structure is unchanged (positive real scaling per stream).
pub fn finalize_energy(mut f: PrecodeFilter) -> Result<PrecodeFilter> {
    for s in 0..f.num_streams() {
        let energy = f.stream_energy(s);
        if energy <= 0.0 || !energy.is_finite() {
            return Err(Error::ZeroEnergyFilter { stream: s });
        }
        let scale = 1.0 / energy.sqrt();
        for m in 0..f.num_antennas {
            for tap in f.taps_mut(s, m) {
                *tap *= scale;
            }
        }
    }
    Ok(f)
}

/// Conventional TR precoder for all users: stream `i` is `tr_filter(ch, i)`.
pub fn tr_precode(ch: &ChannelSet, rate_backoff: usize) -> Result<PrecodeFilter> {
    let n = ch.num_users();
    let m = ch.num_antennas();
    let l = ch.num_taps();
    let mut g = Vec::with_capacity(n * m * l);
    for user in 0..n {
        let rows = tr_filter(ch, user)?;
        for row in rows {
            g.extend(row);
        }
    }
    PrecodeFilter::from_parts(g, m, l, (0..n).collect(), rate_backoff, l - 1)
}
