//! Downlink simulation: transmit-signal synthesis from symbols and
//! filters, reception through the multipath channel with AWGN, and
//! extraction of the symbol-grid equivalent channel.
//!
//! Alignment convention: symbol `l` of stream `i` contributes the stream's
//! filter shifted by `l*D` samples, so its focus lands at full-resolution
//! index `filter.focus + l*D` of the received stream. Grid offset 0 of the
//! equivalent channel is the focus sample.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::fft::FftEngine;
use crate::rng::{purpose, Stream};
use crate::trcore::PrecodeFilter;

/// Complex information symbols `x[user][symbol]`.
#[derive(Clone, Debug)]
pub struct SymbolFrame {
    x: Vec<Complex64>,
    num_users: usize,
    num_symbols: usize,
    pub symbol_power: f64,
}

impl SymbolFrame {
    pub fn new(x: Vec<Complex64>, num_users: usize, num_symbols: usize, symbol_power: f64) -> Result<Self> {
        if x.len() != num_users * num_symbols {
            return Err(Error::DimensionMismatch(format!(
                "frame holds {} symbols, expected {}",
                x.len(),
                num_users * num_symbols
            )));
        }
        if !(symbol_power > 0.0) {
            return Err(Error::InvalidParam("symbol_power must be positive".into()));
        }
        Ok(SymbolFrame {
            x,
            num_users,
            num_symbols,
            symbol_power,
        })
    }

    /// Complex-normal symbols with mean power `symbol_power`.
    pub fn random(num_users: usize, num_symbols: usize, symbol_power: f64, seed: u64) -> Result<Self> {
        let scale = symbol_power.sqrt();
        let mut x = Vec::with_capacity(num_users * num_symbols);
        for user in 0..num_users {
            let mut stream = Stream::keyed(seed, &[purpose::SYMBOLS, user as u64]);
            for _ in 0..num_symbols {
                x.push(stream.next_complex_normal() * scale);
            }
        }
        SymbolFrame::new(x, num_users, num_symbols, symbol_power)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn symbol(&self, user: usize, l: usize) -> Complex64 {
        self.x[user * self.num_symbols + l]
    }

    pub fn row(&self, user: usize) -> &[Complex64] {
        &self.x[user * self.num_symbols..(user + 1) * self.num_symbols]
    }
}

/// Symbol-grid responses `f[receiver j][stream i][grid offset]` linking the
/// transmitted symbols of stream `i` to the single-tap receiver samples of
/// user `j`. Offset 0 is the focus sample; entries outside the stored range
/// read as zero (the underlying convolution is zero there).
#[derive(Clone, Debug)]
pub struct EquivalentChannel {
    f: Vec<Complex64>,
    num_receivers: usize,
    num_streams: usize,
    served_users: Vec<usize>,
    k_min: i64,
    k_max: i64,
    pub rate_backoff: usize,
}

impl EquivalentChannel {
    pub fn from_values(
        f: Vec<Complex64>,
        num_receivers: usize,
        served_users: Vec<usize>,
        k_min: i64,
        k_max: i64,
        rate_backoff: usize,
    ) -> Result<Self> {
        let num_streams = served_users.len();
        let span = (k_max - k_min + 1) as usize;
        if f.len() != num_receivers * num_streams * span {
            return Err(Error::DimensionMismatch(format!(
                "equivalent channel holds {} entries, expected {}",
                f.len(),
                num_receivers * num_streams * span
            )));
        }
        Ok(EquivalentChannel {
            f,
            num_receivers,
            num_streams,
            served_users,
            k_min,
            k_max,
            rate_backoff,
        })
    }

    pub fn num_receivers(&self) -> usize {
        self.num_receivers
    }

    pub fn num_streams(&self) -> usize {
        self.num_streams
    }

    pub fn served_users(&self) -> &[usize] {
        &self.served_users
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    /// `f[j][stream][k]`, zero outside the stored offsets.
    pub fn value(&self, receiver: usize, stream: usize, k: i64) -> Complex64 {
        if k < self.k_min || k > self.k_max {
            return Complex64::default();
        }
        let span = (self.k_max - self.k_min + 1) as usize;
        self.f[(receiver * self.num_streams + stream) * span + (k - self.k_min) as usize]
    }
}

/// Linear convolution, direct evaluation.
pub fn convolve_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::default(); a.len() + b.len() - 1];
    for (i, &av) in a.iter().enumerate() {
        for (j, &bv) in b.iter().enumerate() {
            out[i + j] += av * bv;
        }
    }
    out
}

/// Linear convolution via zero-padded FFTs.
pub fn convolve_fft(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = crate::fft::next_power_of_two(out_len);
    let engine = FftEngine::new(n).expect("power-of-two size");
    let mut fa = engine.forward_padded(a);
    let fb = engine.forward_padded(b);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    engine.inverse(&mut fa);
    fa.truncate(out_len);
    fa
}

/// Direct for short operands, FFT otherwise.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.len().min(b.len()) <= 32 {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

/// Synthesizes the per-antenna transmit stream
/// `s[m][t] = sum_i sum_l x[i][l] g[i][m][t - l*D]`.
pub fn transmit_signal(f: &PrecodeFilter, frame: &SymbolFrame) -> Result<Vec<Vec<Complex64>>> {
    if frame.num_users() != f.num_streams() {
        return Err(Error::DimensionMismatch(format!(
            "frame has {} streams, filter has {}",
            frame.num_users(),
            f.num_streams()
        )));
    }
    let d = f.rate_backoff;
    let p = frame.num_symbols();
    let len = f.filter_len() + (p - 1) * d;
    let mut out = vec![vec![Complex64::default(); len]; f.num_antennas()];
    for (m, antenna_stream) in out.iter_mut().enumerate() {
        for i in 0..f.num_streams() {
            let taps = f.taps(i, m);
            for l in 0..p {
                let x = frame.symbol(i, l);
                let base = l * d;
                for (k, g) in taps.iter().enumerate() {
                    antenna_stream[base + k] += x * g;
                }
            }
        }
    }
    Ok(out)
}

/// Propagates per-antenna streams through the channel and adds complex
/// Gaussian noise of standard deviation `sigma` (variance `sigma^2/2` per
/// real component); `sigma = 0` is the noiseless channel.
pub fn receive(
    s: &[Vec<Complex64>],
    ch: &ChannelSet,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    if s.len() != ch.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "{} transmit streams for {} antennas",
            s.len(),
            ch.num_antennas()
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParam("sigma must be non-negative".into()));
    }
    let s_len = s[0].len();
    if s.iter().any(|row| row.len() != s_len) {
        return Err(Error::DimensionMismatch("ragged transmit streams".into()));
    }
    let out_len = s_len + ch.num_taps() - 1;
    let mut out = vec![vec![Complex64::default(); out_len]; ch.num_users()];
    for (j, user_stream) in out.iter_mut().enumerate() {
        for (m, antenna_stream) in s.iter().enumerate() {
            let conv = convolve(antenna_stream, ch.cir(j, m));
            for (y, v) in user_stream.iter_mut().zip(&conv) {
                *y += v;
            }
        }
        if sigma > 0.0 {
            let mut noise = Stream::keyed(seed, &[purpose::NOISE, j as u64]);
            for y in user_stream.iter_mut() {
                *y += noise.next_complex_normal() * sigma;
            }
        }
    }
    Ok(out)
}

/// Extracts the symbol-grid equivalent channel of `f` through `ch`: the
/// full-resolution response `e[j][i][t] = sum_m (g[i][m] * h[j][m])[t]`
/// sampled at `t = focus + k*D` over every representable offset `k`.
pub fn equivalent_channel(f: &PrecodeFilter, ch: &ChannelSet) -> Result<EquivalentChannel> {
    if f.num_antennas() != ch.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "filter has {} antennas, channel has {}",
            f.num_antennas(),
            ch.num_antennas()
        )));
    }
    let conv_len = f.filter_len() + ch.num_taps() - 1;
    if f.focus >= conv_len {
        return Err(Error::DimensionMismatch(format!(
            "focus {} outside convolution output of length {conv_len}",
            f.focus
        )));
    }
    let d = f.rate_backoff as i64;
    let k_min = -((f.focus as i64) / d);
    let k_max = (conv_len as i64 - 1 - f.focus as i64) / d;
    let n_rx = ch.num_users();
    let span = (k_max - k_min + 1) as usize;
    let mut values = vec![Complex64::default(); n_rx * f.num_streams() * span];
    for j in 0..n_rx {
        for i in 0..f.num_streams() {
            let mut e = vec![Complex64::default(); conv_len];
            for m in 0..f.num_antennas() {
                let conv = convolve(f.taps(i, m), ch.cir(j, m));
                for (acc, v) in e.iter_mut().zip(&conv) {
                    *acc += v;
                }
            }
            let base = (j * f.num_streams() + i) * span;
            for (slot, k) in (k_min..=k_max).enumerate() {
                values[base + slot] = e[(f.focus as i64 + k * d) as usize];
            }
        }
    }
    EquivalentChannel::from_values(values, n_rx, f.served_users().to_vec(), k_min, k_max, f.rate_backoff)
}

/// Circular counterpart of [`equivalent_channel`] over an `n`-point ring:
/// responses are circular convolutions and the grid covers each distinct
/// ring position exactly once. This is the evaluation in which an exact
/// zero-forcing filter has identically zero interference.
pub fn equivalent_channel_circular(
    f: &PrecodeFilter,
    ch: &ChannelSet,
    n: usize,
) -> Result<EquivalentChannel> {
    if f.num_antennas() != ch.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "filter has {} antennas, channel has {}",
            f.num_antennas(),
            ch.num_antennas()
        )));
    }
    if f.filter_len() > n || ch.num_taps() > n || f.focus >= n {
        return Err(Error::DimensionMismatch(format!(
            "ring of {n} samples cannot hold filter_len {} / taps {} / focus {}",
            f.filter_len(),
            ch.num_taps(),
            f.focus
        )));
    }
    let engine = FftEngine::new(n)?;
    let n_rx = ch.num_users();
    let d = f.rate_backoff;

    let h_spec: Vec<Vec<Complex64>> = (0..n_rx)
        .flat_map(|j| (0..ch.num_antennas()).map(move |m| (j, m)))
        .map(|(j, m)| engine.forward_padded(ch.cir(j, m)))
        .collect();
    let g_spec: Vec<Vec<Complex64>> = (0..f.num_streams())
        .flat_map(|i| (0..f.num_antennas()).map(move |m| (i, m)))
        .map(|(i, m)| engine.forward_padded(f.taps(i, m)))
        .collect();

    // One representative offset per distinct ring position.
    let distinct = n / gcd(d, n);
    let k_min = -((distinct / 2) as i64);
    let k_max = k_min + distinct as i64 - 1;

    let span = distinct;
    let mut values = vec![Complex64::default(); n_rx * f.num_streams() * span];
    for j in 0..n_rx {
        for i in 0..f.num_streams() {
            let mut spec = vec![Complex64::default(); n];
            for m in 0..f.num_antennas() {
                let hj = &h_spec[j * ch.num_antennas() + m];
                let gi = &g_spec[i * f.num_antennas() + m];
                for ((acc, h), g) in spec.iter_mut().zip(hj).zip(gi) {
                    *acc += h * g;
                }
            }
            engine.inverse(&mut spec);
            let base = (j * f.num_streams() + i) * span;
            for (slot, k) in (k_min..=k_max).enumerate() {
                let t = (f.focus as i64 + k * d as i64).rem_euclid(n as i64) as usize;
                values[base + slot] = spec[t];
            }
        }
    }
    EquivalentChannel::from_values(values, n_rx, f.served_users().to_vec(), k_min, k_max, d)
}

fn gcd(a: usize, b: usize) -> usize {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Grid samples of one received stream.
#[derive(Clone, Debug)]
pub struct GridSamples {
    /// Offset of `samples[0]` relative to the center.
    pub first_offset: i64,
    pub samples: Vec<Complex64>,
    /// True when the requested range exceeded the stream and was clamped.
    pub clipped: bool,
}

/// Samples `stream` at `center + k*D` for requested offsets
/// `k_lo..=k_hi`, modeling the single-tap receiver. Offsets falling
/// outside the stream are dropped and flagged.
pub fn sample_grid(
    stream: &[Complex64],
    rate_backoff: usize,
    center: usize,
    k_lo: i64,
    k_hi: i64,
) -> Result<GridSamples> {
    if rate_backoff == 0 {
        return Err(Error::InvalidParam("rate_backoff must be >= 1".into()));
    }
    if center >= stream.len() {
        return Err(Error::DimensionMismatch(format!(
            "center {center} outside stream of length {}",
            stream.len()
        )));
    }
    let d = rate_backoff as i64;
    let repr_lo = -((center as i64) / d);
    let repr_hi = (stream.len() as i64 - 1 - center as i64) / d;
    let lo = k_lo.max(repr_lo);
    let hi = k_hi.min(repr_hi);
    let clipped = k_lo < repr_lo || k_hi > repr_hi;
    let samples = (lo..=hi)
        .map(|k| stream[(center as i64 + k * d) as usize])
        .collect();
    Ok(GridSamples {
        first_offset: lo,
        samples,
        clipped,
    })
}

/// Representable grid range of a stream around `center`.
pub fn representable_range(len: usize, rate_backoff: usize, center: usize) -> (i64, i64) {
    let d = rate_backoff as i64;
    (-((center as i64) / d), (len as i64 - 1 - center as i64) / d)
}
