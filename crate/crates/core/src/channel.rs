//! Synthetic Rayleigh multipath channel ensembles with exponential power
//! decay, plus binary CIR persistence.
//!
//! Tap `k` (0-based internally, 1-based in the decay law) of every
//! user/antenna link is an independent zero-mean complex normal scaled by
//! `exp(-(k+1)/(2*tau))`. With `normalize_ensemble` the whole tensor is
//! additionally divided by `sqrt(sum_k exp(-k/tau))` so a single
//! antenna-to-user link has unit expected energy.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{purpose, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub num_users: usize,
    pub num_antennas: usize,
    pub num_taps: usize,
    /// Power decay time in taps.
    pub decay_time: f64,
    pub normalize_ensemble: bool,
    pub seed: u64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::InvalidParam("num_users must be >= 1".into()));
        }
        if self.num_antennas == 0 {
            return Err(Error::InvalidParam("num_antennas must be >= 1".into()));
        }
        if self.num_taps == 0 {
            return Err(Error::InvalidParam("num_taps must be >= 1".into()));
        }
        if !(self.decay_time > 0.0) || !self.decay_time.is_finite() {
            return Err(Error::InvalidParam(format!(
                "decay_time must be positive and finite, got {}",
                self.decay_time
            )));
        }
        Ok(())
    }
}

/// Immutable CIR tensor `h[user][antenna][tap]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    taps: Vec<Complex64>,
    params: ChannelParams,
}

impl ChannelSet {
    /// Wraps an explicit tap tensor (user-major, then antenna, then tap).
    pub fn from_taps(params: ChannelParams, taps: Vec<Complex64>) -> Result<Self> {
        params.validate()?;
        let expected = params.num_users * params.num_antennas * params.num_taps;
        if taps.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} taps, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite channel tap".into()));
        }
        Ok(ChannelSet { taps, params })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn num_users(&self) -> usize {
        self.params.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.params.num_antennas
    }

    pub fn num_taps(&self) -> usize {
        self.params.num_taps
    }

    /// CIR between antenna `m` and user `i` as a tap slice.
    pub fn cir(&self, user: usize, antenna: usize) -> &[Complex64] {
        let l = self.params.num_taps;
        let start = (user * self.params.num_antennas + antenna) * l;
        &self.taps[start..start + l]
    }

    pub fn tap(&self, user: usize, antenna: usize, tap: usize) -> Complex64 {
        self.cir(user, antenna)[tap]
    }

    /// Total channel energy of one user over antennas and taps.
    pub fn energy(&self, user: usize) -> f64 {
        (0..self.params.num_antennas)
            .map(|m| self.cir(user, m).iter().map(|t| t.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `sqrt(energy)`; errors if the user's channel is all zero.
    pub fn norm(&self, user: usize) -> Result<f64> {
        let e = self.energy(user);
        if e <= 0.0 {
            return Err(Error::DegenerateChannel { user });
        }
        Ok(e.sqrt())
    }

    pub fn raw_taps(&self) -> &[Complex64] {
        &self.taps
    }
}

/// Draws a channel ensemble. Deterministic for a fixed seed: each
/// (user, antenna) link has its own key-derived stream, so the result does
/// not depend on generation order.
pub fn generate(params: &ChannelParams) -> Result<ChannelSet> {
    params.validate()?;
    let l = params.num_taps;
    let tau = params.decay_time;
    let ensemble_scale = if params.normalize_ensemble {
        let total: f64 = (1..=l).map(|k| (-(k as f64) / tau).exp()).sum();
        1.0 / total.sqrt()
    } else {
        1.0
    };

    let mut taps = Vec::with_capacity(params.num_users * params.num_antennas * l);
    for user in 0..params.num_users {
        for antenna in 0..params.num_antennas {
            let mut stream =
                Stream::keyed(params.seed, &[purpose::CHANNEL, user as u64, antenna as u64]);
            for k in 0..l {
                let decay = (-((k + 1) as f64) / (2.0 * tau)).exp();
                taps.push(stream.next_complex_normal() * (decay * ensemble_scale));
            }
        }
    }
    ChannelSet::from_taps(params.clone(), taps)
}

/// Tap count capturing essentially all of the exponential decay:
/// `ceil(8 * decay_time)`.
pub fn default_tap_count(decay_time: f64) -> Result<usize> {
    if !(decay_time > 0.0) || !decay_time.is_finite() {
        return Err(Error::InvalidParam(format!(
            "decay_time must be positive and finite, got {decay_time}"
        )));
    }
    Ok(((8.0 * decay_time).ceil() as usize).max(1))
}

#[derive(Serialize, Deserialize)]
struct CirHeader {
    n: usize,
    m: usize,
    l: usize,
    tau: f64,
    seed: u64,
    normalized: bool,
}

impl ChannelSet {
    /// Writes the documented binary layout: one JSON header line, then
    /// `n*m*l` complex values as interleaved little-endian f64 (re, im),
    /// user-major, then antenna, then tap.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let header = CirHeader {
            n: self.params.num_users,
            m: self.params.num_antennas,
            l: self.params.num_taps,
            tau: self.params.decay_time,
            seed: self.params.seed,
            normalized: self.params.normalize_ensemble,
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &header)
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        w.write_all(b"\n")?;
        for tap in &self.taps {
            w.write_all(&tap.re.to_le_bytes())?;
            w.write_all(&tap.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`ChannelSet::save`]; the round trip is
    /// bit-exact.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header_line = String::new();
        let n_read = r.read_line(&mut header_line)?;
        if n_read == 0 {
            return Err(Error::MalformedHeader("empty file".into()));
        }
        if !header_line.ends_with('\n') {
            return Err(Error::MalformedHeader("unterminated header line".into()));
        }
        let header: CirHeader = serde_json::from_str(header_line.trim_end())
            .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        if header.n == 0 || header.m == 0 || header.l == 0 {
            return Err(Error::DimensionMismatch(format!(
                "header declares degenerate dimensions {}x{}x{}",
                header.n, header.m, header.l
            )));
        }

        let count = header.n * header.m * header.l;
        let expected = count * 16;
        let mut payload = Vec::with_capacity(expected);
        r.read_to_end(&mut payload)?;
        if payload.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(Error::DimensionMismatch(format!(
                "payload holds {} bytes but header implies {expected}",
                payload.len()
            )));
        }

        let mut taps = Vec::with_capacity(count);
        for chunk in payload.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
            taps.push(Complex64::new(re, im));
        }
        let params = ChannelParams {
            num_users: header.n,
            num_antennas: header.m,
            num_taps: header.l,
            decay_time: header.tau,
            normalize_ensemble: header.normalized,
            seed: header.seed,
        };
        ChannelSet::from_taps(params, taps)
    }
}
