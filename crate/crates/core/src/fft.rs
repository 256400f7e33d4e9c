//! Power-of-two FFT helpers shared by the frequency-domain precoder and
//! the fast convolution path.
//!
//! Convention: [`fft`] is the unnormalized forward transform
//! `X[f] = sum_k x[k] exp(-2*pi*i*k*f/n)` and [`ifft`] carries the `1/n`
//! factor, so `ifft(fft(x)) == x`. Under this convention Parseval reads
//! `sum |x|^2 = (1/n) sum |X|^2`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Planned forward/inverse transforms of one size, reusable across calls.
pub struct FftEngine {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftEngine {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { len: size });
        }
        let mut planner = FftPlanner::new();
        Ok(FftEngine {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.size);
        self.forward.process(x);
    }

    /// In-place inverse transform including the 1/n factor.
    pub fn inverse(&self, x: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.size);
        self.inverse.process(x);
        let scale = 1.0 / self.size as f64;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of `x` zero-padded to the engine size.
    pub fn forward_padded(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert!(x.len() <= self.size);
        let mut buf = vec![Complex64::default(); self.size];
        buf[..x.len()].copy_from_slice(x);
        self.forward(&mut buf);
        buf
    }
}

/// Forward DFT of a power-of-two-length sequence.
pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let engine = FftEngine::new(x.len())?;
    let mut buf = x.to_vec();
    engine.forward(&mut buf);
    Ok(buf)
}

/// Inverse DFT; `ifft(fft(x)) == x` to machine precision.
pub fn ifft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let engine = FftEngine::new(x.len())?;
    let mut buf = x.to_vec();
    engine.inverse(&mut buf);
    Ok(buf)
}

/// Smallest power of two that is >= `n` (and >= 1).
pub fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    /// O(n^2) reference DFT, kept independent of the FFT path.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|f| {
                (0..n)
                    .map(|k| {
                        let phase = -2.0 * std::f64::consts::PI * (k as f64) * (f as f64) / n as f64;
                        x[k] * Complex64::from_polar(1.0, phase)
                    })
                    .sum()
            })
            .collect()
    }

    fn random_sequence(len: usize, seed: u64) -> Vec<Complex64> {
        let mut s = Stream::keyed(seed, &[0xfff7]);
        (0..len).map(|_| s.next_complex_normal()).collect()
    }

    #[test]
    fn delta_transforms_to_ones() {
        let mut x = vec![Complex64::default(); 8];
        x[0] = Complex64::new(1.0, 0.0);
        let spec = fft(&x).unwrap();
        for v in spec {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let x = random_sequence(256, 3);
        let back = ifft(&fft(&x).unwrap()).unwrap();
        let err = x
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max error {err}");
    }

    #[test]
    fn parseval_holds_with_documented_factor() {
        let x = random_sequence(128, 11);
        let spec = fft(&x).unwrap();
        let time_energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq_energy: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / 128.0;
        assert!((time_energy - freq_energy).abs() < 1e-12 * time_energy.max(1.0));
    }

    #[test]
    fn matches_naive_dft_at_1024() {
        let x = random_sequence(1024, 17);
        let fast = fft(&x).unwrap();
        let slow = naive_dft(&x);
        let err = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn rejects_non_power_of_two() {
        let x = vec![Complex64::default(); 12];
        assert!(matches!(fft(&x), Err(Error::NonPowerOfTwoLength { len: 12 })));
        assert!(matches!(ifft(&x), Err(Error::NonPowerOfTwoLength { len: 12 })));
    }
}
