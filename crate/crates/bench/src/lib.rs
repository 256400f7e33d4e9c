//! Shared fixtures for the criterion benchmarks.

use trdma_core::channel::{generate, ChannelParams, ChannelSet};

/// Standard benchmark channel: the recurring simulation setup of an
/// 8-antenna access point, two users, and a 5-tap decay time.
pub fn bench_channel(num_antennas: usize, num_taps: usize, seed: u64) -> ChannelSet {
    generate(&ChannelParams {
        num_users: 2,
        num_antennas,
        num_taps,
        decay_time: 5.0,
        normalize_ensemble: true,
        seed,
    })
    .expect("valid benchmark channel")
}
