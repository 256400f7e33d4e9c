//! Link-level simulation of time-reversal division multiple access.
//!
//! The crate models a multi-user MISO downlink over synthetic Rayleigh
//! multipath channels and provides four precoders (conventional time
//! reversal, iterative time-reversal interference cancellation, and
//! zero-forcing / regularized zero-forcing baselines) together with the
//! equivalent-channel machinery and signal/ISI/IUI/SINR metrics used to
//! compare them.

pub mod channel;
pub mod error;
pub mod fft;
pub mod itr;
pub mod linksim;
pub mod metrics;
pub mod rng;
pub mod rzf;
pub mod trcore;

pub use channel::{default_tap_count, generate, ChannelParams, ChannelSet};
pub use error::{Error, Result};
pub use itr::{
    argmax_deviation, deviation_map, itr_precode, itr_precode_all, DeviationMap, ItrConfig,
    ItrState, ItrTrace, IterationRecord,
};
pub use linksim::{
    equivalent_channel, equivalent_channel_circular, receive, sample_grid, transmit_signal,
    EquivalentChannel, GridSamples, SymbolFrame,
};
pub use metrics::{
    complexity, compute_metrics, mean_db, to_db, ComplexityEstimate, ComplexityScheme,
    MetricsReport, UserMetrics,
};
pub use rzf::{rzf_precode, solve_regularized, FreqChannel, RzfConfig};
pub use trcore::{
    correlate, finalize_energy, tr_atom, tr_filter, tr_precode, CorrelationTable, PrecodeFilter,
    TrAtom,
};
