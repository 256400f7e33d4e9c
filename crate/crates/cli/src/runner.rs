//! Monte Carlo experiment execution: parallel trials with derived seeds,
//! deterministic aggregation, and the precoder comparison table.

use rayon::prelude::*;
use serde::Serialize;

use trdma_core::channel::{generate, ChannelParams, ChannelSet};
use trdma_core::itr::{ItrConfig, ItrState};
use trdma_core::linksim::{equivalent_channel, EquivalentChannel};
use trdma_core::metrics::{
    complexity, compute_metrics, fmt_db, ComplexityScheme, MetricsReport, UserMetrics,
};
use trdma_core::rng;
use trdma_core::rzf::{circular_equivalent, rzf_precode, wrap_artifact_energy, RzfConfig};
use trdma_core::trcore::{correlate, tr_precode};

use crate::config::{ExperimentConfig, PrecoderSpec};
use crate::CliError;

/// Fraction of failed trials at any sweep point beyond which the run exits
/// with the numerical-failure code.
pub const FAILURE_THRESHOLD: f64 = 0.5;

/// One resolved sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub precoder: PrecoderSpec,
    pub tau: f64,
    pub num_taps: usize,
    pub rate_backoff: usize,
    /// Set in bandwidth-emulation mode.
    pub bandwidth_factor: Option<f64>,
}

/// Mean-then-dB aggregate over the trials (and users) of one sweep point;
/// for iterative precoders one row per snapshot iteration.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub precoder: String,
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_taps: usize,
    pub decay_time: f64,
    pub rate_backoff: usize,
    pub noise_sigma: f64,
    pub iterations: usize,
    pub seed: u64,
    pub trials: usize,
    pub signal_mean: f64,
    pub isi_mean: f64,
    pub iui_mean: f64,
    pub sinr_mean: f64,
}

impl AggregateRow {
    pub fn signal_db(&self) -> f64 {
        lin_db(self.signal_mean)
    }
    pub fn isi_db(&self) -> f64 {
        lin_db(self.isi_mean)
    }
    pub fn iui_db(&self) -> f64 {
        lin_db(self.iui_mean)
    }
    pub fn sinr_db(&self) -> f64 {
        lin_db(self.sinr_mean)
    }

    /// CSV row in the metrics schema, with `mean` in the user column.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},mean,{},{},{},{},{}",
            self.precoder,
            self.num_antennas,
            self.num_users,
            self.num_taps,
            self.decay_time,
            self.rate_backoff,
            self.noise_sigma,
            self.iterations,
            fmt_db(self.signal_db()),
            fmt_db(self.isi_db()),
            fmt_db(self.iui_db()),
            fmt_db(self.sinr_db()),
            self.seed,
        )
    }
}

fn lin_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<MetricsReport>,
    pub aggregates: Vec<AggregateRow>,
    pub attempted: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
    /// True when some sweep point lost more than [`FAILURE_THRESHOLD`] of
    /// its trials.
    pub threshold_exceeded: bool,
}

struct TrialOutput {
    report: MetricsReport,
    /// (snapshot iteration, per-user metrics) for iterative precoders.
    curve: Vec<(usize, Vec<UserMetrics>)>,
}

/// Channel seed shared by every precoder and rate backoff at the same
/// (tau, L, trial), so scheme comparisons are paired.
fn channel_seed(base: u64, tau: f64, num_taps: usize, num_antennas: usize, trial: u64) -> u64 {
    rng::derive_key(
        base,
        &[
            rng::purpose::TRIAL,
            tau.to_bits(),
            num_taps as u64,
            num_antennas as u64,
            trial,
        ],
    )
}

fn make_channel(
    cfg: &ExperimentConfig,
    tau: f64,
    num_taps: usize,
    num_antennas: usize,
    trial: u64,
) -> Result<ChannelSet, trdma_core::Error> {
    generate(&ChannelParams {
        num_users: cfg.num_users,
        num_antennas,
        num_taps,
        decay_time: tau,
        normalize_ensemble: cfg.normalize_ensemble,
        seed: channel_seed(cfg.seed, tau, num_taps, num_antennas, trial),
    })
}

/// Snapshot grid: every iteration up to `dense_until`, then every
/// `stride`, always including 0 and `n_max`.
pub fn snapshot_iterations(n_max: usize, dense_until: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=n_max.min(dense_until)).collect();
    let mut n = n_max.min(dense_until) + stride;
    while n < n_max {
        out.push(n);
        n += stride;
    }
    if *out.last().unwrap() != n_max {
        out.push(n_max);
    }
    out
}

/// Resolves the sweep point grid: the cartesian product of the tau list
/// (or bandwidth factors), the rate-backoff list, and the precoder list.
pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>, CliError> {
    let mut points = Vec::new();
    let tau_axis: Vec<(f64, Option<f64>)> = match &cfg.bandwidth_factors {
        Some(factors) => {
            let base = cfg.tau_list[0];
            factors.iter().map(|&f| (base * f, Some(f))).collect()
        }
        None => cfg.tau_list.iter().map(|&t| (t, None)).collect(),
    };
    for &(tau, factor) in &tau_axis {
        let num_taps = if factor.is_some() {
            // Emulation mode scales L with tau regardless of num_taps.
            trdma_core::default_tap_count(tau).map_err(CliError::from_config_err)?
        } else {
            cfg.taps_for(tau)?
        };
        for &d in &cfg.d_list {
            for precoder in &cfg.precoders {
                points.push(SweepPoint {
                    precoder: precoder.clone(),
                    tau,
                    num_taps,
                    rate_backoff: d,
                    bandwidth_factor: factor,
                });
            }
        }
    }
    Ok(points)
}

fn single_point_trial(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    trial: u64,
) -> Result<TrialOutput, trdma_core::Error> {
    let ch = make_channel(cfg, point.tau, point.num_taps, cfg.num_antennas, trial)?;
    let label = point.precoder.label(cfg);
    let seed = ch.params().seed;
    let meta = |iterations: usize, users: Vec<UserMetrics>| MetricsReport {
        precoder: label.clone(),
        num_antennas: cfg.num_antennas,
        num_users: cfg.num_users,
        num_taps: point.num_taps,
        decay_time: point.tau,
        rate_backoff: point.rate_backoff,
        noise_sigma: cfg.sigma,
        iterations,
        seed,
        users,
    };

    match &point.precoder {
        PrecoderSpec::Tr => {
            let f = tr_precode(&ch, point.rate_backoff)?;
            let eq = equivalent_channel(&f, &ch)?;
            let users = compute_metrics(&eq, cfg.sigma, cfg.symbol_power)?;
            Ok(TrialOutput {
                report: meta(0, users),
                curve: Vec::new(),
            })
        }
        PrecoderSpec::Itr { .. } => {
            let n_max = point.precoder.iterations(cfg);
            let snaps = snapshot_iterations(n_max, cfg.trace_dense_until, cfg.trace_stride);
            let corr = correlate(&ch)?;
            let mut curve: Vec<(usize, Vec<UserMetrics>)> =
                snaps.iter().map(|&n| (n, Vec::new())).collect();
            let mut final_users = Vec::with_capacity(cfg.num_users);
            let mut iterations = 0;
            for target in 0..cfg.num_users {
                let itr_cfg = ItrConfig {
                    max_iterations: n_max,
                    tolerance: cfg.epsilon,
                    rate_backoff: point.rate_backoff,
                    target_user: target,
                };
                let mut state = ItrState::with_correlation(&ch, &itr_cfg, corr.clone())?;
                for (slot, &snap) in snaps.iter().enumerate() {
                    while state.iterations_run() < snap && !state.converged() {
                        state.step()?;
                    }
                    // Algorithm-scale metrics: the working filter keeps the
                    // focus amplitude pinned at 1, the scale on which the
                    // SINR saturates at the link SNR.
                    let f = state.snapshot_filter(false)?;
                    let eq = equivalent_channel(&f, &ch)?;
                    let users = compute_metrics(&eq, cfg.sigma, cfg.symbol_power)?;
                    curve[slot].1.push(users.into_iter().next().expect("one stream"));
                }
                iterations = iterations.max(state.iterations_run());
                final_users.push(curve.last().unwrap().1.last().unwrap().clone());
            }
            Ok(TrialOutput {
                report: meta(iterations, final_users),
                curve,
            })
        }
        PrecoderSpec::Zf | PrecoderSpec::Rzf { .. } => {
            let alpha = match &point.precoder {
                PrecoderSpec::Zf => 0.0,
                PrecoderSpec::Rzf { alpha } => alpha.unwrap_or(cfg.alpha),
                _ => unreachable!(),
            };
            let rzf_cfg = RzfConfig {
                alpha,
                fft_size: cfg.fft_size,
                rate_backoff: point.rate_backoff,
            };
            let f = rzf_precode(&ch, &rzf_cfg)?;
            let eq = equivalent_channel(&f, &ch)?;
            let users = compute_metrics(&eq, cfg.sigma, cfg.symbol_power)?;
            Ok(TrialOutput {
                report: meta(0, users),
                curve: Vec::new(),
            })
        }
    }
}

/// Runs the configured sweep: every (point, trial) pair is an independent
/// work unit with a derived seed, so results do not depend on worker count
/// or scheduling. Failed trials are skipped and counted, never silently
/// dropped.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, CliError> {
    cfg.validate()?;
    let points = sweep_points(cfg)?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();

    let outputs: Vec<(usize, u64, Result<TrialOutput, trdma_core::Error>)> = jobs
        .par_iter()
        .map(|&(p, t)| (p, t, single_point_trial(cfg, &points[p], t)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut per_point_failures = vec![0usize; points.len()];
    let mut per_point_curves: Vec<Vec<&TrialOutput>> = vec![Vec::new(); points.len()];
    for (p, t, out) in &outputs {
        match out {
            Ok(trial_out) => {
                rows.push(trial_out.report.clone());
                per_point_curves[*p].push(trial_out);
            }
            Err(e) => {
                per_point_failures[*p] += 1;
                failures.push(format!(
                    "point {} (precoder {}, tau {}, D {}), trial {t}: {e}",
                    p,
                    points[*p].precoder,
                    points[*p].tau,
                    points[*p].rate_backoff
                ));
            }
        }
    }

    let mut aggregates = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let outs = &per_point_curves[p];
        if outs.is_empty() {
            continue;
        }
        let label = point.precoder.label(cfg);
        let trials_ok = outs.len();
        let base = AggregateRow {
            precoder: label,
            num_antennas: cfg.num_antennas,
            num_users: cfg.num_users,
            num_taps: point.num_taps,
            decay_time: point.tau,
            rate_backoff: point.rate_backoff,
            noise_sigma: cfg.sigma,
            iterations: 0,
            seed: cfg.seed,
            trials: trials_ok,
            signal_mean: 0.0,
            isi_mean: 0.0,
            iui_mean: 0.0,
            sinr_mean: 0.0,
        };
        if outs[0].curve.is_empty() {
            let users: Vec<&UserMetrics> =
                outs.iter().flat_map(|o| o.report.users.iter()).collect();
            aggregates.push(aggregate_from(&base, 0, &users));
        } else {
            for slot in 0..outs[0].curve.len() {
                let iteration = outs[0].curve[slot].0;
                let users: Vec<&UserMetrics> = outs
                    .iter()
                    .flat_map(|o| o.curve[slot].1.iter())
                    .collect();
                aggregates.push(aggregate_from(&base, iteration, &users));
            }
        }
    }

    let attempted = jobs.len();
    let skipped: usize = per_point_failures.iter().sum();
    let threshold_exceeded = per_point_failures
        .iter()
        .any(|&f| f as f64 > FAILURE_THRESHOLD * cfg.trials as f64);
    Ok(SweepResult {
        rows,
        aggregates,
        attempted,
        skipped,
        failures,
        threshold_exceeded,
    })
}

fn aggregate_from(base: &AggregateRow, iterations: usize, users: &[&UserMetrics]) -> AggregateRow {
    let n = users.len().max(1) as f64;
    AggregateRow {
        iterations,
        signal_mean: users.iter().map(|u| u.signal_power).sum::<f64>() / n,
        isi_mean: users.iter().map(|u| u.isi).sum::<f64>() / n,
        iui_mean: users.iter().map(|u| u.iui).sum::<f64>() / n,
        sinr_mean: users.iter().map(|u| u.sinr).sum::<f64>() / n,
        ..base.clone()
    }
}

/// One row of the precoder comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub precoder: String,
    pub num_antennas: usize,
    pub trials: usize,
    pub signal_mean: f64,
    pub interference_mean: f64,
    /// Mean linear-path wrap-around artifact energy (frequency-designed
    /// precoders only).
    pub wrap_artifact_mean: Option<f64>,
}

impl CompareEntry {
    pub fn signal_db(&self) -> f64 {
        lin_db(self.signal_mean)
    }
    pub fn interference_db(&self) -> f64 {
        lin_db(self.interference_mean)
    }
    pub fn wrap_artifact_db(&self) -> Option<f64> {
        self.wrap_artifact_mean.map(lin_db)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareResult {
    pub entries: Vec<CompareEntry>,
    pub attempted: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
    pub threshold_exceeded: bool,
}

struct CompareSample {
    signal: f64,
    interference: f64,
    wrap: Option<f64>,
}

fn compare_trial(
    cfg: &ExperimentConfig,
    precoder: &PrecoderSpec,
    ch: &ChannelSet,
    d: usize,
) -> Result<CompareSample, trdma_core::Error> {
    // Every scheme transmits at unit per-user energy; ZF/RZF rows are
    // evaluated on the circular grid where exact ZF nulls interference,
    // TR/ITR rows on the linear path.
    let (eq, wrap): (EquivalentChannel, Option<f64>) = match precoder {
        PrecoderSpec::Tr => (equivalent_channel(&tr_precode(ch, d)?, ch)?, None),
        PrecoderSpec::Itr { .. } => {
            let itr_cfg = ItrConfig {
                max_iterations: precoder.iterations(cfg),
                tolerance: cfg.epsilon,
                rate_backoff: d,
                target_user: 0,
            };
            let (f, _) = trdma_core::itr::itr_precode_all(ch, &itr_cfg)?;
            (equivalent_channel(&f, ch)?, None)
        }
        PrecoderSpec::Zf | PrecoderSpec::Rzf { .. } => {
            let alpha = match precoder {
                PrecoderSpec::Zf => 0.0,
                PrecoderSpec::Rzf { alpha } => alpha.unwrap_or(cfg.alpha),
                _ => unreachable!(),
            };
            let f = rzf_precode(
                ch,
                &RzfConfig {
                    alpha,
                    fft_size: cfg.fft_size,
                    rate_backoff: d,
                },
            )?;
            let wrap = wrap_artifact_energy(&f, ch, f.filter_len())?;
            let mean_wrap = wrap.iter().sum::<f64>() / wrap.len() as f64;
            (circular_equivalent(&f, ch)?, Some(mean_wrap))
        }
    };
    let users = compute_metrics(&eq, cfg.sigma, cfg.symbol_power)?;
    let n = users.len() as f64;
    Ok(CompareSample {
        signal: users.iter().map(|u| u.signal_power).sum::<f64>() / n,
        interference: users.iter().map(|u| u.interference()).sum::<f64>() / n,
        wrap,
    })
}

/// Builds the signal/interference comparison across precoders and antenna
/// counts at equal average transmit power, aggregated mean-then-dB.
pub fn compare_precoders(cfg: &ExperimentConfig) -> Result<CompareResult, CliError> {
    cfg.validate()?;
    if cfg.precoders.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two precoders".into(),
        ));
    }
    let tau = cfg.tau_list[0];
    let num_taps = cfg.taps_for(tau)?;
    let d = cfg.d_list[0];

    let jobs: Vec<(usize, u64)> = (0..cfg.m_list.len())
        .flat_map(|mi| (0..cfg.trials as u64).map(move |t| (mi, t)))
        .collect();
    type TrialSamples = Vec<Result<CompareSample, trdma_core::Error>>;
    let outputs: Vec<(usize, TrialSamples)> = jobs
        .par_iter()
        .map(|&(mi, t)| {
            let m = cfg.m_list[mi];
            let samples: TrialSamples = match make_channel(cfg, tau, num_taps, m, t) {
                Ok(ch) => cfg
                    .precoders
                    .iter()
                    .map(|p| compare_trial(cfg, p, &ch, d))
                    .collect(),
                Err(e) => cfg.precoders.iter().map(|_| Err(clone_err(&e))).collect(),
            };
            (mi, samples)
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = 0usize;
    let mut threshold_exceeded = false;
    for (mi, m) in cfg.m_list.iter().enumerate() {
        for (pi, precoder) in cfg.precoders.iter().enumerate() {
            let mut signal = 0.0;
            let mut interference = 0.0;
            let mut wrap_sum = 0.0;
            let mut wrap_count = 0usize;
            let mut ok = 0usize;
            for (job_mi, samples) in &outputs {
                if job_mi != &mi {
                    continue;
                }
                match &samples[pi] {
                    Ok(s) => {
                        ok += 1;
                        signal += s.signal;
                        interference += s.interference;
                        if let Some(w) = s.wrap {
                            wrap_sum += w;
                            wrap_count += 1;
                        }
                    }
                    Err(e) => {
                        skipped += 1;
                        failures.push(format!("M={m} precoder {precoder}: {e}"));
                    }
                }
            }
            if ok == 0 || (cfg.trials - ok) as f64 > FAILURE_THRESHOLD * cfg.trials as f64 {
                threshold_exceeded = true;
            }
            if ok > 0 {
                entries.push(CompareEntry {
                    precoder: precoder.label(cfg),
                    num_antennas: *m,
                    trials: ok,
                    signal_mean: signal / ok as f64,
                    interference_mean: interference / ok as f64,
                    wrap_artifact_mean: (wrap_count > 0).then(|| wrap_sum / wrap_count as f64),
                });
            }
        }
    }
    Ok(CompareResult {
        entries,
        attempted: jobs.len() * cfg.precoders.len(),
        skipped,
        failures,
        threshold_exceeded,
    })
}

fn clone_err(e: &trdma_core::Error) -> trdma_core::Error {
    trdma_core::Error::NumericalFailure(e.to_string())
}

/// Text table in the shape of the signal/interference comparison: one row
/// per precoder, S/I column pairs per antenna count.
pub fn format_compare_table(result: &CompareResult, m_list: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<12}", "precoder"));
    for m in m_list {
        out.push_str(&format!(" | {:>10} {:>10}", format!("S[dB] M={m}"), format!("I[dB] M={m}")));
    }
    out.push('\n');
    let mut precoders: Vec<&str> = Vec::new();
    for e in &result.entries {
        if !precoders.contains(&e.precoder.as_str()) {
            precoders.push(&e.precoder);
        }
    }
    for p in precoders {
        out.push_str(&format!("{p:<12}"));
        for m in m_list {
            let entry = result
                .entries
                .iter()
                .find(|e| e.precoder == p && e.num_antennas == *m);
            match entry {
                Some(e) => out.push_str(&format!(
                    " | {:>10} {:>10}",
                    fmt_db(e.signal_db()),
                    fmt_db(e.interference_db())
                )),
                None => out.push_str(&format!(" | {:>10} {:>10}", "-", "-")),
            }
        }
        out.push('\n');
    }
    out
}

/// Metrics of one precoder over one explicit channel, on either
/// evaluation path. Filters are transmit-normalized; for frequency-domain
/// precoders on the linear path the per-user wrap-around artifact energy
/// is returned alongside.
pub fn evaluate_channel(
    cfg: &ExperimentConfig,
    precoder: &PrecoderSpec,
    ch: &ChannelSet,
    d: usize,
    eval: crate::config::EvalMode,
) -> Result<(MetricsReport, Option<Vec<f64>>), CliError> {
    use crate::config::EvalMode;
    let ring = trdma_core::fft::next_power_of_two(2 * ch.num_taps());
    let mut wrap = None;
    let (filter, iterations) = match precoder {
        PrecoderSpec::Tr => (tr_precode(ch, d)?, 0),
        PrecoderSpec::Itr { .. } => {
            let itr_cfg = ItrConfig {
                max_iterations: precoder.iterations(cfg),
                tolerance: cfg.epsilon,
                rate_backoff: d,
                target_user: 0,
            };
            let (f, traces) = trdma_core::itr::itr_precode_all(ch, &itr_cfg)?;
            let iterations = traces.iter().map(|t| t.iterations_run).max().unwrap_or(0);
            (f, iterations)
        }
        PrecoderSpec::Zf | PrecoderSpec::Rzf { .. } => {
            let alpha = match precoder {
                PrecoderSpec::Zf => 0.0,
                PrecoderSpec::Rzf { alpha } => alpha.unwrap_or(cfg.alpha),
                _ => unreachable!(),
            };
            let f = rzf_precode(
                ch,
                &RzfConfig {
                    alpha,
                    fft_size: cfg.fft_size,
                    rate_backoff: d,
                },
            )?;
            if eval == EvalMode::Linear {
                wrap = Some(wrap_artifact_energy(&f, ch, f.filter_len())?);
            }
            (f, 0)
        }
    };
    let eq = match eval {
        EvalMode::Linear => equivalent_channel(&filter, ch)?,
        EvalMode::Circular => trdma_core::linksim::equivalent_channel_circular(
            &filter,
            ch,
            filter.filter_len().max(ring),
        )?,
    };
    let users = compute_metrics(&eq, cfg.sigma, cfg.symbol_power)?;
    let p = ch.params();
    Ok((
        MetricsReport {
            precoder: precoder.label(cfg),
            num_antennas: p.num_antennas,
            num_users: p.num_users,
            num_taps: p.num_taps,
            decay_time: p.decay_time,
            rate_backoff: d,
            noise_sigma: cfg.sigma,
            iterations,
            seed: p.seed,
            users,
        },
        wrap,
    ))
}

/// One row of the complexity report.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityRow {
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_taps: usize,
    pub iterations: usize,
    pub itr_direct: u64,
    pub itr_fft: u64,
    pub rzf: u64,
}

/// Scalar-multiplication counts over a grid of user counts.
pub fn complexity_report(
    num_antennas: usize,
    num_taps: usize,
    iterations: usize,
    users: &[usize],
) -> Result<Vec<ComplexityRow>, CliError> {
    users
        .iter()
        .map(|&n| {
            let direct = complexity(ComplexityScheme::ItrDirect, num_antennas, n, num_taps, iterations)
                .map_err(CliError::from_config_err)?;
            let fft = complexity(ComplexityScheme::ItrFft, num_antennas, n, num_taps, iterations)
                .map_err(CliError::from_config_err)?;
            let rzf = complexity(ComplexityScheme::Rzf, num_antennas, n, num_taps, iterations)
                .map_err(CliError::from_config_err)?;
            Ok(ComplexityRow {
                num_antennas,
                num_users: n,
                num_taps,
                iterations,
                itr_direct: direct.multiplications,
                itr_fft: fft.multiplications,
                rzf: rzf.multiplications,
            })
        })
        .collect()
}
