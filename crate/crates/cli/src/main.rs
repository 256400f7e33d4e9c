use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use trdma_cli::config::{EvalMode, ExperimentConfig, OutputFormat, PrecoderSpec};
use trdma_cli::{emit, runner, CliError};
use trdma_core::channel::{generate, ChannelParams, ChannelSet};
use trdma_core::itr::{ItrConfig, ItrState};
use trdma_core::rzf::{rzf_precode, wrap_artifact_energy, RzfConfig};
use trdma_core::trcore::{correlate, tr_precode, PrecodeFilter};

/// Link-level experiments for time-reversal multi-user downlink precoding.
#[derive(Parser)]
#[command(name = "trdma", version, about)]
struct Cli {
    /// JSON experiment config; flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file (defaults to stdout for tabular commands).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads for Monte Carlo commands (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic channel ensemble and write the CIR file.
    GenChannel(ChannelArgs),
    /// Build one precoding filter and print its shape; for itr, dump the
    /// per-iteration trace as JSON lines with --trace.
    Precode(PrecodeArgs),
    /// Metrics (signal/ISI/IUI/SINR) of one precoder on one channel.
    Evaluate(EvaluateArgs),
    /// Monte Carlo sweep over tau, rate backoff, and precoders; iterative
    /// precoders also emit SINR-vs-iteration aggregate rows.
    Sweep(SweepArgs),
    /// Signal and interference comparison table across precoders and
    /// antenna counts at equal transmit power.
    Compare,
    /// Scalar-multiplication counts for the precoding schemes.
    Complexity(ComplexityArgs),
}

#[derive(Args, Clone, Default)]
struct ChannelArgs {
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    antennas: Option<usize>,
    /// Channel length in taps (default: ceil(8 tau)).
    #[arg(long)]
    taps: Option<usize>,
    /// Power decay time in taps.
    #[arg(long)]
    tau: Option<f64>,
    /// Skip ensemble energy normalization.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct PrecodeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// tr | itr[:n] | zf | rzf[:alpha]
    #[arg(long)]
    precoder: String,
    /// Load the channel from a CIR file instead of generating it.
    #[arg(long)]
    cir: Option<PathBuf>,
    /// Write the ITR iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    target_user: usize,
    /// Rate backoff (taps between symbols).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// tr | itr[:n] | zf | rzf[:alpha] (default: first configured precoder)
    #[arg(long)]
    precoder: Option<String>,
    #[arg(long)]
    cir: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// linear: physical convolution path; circular: ring evaluation where
    /// exact ZF nulls interference.
    #[arg(long, value_enum, default_value_t = EvalMode::Linear)]
    eval: EvalMode,
}

#[derive(Args)]
struct SweepArgs {
    /// Emulate a bandwidth sweep by scaling (tau, L) together by these
    /// factors from the base tau. An emulation, not a hardware sweep.
    #[arg(long, value_delimiter = ',')]
    bandwidth_factors: Option<Vec<f64>>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 2)]
    antennas: usize,
    #[arg(long, default_value_t = 16)]
    taps: usize,
    /// ITR iteration count n'.
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// User counts to tabulate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8, 16, 32])]
    users: Vec<usize>,
}

fn main() {
    // Die quietly on closed pipes (e.g. `trdma ... | head`) instead of
    // panicking in println.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            std::process::exit(if ok { 0 } else { 1 });
        }
    };
    let code = match run(cli) {
        Ok(threshold_exceeded) => {
            if threshold_exceeded {
                eprintln!("numerical failure threshold exceeded");
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("building worker pool: {e}")))?;

    match cli.command {
        Command::GenChannel(args) => {
            apply_channel_args(&mut cfg, &args);
            let out = cfg
                .out
                .clone()
                .ok_or_else(|| CliError::Config("gen-channel requires --out".into()))?;
            let ch = generate(&channel_params(&cfg)?).map_err(CliError::from)?;
            ch.save(&out).map_err(CliError::from)?;
            println!(
                "wrote {} users x {} antennas x {} taps (tau {}, seed {}) to {}",
                ch.num_users(),
                ch.num_antennas(),
                ch.num_taps(),
                ch.params().decay_time,
                ch.params().seed,
                out.display()
            );
            Ok(false)
        }
        Command::Precode(args) => {
            apply_channel_args(&mut cfg, &args.channel);
            cfg.validate()?;
            let precoder: PrecoderSpec = args.precoder.parse().map_err(CliError::Config)?;
            let ch = obtain_channel(&cfg, args.cir.as_deref())?;
            let d = args.d.unwrap_or(cfg.d_list[0]);
            run_precode(&cfg, &precoder, &ch, d, args.target_user, args.trace.as_deref())?;
            Ok(false)
        }
        Command::Evaluate(args) => {
            apply_channel_args(&mut cfg, &args.channel);
            if let Some(sigma) = args.sigma {
                cfg.sigma = sigma;
            }
            cfg.validate()?;
            let precoder = match &args.precoder {
                Some(s) => s.parse().map_err(CliError::Config)?,
                None => cfg.precoders[0].clone(),
            };
            let ch = obtain_channel(&cfg, args.cir.as_deref())?;
            let d = args.d.unwrap_or(cfg.d_list[0]);
            let (report, wrap) = runner::evaluate_channel(&cfg, &precoder, &ch, d, args.eval)?;
            if let Some(wrap) = wrap {
                for (user, energy) in wrap.iter().enumerate() {
                    eprintln!(
                        "wrap-around artifact at user {user}: {}",
                        trdma_core::metrics::fmt_db(if *energy > 0.0 {
                            10.0 * energy.log10()
                        } else {
                            f64::NEG_INFINITY
                        })
                    );
                }
            }
            emit::write_reports(&cfg, &[report], cfg.out.as_deref())?;
            Ok(false)
        }
        Command::Sweep(args) => {
            if args.bandwidth_factors.is_some() {
                cfg.bandwidth_factors = args.bandwidth_factors;
            }
            cfg.validate()?;
            if cfg.bandwidth_factors.is_some() {
                eprintln!(
                    "bandwidth emulation: scaling (tau, L) together; this stands in for a bandwidth change, it is not an over-the-air sweep"
                );
            }
            let result = pool.install(|| runner::run_sweep(&cfg))?;
            emit::write_sweep(&cfg, &result, cfg.out.as_deref())?;
            eprintln!(
                "trials attempted: {}, skipped: {}",
                result.attempted, result.skipped
            );
            for failure in result.failures.iter().take(10) {
                eprintln!("skipped: {failure}");
            }
            Ok(result.threshold_exceeded)
        }
        Command::Compare => {
            cfg.validate()?;
            let result = pool.install(|| runner::compare_precoders(&cfg))?;
            if cfg.out.is_some() {
                emit::write_compare(&cfg, &result, cfg.out.as_deref())?;
            }
            print!("{}", runner::format_compare_table(&result, &cfg.m_list));
            eprintln!(
                "trials attempted: {}, skipped: {}",
                result.attempted, result.skipped
            );
            Ok(result.threshold_exceeded)
        }
        Command::Complexity(args) => {
            let rows = runner::complexity_report(args.antennas, args.taps, args.iters, &args.users)?;
            let format = cfg.format;
            emit::write_complexity(format, &rows, cfg.out.as_deref())?;
            if let Some(cross) = rows.iter().find(|r| r.rzf > r.itr_fft) {
                eprintln!(
                    "rzf exceeds itr-fft from N = {} (N^3 L inversion term dominates as N grows)",
                    cross.num_users
                );
            }
            Ok(false)
        }
    }
}

fn apply_channel_args(cfg: &mut ExperimentConfig, args: &ChannelArgs) {
    if let Some(u) = args.users {
        cfg.num_users = u;
    }
    if let Some(a) = args.antennas {
        cfg.num_antennas = a;
    }
    if let Some(t) = args.taps {
        cfg.num_taps = Some(t);
    }
    if let Some(tau) = args.tau {
        cfg.tau_list = vec![tau];
    }
    if args.no_normalize {
        cfg.normalize_ensemble = false;
    }
}

fn channel_params(cfg: &ExperimentConfig) -> Result<ChannelParams, CliError> {
    cfg.validate()?;
    let tau = cfg.tau_list[0];
    Ok(ChannelParams {
        num_users: cfg.num_users,
        num_antennas: cfg.num_antennas,
        num_taps: cfg.taps_for(tau)?,
        decay_time: tau,
        normalize_ensemble: cfg.normalize_ensemble,
        seed: cfg.seed,
    })
}

fn obtain_channel(cfg: &ExperimentConfig, cir: Option<&std::path::Path>) -> Result<ChannelSet, CliError> {
    match cir {
        Some(path) => ChannelSet::load(path).map_err(CliError::from),
        None => generate(&channel_params(cfg)?).map_err(CliError::from),
    }
}

fn run_precode(
    cfg: &ExperimentConfig,
    precoder: &PrecoderSpec,
    ch: &ChannelSet,
    d: usize,
    target_user: usize,
    trace_path: Option<&std::path::Path>,
) -> Result<(), CliError> {
    if trace_path.is_some() && !matches!(precoder, PrecoderSpec::Itr { .. }) {
        return Err(CliError::Config(
            "--trace is only meaningful for the itr precoder".into(),
        ));
    }
    match precoder {
        PrecoderSpec::Tr => {
            let f = tr_precode(ch, d).map_err(CliError::from)?;
            print_filter_summary("tr", &f, None);
        }
        PrecoderSpec::Itr { .. } => {
            let itr_cfg = ItrConfig {
                max_iterations: precoder.iterations(cfg),
                tolerance: cfg.epsilon,
                rate_backoff: d,
                target_user,
            };
            let corr = correlate(ch).map_err(CliError::from)?;
            let mut state =
                ItrState::with_correlation(ch, &itr_cfg, corr).map_err(CliError::from)?;
            state.run().map_err(CliError::from)?;
            let trace = state.trace();
            let f = state.snapshot_filter(true).map_err(CliError::from)?;
            print_filter_summary(&precoder.label(cfg), &f, None);
            println!(
                "target_user={} iterations={} converged={} max_dev={:.3e}",
                trace.target_user,
                trace.iterations_run,
                trace.converged,
                state.max_deviation()
            );
            if let Some(path) = trace_path {
                std::fs::write(path, trace.to_jsonl())
                    .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
                println!("trace written to {}", path.display());
            }
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
            )
            .map_err(CliError::from)?;
            let wrap = wrap_artifact_energy(&f, ch, f.filter_len()).map_err(CliError::from)?;
            print_filter_summary(&precoder.label(cfg), &f, Some(&wrap));
        }
    }
    Ok(())
}

fn print_filter_summary(label: &str, f: &PrecodeFilter, wrap: Option<&[f64]>) {
    let energies: Vec<String> = (0..f.num_streams())
        .map(|s| format!("{:.6}", f.stream_energy(s)))
        .collect();
    println!(
        "precoder={label} streams={} antennas={} filter_len={} focus={} D={} energy=[{}]",
        f.num_streams(),
        f.num_antennas(),
        f.filter_len(),
        f.focus,
        f.rate_backoff,
        energies.join(",")
    );
    if let Some(wrap) = wrap {
        let formatted: Vec<String> = wrap
            .iter()
            .map(|&e| {
                trdma_core::metrics::fmt_db(if e > 0.0 {
                    10.0 * e.log10()
                } else {
                    f64::NEG_INFINITY
                })
            })
            .collect();
        println!("wrap_artifact_db=[{}]", formatted.join(","));
    }
}
