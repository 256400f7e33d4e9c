//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured values (run with `--nocapture` to see them all).
//!
//! Criteria 1 and 3 contain sub-clauses that are known not to hold for
//! this implementation; they are asserted as stated rather than loosened,
//! so their tests report the measured discrepancy and fail honestly.

use trdma_cli::config::{EvalMode, ExperimentConfig, PrecoderSpec};
use trdma_cli::runner::{
    compare_precoders, complexity_report, evaluate_channel, run_sweep, AggregateRow,
};
use trdma_core::channel::{generate, ChannelParams};
use trdma_core::itr::{deviation_map, ItrConfig, ItrState};
use trdma_core::linksim::{convolve_direct, convolve_fft};
use trdma_core::metrics::{complexity, ComplexityScheme};
use trdma_core::rng::Stream;
use trdma_core::trcore::correlate;

fn report(criterion: &str, clauses: &[(String, bool)]) {
    let failed: Vec<&(String, bool)> = clauses.iter().filter(|(_, ok)| !ok).collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!("[acceptance] {criterion}: {verdict}");
    for (desc, ok) in clauses {
        println!("    [{}] {desc}", if *ok { "ok" } else { "FAIL" });
    }
    assert!(
        failed.is_empty(),
        "{criterion}: {} clause(s) failed: {}",
        failed.len(),
        failed
            .iter()
            .map(|(d, _)| d.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    );
}

/// First snapshot iteration at which the mean-then-dB SINR curve comes
/// within 0.05 dB of its own converged value.
fn iterations_to_plateau(rows: &[&AggregateRow]) -> (usize, f64) {
    let final_db = rows.last().expect("curve rows").sinr_db();
    let crossing = rows
        .iter()
        .find(|r| r.sinr_db() >= final_db - 0.05)
        .map(|r| r.iterations)
        .unwrap_or(usize::MAX);
    (crossing, final_db)
}

#[test]
fn criterion_1_itr_convergence_to_link_snr() {
    let cfg = ExperimentConfig {
        num_users: 2,
        num_antennas: 8,
        tau_list: vec![5.0],
        d_list: vec![1, 2, 3, 4],
        sigma: 0.1,
        trials: 200,
        seed: 20_240_501,
        precoders: vec![PrecoderSpec::Itr {
            iterations: Some(500),
        }],
        ..Default::default()
    };
    let result = run_sweep(&cfg).expect("sweep runs");
    assert_eq!(result.skipped, 0, "no trial may fail in this ensemble");

    let mut crossings = [0usize; 5];
    let mut finals = [0.0f64; 5];
    for d in 1..=4usize {
        let rows: Vec<&AggregateRow> = result
            .aggregates
            .iter()
            .filter(|r| r.rate_backoff == d)
            .collect();
        let (cross, final_db) = iterations_to_plateau(&rows);
        crossings[d] = cross;
        finals[d] = final_db;
    }
    println!(
        "    measured: plateau dB (D=1..4) = {:.2}/{:.2}/{:.2}/{:.2}, iterations-to-plateau = {}/{}/{}/{}",
        finals[1], finals[2], finals[3], finals[4],
        crossings[1], crossings[2], crossings[3], crossings[4]
    );

    let clauses = vec![
        (
            format!(
                "D=4 mean SINR plateaus at 20 dB +- 0.5 (measured {:.3})",
                finals[4]
            ),
            (finals[4] - 20.0).abs() <= 0.5,
        ),
        (
            format!("plateau reached by iteration ~50 for D=4 (measured {})", crossings[4]),
            crossings[4] <= 65,
        ),
        (
            format!(
                "plateau not reached before iteration 400 for D=1 (measured {})",
                crossings[1]
            ),
            crossings[1] > 400,
        ),
        (
            format!(
                "iterations-to-plateau ordering D4 < D3 < D2 < D1 ({} < {} < {} < {})",
                crossings[4], crossings[3], crossings[2], crossings[1]
            ),
            crossings[4] < crossings[3]
                && crossings[3] < crossings[2]
                && crossings[2] < crossings[1],
        ),
        (
            format!("D=4 count within 30% of 50 (measured {})", crossings[4]),
            (35..=65).contains(&crossings[4]),
        ),
        (
            format!("D=3 count within 30% of 120 (measured {})", crossings[3]),
            (84..=156).contains(&crossings[3]),
        ),
        (
            format!("D=2 count within 30% of 350 (measured {})", crossings[2]),
            (245..=455).contains(&crossings[2]),
        ),
        (
            format!("D=1 count consistent with >600 - 30% (measured {})", crossings[1]),
            crossings[1] >= 420,
        ),
    ];
    report("criterion 1 (ITR convergence vs iterations)", &clauses);
}

#[test]
fn criterion_2_sinr_vs_decay_time() {
    let taus = [2.0, 5.0, 10.0, 20.0];
    let cfg = ExperimentConfig {
        num_users: 2,
        num_antennas: 8,
        tau_list: taus.to_vec(),
        d_list: vec![1, 2],
        sigma: 0.1,
        trials: 200,
        seed: 20_240_502,
        precoders: vec![PrecoderSpec::Itr {
            iterations: Some(200),
        }],
        // Final-value-only snapshots keep this sweep cheap.
        trace_dense_until: 0,
        trace_stride: 200,
        ..Default::default()
    };
    let result = run_sweep(&cfg).expect("sweep runs");
    assert_eq!(result.skipped, 0);

    let curve = |d: usize| -> Vec<f64> {
        taus.iter()
            .map(|&tau| {
                result
                    .aggregates
                    .iter()
                    .filter(|r| r.rate_backoff == d && r.decay_time == tau)
                    .last()
                    .map(|r| r.sinr_db())
                    .expect("aggregate present")
            })
            .collect()
    };
    let d1 = curve(1);
    let d2 = curve(2);
    println!("    measured at 200 iterations: D=1 {d1:?}, D=2 {d2:?} for tau {taus:?}");

    let strictly_decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let clauses = vec![
        (
            format!("mean SINR strictly decreasing in tau for D=1 ({d1:?})"),
            strictly_decreasing(&d1),
        ),
        (
            format!("mean SINR strictly decreasing in tau for D=2 ({d2:?})"),
            strictly_decreasing(&d2),
        ),
        (
            "D=1 curve below D=2 at every tau".to_string(),
            d1.iter().zip(&d2).all(|(a, b)| a < b),
        ),
    ];
    report("criterion 2 (SINR vs decay time)", &clauses);
}

#[test]
fn criterion_3_signal_interference_table() {
    let cfg = ExperimentConfig {
        num_users: 2,
        num_antennas: 8, // per-entry antenna counts come from m_list
        tau_list: vec![5.0],
        d_list: vec![1],
        sigma: 0.1,
        trials: 10_000,
        seed: 20_240_503,
        precoders: vec![
            PrecoderSpec::Zf,
            PrecoderSpec::Rzf { alpha: Some(0.1) },
            PrecoderSpec::Rzf { alpha: Some(0.3) },
            PrecoderSpec::Tr,
            PrecoderSpec::Itr {
                iterations: Some(10),
            },
            PrecoderSpec::Itr {
                iterations: Some(20),
            },
        ],
        m_list: vec![2, 4],
        ..Default::default()
    };
    let result = compare_precoders(&cfg).expect("compare runs");
    assert_eq!(result.skipped, 0);
    let get = |label: &str, m: usize| {
        result
            .entries
            .iter()
            .find(|e| e.precoder == label && e.num_antennas == m)
            .unwrap_or_else(|| panic!("entry {label} M={m}"))
    };
    for m in [2usize, 4] {
        for p in ["zf", "rzf:0.1", "rzf:0.3", "tr", "itr:10", "itr:20"] {
            let e = get(p, m);
            println!(
                "    M={m} {p}: S {:.2} dB, I {:.2} dB",
                e.signal_db(),
                e.interference_db()
            );
        }
    }

    let tr2 = get("tr", 2);
    let tr4 = get("tr", 4);
    let mut clauses = vec![
        (
            format!("TR signal 3.0 dB +- 0.3 at M=2 (measured {:.3})", tr2.signal_db()),
            (tr2.signal_db() - 3.0).abs() <= 0.3,
        ),
        (
            format!("TR signal 6.02 dB +- 0.3 at M=4 (measured {:.3})", tr4.signal_db()),
            (tr4.signal_db() - 6.02).abs() <= 0.3,
        ),
        (
            format!(
                "TR interference within 0.7 dB between M=2 and M=4 ({:.3} vs {:.3})",
                tr2.interference_db(),
                tr4.interference_db()
            ),
            (tr2.interference_db() - tr4.interference_db()).abs() < 0.7,
        ),
    ];
    for m in [2usize, 4] {
        let zf = get("zf", m);
        let rzf1 = get("rzf:0.1", m);
        let rzf3 = get("rzf:0.3", m);
        let tr = get("tr", m);
        let itr10 = get("itr:10", m);
        let itr20 = get("itr:20", m);
        clauses.push((
            format!("ZF interference below -100 dB at M={m} ({})", {
                let db = zf.interference_db();
                if db.is_finite() { format!("{db:.1}") } else { "-inf".into() }
            }),
            zf.interference_db() < -100.0,
        ));
        clauses.push((
            format!(
                "RZF(0.1) I < RZF(0.3) I at M={m} ({:.2} < {:.2})",
                rzf1.interference_db(),
                rzf3.interference_db()
            ),
            rzf1.interference_db() < rzf3.interference_db(),
        ));
        clauses.push((
            format!(
                "ITR(20) I < ITR(10) I < TR I at M={m} ({:.2} < {:.2} < {:.2})",
                itr20.interference_db(),
                itr10.interference_db(),
                tr.interference_db()
            ),
            itr20.interference_db() < itr10.interference_db()
                && itr10.interference_db() < tr.interference_db(),
        ));
        clauses.push((
            format!(
                "RZF(0.3) S > ITR(10) S at M={m} ({:.2} vs {:.2})",
                rzf3.signal_db(),
                itr10.signal_db()
            ),
            rzf3.signal_db() > itr10.signal_db(),
        ));
    }
    report("criterion 3 (signal/interference table)", &clauses);
}

#[test]
fn criterion_4_per_iteration_exactness() {
    let mut dims = Stream::keyed(20_240_504, &[1]);
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let m = 1 + (dims.next_u64() % 4) as usize;
        let n = 1 + (dims.next_u64() % 3) as usize;
        let l = 2 + (dims.next_u64() % 15) as usize;
        let d = 1 + (dims.next_u64() % 3) as usize;
        let ch = generate(&ChannelParams {
            num_users: n,
            num_antennas: m,
            num_taps: l,
            decay_time: 4.0,
            normalize_ensemble: true,
            seed: 777_000 + case,
        })
        .expect("channel");
        let cfg = ItrConfig {
            max_iterations: 40,
            tolerance: 1e-12,
            rate_backoff: d,
            target_user: (dims.next_u64() % n as u64) as usize,
        };
        let mut state = ItrState::new(&ch, &cfg).expect("state");
        while !state.converged() && state.iterations_run() < cfg.max_iterations {
            let rec = state.step().expect("step");
            let oracle = deviation_map(
                &state.snapshot_filter(false).expect("snapshot"),
                &ch,
                cfg.target_user,
            )
            .expect("deviation map");
            let residual = oracle.value(rec.j_hat, rec.k_hat).norm();
            worst = worst.max(residual);
        }
    }
    println!("    measured: worst selected-tap residual {worst:.3e} over 100 channels");
    report(
        "criterion 4 (per-iteration exact zeroing)",
        &[(
            format!("selected grid tap deviation <= 1e-10 after every iteration (worst {worst:.3e})"),
            worst <= 1e-10,
        )],
    );
}

#[test]
fn criterion_5_oracle_equivalences() {
    // (a) The two closed forms of the TR equivalent channel.
    let ch = generate(&ChannelParams {
        num_users: 3,
        num_antennas: 4,
        num_taps: 12,
        decay_time: 5.0,
        normalize_ensemble: true,
        seed: 20_240_505,
    })
    .unwrap();
    let mut worst_a = 0.0f64;
    for d in [1usize, 2, 3] {
        let f = trdma_core::trcore::tr_precode(&ch, d).unwrap();
        let eq = trdma_core::linksim::equivalent_channel(&f, &ch).unwrap();
        let r = correlate(&ch).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                for k in eq.k_min()..=eq.k_max() {
                    worst_a = worst_a.max((eq.value(j, i, k) - r.value(j, i, k * d as i64)).norm());
                }
            }
        }
    }

    // (b) Sample-level vs symbol-level model at sigma = 0.
    let mut worst_b = 0.0f64;
    for d in [1usize, 3] {
        let f = trdma_core::trcore::tr_precode(&ch, d).unwrap();
        let frame = trdma_core::linksim::SymbolFrame::random(3, 4, 1.0, 5).unwrap();
        let s = trdma_core::linksim::transmit_signal(&f, &frame).unwrap();
        let y = trdma_core::linksim::receive(&s, &ch, 0.0, 0).unwrap();
        let eq = trdma_core::linksim::equivalent_channel(&f, &ch).unwrap();
        let (lo, hi) = trdma_core::linksim::representable_range(y[0].len(), d, f.focus);
        for (j, stream) in y.iter().enumerate() {
            let grid = trdma_core::linksim::sample_grid(stream, d, f.focus, lo, hi).unwrap();
            for (slot, ell) in (lo..=hi).enumerate() {
                let mut expected = num_complex::Complex64::default();
                for i in 0..3 {
                    for l in 0..frame.num_symbols() {
                        expected += eq.value(j, i, ell - l as i64) * frame.symbol(i, l);
                    }
                }
                worst_b = worst_b.max((grid.samples[slot] - expected).norm());
            }
        }
    }

    // (c) FFT vs direct convolution up to length 4096.
    let mut stream = Stream::keyed(20_240_506, &[2]);
    let mut worst_c = 0.0f64;
    for (la, lb) in [(4096usize, 4096usize), (4096, 100), (513, 2048)] {
        let a: Vec<_> = (0..la).map(|_| stream.next_complex_normal()).collect();
        let b: Vec<_> = (0..lb).map(|_| stream.next_complex_normal()).collect();
        let direct = convolve_direct(&a, &b);
        let fast = convolve_fft(&a, &b);
        for (x, y) in direct.iter().zip(&fast) {
            worst_c = worst_c.max((x - y).norm());
        }
    }

    // (d) RZF push-through identity residual.
    let mut worst_d = 0.0f64;
    for seed in 0..20u64 {
        let mut s = Stream::keyed(seed, &[3]);
        let (n, m) = (3usize, 5usize);
        let h: Vec<_> = (0..n * m).map(|_| s.next_complex_normal()).collect();
        let alpha = 0.3;
        let w = trdma_core::rzf::solve_regularized(&h, n, m, alpha).unwrap();
        // Independent route: solve (H^H H + alpha I_M) Y = H^H by a naive
        // Gauss-Jordan elimination written out here.
        let mut gram = vec![num_complex::Complex64::default(); m * m];
        for r in 0..m {
            for c in 0..m {
                let mut acc = num_complex::Complex64::default();
                for k in 0..n {
                    acc += h[k * m + r].conj() * h[k * m + c];
                }
                if r == c {
                    acc += alpha;
                }
                gram[r * m + c] = acc;
            }
        }
        let mut rhs = vec![num_complex::Complex64::default(); m * n];
        for r in 0..m {
            for c in 0..n {
                rhs[r * n + c] = h[c * m + r].conj();
            }
        }
        // Forward elimination with partial pivoting.
        for col in 0..m {
            let pivot_row = (col..m)
                .max_by(|&a, &b| gram[a * m + col].norm().total_cmp(&gram[b * m + col].norm()))
                .unwrap();
            if pivot_row != col {
                for k in 0..m {
                    gram.swap(col * m + k, pivot_row * m + k);
                }
                for k in 0..n {
                    rhs.swap(col * n + k, pivot_row * n + k);
                }
            }
            let pivot = gram[col * m + col];
            for r in 0..m {
                if r == col {
                    continue;
                }
                let factor = gram[r * m + col] / pivot;
                for k in 0..m {
                    let v = gram[col * m + k];
                    gram[r * m + k] -= factor * v;
                }
                for k in 0..n {
                    let v = rhs[col * n + k];
                    rhs[r * n + k] -= factor * v;
                }
            }
        }
        for r in 0..m {
            let pivot = gram[r * m + r];
            for k in 0..n {
                rhs[r * n + k] /= pivot;
            }
        }
        for (a, b) in w.iter().zip(&rhs) {
            worst_d = worst_d.max((a - b).norm());
        }
    }

    println!(
        "    measured: (a) {worst_a:.2e}, (b) {worst_b:.2e}, (c) {worst_c:.2e}, (d) {worst_d:.2e}"
    );
    report(
        "criterion 5 (oracle equivalences)",
        &[
            (
                format!("TR equivalent-channel forms agree to 1e-12 (worst {worst_a:.2e})"),
                worst_a < 1e-12,
            ),
            (
                format!("sample-level vs symbol-level model to 1e-10 (worst {worst_b:.2e})"),
                worst_b < 1e-10,
            ),
            (
                format!("FFT vs direct convolution to 1e-10 at 4096 (worst {worst_c:.2e})"),
                worst_c < 1e-10,
            ),
            (
                format!("RZF push-through identity residual <= 1e-10 (worst {worst_d:.2e})"),
                worst_d <= 1e-10,
            ),
        ],
    );
}

#[test]
fn criterion_6_complexity_model() {
    // Closed-form integer equality over a parameter grid.
    let mut exact = true;
    for &m in &[1usize, 2, 4, 8] {
        for &n in &[1usize, 2, 4, 8, 16] {
            for &l in &[4usize, 16, 64, 1024] {
                for &it in &[1usize, 10, 100, 400] {
                    let lg = l.trailing_zeros() as u64;
                    let (mu, nu, lu, iu) = (m as u64, n as u64, l as u64, it as u64);
                    exact &= complexity(ComplexityScheme::ItrDirect, m, n, l, it)
                        .unwrap()
                        .multiplications
                        == iu * mu * lu + mu * nu * nu * lu * lu;
                    exact &= complexity(ComplexityScheme::ItrFft, m, n, l, it)
                        .unwrap()
                        .multiplications
                        == iu * mu * lu + mu * nu * nu * lu * (1 + 2 * lg);
                    exact &= complexity(ComplexityScheme::Rzf, m, n, l, it)
                        .unwrap()
                        .multiplications
                        == 2 * lu * lg + lu * (nu * nu * nu + mu * nu);
                }
            }
        }
    }

    // The report the CLI serves: RZF overtakes ITR as N grows, driven by
    // the N^3 L inversion term.
    let rows = complexity_report(2, 16, 100, &[2, 4, 8, 16, 32, 64]).unwrap();
    let last = rows.last().unwrap();
    let prev = &rows[rows.len() - 2];
    let rzf_dominates = last.rzf > last.itr_fft && last.rzf > last.itr_direct;
    let n_cubed_growth = {
        // Between N=32 and N=64 the rzf count must grow close to 8x.
        let ratio = last.rzf as f64 / prev.rzf as f64;
        (ratio - 8.0).abs() < 1.0
    };
    println!(
        "    measured: rzf {} vs itr-fft {} at N=64; rzf growth ratio N=32 -> 64: {:.2}",
        last.rzf,
        last.itr_fft,
        last.rzf as f64 / prev.rzf as f64
    );
    report(
        "criterion 6 (complexity model)",
        &[
            ("Table formulas reproduced exactly on the grid".to_string(), exact),
            (
                format!(
                    "RZF count exceeds ITR at large N ({} > {})",
                    last.rzf, last.itr_fft
                ),
                rzf_dominates,
            ),
            (
                "RZF growth dominated by N^3 L as N grows".to_string(),
                n_cubed_growth,
            ),
        ],
    );
}

#[test]
fn criterion_7_bandwidth_emulation_trend() {
    // Hardware-scale over-the-air results are out of scope; only the
    // emulated trend is checked: at a fixed low iteration count, the ITR
    // SINR gain over TR shrinks as (tau, L) scale up together.
    let factors = [1.0, 2.0, 4.0];
    let base_tau = 2.5;
    let trials = 100u64;
    let mut gains = Vec::new();
    for &factor in &factors {
        let tau = base_tau * factor;
        let num_taps = trdma_core::default_tap_count(tau).unwrap();
        let cfg = ExperimentConfig {
            num_users: 2,
            num_antennas: 8,
            tau_list: vec![tau],
            sigma: 0.1,
            seed: 20_240_507,
            ..Default::default()
        };
        let mut itr_sinr = 0.0;
        let mut tr_sinr = 0.0;
        for t in 0..trials {
            let ch = generate(&ChannelParams {
                num_users: 2,
                num_antennas: 8,
                num_taps,
                decay_time: tau,
                normalize_ensemble: true,
                seed: trdma_core::rng::derive_key(cfg.seed, &[factor.to_bits(), t]),
            })
            .unwrap();
            let (itr_report, _) = evaluate_channel(
                &cfg,
                &PrecoderSpec::Itr {
                    iterations: Some(50),
                },
                &ch,
                1,
                EvalMode::Linear,
            )
            .unwrap();
            let (tr_report, _) =
                evaluate_channel(&cfg, &PrecoderSpec::Tr, &ch, 1, EvalMode::Linear).unwrap();
            itr_sinr += itr_report.users.iter().map(|u| u.sinr).sum::<f64>();
            tr_sinr += tr_report.users.iter().map(|u| u.sinr).sum::<f64>();
        }
        let gain_db = 10.0 * (itr_sinr / tr_sinr).log10();
        gains.push(gain_db);
    }
    println!(
        "    measured: ITR(50 iterations) gain over TR = {:.2}/{:.2}/{:.2} dB for L = 20/40/80",
        gains[0], gains[1], gains[2]
    );
    report(
        "criterion 7 (bandwidth-emulation trend; hardware results out of scope)",
        &[(
            format!(
                "gain at fixed low iteration count decreases as L grows ({:.2} > {:.2} > {:.2})",
                gains[0], gains[1], gains[2]
            ),
            gains[0] > gains[1] && gains[1] > gains[2],
        )],
    );
}
