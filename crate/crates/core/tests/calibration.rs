//! Scratch calibration probes (ignored by default); run with
//! `cargo test --test calibration -- --ignored --nocapture`.

use fractalgen_core::fbm::{sample_fgn, FgnMethod, HurstParam};
use fractalgen_core::hurst::estimate_hurst_rs;
use fractalgen_core::sde::trajectory_dimension_experiment;

#[test]
#[ignore]
fn probe_hurst_recovery() {
    for &h in &[0.3, 0.5, 0.7] {
        let hp = HurstParam::new(h).unwrap();
        let mut estimates = Vec::new();
        for seed in 0..20u64 {
            let fgn = sample_fgn(4096, hp, FgnMethod::DaviesHarte, 1000 + seed).unwrap();
            estimates.push(estimate_hurst_rs(&fgn).unwrap().h_hat);
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let lo = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("H={h}: mean={mean:.4} range=[{lo:.4}, {hi:.4}] err={:.4}", (mean - h).abs());
    }
}

#[test]
#[ignore]
fn probe_variance_law() {
    for &h in &[0.3, 0.5, 0.7] {
        let hp = HurstParam::new(h).unwrap();
        let n = 64;
        let dt = 1.0 / n as f64;
        let mut sums = vec![0.0f64; 3];
        let idx = [16usize, 32, 64];
        let paths = 5000;
        for seed in 0..paths {
            let fgn = sample_fgn(n, hp, FgnMethod::DaviesHarte, seed).unwrap();
            let path = fractalgen_core::fbm::fgn_to_fbm(&fgn, dt, hp).unwrap();
            for (j, &k) in idx.iter().enumerate() {
                let v = path.values()[k];
                sums[j] += v * v;
            }
        }
        for (j, &k) in idx.iter().enumerate() {
            let t = k as f64 * dt;
            let emp = sums[j] / paths as f64;
            let expected = t.powf(2.0 * h);
            println!(
                "H={h} t={t}: emp={emp:.5} expected={expected:.5} rel={:.4}",
                (emp - expected).abs() / expected
            );
        }
    }
}

#[test]
#[ignore]
fn probe_train_size_trend() {
    use fractalgen_core::pipeline::{run_sweep, AnalysisOptions, SweepAxis, SweepBase};
    use fractalgen_core::trainer::{DatasetKind, TrainConfig};
    // Iteration-matched: the task is hard enough that no cell reaches the
    // stopping threshold, so every run executes exactly max_iters steps.
    let base = SweepBase {
        dataset: DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: 2.0 },
        m_train: 400,
        m_test: 2000,
        hidden: 16,
        depth: 1,
        config: TrainConfig {
            lr: 0.05,
            batch_size: 16,
            stop_loss: 0.01,
            max_iters: 4000,
            loss_log_stride: 10,
            sgn_coord_count: 48,
            ..TrainConfig::default()
        },
    };
    let opts = AnalysisOptions::default();
    let values = [200.0, 400.0, 800.0, 1600.0];
    let seeds = [1u64, 2, 3, 4, 5];
    let result = run_sweep(&base, SweepAxis::TrainSize, &values, &seeds, &opts);
    for (v, s, e) in &result.failures {
        println!("FAILED cell value={v} seed={s}: {e}");
    }
    for seed in &seeds {
        let mut line = format!("seed {seed}:");
        for v in &values {
            let row = result
                .rows
                .iter()
                .find(|r| r.value == *v && r.seed == *seed)
                .unwrap();
            line.push_str(&format!(
                " m={v}: bound={:.3} H={:.3} diam={:.2} gap={:.3} iters={} |",
                row.report.bound.as_ref().map(|b| b.total).unwrap_or(f64::NAN),
                row.report.hurst.as_ref().map(|h| h.h_hat).unwrap_or(f64::NAN),
                row.report.diameter.unwrap_or(f64::NAN),
                row.report.gap,
                row.report
                    .run_metadata
                    .iter()
                    .find(|(k, _)| k == "iters")
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default(),
            ));
        }
        println!("{line}");
    }
    // Mean Hurst per m
    for v in &values {
        let hs: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.value == *v)
            .filter_map(|r| r.report.hurst.as_ref().map(|h| h.h_hat))
            .collect();
        println!("m={v}: mean H = {:.4}", hs.iter().sum::<f64>() / hs.len() as f64);
    }
}

fn print_axis(
    result: &fractalgen_core::pipeline::SweepResult,
    values: &[f64],
    seeds: &[u64],
    name: &str,
) {
    for (v, s, e) in &result.failures {
        println!("FAILED {name} cell value={v} seed={s}: {e}");
    }
    for seed in seeds {
        let mut line = format!("seed {seed} {name}:");
        for v in values {
            if let Some(row) = result.rows.iter().find(|r| r.value == *v && r.seed == *seed) {
                line.push_str(&format!(
                    " {v}: bound={:.3} H={:.3} diam={:.2} z={:.2} it={} |",
                    row.report.bound.as_ref().map(|b| b.total).unwrap_or(f64::NAN),
                    row.report.hurst.as_ref().map(|h| h.h_hat).unwrap_or(f64::NAN),
                    row.report.diameter.unwrap_or(f64::NAN),
                    row.report.zeta_used,
                    row.report
                        .run_metadata
                        .iter()
                        .find(|(k, _)| k == "iters")
                        .map(|(_, v)| v.clone())
                        .unwrap_or_default(),
                ));
            }
        }
        println!("{line}");
    }
}

#[test]
#[ignore]
fn probe_lr_batch_trends() {
    use fractalgen_core::pipeline::{run_sweep, AnalysisOptions, SweepAxis, SweepBase};
    use fractalgen_core::trainer::{DatasetKind, TrainConfig};
    let opts = AnalysisOptions::default();
    let seeds = [1u64, 2, 3, 4, 5];
    let lr_values = [1e-3, 1e-2, 1e-1];
    let batch_values = [8.0, 32.0, 128.0];

    let bases = [
        (
            "rings",
            SweepBase {
                dataset: DatasetKind::TwoRings,
                m_train: 400,
                m_test: 2000,
                hidden: 32,
                depth: 1,
                config: TrainConfig {
                    lr: 0.01,
                    batch_size: 16,
                    stop_loss: 0.05,
                    max_iters: 30000,
                    loss_log_stride: 10,
                    sgn_coord_count: 24,
                    ..TrainConfig::default()
                },
            },
        ),
        (
            "memorize",
            SweepBase {
                dataset: DatasetKind::GaussianBlobs { classes: 2, dim: 4, separation: 1.5 },
                m_train: 64,
                m_test: 2000,
                hidden: 128,
                depth: 1,
                config: TrainConfig {
                    lr: 0.01,
                    batch_size: 16,
                    stop_loss: 0.05,
                    max_iters: 40000,
                    loss_log_stride: 10,
                    sgn_coord_count: 24,
                    ..TrainConfig::default()
                },
            },
        ),
    ];

    for (name, base) in &bases {
        println!("==== base {name} ====");
        let result = run_sweep(base, SweepAxis::LearningRate, &lr_values, &seeds, &opts);
        print_axis(&result, &lr_values, &seeds, "lr");
        let result = run_sweep(base, SweepAxis::BatchSize, &batch_values, &seeds, &opts);
        print_axis(&result, &batch_values, &seeds, "batch");
    }
}

#[test]
#[ignore]
fn probe_windowed_hurst_on_lr_cells() {
    use fractalgen_core::hurst::estimate_hurst_rs_with;
    use fractalgen_core::trainer::{make_dataset, train, DatasetKind, MlpSpec, TrainConfig};

    for &(sep, stop) in &[(5.0, 0.05)] {
        for &lr in &[1e-3, 1e-2, 1e-1] {
            for seed in 1..=3u64 {
                let (tr, te) = make_dataset(
                    DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: sep },
                    400,
                    1000,
                    seed,
                )
                .unwrap();
                let spec = MlpSpec::new(vec![8, 32, 2], seed + 100).unwrap();
                let config = TrainConfig {
                    lr,
                    batch_size: 16,
                    stop_loss: stop,
                    max_iters: 30000,
                    sgn_coord_count: 24,
                    shuffle_seed: seed + 7,
                    ..TrainConfig::default()
                };
                let log = train(&spec, &config, &tr, &te).unwrap();
                let mut by_window = Vec::new();
                for max_w in [128usize, 256, 512] {
                    if log.sgn.rows() / 2 < max_w {
                        by_window.push((max_w, f64::NAN));
                        continue;
                    }
                    let hs: Vec<f64> = (0..log.sgn.cols())
                        .filter_map(|j| {
                            estimate_hurst_rs_with(&log.sgn.column(j), 8, Some(max_w))
                                .ok()
                                .map(|e| e.h_hat)
                        })
                        .collect();
                    by_window.push((max_w, hs.iter().sum::<f64>() / hs.len() as f64));
                }
                println!("lr={lr} seed={seed} iters={}: H by max_window = {:?}", log.iters, by_window);
            }
        }
    }
}

#[test]
#[ignore]
fn probe_edge_of_stability_batch() {
    use fractalgen_core::hurst::estimate_hurst_rs_with;
    use fractalgen_core::trainer::{make_dataset, train, DatasetKind, MlpSpec, TrainConfig};

    for &lr in &[0.2, 0.4, 0.6] {
        for &batch in &[8usize, 32, 128] {
            let mut hs_all = Vec::new();
            let mut iters_all = Vec::new();
            let mut failures = 0;
            for seed in 1..=3u64 {
                let (tr, te) = make_dataset(
                    DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: 5.0 },
                    400,
                    1000,
                    seed,
                )
                .unwrap();
                let spec = MlpSpec::new(vec![8, 32, 2], seed + 100).unwrap();
                let config = TrainConfig {
                    lr,
                    batch_size: batch,
                    stop_loss: 0.05,
                    max_iters: 8000,
                    sgn_coord_count: 24,
                    shuffle_seed: seed + 7,
                    ..TrainConfig::default()
                };
                match train(&spec, &config, &tr, &te) {
                    Ok(log) => {
                        let max_w = (log.sgn.rows() / 2).min(128);
                        let hs: Vec<f64> = (0..log.sgn.cols())
                            .filter_map(|j| {
                                estimate_hurst_rs_with(&log.sgn.column(j), 8, Some(max_w))
                                    .ok()
                                    .map(|e| e.h_hat)
                            })
                            .collect();
                        hs_all.push(hs.iter().sum::<f64>() / hs.len() as f64);
                        iters_all.push(log.iters);
                    }
                    Err(_) => failures += 1,
                }
            }
            println!(
                "lr={lr} batch={batch}: H={:?} iters={:?} failures={failures}",
                hs_all.iter().map(|h| (h * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                iters_all
            );
        }
    }
}

#[test]
#[ignore]
fn probe_train_size_grid() {
    use fractalgen_core::pipeline::{run_sweep, AnalysisOptions, SweepAxis, SweepBase};
    use fractalgen_core::trainer::{DatasetKind, TrainConfig};
    let values = [200.0, 400.0, 800.0, 1600.0];
    let seeds = [1u64, 2, 3, 4, 5];

    for &(lr, batch, iters, coords) in &[
        (0.05, 16usize, 6000usize, 64usize),
        (0.1, 8, 6000, 64),
        (0.1, 16, 6000, 64),
    ] {
        for max_w in [None, Some(256usize)] {
            let base = SweepBase {
                dataset: DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: 2.0 },
                m_train: 400,
                m_test: 2000,
                hidden: 16,
                depth: 1,
                config: TrainConfig {
                    lr,
                    batch_size: batch,
                    stop_loss: 0.01,
                    max_iters: iters,
                    loss_log_stride: 10,
                    sgn_coord_count: coords,
                    ..TrainConfig::default()
                },
            };
            let opts = AnalysisOptions { hurst_max_window: max_w, ..AnalysisOptions::default() };
            let result = run_sweep(&base, SweepAxis::TrainSize, &values, &seeds, &opts);
            let mut bound_pass = 0;
            for seed in &seeds {
                let bounds: Vec<f64> = values
                    .iter()
                    .map(|v| {
                        result
                            .rows
                            .iter()
                            .find(|r| r.value == *v && r.seed == *seed)
                            .and_then(|r| r.report.bound.as_ref().map(|b| b.total))
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                if bounds.windows(2).all(|w| w[0] > w[1]) {
                    bound_pass += 1;
                }
            }
            let mean_h: Vec<f64> = values
                .iter()
                .map(|v| {
                    let hs: Vec<f64> = result
                        .rows
                        .iter()
                        .filter(|r| r.value == *v)
                        .filter_map(|r| r.report.hurst.as_ref().map(|h| h.h_hat))
                        .collect();
                    hs.iter().sum::<f64>() / hs.len() as f64
                })
                .collect();
            let h_ok = mean_h.windows(2).all(|w| w[1] >= w[0]);
            println!(
                "lr={lr} batch={batch} iters={iters} coords={coords} max_w={max_w:?}: bound {bound_pass}/5, meanH={:?} nondecreasing={h_ok}",
                mean_h.iter().map(|h| (h * 10000.0).round() / 10000.0).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
#[ignore]
fn probe_momentum_batch() {
    use fractalgen_core::hurst::estimate_hurst_rs_with;
    use fractalgen_core::trainer::{make_dataset, train, DatasetKind, MlpSpec, TrainConfig};

    for &(lr, mom) in &[(0.1, 0.9), (0.05, 0.9), (0.2, 0.8)] {
        for &batch in &[8usize, 32, 128] {
            let mut hs_all = Vec::new();
            let mut iters_all = Vec::new();
            for seed in 1..=3u64 {
                let (tr, te) = make_dataset(
                    DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: 5.0 },
                    400,
                    1000,
                    seed,
                )
                .unwrap();
                let spec = MlpSpec::new(vec![8, 32, 2], seed + 100).unwrap();
                let config = TrainConfig {
                    lr,
                    batch_size: batch,
                    momentum: mom,
                    stop_loss: 0.05,
                    max_iters: 8000,
                    sgn_coord_count: 24,
                    shuffle_seed: seed + 7,
                    ..TrainConfig::default()
                };
                if let Ok(log) = train(&spec, &config, &tr, &te) {
                    let max_w = (log.sgn.rows() / 2).min(128);
                    let hs: Vec<f64> = (0..log.sgn.cols())
                        .filter_map(|j| {
                            estimate_hurst_rs_with(&log.sgn.column(j), 8, Some(max_w))
                                .ok()
                                .map(|e| e.h_hat)
                        })
                        .collect();
                    hs_all.push((hs.iter().sum::<f64>() / hs.len() as f64 * 1000.0).round() / 1000.0);
                    iters_all.push(log.iters);
                }
            }
            println!("lr={lr} mom={mom} batch={batch}: H={hs_all:?} iters={iters_all:?}");
        }
    }
}

#[test]
#[ignore]
fn probe_criterion9_dry_run() {
    use fractalgen_core::pipeline::{run_sweep, AnalysisOptions, SweepAxis, SweepBase};
    use fractalgen_core::trainer::{DatasetKind, TrainConfig};
    let base = SweepBase {
        dataset: DatasetKind::GaussianBlobs { classes: 2, dim: 8, separation: 5.0 },
        m_train: 400,
        m_test: 2000,
        hidden: 32,
        depth: 1,
        config: TrainConfig {
            lr: 0.01,
            batch_size: 16,
            stop_loss: 0.05,
            max_iters: 30000,
            loss_log_stride: 10,
            sgn_coord_count: 24,
            ..TrainConfig::default()
        },
    };
    let opts = AnalysisOptions {
        hurst_max_window: Some(128),
        ..AnalysisOptions::default()
    };
    let seeds = [1u64, 2, 3, 4, 5];

    let lr_values = [1e-3, 1e-2, 1e-1];
    let result = run_sweep(&base, SweepAxis::LearningRate, &lr_values, &seeds, &opts);
    print_axis(&result, &lr_values, &seeds, "lr");
    let mut pass = 0;
    for seed in &seeds {
        let bounds: Vec<f64> = lr_values
            .iter()
            .map(|v| {
                result
                    .rows
                    .iter()
                    .find(|r| r.value == *v && r.seed == *seed)
                    .and_then(|r| r.report.bound.as_ref().map(|b| b.total))
                    .unwrap_or(f64::NAN)
            })
            .collect();
        if bounds.windows(2).all(|w| w[0] >= w[1]) {
            pass += 1;
        }
    }
    println!("lr axis: {pass}/5 seeds non-increasing");

    let batch_values = [8.0, 32.0, 128.0];
    let result = run_sweep(&base, SweepAxis::BatchSize, &batch_values, &seeds, &opts);
    print_axis(&result, &batch_values, &seeds, "batch");
    let mut pass = 0;
    for seed in &seeds {
        let bounds: Vec<f64> = batch_values
            .iter()
            .map(|v| {
                result
                    .rows
                    .iter()
                    .find(|r| r.value == *v && r.seed == *seed)
                    .and_then(|r| r.report.bound.as_ref().map(|b| b.total))
                    .unwrap_or(f64::NAN)
            })
            .collect();
        if bounds.windows(2).all(|w| w[0] <= w[1]) {
            pass += 1;
        }
    }
    println!("batch axis: {pass}/5 seeds non-decreasing");
}

#[test]
#[ignore]
fn probe_trajectory_dimension() {
    for &h in &[0.5, 0.7, 0.9] {
        let hp = HurstParam::new(h).unwrap();
        for seed in 0..5u64 {
            let est = trajectory_dimension_experiment(hp, 3, 100_000, 77 + seed).unwrap();
            println!(
                "H={h} seed={seed}: dim_hat={:.3} r2={:.4} scales={} (1/H = {:.3})",
                est.dim_hat,
                est.r_squared,
                est.scales.len(),
                1.0 / h
            );
        }
    }
}
