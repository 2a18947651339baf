//! End-to-end analysis: turn a training run (in memory or on disk) into a
//! bound report plus indicator report, and sweep that analysis over a
//! hyperparameter axis.
//!
//! Every number in a report comes from a module operation; this layer only
//! composes them and handles the bookkeeping of absent values when a
//! sub-estimator fails on degenerate input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::bound::{clamp_hurst, full_bound, rademacher_bound, BoundInputs, BoundReport};
use crate::error::{Error, Result};
use crate::fbm::derive_seed;
use crate::hurst::{
    estimate_hurst_from_vectors_windowed, HurstEstimate, VectorStrategy, MIN_WINDOW,
};
use crate::indicators::{
    esd_eigenvalues, estimate_bg_index, norm_measures, power_law_index, IndicatorReport,
    WeightMatrix,
};
use crate::logfmt::{read_log, write_log, LogDtype};
use crate::miniball::{diameter_lower_bound, miniball_core_set};
use crate::series::{SeriesKind, SeriesMatrix};
use crate::trainer::{
    generalization_gap, make_dataset, train, DatasetKind, MlpSpec, TrainConfig, TrainLog,
};

/// Knobs of the `analyze` step.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Loss upper bound; defaults to the maximum observed per-example loss.
    pub zeta: Option<f64>,
    pub beta: f64,
    pub tau: f64,
    pub hurst_strategy: VectorStrategy,
    /// Cap on the R/S window size. Sweeps fix this so Hurst estimates stay
    /// comparable across runs of different lengths; None uses len/2.
    pub hurst_max_window: Option<usize>,
    pub miniball_eps: f64,
    /// Block size of the tail-index estimator; defaults to floor(sqrt(K)).
    pub bg_k1: Option<usize>,
    pub tail_fraction: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            zeta: None,
            beta: 0.0,
            tau: 0.05,
            hurst_strategy: VectorStrategy::PerCoordinateMean,
            hurst_max_window: None,
            miniball_eps: 1e-3,
            bg_k1: None,
            tail_fraction: 0.1,
        }
    }
}

/// Per-run record: everything the trend experiments plot.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub hurst: Option<HurstEstimate>,
    pub hurst_clamped: bool,
    /// diam(H) = 2 x enclosing-ball radius of the loss-vector cloud.
    pub diameter: Option<f64>,
    pub diameter_lower_bound: Option<f64>,
    /// The complexity term alone: 12 diam / m * sqrt(ln 4 / H).
    pub rademacher: Option<f64>,
    pub bound: Option<BoundReport>,
    pub indicators: IndicatorReport,
    pub gap: f64,
    pub empirical_risk: f64,
    pub zeta_used: f64,
    pub m: usize,
    pub run_metadata: Vec<(String, String)>,
}

impl AnalysisReport {
    /// Names of the sub-estimates that failed.
    pub fn missing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.hurst.is_none() {
            out.push("hurst");
        }
        if self.diameter.is_none() {
            out.push("diameter");
        }
        if self.bound.is_none() {
            out.push("bound");
        }
        if self.indicators.bg_index.is_none() {
            out.push("bg_index");
        }
        if self.indicators.power_law_index.is_none() {
            out.push("power_law_index");
        }
        if self.indicators.norms.is_none() {
            out.push("norms");
        }
        out
    }

    /// Deterministic key=value rendering; failed estimates read "absent".
    pub fn render(&self) -> String {
        let mut s = String::new();
        let fmt_opt = |v: Option<f64>| v.map_or("absent".to_string(), |x| format!("{x}"));
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "gap={}", self.gap);
        let _ = writeln!(s, "empirical_risk={}", self.empirical_risk);
        let _ = writeln!(s, "zeta={}", self.zeta_used);
        match &self.hurst {
            Some(h) => {
                let _ = writeln!(s, "hurst={}", h.h_hat);
                let _ = writeln!(s, "hurst_stderr={}", h.stderr);
                let _ = writeln!(s, "hurst_windows={}", h.n_windows);
            }
            None => {
                let _ = writeln!(s, "hurst=absent");
            }
        }
        let _ = writeln!(s, "hurst_clamped={}", u8::from(self.hurst_clamped));
        let _ = writeln!(s, "diameter={}", fmt_opt(self.diameter));
        let _ = writeln!(s, "diameter_lower_bound={}", fmt_opt(self.diameter_lower_bound));
        let _ = writeln!(s, "rademacher={}", fmt_opt(self.rademacher));
        match &self.bound {
            Some(b) => {
                let _ = writeln!(s, "bound_rademacher_term={}", b.rademacher_term);
                let _ = writeln!(s, "bound_concentration_term={}", b.concentration_term);
                let _ = writeln!(s, "bound_total={}", b.total);
            }
            None => {
                let _ = writeln!(s, "bound_total=absent");
            }
        }
        let _ = writeln!(s, "bg_index={}", fmt_opt(self.indicators.bg_index));
        let _ = writeln!(s, "power_law_index={}", fmt_opt(self.indicators.power_law_index));
        match &self.indicators.norms {
            Some(n) => {
                let _ = writeln!(s, "spectral_product={}", n.spectral_product);
                let _ = writeln!(s, "frobenius_product={}", n.frobenius_product);
                let _ = writeln!(s, "spectral_sum_log={}", n.spectral_sum_log);
                let _ = writeln!(s, "norms_overflowed={}", u8::from(n.overflowed));
            }
            None => {
                let _ = writeln!(s, "spectral_product=absent");
            }
        }
        for (k, v) in &self.run_metadata {
            let _ = writeln!(s, "run_{k}={v}");
        }
        s
    }
}

/// The four artifacts a training run leaves behind.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub sgn: SeriesMatrix,
    pub loss_vectors: SeriesMatrix,
    pub weights: Vec<WeightMatrix>,
    pub summary: BTreeMap<String, String>,
}

pub const SGN_FILE: &str = "sgn.trjl";
pub const LOSS_FILE: &str = "loss_vectors.trjl";
pub const WEIGHTS_FILE: &str = "weights.txt";
pub const SUMMARY_FILE: &str = "summary.txt";

impl RunArtifacts {
    pub fn from_log(log: &TrainLog, extra: &[(String, String)]) -> Self {
        let mut summary = BTreeMap::new();
        summary.insert("m_train".into(), log.loss_vectors.cols().to_string());
        summary.insert("iters".into(), log.iters.to_string());
        summary.insert("train_acc".into(), log.train_acc.to_string());
        summary.insert("test_acc".into(), log.test_acc.to_string());
        summary.insert("gap".into(), generalization_gap(log).to_string());
        summary.insert("empirical_risk".into(), log.empirical_risk.to_string());
        summary.insert("zeta_observed".into(), log.zeta_observed.to_string());
        for (k, v) in extra {
            summary.insert(k.clone(), v.clone());
        }
        Self {
            sgn: log.sgn.clone(),
            loss_vectors: log.loss_vectors.clone(),
            weights: log.weights.clone(),
            summary,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_log(&self.sgn, &dir.join(SGN_FILE), LogDtype::F64)?;
        write_log(&self.loss_vectors, &dir.join(LOSS_FILE), LogDtype::F64)?;
        fs::write(dir.join(WEIGHTS_FILE), render_weight_archive(&self.weights))?;
        let mut summary = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(summary, "{k}={v}");
        }
        fs::write(dir.join(SUMMARY_FILE), summary)?;
        Ok(())
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        for file in [SGN_FILE, LOSS_FILE, WEIGHTS_FILE, SUMMARY_FILE] {
            if !dir.join(file).exists() {
                return Err(Error::format(format!(
                    "missing artifact {file} in {}",
                    dir.display()
                )));
            }
        }
        let sgn = read_log(&dir.join(SGN_FILE))?.with_kind(SeriesKind::Sgn);
        let loss_vectors = read_log(&dir.join(LOSS_FILE))?.with_kind(SeriesKind::LossVectors);
        let weights = parse_weight_archive(&fs::read_to_string(dir.join(WEIGHTS_FILE))?)?;
        let mut summary = BTreeMap::new();
        for line in fs::read_to_string(dir.join(SUMMARY_FILE))?.lines() {
            if let Some((k, v)) = line.split_once('=') {
                summary.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self { sgn, loss_vectors, weights, summary })
    }

    fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.parse().ok())
    }
}

/// Weight archive: per layer a header `layer <index> <rows> <cols>`
/// followed by `rows` lines of `cols` values.
pub fn render_weight_archive(weights: &[WeightMatrix]) -> String {
    let mut out = String::new();
    for w in weights {
        let _ = writeln!(out, "layer {} {} {}", w.layer_index, w.rows, w.cols);
        for i in 0..w.rows {
            let row: Vec<String> = w.data()[i * w.cols..(i + 1) * w.cols]
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_weight_archive(text: &str) -> Result<Vec<WeightMatrix>> {
    let mut weights = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(Error::format(format!("weight archive: bad header '{line}'")));
        }
        let index: usize = parts[1].parse().map_err(|_| Error::format("weight archive: index"))?;
        let rows: usize = parts[2].parse().map_err(|_| Error::format("weight archive: rows"))?;
        let cols: usize = parts[3].parse().map_err(|_| Error::format("weight archive: cols"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row = lines
                .next()
                .ok_or_else(|| Error::format("weight archive: truncated matrix"))?;
            for field in row.split_whitespace() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::format(format!("weight archive: bad value '{field}'")))?;
                data.push(v);
            }
        }
        if data.len() != rows * cols {
            return Err(Error::format("weight archive: value count mismatch"));
        }
        weights
            .push(WeightMatrix::new(rows, cols, index, data).map_err(|e| Error::format(e.to_string()))?);
    }
    Ok(weights)
}

/// Analyzes run artifacts into a report. Sub-estimators that fail leave
/// their field absent; the report itself is always produced.
pub fn analyze(artifacts: &RunArtifacts, opts: &AnalysisOptions) -> AnalysisReport {
    let m = artifacts.loss_vectors.cols();
    let gap = artifacts.summary_f64("gap").unwrap_or(0.0);
    let empirical_risk = artifacts.summary_f64("empirical_risk").unwrap_or(0.0);
    let zeta_observed = artifacts.summary_f64("zeta_observed").unwrap_or(0.0);
    let zeta_used = opts.zeta.unwrap_or(zeta_observed);

    let hurst = estimate_hurst_from_vectors_windowed(
        &artifacts.sgn,
        opts.hurst_strategy,
        MIN_WINDOW,
        opts.hurst_max_window,
    )
    .ok();

    let cloud = artifacts.loss_vectors.to_cloud();
    let ball = miniball_core_set(&cloud, opts.miniball_eps).ok();
    let diameter = ball.as_ref().map(|b| 2.0 * b.radius);
    let diam_lb = diameter_lower_bound(&cloud).ok();

    let mut hurst_clamped = false;
    let mut rademacher = None;
    let mut bound = None;
    if let (Some(h), Some(diam)) = (&hurst, diameter) {
        if let Ok((hp, clamped)) = clamp_hurst(h.h_hat) {
            hurst_clamped = clamped;
            rademacher = rademacher_bound(diam, m, hp).ok();
            if zeta_used > 0.0 {
                bound = BoundInputs::new(
                    diam,
                    m,
                    hp,
                    zeta_used,
                    opts.beta,
                    opts.tau,
                    empirical_risk,
                )
                .map(|inputs| full_bound(&inputs.with_clamp_flag(clamped)))
                .ok();
            }
        }
    }

    let indicators = compute_indicators(artifacts, opts);

    let run_metadata: Vec<(String, String)> = artifacts
        .summary
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    AnalysisReport {
        hurst,
        hurst_clamped,
        diameter,
        diameter_lower_bound: diam_lb,
        rademacher,
        bound,
        indicators,
        gap,
        empirical_risk,
        zeta_used,
        m,
        run_metadata,
    }
}

fn compute_indicators(artifacts: &RunArtifacts, opts: &AnalysisOptions) -> IndicatorReport {
    let sgn = &artifacts.sgn;
    let k1 = opts
        .bg_k1
        .unwrap_or_else(|| (sgn.rows() as f64).sqrt().floor() as usize)
        .max(2);

    // Tail index per coordinate, averaged, like the Hurst pipeline.
    let estimates: Vec<f64> = (0..sgn.cols())
        .filter_map(|j| estimate_bg_index(&sgn.column(j), k1).ok())
        .collect();
    let bg_index = if estimates.len() * 2 > sgn.cols() {
        Some(estimates.iter().sum::<f64>() / estimates.len() as f64)
    } else {
        None
    };

    // Pool the spectra of all layers so small nets still have a tail to fit.
    let mut eigenvalues = Vec::new();
    for w in &artifacts.weights {
        if let Ok(vals) = esd_eigenvalues(w) {
            eigenvalues.extend(vals);
        }
    }
    let power_law = power_law_index(&eigenvalues, opts.tail_fraction).ok();

    let norms = if artifacts.weights.is_empty() {
        None
    } else {
        norm_measures(&artifacts.weights).ok()
    };

    IndicatorReport {
        bg_index,
        power_law_index: power_law,
        norms,
    }
}

/// Convenience: analyze a directory of artifacts.
pub fn analyze_dir(dir: &Path, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    Ok(analyze(&RunArtifacts::from_dir(dir)?, opts))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Hyperparameter axis swept by the trend experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TrainSize,
    LearningRate,
    BatchSize,
    Momentum,
    WeightDecay,
    Width,
    Depth,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::TrainSize => "train_size",
            SweepAxis::LearningRate => "lr",
            SweepAxis::BatchSize => "batch",
            SweepAxis::Momentum => "momentum",
            SweepAxis::WeightDecay => "wd",
            SweepAxis::Width => "width",
            SweepAxis::Depth => "depth",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train_size" => Ok(SweepAxis::TrainSize),
            "lr" => Ok(SweepAxis::LearningRate),
            "batch" => Ok(SweepAxis::BatchSize),
            "momentum" => Ok(SweepAxis::Momentum),
            "wd" => Ok(SweepAxis::WeightDecay),
            "width" => Ok(SweepAxis::Width),
            "depth" => Ok(SweepAxis::Depth),
            other => Err(Error::domain(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Base setup a sweep perturbs one axis of. The defaults are a desk-scale
/// task where training reliably runs a few hundred iterations.
#[derive(Debug, Clone)]
pub struct SweepBase {
    pub dataset: DatasetKind,
    pub m_train: usize,
    pub m_test: usize,
    /// Hidden layer width.
    pub hidden: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub config: TrainConfig,
}

impl Default for SweepBase {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::GaussianBlobs {
                classes: 2,
                dim: 8,
                separation: 2.5,
            },
            m_train: 400,
            m_test: 2000,
            hidden: 32,
            depth: 1,
            config: TrainConfig {
                lr: 0.05,
                batch_size: 16,
                stop_loss: 0.05,
                max_iters: 4000,
                loss_log_stride: 10,
                sgn_coord_count: 24,
                ..TrainConfig::default()
            },
        }
    }
}

/// One sweep cell: train with the axis applied, then analyze in memory.
pub fn run_cell(
    base: &SweepBase,
    axis: SweepAxis,
    value: f64,
    seed: u64,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport> {
    let mut setup = base.clone();
    match axis {
        SweepAxis::TrainSize => setup.m_train = value as usize,
        SweepAxis::LearningRate => setup.config.lr = value,
        SweepAxis::BatchSize => setup.config.batch_size = value as usize,
        SweepAxis::Momentum => setup.config.momentum = value,
        SweepAxis::WeightDecay => setup.config.weight_decay = value,
        SweepAxis::Width => setup.hidden = value as usize,
        SweepAxis::Depth => setup.depth = value as usize,
    }
    setup.config.data_seed = derive_seed(seed, 0);
    setup.config.shuffle_seed = derive_seed(seed, 1);
    let init_seed = derive_seed(seed, 2);
    setup.config.batch_size = setup.config.batch_size.min(setup.m_train);

    let (train_data, test_data) =
        make_dataset(setup.dataset, setup.m_train, setup.m_test, setup.config.data_seed)?;

    let (classes, dim) = match setup.dataset {
        DatasetKind::GaussianBlobs { classes, dim, .. } => (classes, dim),
        DatasetKind::TwoRings => (2, 2),
    };
    let mut layer_sizes = vec![dim];
    layer_sizes.extend(std::iter::repeat(setup.hidden).take(setup.depth));
    layer_sizes.push(classes);
    let spec = MlpSpec::new(layer_sizes, init_seed)?;

    let log = train(&spec, &setup.config, &train_data, &test_data)?;
    let extra = vec![
        ("axis".to_string(), axis.label().to_string()),
        ("axis_value".to_string(), value.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("lr".to_string(), setup.config.lr.to_string()),
        ("batch_size".to_string(), setup.config.batch_size.to_string()),
    ];
    Ok(analyze(&RunArtifacts::from_log(&log, &extra), opts))
}

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub report: AnalysisReport,
}

#[derive(Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// (value, seed, error message) for cells that failed.
    pub failures: Vec<(f64, u64, String)>,
}

/// Runs the full grid, cells in parallel.
pub fn run_sweep(
    base: &SweepBase,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    opts: &AnalysisOptions,
) -> SweepResult {
    let cells: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let outcomes: Vec<(f64, u64, Result<AnalysisReport>)> = cells
        .par_iter()
        .map(|&(v, s)| (v, s, run_cell(base, axis, v, s, opts)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (value, seed, outcome) in outcomes {
        match outcome {
            Ok(report) => rows.push(SweepRow { value, seed, report }),
            Err(e) => failures.push((value, seed, e.to_string())),
        }
    }
    SweepResult { axis, rows, failures }
}

/// Pearson correlation; None when either column is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / (sxx * syy).sqrt())
}

const SWEEP_MEASURES: &[&str] = &[
    "gap",
    "hurst",
    "diameter",
    "bound_total",
    "rademacher",
    "bg_index",
    "power_law_index",
    "spectral_product",
    "frobenius_product",
    "spectral_sum_log",
];

fn row_measure(row: &SweepRow, measure: &str) -> Option<f64> {
    let r = &row.report;
    match measure {
        "gap" => Some(r.gap),
        "hurst" => r.hurst.as_ref().map(|h| h.h_hat),
        "diameter" => r.diameter,
        "bound_total" => r.bound.as_ref().map(|b| b.total),
        "rademacher" => r.rademacher,
        "bg_index" => r.indicators.bg_index,
        "power_law_index" => r.indicators.power_law_index,
        "spectral_product" => r.indicators.norms.map(|n| n.spectral_product),
        "frobenius_product" => r.indicators.norms.map(|n| n.frobenius_product),
        "spectral_sum_log" => r.indicators.norms.map(|n| n.spectral_sum_log),
        _ => None,
    }
}

/// Renders the sweep as plot-ready CSV: one row per (value, seed), then one
/// `# pearson` comment line per measure against the axis. Constant columns
/// report `undefined`.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "axis,value,seed,{}",
        SWEEP_MEASURES.join(",")
    );
    for row in &result.rows {
        let mut fields = vec![
            result.axis.label().to_string(),
            format!("{}", row.value),
            format!("{}", row.seed),
        ];
        for measure in SWEEP_MEASURES {
            fields.push(
                row_measure(row, measure)
                    .map_or(String::new(), |v| format!("{v}")),
            );
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    for measure in SWEEP_MEASURES {
        let pairs: Vec<(f64, f64)> = result
            .rows
            .iter()
            .filter_map(|row| row_measure(row, measure).map(|v| (row.value, v)))
            .collect();
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = pearson(&xs, &ys).map_or("undefined".to_string(), |v| format!("{v}"));
        let _ = writeln!(out, "# pearson,{measure},{r}");
    }
    out
}
