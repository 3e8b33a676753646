//! Wall-clock benchmarks for early vs late fusion: OLS fitting cost and
//! per-epoch linear-SGD cost, sequential and parallel across modalities.
//!
//! Medians over repetitions after warmup, with the median absolute
//! deviation as the spread measure; a flop-estimate column follows the
//! normal-equation cost model exactly. Parallel speedup thresholds are
//! machine-calibrated and reported, not hard-coded.

use std::time::Instant;

use modro_core::dataset::MultimodalDataset;
use modro_core::linalg::Matrix;
use modro_core::models::{fit_early_fusion_ols, fit_late_fusion_ols, DEFAULT_RIDGE};
use modro_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem-size triple; the concatenated dimension is `D = k·d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub n: usize,
    pub k: usize,
    pub d: usize,
}

impl GridPoint {
    pub fn total_dim(&self) -> usize {
        self.k * self.d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub grid: Vec<GridPoint>,
    pub reps: usize,
    pub warmup: usize,
    pub parallel: bool,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 3 {
            return Err(Error::Schema(format!(
                "reps must be >= 3, got {}",
                self.reps
            )));
        }
        for (i, g) in self.grid.iter().enumerate() {
            if g.n == 0 || g.k == 0 || g.d == 0 {
                return Err(Error::Schema(format!(
                    "grid point {i}: all sizes must be >= 1, got {g:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One timed configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub mode: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub total_dim: usize,
    pub median_secs: f64,
    pub mad_secs: f64,
    pub flops_est: f64,
}

/// Early-fusion OLS cost model: `N·D² + D³` (normal equations + solve).
pub fn flops_ols_early(n: usize, total_dim: usize) -> f64 {
    let (n, dd) = (n as f64, total_dim as f64);
    n * dd * dd + dd * dd * dd
}

/// Late-fusion OLS cost model: per-block normal equations plus the
/// `K`-dimensional head fit: `Σ_k (N·d² + d³) + N·K² + K³`.
pub fn flops_ols_late(n: usize, k: usize, d: usize) -> f64 {
    let (n, kf, df) = (n as f64, k as f64, d as f64);
    kf * (n * df * df + df * df * df) + n * kf * kf + kf * kf * kf
}

/// Per-epoch linear-SGD cost model for early fusion: `N·D`.
pub fn flops_sgd_early(n: usize, total_dim: usize) -> f64 {
    (n * total_dim) as f64
}

/// Per-epoch linear-SGD cost model for late fusion: `N·D + N·K`.
pub fn flops_sgd_late(n: usize, k: usize, d: usize) -> f64 {
    (n * k * d + n * k) as f64
}

const MEMORY_GUARD_BYTES: f64 = 2.0 * 1024.0 * 1024.0 * 1024.0;

fn memory_guard(g: &GridPoint) -> Result<()> {
    let dd = g.total_dim() as f64 + 1.0;
    // Data matrix (twice: blocks + concatenation), normal matrix, factor.
    let bytes = 8.0 * (2.0 * g.n as f64 * dd + 3.0 * dd * dd);
    if bytes > MEMORY_GUARD_BYTES {
        return Err(Error::Capacity(format!(
            "grid point {g:?} needs ≈{:.1} GiB, above the 2 GiB guard",
            bytes / MEMORY_GUARD_BYTES * 2.0
        )));
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn median_and_mad(mut values: Vec<f64>) -> (f64, f64) {
    let med = median(&mut values);
    let mut devs: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    (med, median(&mut devs))
}

fn time_op<F: FnMut()>(mut op: F, warmup: usize, reps: usize) -> (f64, f64) {
    for _ in 0..warmup {
        op();
    }
    let samples: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64()
        })
        .collect();
    median_and_mad(samples)
}

fn random_dataset(g: &GridPoint, seed: u64) -> MultimodalDataset {
    let mut gen = rng::seeded(seed);
    let blocks: Vec<Matrix> = (0..g.k)
        .map(|_| {
            let data = (0..g.n * g.d).map(|_| gen.random_range(-1.0..1.0)).collect();
            Matrix::from_vec(g.n, g.d, data).expect("sized buffer")
        })
        .collect();
    let targets = (0..g.n).map(|_| gen.random_range(-1.0..1.0)).collect();
    let modality_names = (0..g.k).map(|k| format!("m{k}")).collect();
    let feature_names = (0..g.k)
        .map(|k| (0..g.d).map(|j| format!("m{k}_f{j}")).collect())
        .collect();
    MultimodalDataset::new(blocks, targets, modality_names, feature_names)
        .expect("valid synthetic bench data")
}

/// Times `fit_early_fusion_ols` vs `fit_late_fusion_ols` on identical data.
pub fn bench_ols(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for g in &cfg.grid {
        memory_guard(g)?;
        let ds = random_dataset(g, cfg.seed);
        let (med, mad) = time_op(
            || {
                fit_early_fusion_ols(&ds, DEFAULT_RIDGE).expect("early OLS");
            },
            cfg.warmup,
            cfg.reps,
        );
        rows.push(BenchRow {
            mode: "ols_early".into(),
            n: g.n,
            k: g.k,
            d: g.d,
            total_dim: g.total_dim(),
            median_secs: med,
            mad_secs: mad,
            flops_est: flops_ols_early(g.n, g.total_dim()),
        });
        let (med, mad) = time_op(
            || {
                fit_late_fusion_ols(&ds, DEFAULT_RIDGE).expect("late OLS");
            },
            cfg.warmup,
            cfg.reps,
        );
        rows.push(BenchRow {
            mode: "ols_late".into(),
            n: g.n,
            k: g.k,
            d: g.d,
            total_dim: g.total_dim(),
            median_secs: med,
            mad_secs: mad,
            flops_est: flops_ols_late(g.n, g.k, g.d),
        });
    }
    Ok(rows)
}

/// Mutable state for one linear-SGD epoch benchmark: per-modality encoder
/// weights, a K-dimensional head, and per-modality embedding buffers.
struct EpochState {
    encoders: Vec<Vec<f64>>,
    head: Vec<f64>,
    embeddings: Vec<Vec<f64>>,
    /// Head-propagated per-sample gradient, shared read-only in phase 3.
    dz: Vec<f64>,
}

impl EpochState {
    fn new(g: &GridPoint) -> Self {
        EpochState {
            encoders: vec![vec![0.01; g.d]; g.k],
            head: vec![0.01; g.k],
            embeddings: vec![vec![0.0; g.n]; g.k],
            dz: vec![0.0; g.n],
        }
    }
}

const EPOCH_LR: f64 = 1e-3;

fn encoder_forward(weights: &[f64], block: &Matrix, out: &mut [f64]) {
    for r in 0..block.rows() {
        out[r] = modro_core::linalg::dot(weights, block.row(r));
    }
}

fn encoder_backward(weights: &mut [f64], block: &Matrix, head_w: f64, dz: &[f64]) {
    let n = block.rows() as f64;
    let mut grad = vec![0.0; weights.len()];
    for r in 0..block.rows() {
        let scale = head_w * dz[r];
        for (gv, xv) in grad.iter_mut().zip(block.row(r)) {
            *gv += scale * xv;
        }
    }
    for (w, gv) in weights.iter_mut().zip(&grad) {
        *w -= EPOCH_LR * gv / n;
    }
}

/// One full pass of late-fusion linear SGD: parallel encoder forward,
/// barrier, head update, barrier, parallel encoder backward. One worker
/// per modality; workers share read-only data and own disjoint buffers.
fn late_epoch(ds: &MultimodalDataset, state: &mut EpochState, parallel: bool) {
    let n = ds.n_samples();
    // Phase 1: per-modality embeddings.
    if parallel {
        std::thread::scope(|scope| {
            for ((weights, out), block) in state
                .encoders
                .iter()
                .zip(state.embeddings.iter_mut())
                .zip(ds.blocks())
            {
                scope.spawn(move || encoder_forward(weights, block, out));
            }
        });
    } else {
        for ((weights, out), block) in state
            .encoders
            .iter()
            .zip(state.embeddings.iter_mut())
            .zip(ds.blocks())
        {
            encoder_forward(weights, block, out);
        }
    }
    // Barrier: head prediction, squared-loss gradient, head update.
    let y = ds.targets();
    let mut head_grad = vec![0.0; state.head.len()];
    for r in 0..n {
        let pred: f64 = state
            .head
            .iter()
            .zip(&state.embeddings)
            .map(|(w, z)| w * z[r])
            .sum();
        let dz = 2.0 * (pred - y[r]);
        state.dz[r] = dz;
        for (gv, z) in head_grad.iter_mut().zip(&state.embeddings) {
            *gv += dz * z[r];
        }
    }
    let head_snapshot: Vec<f64> = state.head.clone();
    for (w, gv) in state.head.iter_mut().zip(&head_grad) {
        *w -= EPOCH_LR * gv / n as f64;
    }
    // Phase 3: per-modality encoder updates from the shared dz.
    let dz = &state.dz;
    if parallel {
        std::thread::scope(|scope| {
            for ((weights, &head_w), block) in state
                .encoders
                .iter_mut()
                .zip(&head_snapshot)
                .zip(ds.blocks())
            {
                scope.spawn(move || encoder_backward(weights, block, head_w, dz));
            }
        });
    } else {
        for ((weights, &head_w), block) in state
            .encoders
            .iter_mut()
            .zip(&head_snapshot)
            .zip(ds.blocks())
        {
            encoder_backward(weights, block, head_w, dz);
        }
    }
}

/// One full pass of early-fusion linear SGD over the concatenation.
fn early_epoch(x: &Matrix, y: &[f64], weights: &mut [f64]) {
    let n = x.rows() as f64;
    let mut grad = vec![0.0; weights.len()];
    for r in 0..x.rows() {
        let pred = modro_core::linalg::dot(weights, x.row(r));
        let dz = 2.0 * (pred - y[r]);
        for (gv, xv) in grad.iter_mut().zip(x.row(r)) {
            *gv += dz * xv;
        }
    }
    for (w, gv) in weights.iter_mut().zip(&grad) {
        *w -= EPOCH_LR * gv / n;
    }
}

/// Times one epoch of linear SGD for early fusion, sequential late fusion,
/// and (if `cfg.parallel`) parallel-across-modalities late fusion.
pub fn bench_sgd_epoch(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for g in &cfg.grid {
        memory_guard(g)?;
        let ds = random_dataset(g, cfg.seed);
        let concat = ds.concat_features();
        let y = ds.targets().to_vec();

        let mut early_w = vec![0.01; g.total_dim()];
        let (med, mad) = time_op(
            || early_epoch(&concat, &y, &mut early_w),
            cfg.warmup,
            cfg.reps,
        );
        rows.push(BenchRow {
            mode: "sgd_early".into(),
            n: g.n,
            k: g.k,
            d: g.d,
            total_dim: g.total_dim(),
            median_secs: med,
            mad_secs: mad,
            flops_est: flops_sgd_early(g.n, g.total_dim()),
        });

        let mut state = EpochState::new(g);
        let (med, mad) = time_op(
            || late_epoch(&ds, &mut state, false),
            cfg.warmup,
            cfg.reps,
        );
        rows.push(BenchRow {
            mode: "sgd_late_seq".into(),
            n: g.n,
            k: g.k,
            d: g.d,
            total_dim: g.total_dim(),
            median_secs: med,
            mad_secs: mad,
            flops_est: flops_sgd_late(g.n, g.k, g.d),
        });

        if cfg.parallel {
            let mut state = EpochState::new(g);
            let (med, mad) = time_op(
                || late_epoch(&ds, &mut state, true),
                cfg.warmup,
                cfg.reps,
            );
            rows.push(BenchRow {
                mode: "sgd_late_par".into(),
                n: g.n,
                k: g.k,
                d: g.d,
                total_dim: g.total_dim(),
                median_secs: med,
                mad_secs: mad,
                flops_est: flops_sgd_late(g.n, g.k, g.d),
            });
        }
    }
    Ok(rows)
}

/// Workers available for the parallel-speedup claim; the claim is
/// report-only below 4 workers.
pub fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
}
