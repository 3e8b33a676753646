//! Multimodal datasets: `N` samples split into `K` per-modality feature
//! blocks plus a target vector.
//!
//! Blocks are stored separately and never pre-concatenated, so late fusion
//! works on the natural per-modality layout; early fusion concatenates on
//! demand via [`MultimodalDataset::concat_features`]. Datasets are immutable
//! after construction and safe to share read-only across workers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::float;
use crate::linalg::Matrix;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalDataset {
    blocks: Vec<Matrix>,
    targets: Vec<f64>,
    modality_names: Vec<String>,
    feature_names: Vec<Vec<String>>,
}

impl MultimodalDataset {
    /// Validates and assembles a dataset. All blocks must share the target
    /// row count, every dimension must be at least one, and every value must
    /// be finite.
    pub fn new(
        blocks: Vec<Matrix>,
        targets: Vec<f64>,
        modality_names: Vec<String>,
        feature_names: Vec<Vec<String>>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidDimension("need at least one modality".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidDimension("need at least one sample".into()));
        }
        if modality_names.len() != blocks.len() || feature_names.len() != blocks.len() {
            return Err(Error::InvalidDimension(format!(
                "{} blocks but {} modality names and {} feature name lists",
                blocks.len(),
                modality_names.len(),
                feature_names.len()
            )));
        }
        let n = targets.len();
        for (k, block) in blocks.iter().enumerate() {
            if block.rows() != n {
                return Err(Error::RowCountMismatch {
                    modality: modality_names[k].clone(),
                    rows: block.rows(),
                    expected: n,
                });
            }
            if block.cols() == 0 {
                return Err(Error::InvalidDimension(format!(
                    "modality `{}` has zero features",
                    modality_names[k]
                )));
            }
            if feature_names[k].len() != block.cols() {
                return Err(Error::InvalidDimension(format!(
                    "modality `{}` has {} columns but {} feature names",
                    modality_names[k],
                    block.cols(),
                    feature_names[k].len()
                )));
            }
            if let Some(pos) = block.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("modality `{}`", modality_names[k]),
                    row: pos / block.cols(),
                    col: pos % block.cols(),
                });
            }
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "targets".into(),
                row,
                col: 0,
            });
        }
        Ok(MultimodalDataset {
            blocks,
            targets,
            modality_names,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_modalities(&self) -> usize {
        self.blocks.len()
    }

    /// Per-modality feature dimensions `d_k`.
    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.cols()).collect()
    }

    /// Total feature dimension `D = Σ d_k`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.cols()).sum()
    }

    pub fn block(&self, k: usize) -> &Matrix {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn modality_names(&self) -> &[String] {
        &self.modality_names
    }

    pub fn feature_names(&self) -> &[Vec<String>] {
        &self.feature_names
    }

    /// The `N × D` early-fusion design matrix (blocks concatenated in order).
    pub fn concat_features(&self) -> Matrix {
        let refs: Vec<&Matrix> = self.blocks.iter().collect();
        Matrix::hstack(&refs).expect("blocks share a row count by construction")
    }

    /// Subsets every block and the targets by `indices`, preserving order.
    /// Cross-block row alignment is maintained: output row `j` of every block
    /// originates from source row `indices[j]`.
    pub fn select_rows(&self, indices: &[usize]) -> Result<MultimodalDataset> {
        if indices.is_empty() {
            return Err(Error::InvalidDimension("need at least one sample".into()));
        }
        let n = self.n_samples();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            blocks.push(block.select_rows(indices)?);
        }
        let mut targets = Vec::with_capacity(indices.len());
        for &idx in indices {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
            targets.push(self.targets[idx]);
        }
        MultimodalDataset::new(
            blocks,
            targets,
            self.modality_names.clone(),
            self.feature_names.clone(),
        )
    }
}

/// Disjoint train/test index lists over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded random split with `round(N · test_fraction)` test rows.
///
/// Deterministic given the seed; errors if either side would be empty.
pub fn split_by_fraction(
    ds: &MultimodalDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let test_size = float::round(n as f64 * test_fraction) as usize;
    if test_size == 0 || test_size == n {
        return Err(Error::DegenerateSplit(format!(
            "fraction {test_fraction} leaves an empty side for n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut test_indices: Vec<usize> = order[..test_size].to_vec();
    let mut train_indices: Vec<usize> = order[test_size..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(Split {
        train_indices,
        test_indices,
    })
}
