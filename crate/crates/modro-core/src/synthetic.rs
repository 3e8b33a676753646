//! Seeded synthetic generators: the four-modality simulation with a
//! mean-shifted primary modality, correlated Gaussian pairs for the
//! divergence study, and two-point loss distributions for the minimax probe.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::MultimodalDataset;
use crate::linalg::{self, Matrix};
use crate::rng;
use crate::{Error, Result};

/// Number of modalities in the simulation.
pub const SIM_MODALITIES: usize = 4;
/// Feature dimension of every simulation modality.
pub const SIM_DIM: usize = 5;

/// Configuration for the simulation study.
///
/// Under the training distribution `shift = 0`; the shifted test
/// distribution uses `shift = 1.5` on the primary modality only, and the
/// conditional mixing of modalities 2..4 is unchanged so the shift
/// propagates across modalities through `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Mixing weight between the primary modality and fresh noise.
    pub w: f64,
    /// Noise standard deviation of the mixing term.
    pub sigma_eps: f64,
    /// Mean shift applied to modality 1.
    pub shift: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, shift: f64, seed: u64) -> Self {
        SimConfig {
            n,
            w: 0.7,
            sigma_eps: 0.05,
            shift,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::InvalidConfig(format!("w={} outside [0, 1]", self.w)));
        }
        if self.sigma_eps < 0.0 || !self.sigma_eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma_eps={} must be a nonnegative real",
                self.sigma_eps
            )));
        }
        Ok(())
    }
}

/// Draws the simulation dataset:
///
/// - modality 1: rows i.i.d. `N(shift · 1_5, I_5)`,
/// - modalities 2..4: `m^(k) = w · m^(1) + (1 − w) · ε^(k)` with
///   `ε^(k) ~ N(0, σ_ε² I_5)`,
/// - response `Y = 1ᵀ Σ_k m^(k) + 10·1{m̄^(1) > 1} − 10·1{m̄^(1) < −1}`
///   where `m̄^(1)` is the coordinate mean of the primary modality.
///
/// Bit-deterministic given `(cfg, cfg.seed)`.
pub fn gen_simulation(cfg: &SimConfig) -> Result<MultimodalDataset> {
    cfg.validate()?;
    let mut gen = rng::seeded(cfg.seed);
    let n = cfg.n;
    let mut blocks: Vec<Matrix> = (0..SIM_MODALITIES)
        .map(|_| Matrix::zeros(n, SIM_DIM))
        .collect();
    let mut targets = vec![0.0; n];
    for row in 0..n {
        let mut m1 = [0.0; SIM_DIM];
        for v in m1.iter_mut() {
            let xi: f64 = gen.sample(StandardNormal);
            *v = cfg.shift + xi;
        }
        blocks[0].row_mut(row).copy_from_slice(&m1);
        let mut total: f64 = m1.iter().sum();
        for block in blocks.iter_mut().take(SIM_MODALITIES).skip(1) {
            let dst = block.row_mut(row);
            for (j, d) in dst.iter_mut().enumerate() {
                let eps: f64 = gen.sample(StandardNormal);
                *d = cfg.w * m1[j] + (1.0 - cfg.w) * cfg.sigma_eps * eps;
                total += *d;
            }
        }
        let m1_bar = m1.iter().sum::<f64>() / SIM_DIM as f64;
        let bump = if m1_bar > 1.0 {
            10.0
        } else if m1_bar < -1.0 {
            -10.0
        } else {
            0.0
        };
        targets[row] = total + bump;
    }
    let modality_names = (1..=SIM_MODALITIES).map(|k| format!("m{k}")).collect();
    let feature_names = (1..=SIM_MODALITIES)
        .map(|k| (1..=SIM_DIM).map(|j| format!("m{k}_{j}")).collect())
        .collect();
    MultimodalDataset::new(blocks, targets, modality_names, feature_names)
}

/// A pair of Gaussians with shared covariance and a mean shift.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    pub mu_p: Vec<f64>,
    pub mu_q: Vec<f64>,
    pub sigma: Matrix,
}

impl GaussianPair {
    /// Mean shift `Δ = μ_Q − μ_P`.
    pub fn shift(&self) -> Vec<f64> {
        self.mu_q
            .iter()
            .zip(&self.mu_p)
            .map(|(q, p)| q - p)
            .collect()
    }
}

/// Builds the divergence-study pair: `Σ = [[σ1², cσ1σ2], [cσ1σ2, σ2²]]`,
/// `μ_P = 0`, and `μ_Q = z ⊙ (σ1, σ2)` with `z ~ N(0, z_scale² I_2)` drawn
/// from the seed.
pub fn gen_gaussian_pair(
    c: f64,
    sigma1: f64,
    sigma2: f64,
    z_scale: f64,
    seed: u64,
) -> Result<GaussianPair> {
    if !(c.is_finite() && c.abs() < 1.0) {
        return Err(Error::InvalidCorrelation(c));
    }
    if sigma1 <= 0.0 || sigma2 <= 0.0 {
        return Err(Error::InvalidConfig(
            "standard deviations must be positive".to_string(),
        ));
    }
    if z_scale < 0.0 {
        return Err(Error::InvalidConfig("z_scale must be >= 0".to_string()));
    }
    let mut gen = rng::seeded(seed);
    let z1: f64 = gen.sample(StandardNormal);
    let z2: f64 = gen.sample(StandardNormal);
    let sigma = Matrix::from_vec(
        2,
        2,
        vec![
            sigma1 * sigma1,
            c * sigma1 * sigma2,
            c * sigma1 * sigma2,
            sigma2 * sigma2,
        ],
    )?;
    Ok(GaussianPair {
        mu_p: vec![0.0, 0.0],
        mu_q: vec![z_scale * z1 * sigma1, z_scale * z2 * sigma2],
        sigma,
    })
}

/// Multivariate normal sampling via the Cholesky factor of `sigma`.
/// Returns an `n × dim` matrix; errors if `sigma` is not positive definite.
pub fn sample_gaussian(mean: &[f64], sigma: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    let dim = mean.len();
    if sigma.rows() != dim || sigma.cols() != dim {
        return Err(Error::ShapeMismatch {
            context: "sample_gaussian".into(),
            expected: dim,
            got: sigma.rows(),
        });
    }
    let l = linalg::cholesky(sigma)?;
    let mut gen = rng::seeded(seed);
    let mut out = Matrix::zeros(n, dim);
    let mut xi = vec![0.0; dim];
    for row in 0..n {
        for v in xi.iter_mut() {
            *v = gen.sample(StandardNormal);
        }
        let dst = out.row_mut(row);
        for i in 0..dim {
            let mut acc = mean[i];
            for j in 0..=i {
                acc += l.get(i, j) * xi[j];
            }
            dst[i] = acc;
        }
    }
    Ok(out)
}

/// Two-point loss distributions supported on `{0, L}`:
/// `Z_1` puts mass `p* + δ` on `L`, `Z_2` puts mass `p* − δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointPair {
    pub l: f64,
    pub delta: f64,
    pub p_star: f64,
}

impl TwoPointPair {
    pub fn new(l: f64, delta: f64) -> Result<Self> {
        if l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidConfig(format!("L={l} must be positive")));
        }
        if !(0.0 < delta && delta < 0.5) {
            return Err(Error::DegenerateConstruction { delta });
        }
        Ok(TwoPointPair {
            l,
            delta,
            p_star: 0.5,
        })
    }

    /// Probability that the selected distribution emits `L`.
    pub fn prob_high(&self, which: u8) -> f64 {
        match which {
            1 => self.p_star + self.delta,
            _ => self.p_star - self.delta,
        }
    }

    /// Exact mean of the selected distribution: `(p* ± δ) L`.
    pub fn mean(&self, which: u8) -> f64 {
        self.prob_high(which) * self.l
    }

    /// Exact standard deviation `√(p(1−p)) L`.
    pub fn sd(&self, which: u8) -> f64 {
        let p = self.prob_high(which);
        crate::float::sqrt(p * (1.0 - p)) * self.l
    }
}

/// I.i.d. draws from `Z_which`; values are exactly `0` or `L`.
pub fn gen_two_point(pair: &TwoPointPair, which: u8, n: usize, seed: u64) -> Vec<f64> {
    let p = pair.prob_high(which);
    let mut gen = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let u: f64 = gen.random();
            if u < p {
                pair.l
            } else {
                0.0
            }
        })
        .collect()
}
