//! Ambiguity sets and divergence machinery.
//!
//! The central object is the correlation-aware ambiguity radius
//!
//! ```text
//! B = Σ_k ρ_k + 2 Σ_{i<j} |γ_ij| √(ρ_i ρ_j)
//! ```
//!
//! combining per-modality χ² budgets ρ_k through cross-modal correlations
//! γ_ij. The module also provides the closed-form Gaussian mean-shift χ²
//! divergence, exact discrete χ², a data-processing-inequality check, and
//! the empirical Wasserstein machinery (marginal 1-D distances, exact joint
//! optimal transport, and the lower/upper sandwich bounds).

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::float;
use crate::linalg::{self, Matrix};
use crate::rng;
use crate::synthetic::GaussianPair;
use crate::{Error, Result};

/// Exact-assignment size cap for [`wp_joint`]; the solver is O(n³).
pub const DEFAULT_ASSIGNMENT_CAP: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguityKind {
    ChiSquare,
    Wasserstein,
}

/// Per-modality budgets plus the cross-modal correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySpec {
    pub rho: Vec<f64>,
    pub gamma: Matrix,
    pub kind: AmbiguityKind,
    /// Wasserstein order; unused for χ².
    pub p_order: f64,
}

impl AmbiguitySpec {
    pub fn chi_square(rho: Vec<f64>, gamma: Matrix) -> Result<Self> {
        let spec = AmbiguitySpec {
            rho,
            gamma,
            kind: AmbiguityKind::ChiSquare,
            p_order: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn wasserstein(rho: Vec<f64>, gamma: Matrix, p_order: f64) -> Result<Self> {
        if p_order < 1.0 {
            return Err(Error::InvalidAmbiguity(format!(
                "Wasserstein order {p_order} must be >= 1"
            )));
        }
        let spec = AmbiguitySpec {
            rho,
            gamma,
            kind: AmbiguityKind::Wasserstein,
            p_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform budget ρ across all K modalities.
    pub fn uniform_chi_square(rho: f64, gamma: Matrix) -> Result<Self> {
        let k = gamma.rows();
        Self::chi_square(vec![rho; k], gamma)
    }

    fn validate(&self) -> Result<()> {
        let k = self.rho.len();
        if k == 0 {
            return Err(Error::InvalidAmbiguity("need at least one modality".into()));
        }
        if self.gamma.rows() != k || self.gamma.cols() != k {
            return Err(Error::InvalidAmbiguity(format!(
                "gamma is {}x{}, expected {k}x{k}",
                self.gamma.rows(),
                self.gamma.cols()
            )));
        }
        for (i, &r) in self.rho.iter().enumerate() {
            if r < 0.0 || !r.is_finite() {
                return Err(Error::InvalidAmbiguity(format!("rho[{i}] = {r} < 0")));
            }
        }
        for i in 0..k {
            if (self.gamma.get(i, i) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidAmbiguity(format!(
                    "gamma[{i}][{i}] = {} != 1",
                    self.gamma.get(i, i)
                )));
            }
            for j in 0..k {
                let g = self.gamma.get(i, j);
                if g.abs() > 1.0 + 1e-12 || !g.is_finite() {
                    return Err(Error::InvalidAmbiguity(format!(
                        "|gamma[{i}][{j}]| = {} > 1",
                        g.abs()
                    )));
                }
                if (g - self.gamma.get(j, i)).abs() > 1e-12 {
                    return Err(Error::InvalidAmbiguity("gamma not symmetric".into()));
                }
            }
        }
        Ok(())
    }
}

/// The evaluated radius with its two-part breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusB {
    pub value: f64,
    /// `Σ_k ρ_k`.
    pub sum_rho: f64,
    /// `2 Σ_{i<j} |γ_ij| √(ρ_i ρ_j)`.
    pub cross: f64,
}

/// Evaluates the correlation-aware radius for a χ² spec.
pub fn radius_b(spec: &AmbiguitySpec) -> Result<RadiusB> {
    spec.validate()?;
    if spec.kind != AmbiguityKind::ChiSquare {
        return Err(Error::InvalidAmbiguity(
            "radius_b applies to chi-square specs".to_string(),
        ));
    }
    let sum_rho: f64 = spec.rho.iter().sum();
    let mut cross = 0.0;
    let k = spec.rho.len();
    for i in 0..k {
        for j in i + 1..k {
            cross +=
                2.0 * spec.gamma.get(i, j).abs() * float::sqrt(spec.rho[i] * spec.rho[j]);
        }
    }
    Ok(RadiusB {
        value: sum_rho + cross,
        sum_rho,
        cross,
    })
}

/// Average ranks (1-based, ties averaged) of a column.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        let da = a[i] - ma;
        let db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    cov / float::sqrt(va * vb)
}

/// Spearman rank correlation matrix of embedding columns.
///
/// Rank statistics depend only on the copula, which is what makes this a
/// reasonable estimator for the copula-induced γ_ij. Entries are clamped to
/// [−1, 1] against floating-point drift.
pub fn estimate_gamma(embeddings: &Matrix) -> Result<Matrix> {
    let n = embeddings.rows();
    let k = embeddings.cols();
    if n < 3 {
        return Err(Error::TooFewSamples { need: 3, got: n });
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|c| embeddings.col(c)).collect();
    let mut rank_cols = Vec::with_capacity(k);
    for (c, col) in cols.iter().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::ConstantColumn {
                modality: format!("{c}"),
            });
        }
        rank_cols.push(ranks(col));
    }
    let mut gamma = Matrix::zeros(k, k);
    for i in 0..k {
        gamma.set(i, i, 1.0);
        for j in i + 1..k {
            let r = pearson(&rank_cols[i], &rank_cols[j]).clamp(-1.0, 1.0);
            gamma.set(i, j, r);
            gamma.set(j, i, r);
        }
    }
    Ok(gamma)
}

/// Closed-form χ² divergence between Gaussians with shared covariance:
/// `exp(Δᵀ Σ⁻¹ Δ) − 1` with `Δ = μ_Q − μ_P`.
pub fn chi2_gaussian_meanshift(pair: &GaussianPair) -> Result<f64> {
    let delta = pair.shift();
    let q = linalg::quad_form_inv(&pair.sigma, &delta)?;
    Ok(float::exp(q) - 1.0)
}

/// A discrete probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    p: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in p.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidDistribution(format!("p[{i}] = {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(DiscreteDist { p })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::InvalidDistribution(format!("weight sum {sum}")));
        }
        DiscreteDist::new(w.iter().map(|v| v / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn support_size(&self) -> usize {
        self.p.len()
    }
}

/// Exact discrete χ² divergence `Σ_x (q_x − p_x)² / p_x`.
///
/// Mass of `q` on an atom where `p` has none makes the divergence infinite;
/// that case is surfaced as [`Error::InfiniteDivergence`], never as a float.
pub fn chi2_discrete(q: &DiscreteDist, p: &DiscreteDist) -> Result<f64> {
    if q.support_size() != p.support_size() {
        return Err(Error::SizeMismatch {
            left: q.support_size(),
            right: p.support_size(),
        });
    }
    let mut total = 0.0;
    for (atom, (&qx, &px)) in q.p.iter().zip(&p.p).enumerate() {
        if px == 0.0 {
            if qx > 0.0 {
                return Err(Error::InfiniteDivergence { atom });
            }
            continue;
        }
        let d = qx - px;
        total += d * d / px;
    }
    Ok(total)
}

/// Outcome of a data-processing-inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpiCheck {
    /// χ² between the push-forwards.
    pub lhs: f64,
    /// χ² between the originals.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `χ²(g#q ‖ g#p) ≤ χ²(q ‖ p)` for a total map `g` from the support
/// of size `m` onto `{0, .., out_size-1}`.
pub fn dpi_check(
    p: &DiscreteDist,
    q: &DiscreteDist,
    g: &[usize],
    out_size: usize,
) -> Result<DpiCheck> {
    if g.len() != p.support_size() {
        return Err(Error::SizeMismatch {
            left: g.len(),
            right: p.support_size(),
        });
    }
    for &target in g {
        if target >= out_size {
            return Err(Error::IndexOutOfRange {
                index: target,
                len: out_size,
            });
        }
    }
    let rhs = chi2_discrete(q, p)?;
    let mut p_push = vec![0.0; out_size];
    let mut q_push = vec![0.0; out_size];
    for (x, &target) in g.iter().enumerate() {
        p_push[target] += p.p[x];
        q_push[target] += q.p[x];
    }
    let lhs = chi2_discrete(&DiscreteDist::new(q_push)?, &DiscreteDist::new(p_push)?)?;
    Ok(DpiCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Empirical 1-D Wasserstein-1 distance between equal-size samples:
/// mean absolute difference of sorted order statistics.
pub fn w1_marginal(samples_p: &[f64], samples_q: &[f64]) -> Result<f64> {
    if samples_p.len() != samples_q.len() {
        return Err(Error::SizeMismatch {
            left: samples_p.len(),
            right: samples_q.len(),
        });
    }
    if samples_p.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = samples_p.to_vec();
    let mut b = samples_q.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let n = a.len() as f64;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| float::abs(x - y))
        .sum::<f64>()
        / n)
}

/// Exact solution of the square linear assignment problem by the
/// shortest-augmenting-path (Jonker–Volkgenant style) algorithm, O(n³).
/// Returns the column assigned to each row and the total cost.
pub fn solve_assignment(cost: &Matrix) -> (Vec<usize>, f64) {
    let n = cost.rows();
    debug_assert_eq!(n, cost.cols());
    // 1-indexed potentials; p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
        total += cost.get(p[j] - 1, j - 1);
    }
    (assignment, total)
}

fn check_cloud_pair(cloud_p: &Matrix, cloud_q: &Matrix, cap: usize) -> Result<()> {
    if cloud_p.rows() != cloud_q.rows() || cloud_p.cols() != cloud_q.cols() {
        return Err(Error::SizeMismatch {
            left: cloud_p.rows(),
            right: cloud_q.rows(),
        });
    }
    if cloud_p.rows() == 0 {
        return Err(Error::EmptySample);
    }
    if cloud_p.rows() > cap {
        return Err(Error::CapacityExceeded {
            n: cloud_p.rows(),
            cap,
        });
    }
    Ok(())
}

/// Exact empirical p-Wasserstein distance between two equal-weight point
/// clouds under the cost `c(ξ, ξ') = (Σ_i |z_i − z_i'|^p)^{1/p}`:
/// `((1/n) Σ c^p over the optimal matching)^{1/p}`.
pub fn wp_joint(cloud_p: &Matrix, cloud_q: &Matrix, p_order: f64) -> Result<f64> {
    wp_joint_capped(cloud_p, cloud_q, p_order, DEFAULT_ASSIGNMENT_CAP)
}

/// [`wp_joint`] with an explicit size cap.
pub fn wp_joint_capped(
    cloud_p: &Matrix,
    cloud_q: &Matrix,
    p_order: f64,
    cap: usize,
) -> Result<f64> {
    if p_order < 1.0 {
        return Err(Error::InvalidAmbiguity(format!(
            "Wasserstein order {p_order} must be >= 1"
        )));
    }
    check_cloud_pair(cloud_p, cloud_q, cap)?;
    let n = cloud_p.rows();
    let mut cost = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for (a, b) in cloud_p.row(i).iter().zip(cloud_q.row(j)) {
                c += float::powf(float::abs(a - b), p_order);
            }
            cost.set(i, j, c);
        }
    }
    let (_, total) = solve_assignment(&cost);
    Ok(float::powf(total / n as f64, 1.0 / p_order))
}

/// Lower bound from marginal distances, reported on the distance scale:
/// `(Σ_i (D^(i))^p)^{1/p}`.
pub fn w_lower_bound(marginal_dists: &[f64], p_order: f64) -> f64 {
    let sum: f64 = marginal_dists
        .iter()
        .map(|&d| float::powf(d, p_order))
        .sum();
    float::powf(sum, 1.0 / p_order)
}

/// Triangle-inequality upper bound through the product measures:
/// `Δ_P + (Σ_i ρ_i^p)^{1/p} + Δ_Q`.
pub fn w_upper_bound(delta_p: f64, delta_q: f64, rho: &[f64], p_order: f64) -> f64 {
    delta_p + w_lower_bound(rho, p_order) + delta_q
}

/// Distance of a cloud from independence: [`wp_joint`] between the cloud and
/// a copy whose columns are independently permuted (a product-measure
/// surrogate that preserves the marginals exactly). Seeded; the noise floor
/// on truly independent clouds must be calibrated by the caller.
pub fn delta_independence(cloud: &Matrix, p_order: f64, seed: u64) -> Result<f64> {
    let shuffled = shuffle_columns(cloud, seed);
    wp_joint(cloud, &shuffled, p_order)
}

/// Independently permutes each column (seeded per column).
pub fn shuffle_columns(cloud: &Matrix, seed: u64) -> Matrix {
    let mut out = Matrix::zeros(cloud.rows(), cloud.cols());
    for c in 0..cloud.cols() {
        let mut col = cloud.col(c);
        col.shuffle(&mut rng::substream(seed, c as u64));
        for (r, v) in col.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    out
}
