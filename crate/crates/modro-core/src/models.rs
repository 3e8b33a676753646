//! Predictor zoo: scalar-output linear models and small MLPs, per-modality
//! encoders fused by a head (late fusion), early-fusion models over the
//! feature concatenation, OLS solvers for both, and Lipschitz estimation.
//!
//! Late fusion realizes predictors of the form `f ∘ g`: each encoder
//! `g^(k)` maps its modality block to a one-dimensional embedding and the
//! head `f` aggregates the K-vector of embeddings into a prediction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::MultimodalDataset;
use crate::float;
use crate::linalg::{self, Matrix};
use crate::rng;
use crate::{Error, Result};

/// Default ridge used by the OLS fits for numerical safety.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, inputs: &Matrix) -> Vec<f64> {
        (0..inputs.rows())
            .map(|r| self.predict_row(inputs.row(r)))
            .collect()
    }

    /// `‖w‖₂`, the exact Lipschitz constant of the model.
    pub fn weight_norm(&self) -> f64 {
        float::sqrt(linalg::dot(&self.weights, &self.weights))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

/// One dense layer; weights are `out × in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn n_params(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    /// Largest singular value by power iteration.
    pub fn spectral_norm(&self) -> f64 {
        let (rows, cols) = (self.weights.rows(), self.weights.cols());
        let mut v = vec![1.0 / float::sqrt(cols as f64); cols];
        let mut u = vec![0.0; rows];
        let mut sigma = 0.0;
        for _ in 0..50 {
            for (r, uv) in u.iter_mut().enumerate() {
                *uv = linalg::dot(self.weights.row(r), &v);
            }
            let un = float::sqrt(linalg::dot(&u, &u));
            if un == 0.0 {
                return 0.0;
            }
            for uv in u.iter_mut() {
                *uv /= un;
            }
            for (c, vv) in v.iter_mut().enumerate() {
                *vv = (0..rows).map(|r| self.weights.get(r, c) * u[r]).sum();
            }
            sigma = float::sqrt(linalg::dot(&v, &v));
            if sigma == 0.0 {
                return 0.0;
            }
            for vv in v.iter_mut() {
                *vv /= sigma;
            }
        }
        sigma
    }
}

/// A scalar-output multilayer perceptron with a fixed activation between
/// layers and identity at the output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
}

impl MlpModel {
    /// He-initialized 2-layer ReLU net `input → hidden → 1`.
    pub fn new_2layer(input_dim: usize, hidden: usize, seed: u64) -> Self {
        Self::new_2layer_with(input_dim, hidden, Activation::Relu, seed)
    }

    /// 2-layer net `input → hidden → 1` with the given activation. Weights
    /// use He init (`√(2/fan_in)`) for ReLU and Xavier (`√(1/fan_in)`)
    /// otherwise; biases start at zero.
    pub fn new_2layer_with(
        input_dim: usize,
        hidden: usize,
        activation: Activation,
        seed: u64,
    ) -> Self {
        let mut gen = rng::seeded(seed);
        let mut init = |rows: usize, cols: usize| {
            let scale = match activation {
                Activation::Relu => float::sqrt(2.0 / cols as f64),
                _ => float::sqrt(1.0 / cols as f64),
            };
            let data = (0..rows * cols)
                .map(|_| {
                    let xi: f64 = gen.sample(StandardNormal);
                    scale * xi
                })
                .collect();
            DenseLayer {
                weights: Matrix::from_vec(rows, cols, data).expect("sized buffer"),
                bias: vec![0.0; rows],
            }
        };
        let l1 = init(hidden, input_dim);
        let l2 = init(1, hidden);
        MlpModel {
            layers: vec![l1, l2],
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    fn check(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "mlp input".into(),
                expected: self.input_dim(),
                got: inputs.cols(),
            });
        }
        Ok(())
    }

    fn apply_activation(&self, v: f64) -> f64 {
        match self.activation {
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Tanh => float::tanh(v),
            Activation::Identity => v,
        }
    }

    /// Forward pass returning one scalar per input row.
    pub fn forward(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        self.check(inputs)?;
        Ok(self.forward_cached(inputs).1)
    }

    /// Forward pass keeping pre-activation outputs of every hidden layer.
    fn forward_cached(&self, inputs: &Matrix) -> (Vec<Matrix>, Vec<f64>) {
        let n = inputs.rows();
        let mut activations: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        let mut current = inputs.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let out_dim = layer.weights.rows();
            let mut next = Matrix::zeros(n, out_dim);
            for r in 0..n {
                let x = current.row(r);
                let dst = next.row_mut(r);
                for (o, d) in dst.iter_mut().enumerate() {
                    let z = linalg::dot(layer.weights.row(o), x) + layer.bias[o];
                    *d = if li + 1 < self.layers.len() {
                        self.apply_activation(z)
                    } else {
                        z
                    };
                }
            }
            activations.push(current);
            current = next;
        }
        let outputs = current.col(0);
        (activations, outputs)
    }

    /// Backpropagation. `upstream[r]` is `∂L/∂output_r`; returns flat
    /// parameter gradients (layer by layer, weights then bias) and the
    /// gradient w.r.t. the inputs.
    pub fn backward(&self, inputs: &Matrix, upstream: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        self.check(inputs)?;
        if upstream.len() != inputs.rows() {
            return Err(Error::ShapeMismatch {
                context: "mlp upstream".into(),
                expected: inputs.rows(),
                got: upstream.len(),
            });
        }
        let n = inputs.rows();
        let (activations, _) = self.forward_cached(inputs);
        let mut grads = vec![0.0; self.n_params()];
        // delta: gradient w.r.t. the current layer's output.
        let mut delta = Matrix::zeros(n, 1);
        for r in 0..n {
            delta.set(r, 0, upstream[r]);
        }
        let mut offsets: Vec<usize> = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.n_params();
        }
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &activations[li];
            let (out_dim, in_dim) = (layer.weights.rows(), layer.weights.cols());
            let base = offsets[li];
            let (w_grad, b_grad) =
                grads[base..base + layer.n_params()].split_at_mut(out_dim * in_dim);
            let mut input_grad = Matrix::zeros(n, in_dim);
            for r in 0..n {
                let x = input.row(r);
                let d = delta.row(r);
                let ig = input_grad.row_mut(r);
                for o in 0..out_dim {
                    let g = d[o];
                    if g == 0.0 {
                        continue;
                    }
                    let wrow = layer.weights.row(o);
                    let wg = &mut w_grad[o * in_dim..(o + 1) * in_dim];
                    for c in 0..in_dim {
                        wg[c] += g * x[c];
                        ig[c] += g * wrow[c];
                    }
                    b_grad[o] += g;
                }
            }
            // Pass through the activation of the previous layer. The stored
            // inputs are post-activation, which is all either derivative needs.
            if li > 0 {
                match self.activation {
                    Activation::Relu => {
                        for r in 0..n {
                            let act = activations[li].row(r);
                            let ig = input_grad.row_mut(r);
                            for c in 0..in_dim {
                                if act[c] <= 0.0 {
                                    ig[c] = 0.0;
                                }
                            }
                        }
                    }
                    Activation::Tanh => {
                        for r in 0..n {
                            let act = activations[li].row(r);
                            let ig = input_grad.row_mut(r);
                            for c in 0..in_dim {
                                ig[c] *= 1.0 - act[c] * act[c];
                            }
                        }
                    }
                    Activation::Identity => {}
                }
            }
            delta = input_grad;
        }
        Ok((grads, delta))
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.n_params()).sum()
    }

    /// Product of layer spectral norms; a Lipschitz upper bound since the
    /// activation is 1-Lipschitz.
    pub fn lipschitz_upper(&self) -> f64 {
        self.layers.iter().map(|l| l.spectral_norm()).product()
    }
}

/// Linear skip connection plus a bounded nonlinear correction:
/// `h(x) = wᵀx + b + mlp(x)` with a saturating activation in the MLP.
/// Outside the data support the saturating branch flattens out, so the
/// model extrapolates linearly instead of along an unbounded ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModel {
    pub linear: LinearModel,
    pub mlp: MlpModel,
}

impl ResidualModel {
    /// Zero-initialized skip plus a Xavier-initialized 2-layer tanh MLP.
    pub fn new_2layer(input_dim: usize, hidden: usize, seed: u64) -> Self {
        ResidualModel {
            linear: LinearModel {
                weights: vec![0.0; input_dim],
                bias: 0.0,
            },
            mlp: MlpModel::new_2layer_with(input_dim, hidden, Activation::Tanh, seed),
        }
    }
}

/// A scalar-output model usable as an encoder or a fusion head.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarModel {
    Linear(LinearModel),
    Mlp(MlpModel),
    Residual(ResidualModel),
}

impl ScalarModel {
    pub fn input_dim(&self) -> usize {
        match self {
            ScalarModel::Linear(m) => m.weights.len(),
            ScalarModel::Mlp(m) => m.input_dim(),
            ScalarModel::Residual(m) => m.linear.weights.len(),
        }
    }

    pub fn forward(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        match self {
            ScalarModel::Linear(m) => {
                if inputs.cols() != m.weights.len() {
                    return Err(Error::ShapeMismatch {
                        context: "linear input".into(),
                        expected: m.weights.len(),
                        got: inputs.cols(),
                    });
                }
                Ok(m.predict(inputs))
            }
            ScalarModel::Mlp(m) => m.forward(inputs),
            ScalarModel::Residual(m) => {
                if inputs.cols() != m.linear.weights.len() {
                    return Err(Error::ShapeMismatch {
                        context: "residual input".into(),
                        expected: m.linear.weights.len(),
                        got: inputs.cols(),
                    });
                }
                let mut out = m.mlp.forward(inputs)?;
                for (r, v) in out.iter_mut().enumerate() {
                    *v += m.linear.predict_row(inputs.row(r));
                }
                Ok(out)
            }
        }
    }

    pub fn backward(&self, inputs: &Matrix, upstream: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        match self {
            ScalarModel::Linear(m) => {
                let dim = m.weights.len();
                let mut grads = vec![0.0; dim + 1];
                let mut input_grad = Matrix::zeros(inputs.rows(), dim);
                for r in 0..inputs.rows() {
                    let g = upstream[r];
                    let x = inputs.row(r);
                    let ig = input_grad.row_mut(r);
                    for c in 0..dim {
                        grads[c] += g * x[c];
                        ig[c] = g * m.weights[c];
                    }
                    grads[dim] += g;
                }
                Ok((grads, input_grad))
            }
            ScalarModel::Mlp(m) => m.backward(inputs, upstream),
            ScalarModel::Residual(m) => {
                let dim = m.linear.weights.len();
                let (mlp_grads, mlp_input_grad) = m.mlp.backward(inputs, upstream)?;
                let mut grads = vec![0.0; dim + 1 + mlp_grads.len()];
                let mut input_grad = mlp_input_grad;
                for r in 0..inputs.rows() {
                    let g = upstream[r];
                    let x = inputs.row(r);
                    let ig = input_grad.row_mut(r);
                    for c in 0..dim {
                        grads[c] += g * x[c];
                        ig[c] += g * m.linear.weights[c];
                    }
                    grads[dim] += g;
                }
                grads[dim + 1..].copy_from_slice(&mlp_grads);
                Ok((grads, input_grad))
            }
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            ScalarModel::Linear(m) => m.weights.len() + 1,
            ScalarModel::Mlp(m) => m.n_params(),
            ScalarModel::Residual(m) => m.linear.weights.len() + 1 + m.mlp.n_params(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            ScalarModel::Linear(m) => {
                let mut out = m.weights.clone();
                out.push(m.bias);
                out
            }
            ScalarModel::Mlp(m) => {
                let mut out = Vec::with_capacity(m.n_params());
                for layer in &m.layers {
                    out.extend_from_slice(layer.weights.data());
                    out.extend_from_slice(&layer.bias);
                }
                out
            }
            ScalarModel::Residual(m) => {
                let mut out = Vec::with_capacity(self.n_params());
                out.extend_from_slice(&m.linear.weights);
                out.push(m.linear.bias);
                for layer in &m.mlp.layers {
                    out.extend_from_slice(layer.weights.data());
                    out.extend_from_slice(&layer.bias);
                }
                out
            }
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ShapeMismatch {
                context: "set_params".into(),
                expected: self.n_params(),
                got: params.len(),
            });
        }
        match self {
            ScalarModel::Linear(m) => {
                let dim = m.weights.len();
                m.weights.copy_from_slice(&params[..dim]);
                m.bias = params[dim];
            }
            ScalarModel::Mlp(m) => {
                copy_layers(&mut m.layers, params);
            }
            ScalarModel::Residual(m) => {
                let dim = m.linear.weights.len();
                m.linear.weights.copy_from_slice(&params[..dim]);
                m.linear.bias = params[dim];
                copy_layers(&mut m.mlp.layers, &params[dim + 1..]);
            }
        }
        Ok(())
    }

    /// Analytic Lipschitz upper bound: `‖w‖₂` for linear models, the product
    /// of layer spectral norms for MLPs. Certificates consume this, never
    /// the empirical lower estimate.
    pub fn lipschitz_upper(&self) -> f64 {
        match self {
            ScalarModel::Linear(m) => m.weight_norm(),
            ScalarModel::Mlp(m) => m.lipschitz_upper(),
            ScalarModel::Residual(m) => m.linear.weight_norm() + m.mlp.lipschitz_upper(),
        }
    }

    /// Lipschitz upper bound w.r.t. input coordinate `i` alone.
    pub fn input_lipschitz_upper(&self, i: usize) -> f64 {
        match self {
            ScalarModel::Linear(m) => float::abs(m.weights[i]),
            ScalarModel::Mlp(m) => mlp_input_lipschitz(m, i),
            ScalarModel::Residual(m) => {
                float::abs(m.linear.weights[i]) + mlp_input_lipschitz(&m.mlp, i)
            }
        }
    }
}

/// Per-coordinate Lipschitz bound for an MLP: column norm through the first
/// layer, spectral norm through the rest.
fn mlp_input_lipschitz(m: &MlpModel, i: usize) -> f64 {
    let col: Vec<f64> = (0..m.layers[0].weights.rows())
        .map(|r| m.layers[0].weights.get(r, i))
        .collect();
    let mut l = float::sqrt(linalg::dot(&col, &col));
    for layer in &m.layers[1..] {
        l *= layer.spectral_norm();
    }
    l
}

/// Write a flat parameter slice into dense layers, weights then bias per layer.
fn copy_layers(layers: &mut [DenseLayer], params: &[f64]) {
    let mut offset = 0;
    for layer in layers {
        let wlen = layer.weights.rows() * layer.weights.cols();
        layer
            .weights
            .data_mut()
            .copy_from_slice(&params[offset..offset + wlen]);
        offset += wlen;
        let blen = layer.bias.len();
        layer.bias.copy_from_slice(&params[offset..offset + blen]);
        offset += blen;
    }
}

/// K per-modality scalar encoders plus a fusion head over the K embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct LateFusionModel {
    pub encoders: Vec<ScalarModel>,
    pub head: ScalarModel,
}

impl LateFusionModel {
    pub fn n_modalities(&self) -> usize {
        self.encoders.len()
    }

    fn check(&self, ds: &MultimodalDataset) -> Result<()> {
        if ds.n_modalities() != self.encoders.len() {
            return Err(Error::ArityMismatch {
                expected: self.encoders.len(),
                got: ds.n_modalities(),
            });
        }
        Ok(())
    }

    /// The `N × K` embedding matrix; column k is `g^(k)` applied row-wise to
    /// block k, so a column is invariant to edits in any other block.
    pub fn encode(&self, ds: &MultimodalDataset) -> Result<Matrix> {
        self.check(ds)?;
        let n = ds.n_samples();
        let k = self.encoders.len();
        let mut z = Matrix::zeros(n, k);
        for (col, encoder) in self.encoders.iter().enumerate() {
            let out = encoder.forward(ds.block(col))?;
            for (r, v) in out.into_iter().enumerate() {
                z.set(r, col, v);
            }
        }
        Ok(z)
    }

    pub fn predict(&self, ds: &MultimodalDataset) -> Result<Vec<f64>> {
        let z = self.encode(ds)?;
        self.head.forward(&z)
    }
}

/// A single model over the `D`-dimensional concatenation of all blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyFusionModel {
    pub model: ScalarModel,
}

impl EarlyFusionModel {
    pub fn predict(&self, ds: &MultimodalDataset) -> Result<Vec<f64>> {
        if ds.total_dim() != self.model.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "early fusion input".into(),
                expected: self.model.input_dim(),
                got: ds.total_dim(),
            });
        }
        self.model.forward(&ds.concat_features())
    }
}

/// Either fusion style, as trained by `dro::train`.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionModel {
    Late(LateFusionModel),
    Early(EarlyFusionModel),
}

impl FusionModel {
    pub fn predict(&self, ds: &MultimodalDataset) -> Result<Vec<f64>> {
        match self {
            FusionModel::Late(m) => m.predict(ds),
            FusionModel::Early(m) => m.predict(ds),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            FusionModel::Late(m) => {
                m.encoders.iter().map(|e| e.n_params()).sum::<usize>() + m.head.n_params()
            }
            FusionModel::Early(m) => m.model.n_params(),
        }
    }

    /// Flat parameter vector: encoders in modality order, then the head.
    pub fn params(&self) -> Vec<f64> {
        match self {
            FusionModel::Late(m) => {
                let mut out = Vec::with_capacity(self.n_params());
                for e in &m.encoders {
                    out.extend_from_slice(&e.params());
                }
                out.extend_from_slice(&m.head.params());
                out
            }
            FusionModel::Early(m) => m.model.params(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ShapeMismatch {
                context: "fusion set_params".into(),
                expected: self.n_params(),
                got: params.len(),
            });
        }
        match self {
            FusionModel::Late(m) => {
                let mut offset = 0;
                for e in &mut m.encoders {
                    let len = e.n_params();
                    e.set_params(&params[offset..offset + len])?;
                    offset += len;
                }
                m.head.set_params(&params[offset..])?;
            }
            FusionModel::Early(m) => m.model.set_params(params)?,
        }
        Ok(())
    }

    /// Gradient of `Σ_r upstream[r] · prediction_r` with respect to the flat
    /// parameter vector, in the [`FusionModel::params`] layout.
    pub fn backward(&self, ds: &MultimodalDataset, upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != ds.n_samples() {
            return Err(Error::SizeMismatch {
                left: ds.n_samples(),
                right: upstream.len(),
            });
        }
        match self {
            FusionModel::Late(m) => {
                let z = m.encode(ds)?;
                let (head_grads, dz) = m.head.backward(&z, upstream)?;
                let mut out = Vec::with_capacity(self.n_params());
                for (k, encoder) in m.encoders.iter().enumerate() {
                    let (enc_grads, _) = encoder.backward(ds.block(k), &dz.col(k))?;
                    out.extend_from_slice(&enc_grads);
                }
                out.extend_from_slice(&head_grads);
                Ok(out)
            }
            FusionModel::Early(m) => {
                let (grads, _) = m.model.backward(&ds.concat_features(), upstream)?;
                Ok(grads)
            }
        }
    }
}

/// Ordinary least squares with an unpenalized intercept:
/// minimizes `‖Xw + b − y‖² + ridge‖w‖²` via the normal equations and a
/// Cholesky solve (`O(ND² + D³)`).
pub fn ols_fit(design: &Matrix, y: &[f64], ridge: f64) -> Result<LinearModel> {
    let n = design.rows();
    let d = design.cols();
    if n == 0 || y.len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: y.len(),
        });
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidConfig(format!("ridge {ridge} must be >= 0")));
    }
    // Augmented system over (w, b).
    let mut a = Matrix::zeros(d + 1, d + 1);
    let mut rhs = vec![0.0; d + 1];
    for r in 0..n {
        let x = design.row(r);
        for i in 0..d {
            let xi = x[i];
            let arow = a.row_mut(i);
            for j in i..d {
                arow[j] += xi * x[j];
            }
            arow[d] += xi;
            rhs[i] += xi * y[r];
        }
        rhs[d] += y[r];
    }
    a.set(d, d, n as f64);
    for i in 0..d {
        let v = a.get(i, i) + ridge;
        a.set(i, i, v);
        for j in i + 1..=d {
            let v = a.get(i, j);
            a.set(j, i, v);
        }
    }
    let solution = linalg::cholesky_solve(&a, &rhs).map_err(|e| {
        if ridge == 0.0 {
            Error::RankDeficient
        } else {
            e
        }
    })?;
    Ok(LinearModel {
        weights: solution[..d].to_vec(),
        bias: solution[d],
    })
}

/// Two-stage late-fusion OLS: stage 1 regresses `y` on each block alone
/// (supervised scalar embeddings); stage 2 regresses `y` on the K stage-1
/// predictions to form the head.
pub fn fit_late_fusion_ols(ds: &MultimodalDataset, ridge: f64) -> Result<LateFusionModel> {
    let y = ds.targets();
    let mut encoders = Vec::with_capacity(ds.n_modalities());
    for k in 0..ds.n_modalities() {
        let enc = ols_fit(ds.block(k), y, ridge).map_err(|e| {
            Error::InvalidConfig(format!(
                "stage-1 fit failed for modality `{}`: {e}",
                ds.modality_names()[k]
            ))
        })?;
        encoders.push(ScalarModel::Linear(enc));
    }
    let partial = LateFusionModel {
        encoders,
        head: ScalarModel::Linear(LinearModel::zeros(ds.n_modalities())),
    };
    let z = partial.encode(ds)?;
    let head = ols_fit(&z, y, ridge)
        .map_err(|e| Error::InvalidConfig(format!("fusion head fit failed: {e}")))?;
    Ok(LateFusionModel {
        encoders: partial.encoders,
        head: ScalarModel::Linear(head),
    })
}

/// Early-fusion OLS over the concatenated design matrix.
pub fn fit_early_fusion_ols(ds: &MultimodalDataset, ridge: f64) -> Result<EarlyFusionModel> {
    let model = ols_fit(&ds.concat_features(), ds.targets(), ridge)?;
    Ok(EarlyFusionModel {
        model: ScalarModel::Linear(model),
    })
}

/// Empirical Lipschitz lower estimate: the maximum of
/// `|f(x) − f(x')| / ‖x − x'‖₂` over seeded random sample pairs.
/// Duplicate points are skipped; a certificate must use
/// [`ScalarModel::lipschitz_upper`] instead of this estimate.
pub fn lipschitz_estimate(
    model: &ScalarModel,
    samples: &Matrix,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let n = samples.rows();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let outputs = model.forward(samples)?;
    let mut gen = rng::seeded(seed);
    let mut best = 0.0f64;
    let mut seen_distinct = false;
    for _ in 0..pairs {
        let i = gen.random_range(0..n);
        let j = gen.random_range(0..n);
        if i == j {
            continue;
        }
        let mut dist2 = 0.0;
        for (a, b) in samples.row(i).iter().zip(samples.row(j)) {
            dist2 += (a - b) * (a - b);
        }
        if dist2 == 0.0 {
            continue;
        }
        seen_distinct = true;
        let ratio = float::abs(outputs[i] - outputs[j]) / float::sqrt(dist2);
        best = best.max(ratio);
    }
    if !seen_distinct {
        return Err(Error::DegenerateInput(
            "all sampled pairs were duplicate points".into(),
        ));
    }
    Ok(best)
}
