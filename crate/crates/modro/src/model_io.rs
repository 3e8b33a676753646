//! Versioned JSON serialization for fusion models: explicit layer shapes,
//! row-major weight arrays, and a format tag checked on load.

use std::path::Path;

use modro_core::linalg::Matrix;
use modro_core::models::{
    Activation, DenseLayer, EarlyFusionModel, FusionModel, LateFusionModel, LinearModel,
    MlpModel, ResidualModel, ScalarModel,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "modro-model/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols` weight entries.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ScalarDoc {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Mlp {
        activation: String,
        layers: Vec<LayerDoc>,
    },
    /// Linear skip (`weights`/`bias`) plus an MLP correction.
    Residual {
        weights: Vec<f64>,
        bias: f64,
        activation: String,
        layers: Vec<LayerDoc>,
    },
}

fn activation_name(a: Activation) -> String {
    match a {
        Activation::Relu => "relu".into(),
        Activation::Tanh => "tanh".into(),
        Activation::Identity => "identity".into(),
    }
}

fn activation_from_name(name: &str) -> Result<Activation> {
    match name {
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        "identity" => Ok(Activation::Identity),
        other => Err(Error::Schema(format!("unknown activation '{other}'"))),
    }
}

fn layers_to_doc(m: &MlpModel) -> Vec<LayerDoc> {
    m.layers
        .iter()
        .map(|l| LayerDoc {
            rows: l.weights.rows(),
            cols: l.weights.cols(),
            weights: l.weights.data().to_vec(),
            bias: l.bias.clone(),
        })
        .collect()
}

fn mlp_from_doc(activation: &str, layers: Vec<LayerDoc>) -> Result<MlpModel> {
    let activation = activation_from_name(activation)?;
    let mut built = Vec::with_capacity(layers.len());
    for (i, layer) in layers.into_iter().enumerate() {
        if layer.bias.len() != layer.rows {
            return Err(Error::Schema(format!(
                "layer {i}: bias length {} does not match rows {}",
                layer.bias.len(),
                layer.rows
            )));
        }
        let weights = Matrix::from_vec(layer.rows, layer.cols, layer.weights)
            .map_err(|e| Error::Schema(format!("layer {i}: {e}")))?;
        built.push(DenseLayer {
            weights,
            bias: layer.bias,
        });
    }
    if built.is_empty() {
        return Err(Error::Schema("mlp must have at least one layer".into()));
    }
    for w in 1..built.len() {
        if built[w].weights.cols() != built[w - 1].weights.rows() {
            return Err(Error::Schema(format!(
                "layer {w}: input dim {} does not match previous output {}",
                built[w].weights.cols(),
                built[w - 1].weights.rows()
            )));
        }
    }
    Ok(MlpModel {
        layers: built,
        activation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fusion", rename_all = "snake_case", deny_unknown_fields)]
enum FusionDoc {
    Late {
        encoders: Vec<ScalarDoc>,
        head: ScalarDoc,
    },
    Early {
        model: ScalarDoc,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    model: FusionDoc,
}

fn scalar_to_doc(model: &ScalarModel) -> ScalarDoc {
    match model {
        ScalarModel::Linear(m) => ScalarDoc::Linear {
            weights: m.weights.clone(),
            bias: m.bias,
        },
        ScalarModel::Mlp(m) => ScalarDoc::Mlp {
            activation: activation_name(m.activation),
            layers: layers_to_doc(m),
        },
        ScalarModel::Residual(m) => ScalarDoc::Residual {
            weights: m.linear.weights.clone(),
            bias: m.linear.bias,
            activation: activation_name(m.mlp.activation),
            layers: layers_to_doc(&m.mlp),
        },
    }
}

fn scalar_from_doc(doc: ScalarDoc) -> Result<ScalarModel> {
    match doc {
        ScalarDoc::Linear { weights, bias } => Ok(ScalarModel::Linear(LinearModel {
            weights,
            bias,
        })),
        ScalarDoc::Mlp { activation, layers } => {
            Ok(ScalarModel::Mlp(mlp_from_doc(&activation, layers)?))
        }
        ScalarDoc::Residual {
            weights,
            bias,
            activation,
            layers,
        } => {
            let mlp = mlp_from_doc(&activation, layers)?;
            if mlp.input_dim() != weights.len() {
                return Err(Error::Schema(format!(
                    "residual: skip dim {} does not match mlp input {}",
                    weights.len(),
                    mlp.input_dim()
                )));
            }
            Ok(ScalarModel::Residual(ResidualModel {
                linear: LinearModel { weights, bias },
                mlp,
            }))
        }
    }
}

pub fn model_to_json(model: &FusionModel) -> Result<String> {
    let fusion = match model {
        FusionModel::Late(m) => FusionDoc::Late {
            encoders: m.encoders.iter().map(scalar_to_doc).collect(),
            head: scalar_to_doc(&m.head),
        },
        FusionModel::Early(m) => FusionDoc::Early {
            model: scalar_to_doc(&m.model),
        },
    };
    let doc = ModelDoc {
        format: FORMAT_TAG.into(),
        model: fusion,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str) -> Result<FusionModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.format != FORMAT_TAG {
        return Err(Error::FormatTag {
            expected: FORMAT_TAG.into(),
            got: doc.format,
        });
    }
    match doc.model {
        FusionDoc::Late { encoders, head } => {
            let encoders: Result<Vec<ScalarModel>> =
                encoders.into_iter().map(scalar_from_doc).collect();
            Ok(FusionModel::Late(LateFusionModel {
                encoders: encoders?,
                head: scalar_from_doc(head)?,
            }))
        }
        FusionDoc::Early { model } => Ok(FusionModel::Early(EarlyFusionModel {
            model: scalar_from_doc(model)?,
        })),
    }
}

pub fn save_model(model: &FusionModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FusionModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_late() -> FusionModel {
        FusionModel::Late(LateFusionModel {
            encoders: vec![
                ScalarModel::Mlp(MlpModel::new_2layer(5, 8, 3)),
                ScalarModel::Linear(LinearModel {
                    weights: vec![1.5, -2.0, 0.25],
                    bias: 0.75,
                }),
            ],
            head: ScalarModel::Linear(LinearModel {
                weights: vec![0.5, 0.5],
                bias: -1.0,
            }),
        })
    }

    #[test]
    fn late_fusion_round_trips_bit_exactly() {
        let model = sample_late();
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn early_fusion_round_trips_bit_exactly() {
        let model = FusionModel::Early(EarlyFusionModel {
            model: ScalarModel::Mlp(MlpModel::new_2layer(20, 16, 9)),
        });
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn residual_encoder_round_trips_bit_exactly() {
        let mut res = ResidualModel::new_2layer(5, 8, 11);
        res.linear.weights = vec![0.1, -0.2, 0.3, 0.0, 1.5];
        res.linear.bias = -0.5;
        let model = FusionModel::Late(LateFusionModel {
            encoders: vec![ScalarModel::Residual(res)],
            head: ScalarModel::Linear(LinearModel {
                weights: vec![1.0],
                bias: 0.0,
            }),
        });
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn residual_skip_dim_mismatch_is_rejected() {
        let json = serde_json::json!({
            "format": FORMAT_TAG,
            "model": {
                "fusion": "early",
                "model": {
                    "kind": "residual",
                    "weights": [0.0, 0.0],
                    "bias": 0.0,
                    "activation": "tanh",
                    "layers": [
                        {"rows": 2, "cols": 3, "weights": [0,0,0,0,0,0], "bias": [0,0]},
                        {"rows": 1, "cols": 2, "weights": [0,0], "bias": [0]}
                    ]
                }
            }
        });
        assert!(matches!(
            model_from_json(&json.to_string()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let text = model_to_json(&sample_late())
            .unwrap()
            .replace(FORMAT_TAG, "modro-model/v999");
        assert!(matches!(
            model_from_json(&text),
            Err(Error::FormatTag { .. })
        ));
    }

    #[test]
    fn inconsistent_layer_shape_is_rejected() {
        let json = serde_json::json!({
            "format": FORMAT_TAG,
            "model": {
                "fusion": "early",
                "model": {
                    "kind": "mlp",
                    "activation": "relu",
                    "layers": [
                        {"rows": 2, "cols": 3, "weights": [0,0,0,0,0,0], "bias": [0,0]},
                        {"rows": 1, "cols": 5, "weights": [0,0,0,0,0], "bias": [0]}
                    ]
                }
            }
        });
        assert!(matches!(
            model_from_json(&json.to_string()),
            Err(Error::Schema(_))
        ));
    }
}
