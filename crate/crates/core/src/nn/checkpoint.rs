//! JSON checkpoint format shared by every trained model.
//!
//! ```json
//! {"kind": "gcn", "layer_dims": [10, 16, 2], "activations": ["relu", "identity"],
//!  "weights": [[[...], ...], ...], "biases": [[...], ...],
//!  "meta": {"seed": 0, "epochs": 200, "dataset_id": "tree_grid"}}
//! ```
//!
//! `weights[l]` is the `layer_dims[l] x layer_dims[l+1]` matrix of layer `l`,
//! row-major. Composite models nest further checkpoints under extra keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::mlp::{Activation, Linear, MlpParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epochs: usize,
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity_weight: Option<f64>,
}

impl CheckpointMeta {
    pub fn new(seed: u64, epochs: usize, dataset_id: impl Into<String>) -> Self {
        Self { seed, epochs, dataset_id: dataset_id.into(), fidelity: None, temperature: None, sparsity_weight: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: String,
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub meta: CheckpointMeta,
    /// Graph-level GCNs: the last layer is a classifier applied after mean pooling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_mlp: Option<Box<Checkpoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher: Option<Box<Checkpoint>>,
}

impl Checkpoint {
    pub fn from_layers(kind: &str, layers: &[Linear], activations: &[Activation], meta: CheckpointMeta) -> Self {
        let mut layer_dims = Vec::with_capacity(layers.len() + 1);
        if let Some(first) = layers.first() {
            layer_dims.push(first.input_dim());
        }
        layer_dims.extend(layers.iter().map(Linear::output_dim));
        Self {
            kind: kind.to_string(),
            layer_dims,
            activations: activations.to_vec(),
            weights: layers.iter().map(|l| l.weight.to_rows()).collect(),
            biases: layers.iter().map(|l| l.bias.clone()).collect(),
            meta,
            readout: None,
            mask_mlp: None,
            teacher: None,
        }
    }

    pub fn from_mlp(kind: &str, mlp: &MlpParams, meta: CheckpointMeta) -> Self {
        Self::from_layers(kind, &mlp.layers, &mlp.activations, meta)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Parse(format!("expected a `{}` checkpoint, found `{}`", kind, self.kind)));
        }
        Ok(())
    }

    /// Rebuilds the layer stack, checking every shape against `layer_dims`.
    pub fn layers(&self) -> Result<Vec<Linear>> {
        let n = self.weights.len();
        if self.layer_dims.len() != n + 1 || self.biases.len() != n || self.activations.len() != n {
            return Err(Error::Parse(format!(
                "checkpoint has {} weight matrices, {} biases, {} activations and {} layer dims",
                n,
                self.biases.len(),
                self.activations.len(),
                self.layer_dims.len()
            )));
        }
        let mut layers = Vec::with_capacity(n);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let weight = DenseMatrix::from_rows(w)?;
            let (rows, cols) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if weight.shape() != (rows, cols) || b.len() != cols {
                return Err(Error::Parse(format!(
                    "layer {} has shape {:?} and bias {}, expected {}x{}",
                    l,
                    weight.shape(),
                    b.len(),
                    rows,
                    cols
                )));
            }
            layers.push(Linear { weight, bias: b.clone() });
        }
        Ok(layers)
    }

    pub fn to_mlp(&self) -> Result<MlpParams> {
        MlpParams::new(self.layers()?, self.activations.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(parent) = path.as_ref().parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn mlp_checkpoint_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = MlpParams::init(&[5, 7, 3], vec![Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let ckpt = Checkpoint::from_mlp("mlp_surrogate", &mlp, CheckpointMeta::new(3, 10, "toy"));
        let text = ckpt.to_json();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back.to_mlp().unwrap(), mlp);
        assert_eq!(back.layer_dims, vec![5, 7, 3]);
        assert!(text.contains("\"activations\":[\"relu\",\"identity\"]"));
    }

    #[test]
    fn shape_errors_are_parse_errors() {
        let mlp = MlpParams::zeros(&[2, 2], vec![Activation::Identity]).unwrap();
        let mut ckpt = Checkpoint::from_mlp("mlp", &mlp, CheckpointMeta::new(0, 1, "x"));
        ckpt.layer_dims = vec![3, 2];
        assert!(matches!(ckpt.to_mlp(), Err(Error::Parse(_))));
        assert!(matches!(Checkpoint::from_json("{\"kind\": 1"), Err(Error::Parse(_))));
    }
}
