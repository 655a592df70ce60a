//! Shapley feature attributions on the distilled surrogate.
//!
//! Missing features take their background value. The explained quantity is
//! a scalar function of the feature vector, normally the surrogate's softmax
//! probability for one class.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distill::SurrogateBundle;
use crate::graph::{DatasetBundle, Task};
use crate::nn::{softmax, MlpParams};
use crate::{Error, Result};

/// Largest feature count the exact enumeration accepts.
pub const MAX_EXACT_FEATURES: usize = 16;
pub const DEFAULT_N_SAMPLES: usize = 2048;
pub const DEFAULT_SEED: u64 = 0;

pub trait ScalarFunction: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarFunction for F {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Softmax probability of one class under an MLP.
#[derive(Debug, Clone, Copy)]
pub struct ClassProbability<'a> {
    model: &'a MlpParams,
    class: usize,
}

impl<'a> ClassProbability<'a> {
    pub fn new(model: &'a MlpParams, class: usize) -> Result<Self> {
        if class >= model.output_dim() {
            return Err(Error::OutOfRange { index: class, bound: model.output_dim() });
        }
        Ok(Self { model, class })
    }
}

impl ScalarFunction for ClassProbability<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self.model.forward(x) {
            Ok(logits) => softmax(&logits)[self.class],
            Err(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionMethod {
    Kernel,
    Exact,
}

/// Raw Shapley output: `base_value + Σ phi = output`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyValues {
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub output: f64,
}

impl ShapleyValues {
    /// `base_value + Σ phi - output`.
    pub fn efficiency_gap(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>() - self.output
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAttribution {
    pub node_id: Option<usize>,
    pub explained_class: usize,
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub method: AttributionMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub mean_abs_phi: Vec<f64>,
    pub ranking: Vec<usize>,
    #[serde(skip)]
    pub sample_ids: Vec<usize>,
}

fn check_inputs(x: &[f64], background: &[f64]) -> Result<()> {
    if x.len() != background.len() {
        return Err(Error::DimensionMismatch(format!(
            "instance has {} features, background has {}",
            x.len(),
            background.len()
        )));
    }
    if x.iter().chain(background).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite feature value".into()));
    }
    Ok(())
}

fn blend(x: &[f64], background: &[f64], present: impl Fn(usize) -> bool) -> Vec<f64> {
    (0..x.len()).map(|i| if present(i) { x[i] } else { background[i] }).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a single coalition of size `s` among `d` features.
pub fn shapley_kernel_weight(d: usize, s: usize) -> f64 {
    assert!(0 < s && s < d, "kernel weight is infinite for empty and full coalitions");
    (d - 1) as f64 / (binomial(d, s) * s as f64 * (d - s) as f64)
}

/// Brute-force Shapley values over all `2^d` coalitions.
pub fn exact_shapley_values<F: ScalarFunction>(f: &F, x: &[f64], background: &[f64]) -> Result<ShapleyValues> {
    check_inputs(x, background)?;
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures(d));
    }
    let values: Vec<f64> = (0..1usize << d)
        .into_par_iter()
        .map(|mask| f.evaluate(&blend(x, background, |i| mask >> i & 1 == 1)))
        .collect();
    // |S|!(d-|S|-1)!/d! = 1 / (d * C(d-1, |S|))
    let weights: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binomial(d - 1, s))).collect();
    let phi = (0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << d)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask]))
                .sum()
        })
        .collect();
    Ok(ShapleyValues { base_value: values[0], phi, output: values[(1usize << d) - 1] })
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else { return out };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn coalition(d: usize, members: &[usize]) -> Vec<bool> {
    let mut z = vec![false; d];
    members.iter().for_each(|&i| z[i] = true);
    z
}

fn complement(z: &[bool]) -> Vec<bool> {
    z.iter().map(|b| !b).collect()
}

/// Weighted coalitions for the regression. Sizes are visited from the
/// outside in; a size pair whose share of the kernel mass covers all its
/// coalitions is enumerated, the rest is sampled in complementary pairs.
fn weighted_coalitions(d: usize, n_samples: usize, seed: u64) -> BTreeMap<Vec<bool>, f64> {
    let mut out = BTreeMap::new();
    let full_count = if d < 63 { (1u64 << d) - 2 } else { u64::MAX };
    if (n_samples as u64) >= full_count {
        for s in 1..d {
            for members in combinations(d, s) {
                out.insert(coalition(d, &members), shapley_kernel_weight(d, s));
            }
        }
        return out;
    }

    let num_sizes = d / 2;
    let paired = |s: usize| s != d - s;
    let mass = |s: usize| (d - 1) as f64 / (s * (d - s)) as f64 * if paired(s) { 2.0 } else { 1.0 };
    let mut remaining_mass: f64 = (1..=num_sizes).map(mass).sum();
    let mut budget = n_samples as f64;
    let mut first_sampled = num_sizes + 1;
    for s in 1..=num_sizes {
        let count = binomial(d, s) * if paired(s) { 2.0 } else { 1.0 };
        if budget * mass(s) / remaining_mass + 1e-9 < count {
            first_sampled = s;
            break;
        }
        let w = shapley_kernel_weight(d, s);
        for members in combinations(d, s) {
            let z = coalition(d, &members);
            if paired(s) {
                out.insert(complement(&z), w);
            }
            out.insert(z, w);
        }
        budget -= count;
        remaining_mass -= mass(s);
    }
    if first_sampled > num_sizes {
        return out;
    }

    let sizes: Vec<usize> = (first_sampled..=num_sizes).collect();
    let masses: Vec<f64> = sizes.iter().map(|&s| mass(s)).collect();
    let total: f64 = masses.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut drawn = 0usize;
    while drawn == 0 || (drawn as f64) < budget {
        let mut u = rng.random::<f64>() * total;
        let mut pick = sizes.len() - 1;
        for (k, m) in masses.iter().enumerate() {
            if u < *m {
                pick = k;
                break;
            }
            u -= m;
        }
        let s = sizes[pick];
        let z = coalition(d, &sample(&mut rng, d, s).into_vec());
        if paired(s) {
            *draws.entry(complement(&z)).or_default() += 1;
            drawn += 1;
        }
        *draws.entry(z).or_default() += 1;
        drawn += 1;
    }
    let per_draw = remaining_mass / drawn as f64;
    for (z, hits) in draws {
        *out.entry(z).or_default() += hits as f64 * per_draw;
    }
    out
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    if let Some(chol) = a.clone().cholesky() {
        return chol.solve(&b);
    }
    a.svd(true, true).solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(b.len()))
}

/// Kernel SHAP with the empty and full coalitions as hard constraints.
///
/// When `n_samples` covers every proper non-empty coalition the regression is
/// run on all of them and reproduces the exact Shapley values.
pub fn kernel_shap_values<F: ScalarFunction>(
    f: &F,
    x: &[f64],
    background: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<ShapleyValues> {
    check_inputs(x, background)?;
    let d = x.len();
    if n_samples < 2 * d {
        return Err(Error::TooFewSamples { n_samples, required: 2 * d });
    }
    let base_value = f.evaluate(background);
    let output = f.evaluate(x);
    let delta = output - base_value;
    if d <= 1 {
        return Ok(ShapleyValues { base_value, phi: vec![delta; d], output });
    }

    let coalitions: Vec<(Vec<bool>, f64)> = weighted_coalitions(d, n_samples, seed).into_iter().collect();
    let values: Vec<f64> = coalitions.par_iter().map(|(z, _)| f.evaluate(&blend(x, background, |i| z[i]))).collect();

    // phi_last = delta - Σ others, substituted into the regression
    let m = d - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for ((z, w), v) in coalitions.iter().zip(&values) {
        let last = if z[m] { 1.0 } else { 0.0 };
        for (r, &zi) in row.iter_mut().zip(z) {
            *r = if zi { 1.0 } else { 0.0 } - last;
        }
        let y = v - base_value - last * delta;
        for i in 0..m {
            if row[i] == 0.0 {
                continue;
            }
            b[i] += w * row[i] * y;
            for j in 0..m {
                a[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    let solution = solve_spd(a, b);
    let mut phi: Vec<f64> = solution.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(ShapleyValues { base_value, phi, output })
}

fn attribution(values: ShapleyValues, class: usize, method: AttributionMethod) -> FeatureAttribution {
    FeatureAttribution { node_id: None, explained_class: class, base_value: values.base_value, phi: values.phi, method }
}

fn check_surrogate_input(surrogate: &MlpParams, x: &[f64]) -> Result<()> {
    if x.len() != surrogate.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "surrogate expects {} features, got {}",
            surrogate.input_dim(),
            x.len()
        )));
    }
    Ok(())
}

pub fn exact_shapley(
    surrogate: &MlpParams,
    x: &[f64],
    background: &[f64],
    explained_class: usize,
) -> Result<FeatureAttribution> {
    check_surrogate_input(surrogate, x)?;
    let f = ClassProbability::new(surrogate, explained_class)?;
    Ok(attribution(exact_shapley_values(&f, x, background)?, explained_class, AttributionMethod::Exact))
}

pub fn kernel_shap(
    surrogate: &MlpParams,
    x: &[f64],
    background: &[f64],
    explained_class: usize,
    n_samples: usize,
    seed: u64,
) -> Result<FeatureAttribution> {
    check_surrogate_input(surrogate, x)?;
    let f = ClassProbability::new(surrogate, explained_class)?;
    Ok(attribution(kernel_shap_values(&f, x, background, n_samples, seed)?, explained_class, AttributionMethod::Kernel))
}

/// Seed used for one node, independent of where the node sits in a batch.
pub fn per_sample_seed(seed: u64, node_id: usize) -> u64 {
    seed ^ (node_id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn node_features(dataset: &DatasetBundle, node_id: usize) -> Result<&[f64]> {
    if dataset.task != Task::NodeClassification {
        return Err(Error::IncompatibleModel("feature attributions are computed for node-level datasets".into()));
    }
    let g = &dataset.graphs[0];
    if node_id >= g.node_count {
        return Err(Error::TargetOutOfRange { target: node_id, node_count: g.node_count });
    }
    Ok(g.node_features.row(node_id))
}

/// Kernel SHAP for one node of a node-level dataset, explaining the surrogate's
/// predicted class against the training-set feature mean.
pub fn explain_node_features(
    bundle: &SurrogateBundle,
    dataset: &DatasetBundle,
    node_id: usize,
    n_samples: usize,
    seed: u64,
) -> Result<FeatureAttribution> {
    if bundle.dataset_id != dataset.id {
        return Err(Error::DatasetMismatch(format!(
            "surrogate was distilled on `{}`, not `{}`",
            bundle.dataset_id, dataset.id
        )));
    }
    let x = node_features(dataset, node_id)?;
    let class = bundle.predicted_class(x)?;
    let mut out = kernel_shap(&bundle.student, x, &dataset.train_feature_mean(), class, n_samples, seed)?;
    out.node_id = Some(node_id);
    Ok(out)
}

/// Ranks features by descending score; equal scores keep index order.
pub fn rank_features(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Mean |φ| per feature over `sample_ids`, each explained with its own seed.
pub fn summarize_attributions(
    bundle: &SurrogateBundle,
    dataset: &DatasetBundle,
    sample_ids: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<AttributionSummary> {
    if sample_ids.is_empty() {
        return Err(Error::EmptySample);
    }
    let per_sample: Vec<FeatureAttribution> = sample_ids
        .par_iter()
        .map(|&id| explain_node_features(bundle, dataset, id, n_samples, per_sample_seed(seed, id)))
        .collect::<Result<_>>()?;
    let mut mean_abs_phi = vec![0.0; dataset.feature_dim()];
    for a in &per_sample {
        for (m, p) in mean_abs_phi.iter_mut().zip(&a.phi) {
            *m += p.abs();
        }
    }
    let n = per_sample.len() as f64;
    mean_abs_phi.iter_mut().for_each(|m| *m /= n);
    Ok(AttributionSummary { ranking: rank_features(&mean_abs_phi), mean_abs_phi, sample_ids: sample_ids.to_vec() })
}
