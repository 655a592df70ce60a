use crate::{Error, Result};

/// Floor applied to student probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn softmax_with_temperature(z: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = z.iter().map(|v| v / temperature).collect();
    softmax(&scaled)
}

pub fn argmax(v: &[f64]) -> usize {
    // first maximum wins so ties resolve to the lowest index
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `-ln p[label]`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs
        .get(label)
        .ok_or_else(|| Error::DimensionMismatch(format!("label {} for {} classes", label, probs.len())))?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// `KL(p_teacher ‖ p_student)`; zero-probability teacher entries contribute nothing.
pub fn kl_divergence(p_teacher: &[f64], p_student: &[f64]) -> Result<f64> {
    if p_teacher.len() != p_student.len() {
        return Err(Error::DimensionMismatch(format!(
            "teacher has {} classes, student {}",
            p_teacher.len(),
            p_student.len()
        )));
    }
    Ok(p_teacher.iter().zip(p_student).filter(|(&t, _)| t > 0.0).map(|(&t, &s)| t * (t / s.max(PROB_FLOOR)).ln()).sum())
}

/// Gradient of `cross_entropy(softmax(logits), label)` w.r.t. the logits.
pub fn cross_entropy_logit_grad(probs: &[f64], label: usize) -> Vec<f64> {
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    g
}

/// Gradient of `KL(p_teacher ‖ softmax(logits / T))` w.r.t. the student logits.
pub fn kl_logit_grad(p_teacher: &[f64], p_student: &[f64], temperature: f64) -> Vec<f64> {
    p_student.iter().zip(p_teacher).map(|(s, t)| (s - t) / temperature).collect()
}
