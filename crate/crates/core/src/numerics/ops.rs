use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

/// `log softmax(logits)`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&z| z - lse).collect()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Cross-entropy of `target` under `softmax(logits)` and its gradient with
/// respect to the logits.
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::Input(format!(
            "target {target} out of range for vocabulary of {}",
            logits.len()
        )));
    }
    let log_probs = log_softmax(logits);
    let loss = -log_probs[target];
    let mut grad: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    grad[target] -= 1.0;
    Ok((loss, grad))
}

const SIMPLEX_TOL: f64 = 1e-9;

/// `KL(p || q)` in nats for two categorical distributions.
pub fn kl_categorical(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Input(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, dist) in [("p", p), ("q", q)] {
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL || dist.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Input(format!(
                "{name} is not a distribution (sum {total})"
            )));
        }
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::NumericalDomain(
                "q has zero mass where p is positive".into(),
            ));
        }
        kl += pi * (pi / qi).ln();
    }
    // Rounding can push a near-zero divergence slightly negative.
    Ok(kl.max(0.0))
}
