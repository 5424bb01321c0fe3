//! Gated recurrent cell with update and reset gates.
//!
//! ```text
//! z  = sigmoid(Wz x + Uz h + bz)
//! r  = sigmoid(Wr x + Ur h + br)
//! n  = tanh(Wn x + Un (r * h) + bn)
//! h' = (1 - z) * n + z * h
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::sigmoid;
use super::{Parameters, Tensor};
use crate::error::{Error, Result};

/// Number of tensors in a [`CellParams`], in [`Parameters::tensors`] order:
/// `w_update, w_reset, w_candidate, u_update, u_reset, u_candidate,
/// b_update, b_reset, b_candidate`.
pub const CELL_TENSORS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub w_update: Tensor,
    pub w_reset: Tensor,
    pub w_candidate: Tensor,
    pub u_update: Tensor,
    pub u_reset: Tensor,
    pub u_candidate: Tensor,
    pub b_update: Tensor,
    pub b_reset: Tensor,
    pub b_candidate: Tensor,
}

impl CellParams {
    pub fn zeros(embed_dim: usize, hidden_dim: usize) -> Self {
        let w = || Tensor::zeros(&[hidden_dim, embed_dim]);
        let u = || Tensor::zeros(&[hidden_dim, hidden_dim]);
        let b = || Tensor::zeros(&[hidden_dim]);
        Self {
            embed_dim,
            hidden_dim,
            w_update: w(),
            w_reset: w(),
            w_candidate: w(),
            u_update: u(),
            u_reset: u(),
            u_candidate: u(),
            b_update: b(),
            b_reset: b(),
            b_candidate: b(),
        }
    }

    /// Uniform init scaled by `1/sqrt(fan_in)`; biases start at zero.
    pub fn random<R: Rng + ?Sized>(embed_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let ws = 1.0 / (embed_dim as f64).sqrt();
        let us = 1.0 / (hidden_dim as f64).sqrt();
        let mut p = Self::zeros(embed_dim, hidden_dim);
        p.w_update = Tensor::uniform(&[hidden_dim, embed_dim], ws, rng);
        p.w_reset = Tensor::uniform(&[hidden_dim, embed_dim], ws, rng);
        p.w_candidate = Tensor::uniform(&[hidden_dim, embed_dim], ws, rng);
        p.u_update = Tensor::uniform(&[hidden_dim, hidden_dim], us, rng);
        p.u_reset = Tensor::uniform(&[hidden_dim, hidden_dim], us, rng);
        p.u_candidate = Tensor::uniform(&[hidden_dim, hidden_dim], us, rng);
        p
    }

    /// Checks every tensor against `(embed_dim, hidden_dim)`.
    pub fn validate(&self) -> Result<()> {
        let (e, h) = (self.embed_dim, self.hidden_dim);
        let expected: [&[usize]; CELL_TENSORS] = [
            &[h, e],
            &[h, e],
            &[h, e],
            &[h, h],
            &[h, h],
            &[h, h],
            &[h],
            &[h],
            &[h],
        ];
        for (t, shape) in self.tensors().iter().zip(expected) {
            if t.shape() != shape {
                return Err(Error::Config(format!(
                    "cell tensor shape {:?}, expected {:?}",
                    t.shape(),
                    shape
                )));
            }
        }
        Ok(())
    }
}

impl Parameters for CellParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_update,
            &self.w_reset,
            &self.w_candidate,
            &self.u_update,
            &self.u_reset,
            &self.u_candidate,
            &self.b_update,
            &self.b_reset,
            &self.b_candidate,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_update,
            &mut self.w_reset,
            &mut self.w_candidate,
            &mut self.u_update,
            &mut self.u_reset,
            &mut self.u_candidate,
            &mut self.b_update,
            &mut self.b_reset,
            &mut self.b_candidate,
        ]
    }
}

/// Intermediates of one [`cell_step`], enough for exact gradients.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub input: Vec<f64>,
    pub state: Vec<f64>,
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub candidate: Vec<f64>,
    pub reset_state: Vec<f64>,
}

pub fn cell_step(
    params: &CellParams,
    input: &[f64],
    state: &[f64],
) -> Result<(Vec<f64>, CellCache)> {
    if input.len() != params.embed_dim || state.len() != params.hidden_dim {
        return Err(Error::Config(format!(
            "cell expects input {} / state {}, got {} / {}",
            params.embed_dim,
            params.hidden_dim,
            input.len(),
            state.len()
        )));
    }
    Ok(cell_step_unchecked(params, input, state))
}

pub(crate) fn cell_step_unchecked(
    params: &CellParams,
    input: &[f64],
    state: &[f64],
) -> (Vec<f64>, CellCache) {
    let gate = |w: &Tensor, u: &Tensor, b: &Tensor, recurrent: &[f64]| {
        let mut a = b.data().to_vec();
        w.matvec_add(input, &mut a);
        u.matvec_add(recurrent, &mut a);
        a
    };
    let mut update = gate(&params.w_update, &params.u_update, &params.b_update, state);
    update.iter_mut().for_each(|v| *v = sigmoid(*v));
    let mut reset = gate(&params.w_reset, &params.u_reset, &params.b_reset, state);
    reset.iter_mut().for_each(|v| *v = sigmoid(*v));
    let reset_state: Vec<f64> = reset.iter().zip(state).map(|(r, h)| r * h).collect();
    let mut candidate = gate(
        &params.w_candidate,
        &params.u_candidate,
        &params.b_candidate,
        &reset_state,
    );
    candidate.iter_mut().for_each(|v| *v = v.tanh());

    let next: Vec<f64> = (0..state.len())
        .map(|i| (1.0 - update[i]) * candidate[i] + update[i] * state[i])
        .collect();
    let cache = CellCache {
        input: input.to_vec(),
        state: state.to_vec(),
        update,
        reset,
        candidate,
        reset_state,
    };
    (next, cache)
}

/// Backpropagates `grad_next` (dL/dh') through one step.
///
/// Parameter gradients are accumulated into `grads`, which must hold the
/// cell's [`CELL_TENSORS`] tensors in order. Returns `(dL/dx, dL/dh)`.
pub fn cell_backward(
    params: &CellParams,
    cache: &CellCache,
    grad_next: &[f64],
    grads: &mut [Tensor],
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(grads.len(), CELL_TENSORS);
    let hdim = params.hidden_dim;
    let mut grad_input = vec![0.0; params.embed_dim];
    let mut grad_state = vec![0.0; hdim];

    let mut da_update = vec![0.0; hdim];
    let mut da_candidate = vec![0.0; hdim];
    for i in 0..hdim {
        let z = cache.update[i];
        let n = cache.candidate[i];
        let g = grad_next[i];
        grad_state[i] += g * z;
        da_update[i] = g * (cache.state[i] - n) * z * (1.0 - z);
        da_candidate[i] = g * (1.0 - z) * (1.0 - n * n);
    }

    let (w, rest) = grads.split_at_mut(3);
    let (u, b) = rest.split_at_mut(3);

    // candidate path
    w[2].add_outer(&da_candidate, &cache.input);
    u[2].add_outer(&da_candidate, &cache.reset_state);
    b[2].add_slice(&da_candidate);
    params
        .w_candidate
        .matvec_t_add(&da_candidate, &mut grad_input);
    let mut grad_reset_state = vec![0.0; hdim];
    params
        .u_candidate
        .matvec_t_add(&da_candidate, &mut grad_reset_state);

    let mut da_reset = vec![0.0; hdim];
    for i in 0..hdim {
        let r = cache.reset[i];
        grad_state[i] += grad_reset_state[i] * r;
        da_reset[i] = grad_reset_state[i] * cache.state[i] * r * (1.0 - r);
    }

    for (k, da, wp, up) in [
        (0, &da_update, &params.w_update, &params.u_update),
        (1, &da_reset, &params.w_reset, &params.u_reset),
    ] {
        w[k].add_outer(da, &cache.input);
        u[k].add_outer(da, &cache.state);
        b[k].add_slice(da);
        wp.matvec_t_add(da, &mut grad_input);
        up.matvec_t_add(da, &mut grad_state);
    }
    (grad_input, grad_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GradientSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_keep_zero_state() {
        let p = CellParams::zeros(3, 4);
        let (next, _) = cell_step(&p, &[0.7, -1.0, 2.0], &[0.0; 4]).unwrap();
        assert_eq!(next, vec![0.0; 4]);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let p = CellParams::zeros(3, 4);
        assert!(matches!(
            cell_step(&p, &[0.0; 2], &[0.0; 4]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            cell_step(&p, &[0.0; 3], &[0.0; 5]),
            Err(Error::Config(_))
        ));
    }

    /// Element-wise restatement of the gate equations with no shared helpers.
    #[allow(clippy::needless_range_loop)]
    fn oracle_step(p: &CellParams, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (e, hd) = (p.embed_dim, p.hidden_dim);
        let at = |t: &Tensor, i: usize, j: usize, c: usize| t.data()[i * c + j];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut z = vec![0.0; hd];
        let mut r = vec![0.0; hd];
        for i in 0..hd {
            let mut az = p.b_update.data()[i];
            let mut ar = p.b_reset.data()[i];
            for j in 0..e {
                az += at(&p.w_update, i, j, e) * x[j];
                ar += at(&p.w_reset, i, j, e) * x[j];
            }
            for j in 0..hd {
                az += at(&p.u_update, i, j, hd) * h[j];
                ar += at(&p.u_reset, i, j, hd) * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        (0..hd)
            .map(|i| {
                let mut an = p.b_candidate.data()[i];
                for j in 0..e {
                    an += at(&p.w_candidate, i, j, e) * x[j];
                }
                for j in 0..hd {
                    an += at(&p.u_candidate, i, j, hd) * r[j] * h[j];
                }
                (1.0 - z[i]) * an.tanh() + z[i] * h[i]
            })
            .collect()
    }

    #[test]
    fn step_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut p = CellParams::random(5, 6, &mut rng);
            for b in [&mut p.b_update, &mut p.b_reset, &mut p.b_candidate] {
                *b = Tensor::uniform(&[6], 0.5, &mut rng);
            }
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (next, _) = cell_step(&p, &x, &h).unwrap();
            for (a, b) in next.iter().zip(oracle_step(&p, &x, &h)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    /// Scalar objective `c . h'` lets us finite-difference every input.
    #[test]
    fn backward_matches_central_differences() {
        let eps = 1e-5;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (e, hd) = (4, 8);
            let mut p = CellParams::random(e, hd, &mut rng);
            for b in [&mut p.b_update, &mut p.b_reset, &mut p.b_candidate] {
                *b = Tensor::uniform(&[hd], 0.5, &mut rng);
            }
            let x: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..hd).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..hd).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let objective = |p: &CellParams, x: &[f64], h: &[f64]| -> f64 {
                let (n, _) = cell_step(p, x, h).unwrap();
                n.iter().zip(&c).map(|(a, b)| a * b).sum()
            };

            let (_, cache) = cell_step(&p, &x, &h).unwrap();
            let mut grads = GradientSet::zeros_like(&p);
            let (gx, gh) = cell_backward(&p, &cache, &c, &mut grads.tensors);

            for ti in 0..CELL_TENSORS {
                for k in 0..grads.tensors[ti].len() {
                    let mut plus = p.clone();
                    plus.tensors_mut()[ti].data_mut()[k] += eps;
                    let mut minus = p.clone();
                    minus.tensors_mut()[ti].data_mut()[k] -= eps;
                    let fd = (objective(&plus, &x, &h) - objective(&minus, &x, &h)) / (2.0 * eps);
                    let an = grads.tensors[ti].data()[k];
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                    assert!(
                        rel <= 1e-4,
                        "seed {seed} tensor {ti}[{k}]: fd {fd} analytic {an}"
                    );
                }
            }
            for (k, an) in gx.iter().enumerate() {
                let mut xp = x.clone();
                xp[k] += eps;
                let mut xm = x.clone();
                xm[k] -= eps;
                let fd = (objective(&p, &xp, &h) - objective(&p, &xm, &h)) / (2.0 * eps);
                assert!((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6) <= 1e-4);
            }
            for (k, an) in gh.iter().enumerate() {
                let mut hp = h.clone();
                hp[k] += eps;
                let mut hm = h.clone();
                hm[k] -= eps;
                let fd = (objective(&p, &x, &hp) - objective(&p, &x, &hm)) / (2.0 * eps);
                assert!((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6) <= 1e-4);
            }
        }
    }
}
