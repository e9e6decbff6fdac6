//! Supervised training of the deep-kernel embedding.
//!
//! The embedding network is fit together with a throwaway linear head that
//! regresses the standardized targets by mean-squared error; only the
//! embedding is kept.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::nn::{Adam, Mlp};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            output_dim: 16,
            epochs: 200,
            minibatch: 16,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingFit {
    pub net: Mlp,
    /// Targets had no variance; the network was left at initialization.
    pub degenerate: bool,
    /// Full-dataset MSE after every epoch.
    pub epoch_mse: Vec<f64>,
}

/// Mean-squared regression loss of `head(embed(x))` on `(inputs, targets)`
/// and its gradients with respect to both networks' parameters.
pub fn regression_loss_and_grad(
    embed: &Mlp,
    head: &Mlp,
    inputs: &[&[f64]],
    targets: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut g_embed = vec![0.0; embed.num_params()];
    let mut g_head = vec![0.0; head.num_params()];
    let n = inputs.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        let ce = embed.forward_cached(x)?;
        let ch = head.forward_cached(ce.output())?;
        let err = ch.output()[0] - y;
        loss += err * err / n;
        let dz = head
            .backward_into(&ch, &[2.0 * err / n], &mut g_head, true)?
            .expect("input gradient requested");
        embed.backward_into(&ce, &dz, &mut g_embed, false)?;
    }
    Ok((loss, g_embed, g_head))
}

fn mse(embed: &Mlp, head: &Mlp, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        let p = head.forward(&embed.forward(x)?)?[0];
        s += (p - y) * (p - y);
    }
    Ok(s / inputs.len() as f64)
}

/// Train the embedding network on standardized targets.
pub fn fit_embedding(
    inputs: &[Vec<f64>],
    targets: &[f64],
    cfg: &EmbeddingConfig,
    rng: &mut crate::Rng,
) -> Result<EmbeddingFit> {
    let input_dim = inputs.first().map(Vec::len).unwrap_or(0);
    let mut sizes = vec![input_dim];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(cfg.output_dim);
    let mut embed = Mlp::he_init(&sizes, rng);
    let mut head = Mlp::he_init(&[cfg.output_dim, 1], rng);

    let mean = targets.iter().sum::<f64>() / targets.len().max(1) as f64;
    let var = targets.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / targets.len().max(1) as f64;
    if inputs.len() < 2 || !(var > 1e-12) {
        return Ok(EmbeddingFit {
            net: embed,
            degenerate: true,
            epoch_mse: Vec::new(),
        });
    }

    let mut opt_embed = Adam::new(embed.num_params(), cfg.lr);
    let mut opt_head = Adam::new(head.num_params(), cfg.lr);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);
    let mut xs: Vec<&[f64]> = Vec::with_capacity(cfg.minibatch);
    let mut ys: Vec<f64> = Vec::with_capacity(cfg.minibatch);
    for _ in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.minibatch.max(1)) {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.push(&inputs[i]);
                ys.push(targets[i]);
            }
            let (_, g_embed, g_head) = regression_loss_and_grad(&embed, &head, &xs, &ys)?;
            opt_embed.step(embed.params_mut(), &g_embed)?;
            opt_head.step(head.params_mut(), &g_head)?;
        }
        epoch_mse.push(mse(&embed, &head, inputs, targets)?);
    }
    Ok(EmbeddingFit {
        net: embed,
        degenerate: false,
        epoch_mse,
    })
}
