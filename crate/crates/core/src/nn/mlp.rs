use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Fully connected network: affine + ReLU on every hidden layer, affine
/// output with no final nonlinearity.
///
/// Parameters live in one flat buffer so optimizers and checkpoints can
/// treat them uniformly. Layer `l` stores its `in x out` weight matrix
/// row-major (input index major) followed by its `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_cached`]: the input, every
/// post-ReLU hidden layer, and the output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty cache")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All-zero network with layer widths `sizes` (input first, output last).
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "layer widths must be positive");
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// He-scaled normal weights, zero biases.
    pub fn he_init(sizes: &[usize], rng: &mut crate::Rng) -> Self {
        let mut net = Self::zeros(sizes);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = libm::sqrt(2.0 / fan_in as f64);
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                let z: f64 = StandardNormal.sample(rng);
                *p = std * z;
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn from_flat(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::ShapeMismatch {
                expected: 2,
                got: sizes.len(),
            });
        }
        let expected = param_count(sizes);
        if params.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }
    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }
    pub fn num_params(&self) -> usize {
        self.params.len()
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input_dim() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: x.len(),
            })
        }
    }

    /// `out = b + a W` for layer starting at `offset`. Zero inputs are
    /// skipped, which makes one-hot and post-ReLU inputs cheap.
    fn affine(&self, offset: usize, fan_in: usize, fan_out: usize, a: &[f64], out: &mut [f64]) {
        let weights = &self.params[offset..offset + fan_in * fan_out];
        out.copy_from_slice(&self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out]);
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &weights[i * fan_out..(i + 1) * fan_out];
            for (o, &wij) in out.iter_mut().zip(row) {
                *o += ai * wij;
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut current = x.to_vec();
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let mut next = vec![0.0; w[1]];
            self.affine(offset, w[0], w[1], &current, &mut next);
            if l + 1 < layers {
                relu(&mut next);
            }
            offset += w[0] * w[1] + w[1];
            current = next;
        }
        Ok(current)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(x.to_vec());
        let mut offset = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let mut next = vec![0.0; w[1]];
            self.affine(offset, w[0], w[1], &activations[l], &mut next);
            if l + 1 < layers {
                relu(&mut next);
            }
            offset += w[0] * w[1] + w[1];
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse pass: accumulate `d loss / d params` into `grad` given
    /// `upstream = d loss / d output`. Returns `d loss / d input` when
    /// `want_input` is set.
    ///
    /// The ReLU subgradient at exactly zero is taken as 0.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grad: &mut [f64],
        want_input: bool,
    ) -> Result<Option<Vec<f64>>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let mut offsets = Vec::with_capacity(self.sizes.len() - 1);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }

        let mut delta = upstream.to_vec();
        let mut input_grad = None;
        for l in (0..self.sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a = &cache.activations[l];
            {
                let (gw, gb) = grad[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (g, &d) in gb.iter_mut().zip(&delta) {
                    *g += d;
                }
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0.0 {
                        continue;
                    }
                    for (g, &d) in gw[i * fan_out..(i + 1) * fan_out].iter_mut().zip(&delta) {
                        *g += ai * d;
                    }
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let weights = &self.params[off..off + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for (i, p) in prev.iter_mut().enumerate() {
                // Hidden activations are post-ReLU, so a[i] > 0 iff the
                // pre-activation was positive.
                if l > 0 && a[i] <= 0.0 {
                    continue;
                }
                let row = &weights[i * fan_out..(i + 1) * fan_out];
                *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
            }
            if l == 0 {
                input_grad = Some(prev);
            } else {
                delta = prev;
            }
        }
        Ok(input_grad)
    }

    /// Parameter gradients of `upstream . forward(x)`.
    pub fn backprop(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let cache = self.forward_cached(x)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward_into(&cache, upstream, &mut grad, false)?;
        Ok(grad)
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let mut params = vec![0.0; 3 * 3 + 3];
        for i in 0..3 {
            params[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_flat(&[3, 3], params).unwrap();
        let x = [0.5, -1.5, 2.0];
        assert_eq!(net.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let net = Mlp::zeros(&[3, 2]);
        assert!(matches!(net.forward(&[1.0]), Err(Error::ShapeMismatch { expected: 3, got: 1 })));
        assert!(net.backprop(&[1.0, 2.0, 3.0], &[1.0]).is_err());
        assert!(Mlp::from_flat(&[3, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = crate::rng_stream(3, 0);
        let net = Mlp::he_init(&[4, 5, 3], &mut rng);
        let g = net.backprop(&[0.3, -0.2, 0.9, 1.0], &[0.0; 3]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        // Hidden pre-activation -1: gradient through it is zero.
        let params = vec![-1.0, 0.0, 2.0, 0.0];
        let net = Mlp::from_flat(&[1, 1, 1], params).unwrap();
        let g = net.backprop(&[1.0], &[1.0]).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[3], 1.0);
    }

    #[test]
    fn he_init_biases_zero() {
        let mut rng = crate::rng_stream(1, 0);
        let net = Mlp::he_init(&[2, 3], &mut rng);
        assert!(net.params()[6..].iter().all(|&b| b == 0.0));
        assert!(net.params()[..6].iter().any(|&w| w != 0.0));
    }
}
