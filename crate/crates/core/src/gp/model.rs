use alloc::vec;
use alloc::vec::Vec;

use super::embed::{fit_embedding, EmbeddingConfig};
use super::kernel::{euclidean, matern_of_distance, GpHyperparams};
use super::linalg::{cholesky_with_jitter, solve_lower};
use crate::nn::Mlp;
use crate::{Error, Result};

/// Fitting configuration: embedding training plus the hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub embedding: EmbeddingConfig,
    /// Length scales, as multiples of the median pairwise embedding distance.
    pub length_scale_factors: Vec<f64>,
    pub signal_variances: Vec<f64>,
    pub noise_variances: Vec<f64>,
    pub nu: f64,
    pub jitter: f64,
    pub max_jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            embedding: EmbeddingConfig::default(),
            length_scale_factors: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            signal_variances: vec![0.5, 1.0, 2.0],
            noise_variances: vec![1e-4, 1e-2, 1e-1],
            nu: 2.5,
            jitter: 1e-8,
            max_jitter: 1e-4,
        }
    }
}

/// Gaussian posterior at one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// One evaluated point of the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub hyper: GpHyperparams,
    /// `None` when the kernel matrix could not be factorized.
    pub log_marginal_likelihood: Option<f64>,
}

/// Exact GP posterior on learned embeddings, with zero prior mean on
/// standardized targets.
#[derive(Debug, Clone)]
pub struct GpModel {
    embedding: Mlp,
    hyper: GpHyperparams,
    inputs: Vec<Vec<f64>>,
    embeddings: Vec<Vec<f64>>,
    targets: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter_used: f64,
    log_marginal_likelihood: f64,
    grid: Vec<GridPoint>,
    embedding_degenerate: bool,
}

fn standardize(values: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var > 1e-24 { libm::sqrt(var) } else { 1.0 };
    (values.iter().map(|v| (v - mean) / std).collect(), mean, std)
}

fn gram(embeddings: &[Vec<f64>], hyper: &GpHyperparams) -> Vec<f64> {
    let n = embeddings.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = hyper.signal_variance;
        for j in 0..i {
            let v = matern_of_distance(euclidean(&embeddings[i], &embeddings[j]), hyper);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Kernel matrix `K(Z, Z)` of a set of embeddings, without noise.
pub fn gram_matrix(embeddings: &[Vec<f64>], hyper: &GpHyperparams) -> Vec<f64> {
    gram(embeddings, hyper)
}

struct Factorization {
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

fn factorize(
    embeddings: &[Vec<f64>],
    targets: &[f64],
    hyper: &GpHyperparams,
    max_jitter: f64,
) -> Result<Factorization> {
    let n = embeddings.len();
    let mut k = gram(embeddings, hyper);
    for i in 0..n {
        k[i * n + i] += hyper.noise_variance;
    }
    let (chol, jitter) = cholesky_with_jitter(&k, n, hyper.jitter, max_jitter.max(hyper.jitter))?;
    let half = solve_lower(&chol, n, targets);
    let alpha = super::linalg::solve_lower_transpose(&chol, n, &half);
    let data_fit: f64 = half.iter().map(|v| v * v).sum();
    let log_det: f64 = (0..n).map(|i| libm::log(chol[i * n + i])).sum();
    let lml = -0.5 * data_fit
        - log_det
        - 0.5 * n as f64 * libm::log(2.0 * core::f64::consts::PI);
    Ok(Factorization {
        chol,
        alpha,
        jitter,
        lml,
    })
}

fn median_pairwise_distance(embeddings: &[Vec<f64>]) -> f64 {
    let n = embeddings.len();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            d.push(euclidean(&embeddings[i], &embeddings[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let m = if d.is_empty() {
        0.0
    } else if d.len() % 2 == 1 {
        d[d.len() / 2]
    } else {
        0.5 * (d[d.len() / 2 - 1] + d[d.len() / 2])
    };
    if m > 1e-12 {
        m
    } else {
        1.0
    }
}

impl GpModel {
    /// Fit on `(encoding, log-utility)` pairs: standardize targets, train
    /// the embedding, pick hyperparameters on the grid by exact log
    /// marginal likelihood, factorize once.
    pub fn fit(
        inputs: &[Vec<f64>],
        log_utilities: &[f64],
        cfg: &GpConfig,
        rng: &mut crate::Rng,
    ) -> Result<Self> {
        check_data(inputs, log_utilities)?;
        let (targets, target_mean, target_std) = standardize(log_utilities);
        let fit = fit_embedding(inputs, &targets, &cfg.embedding, rng)?;
        let embeddings = embed_all(&fit.net, inputs)?;
        let scale = median_pairwise_distance(&embeddings);

        let mut grid = Vec::new();
        let mut best: Option<(GpHyperparams, Factorization)> = None;
        for &factor in &cfg.length_scale_factors {
            for &signal in &cfg.signal_variances {
                for &noise in &cfg.noise_variances {
                    let hyper = GpHyperparams {
                        nu: cfg.nu,
                        length_scale: factor * scale,
                        signal_variance: signal,
                        noise_variance: noise,
                        jitter: cfg.jitter,
                    };
                    hyper.validate()?;
                    let f = factorize(&embeddings, &targets, &hyper, cfg.max_jitter).ok();
                    grid.push(GridPoint {
                        hyper,
                        log_marginal_likelihood: f.as_ref().map(|f| f.lml),
                    });
                    if let Some(f) = f {
                        if best.as_ref().map_or(true, |(_, b)| f.lml > b.lml) {
                            best = Some((hyper, f));
                        }
                    }
                }
            }
        }
        let (hyper, f) = best.ok_or(Error::NotPositiveDefinite(cfg.max_jitter))?;
        Ok(Self {
            embedding: fit.net,
            hyper,
            inputs: inputs.to_vec(),
            embeddings,
            targets,
            target_mean,
            target_std,
            chol: f.chol,
            alpha: f.alpha,
            jitter_used: f.jitter,
            log_marginal_likelihood: f.lml,
            grid,
            embedding_degenerate: fit.degenerate,
        })
    }

    /// Fit with a given embedding and fixed hyperparameters.
    pub fn fit_fixed(
        embedding: Mlp,
        inputs: &[Vec<f64>],
        log_utilities: &[f64],
        hyper: GpHyperparams,
        max_jitter: f64,
    ) -> Result<Self> {
        check_data(inputs, log_utilities)?;
        hyper.validate()?;
        let (targets, target_mean, target_std) = standardize(log_utilities);
        let embeddings = embed_all(&embedding, inputs)?;
        let f = factorize(&embeddings, &targets, &hyper, max_jitter)?;
        Ok(Self {
            embedding,
            hyper,
            inputs: inputs.to_vec(),
            embeddings,
            targets,
            target_mean,
            target_std,
            chol: f.chol,
            alpha: f.alpha,
            jitter_used: f.jitter,
            log_marginal_likelihood: f.lml,
            grid: vec![GridPoint {
                hyper,
                log_marginal_likelihood: Some(f.lml),
            }],
            embedding_degenerate: false,
        })
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }
    pub fn embedding(&self) -> &Mlp {
        &self.embedding
    }
    pub fn len(&self) -> usize {
        self.inputs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }
    pub fn embeddings(&self) -> &[Vec<f64>] {
        &self.embeddings
    }
    /// Standardized training targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }
    pub fn target_std(&self) -> f64 {
        self.target_std
    }
    /// Lower Cholesky factor of `K + (noise + jitter) I`, row-major.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }
    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }
    pub fn embedding_degenerate(&self) -> bool {
        self.embedding_degenerate
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        self.embedding
            .forward(x)
            .expect("input has the training encoding length")
    }

    /// Posterior in standardized units for an already embedded input.
    pub fn predict_embedded(&self, z: &[f64]) -> Prediction {
        let n = self.embeddings.len();
        let k: Vec<f64> = self
            .embeddings
            .iter()
            .map(|e| matern_of_distance(euclidean(z, e), &self.hyper))
            .collect();
        let mean = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = solve_lower(&self.chol, n, &k);
        let prior = self.hyper.signal_variance + self.hyper.noise_variance;
        let variance = (prior - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        Prediction { mean, variance }
    }

    /// Posterior in standardized log-utility units.
    pub fn predict_standardized(&self, x: &[f64]) -> Prediction {
        self.predict_embedded(&self.embed(x))
    }

    /// Posterior of the log-utility at `x`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let p = self.predict_standardized(x);
        Prediction {
            mean: self.target_mean + self.target_std * p.mean,
            variance: self.target_std * self.target_std * p.variance,
        }
    }

    /// `mu + beta sigma` in standardized units, the log of [`Self::reward`].
    pub fn log_reward(&self, x: &[f64], beta: f64) -> f64 {
        let p = self.predict_standardized(x);
        p.mean + beta * libm::sqrt(p.variance)
    }

    /// Exponentiated upper confidence bound `exp(mu + beta sigma)`.
    pub fn reward(&self, x: &[f64], beta: f64) -> f64 {
        libm::exp(self.log_reward(x, beta))
    }
}

fn check_data(inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if inputs.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: inputs.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("GP targets"));
    }
    Ok(())
}

fn embed_all(net: &Mlp, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    inputs.iter().map(|x| net.forward(x)).collect()
}
