//! GFlowNet over the allocation DAG, trained with trajectory balance.
//!
//! The forward policy is an MLP over the one-hot state encoding producing
//! one logit per `(server, subcarrier, device)` action; invalid actions are
//! masked out. The backward policy is fixed and uniform: a state with `t`
//! assignments has exactly `t` parents, so `log P_B = -ln t` per step.
//!
//! For a trajectory `tau` ending in `x` the loss is
//! `(log Z + sum log P_F - log R(x) - sum log P_B)^2`; at its global
//! minimum terminal states are sampled with probability `R(x) / Z`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::nn::{masked_log_softmax, sample_categorical, Adam, ForwardCache, Mlp};
use crate::space::{Action, AllocationMatrix, Dims, MatrixSet};
use crate::{Error, Result};

/// Hyperparameters of one training round.
#[derive(Debug, Clone, PartialEq)]
pub struct GfnTrainConfig {
    /// Rollouts per call to [`train_round`].
    pub trajectories: usize,
    pub minibatch: usize,
    pub policy_lr: f64,
    pub log_z_lr: f64,
    /// Probability mass of uniform-over-valid noise in the behavior policy.
    pub exploration: f64,
    /// Rewards are clamped below at this value before taking logs.
    pub reward_floor: f64,
    pub hidden: Vec<usize>,
    /// Keep the previous round's sampler instead of re-initializing.
    pub warm_start: bool,
}

impl Default for GfnTrainConfig {
    fn default() -> Self {
        Self {
            trajectories: 2000,
            minibatch: 4,
            policy_lr: 1e-3,
            log_z_lr: 1e-2,
            exploration: 0.05,
            reward_floor: 1e-8,
            hidden: vec![64, 64],
            warm_start: false,
        }
    }
}

impl GfnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.minibatch > 0
            && self.policy_lr > 0.0
            && self.log_z_lr > 0.0
            && (0.0..1.0).contains(&self.exploration)
            && self.reward_floor > 0.0
            && !self.hidden.is_empty()
            && self.hidden.iter().all(|&h| h > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "invalid GFlowNet training config: {self:?}"
            )))
        }
    }
}

/// Forward policy plus the learned log-partition estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GfnModel {
    dims: Dims,
    policy: Mlp,
    log_z: f64,
    calibrated: bool,
}

impl GfnModel {
    pub fn new(dims: Dims, hidden: &[usize], rng: &mut crate::Rng) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(dims.encoding_len());
        sizes.extend_from_slice(hidden);
        sizes.push(dims.num_actions());
        Self {
            dims,
            policy: Mlp::he_init(&sizes, rng),
            log_z: 0.0,
            calibrated: false,
        }
    }

    pub fn from_parts(dims: Dims, policy: Mlp, log_z: f64) -> Result<Self> {
        if policy.input_dim() != dims.encoding_len() {
            return Err(Error::ShapeMismatch {
                expected: dims.encoding_len(),
                got: policy.input_dim(),
            });
        }
        if policy.output_dim() != dims.num_actions() {
            return Err(Error::ShapeMismatch {
                expected: dims.num_actions(),
                got: policy.output_dim(),
            });
        }
        if !log_z.is_finite() {
            return Err(Error::NonFinite("log Z"));
        }
        Ok(Self {
            dims,
            policy,
            log_z,
            calibrated: true,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn policy(&self) -> &Mlp {
        &self.policy
    }
    pub fn policy_mut(&mut self) -> &mut Mlp {
        &mut self.policy
    }
    pub fn log_z(&self) -> f64 {
        self.log_z
    }
    pub fn set_log_z(&mut self, log_z: f64) {
        self.log_z = log_z;
        self.calibrated = true;
    }

    /// Target-policy log-probabilities over the flattened action space.
    pub fn log_probs(&self, state: &AllocationMatrix) -> Result<Vec<f64>> {
        let logits = self.policy.forward(&state.encode())?;
        masked_log_softmax(&logits, &state.valid_actions().mask)
    }

    fn step_cached(&self, state: &AllocationMatrix) -> Result<(ForwardCache, Vec<bool>, Vec<f64>)> {
        let cache = self.policy.forward_cached(&state.encode())?;
        let mask = state.valid_actions().mask;
        let log_probs = masked_log_softmax(cache.output(), &mask)?;
        Ok((cache, mask, log_probs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub action: Action,
    /// Log-probability under the policy that generated the step.
    pub log_pf: f64,
    /// `-ln t`, `t` = assignments in the child state.
    pub log_pb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub terminal: AllocationMatrix,
}

impl Trajectory {
    /// States `s0, ..., sn` along the trajectory.
    pub fn states(&self) -> Vec<AllocationMatrix> {
        let mut state = AllocationMatrix::initial(self.terminal.dims());
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(state.clone());
        for step in &self.steps {
            state
                .apply_in_place(step.action)
                .expect("trajectory actions are valid");
            out.push(state.clone());
        }
        out
    }

    pub fn sum_log_pb(&self) -> f64 {
        self.steps.iter().map(|s| s.log_pb).sum()
    }

    pub fn sum_log_pf(&self) -> f64 {
        self.steps.iter().map(|s| s.log_pf).sum()
    }
}

/// Per-step data kept for the gradient of the trajectory-balance loss.
struct StepCache {
    forward: ForwardCache,
    mask: Vec<bool>,
    log_probs: Vec<f64>,
    action: usize,
}

fn mixed_log_prob(log_p: f64, exploration: f64, valid: usize) -> f64 {
    if exploration == 0.0 {
        log_p
    } else {
        libm::log((1.0 - exploration) * libm::exp(log_p) + exploration / valid as f64)
    }
}

fn rollout_inner(
    model: &GfnModel,
    rng: &mut crate::Rng,
    exploration: f64,
    keep: bool,
) -> Result<(Trajectory, Vec<StepCache>)> {
    let dims = model.dims;
    let mut state = AllocationMatrix::initial(dims);
    let mut steps = Vec::with_capacity(dims.devices);
    let mut caches = Vec::with_capacity(if keep { dims.devices } else { 0 });
    for t in 1..=dims.devices {
        let (forward, mask, log_probs) = model.step_cached(&state)?;
        let valid = mask.iter().filter(|&&m| m).count();
        let index = if exploration > 0.0 && rng.gen::<f64>() < exploration {
            let k = rng.gen_range(0..valid);
            mask.iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .nth(k)
                .map(|(i, _)| i)
                .expect("k < valid")
        } else {
            sample_categorical(&log_probs, rng)
        };
        let action = Action::from_index(dims, index);
        steps.push(Step {
            action,
            log_pf: mixed_log_prob(log_probs[index], exploration, valid),
            log_pb: -libm::log(t as f64),
        });
        state.apply_in_place(action)?;
        if keep {
            caches.push(StepCache {
                forward,
                mask,
                log_probs,
                action: index,
            });
        }
    }
    Ok((
        Trajectory {
            steps,
            terminal: state,
        },
        caches,
    ))
}

/// Sample one trajectory from `s0` under the forward policy mixed with
/// `exploration` mass of uniform-over-valid noise. Recorded `log_pf` values
/// are those of the mixed behavior policy.
pub fn rollout(model: &GfnModel, rng: &mut crate::Rng, exploration: f64) -> Trajectory {
    rollout_inner(model, rng, exploration, false)
        .expect("model shapes are consistent with its dimensions")
        .0
}

/// Trajectory-balance loss of one trajectory and its exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TbLoss {
    pub loss: f64,
    /// `log Z + sum log P_F - log R - sum log P_B`
    pub residual: f64,
    pub policy_grad: Vec<f64>,
    pub log_z_grad: f64,
}

fn log_reward(reward: f64, floor: f64) -> Result<f64> {
    if reward.is_nan() {
        return Err(Error::NonFinite("reward"));
    }
    Ok(libm::log(reward.max(floor)))
}

/// Accumulate `scale * d(sum_i log P_F(a_i | s_i)) / d params` into `grad`.
fn accumulate_log_pf_grad(policy: &Mlp, caches: &[StepCache], scale: f64, grad: &mut [f64]) -> Result<()> {
    let mut upstream = vec![0.0; policy.output_dim()];
    for c in caches {
        for (k, u) in upstream.iter_mut().enumerate() {
            *u = if c.mask[k] {
                -scale * libm::exp(c.log_probs[k])
            } else {
                0.0
            };
        }
        upstream[c.action] += scale;
        policy.backward_into(&c.forward, &upstream, grad, false)?;
    }
    Ok(())
}

fn caches_for(model: &GfnModel, tau: &Trajectory) -> Result<Vec<StepCache>> {
    let mut state = AllocationMatrix::initial(model.dims);
    let mut caches = Vec::with_capacity(tau.steps.len());
    for step in &tau.steps {
        let (forward, mask, log_probs) = model.step_cached(&state)?;
        let action = step.action.index(model.dims);
        caches.push(StepCache {
            forward,
            mask,
            log_probs,
            action,
        });
        state.apply_in_place(step.action)?;
    }
    Ok(caches)
}

/// Evaluate the trajectory-balance loss with the target (unmixed) policy
/// re-evaluated along `tau`. `reward` must be positive; it is used as is.
pub fn tb_loss(model: &GfnModel, tau: &Trajectory, reward: f64) -> Result<TbLoss> {
    if !(reward > 0.0) {
        return Err(Error::NonFinite("reward"));
    }
    let caches = caches_for(model, tau)?;
    let sum_log_pf: f64 = caches.iter().map(|c| c.log_probs[c.action]).sum();
    let residual = model.log_z + sum_log_pf - libm::log(reward) - tau.sum_log_pb();
    let loss = residual * residual;
    if !loss.is_finite() {
        return Err(Error::NonFinite("trajectory-balance loss"));
    }
    let mut policy_grad = vec![0.0; model.policy.num_params()];
    accumulate_log_pf_grad(&model.policy, &caches, 2.0 * residual, &mut policy_grad)?;
    Ok(TbLoss {
        loss,
        residual,
        policy_grad,
        log_z_grad: 2.0 * residual,
    })
}

/// Train `model` on `reward` for `tc.trajectories` rollouts.
///
/// Rollouts are grouped into minibatches (the last one may be partial) and
/// each minibatch performs one Adam step on the policy and on `log Z`.
/// A model that has never been trained first sets `log Z` to the value
/// minimizing the loss of its first minibatch, so `log Z` starts at the
/// right order of magnitude. Returns the mean loss of every minibatch.
pub fn train_round(
    model: &mut GfnModel,
    reward: &dyn Fn(&AllocationMatrix) -> f64,
    tc: &GfnTrainConfig,
    rng: &mut crate::Rng,
) -> Result<Vec<f64>> {
    tc.validate()?;
    let mut trace = Vec::new();
    if tc.trajectories == 0 {
        return Ok(trace);
    }
    let n_params = model.policy.num_params();
    let mut policy_opt = Adam::new(n_params, tc.policy_lr);
    let mut log_z_opt = Adam::new(1, tc.log_z_lr);
    let mut grad = vec![0.0; n_params];

    let mut remaining = tc.trajectories;
    while remaining > 0 {
        let batch = remaining.min(tc.minibatch);
        remaining -= batch;

        let mut rollouts = Vec::with_capacity(batch);
        for _ in 0..batch {
            let (tau, caches) = rollout_inner(model, rng, tc.exploration, true)?;
            let log_r = log_reward(reward(&tau.terminal), tc.reward_floor)?;
            let sum_log_pf: f64 = caches.iter().map(|c| c.log_probs[c.action]).sum();
            // residual without log Z
            let partial = sum_log_pf - log_r - tau.sum_log_pb();
            rollouts.push((partial, caches));
        }
        if !model.calibrated {
            model.log_z = -rollouts.iter().map(|(p, _)| p).sum::<f64>() / batch as f64;
            model.calibrated = true;
        }

        grad.fill(0.0);
        let mut loss_sum = 0.0;
        let mut log_z_grad = 0.0;
        for (partial, caches) in &rollouts {
            let residual = model.log_z + partial;
            loss_sum += residual * residual;
            let scale = 2.0 * residual / batch as f64;
            log_z_grad += scale;
            accumulate_log_pf_grad(&model.policy, caches, scale, &mut grad)?;
        }
        let loss = loss_sum / batch as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite("trajectory-balance loss"));
        }
        policy_opt.step(model.policy.params_mut(), &grad)?;
        let mut z = [model.log_z];
        log_z_opt.step(&mut z, &[log_z_grad])?;
        model.log_z = z[0];
        trace.push(loss);
    }
    Ok(trace)
}

/// Result of a de-duplicated sampling request.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub matrices: Vec<AllocationMatrix>,
    /// Fewer than the requested count were found before the retry cap.
    pub short: bool,
}

/// Draw on-policy rollouts until `b` distinct terminals not in `exclude`
/// are collected or `20 b` rollouts have been spent.
pub fn sample_batch(
    model: &GfnModel,
    b: usize,
    rng: &mut crate::Rng,
    exclude: &MatrixSet,
) -> SampleBatch {
    let mut seen = MatrixSet::new();
    let mut matrices = Vec::with_capacity(b);
    let mut attempts = 0;
    while matrices.len() < b && attempts < 20 * b {
        attempts += 1;
        let x = rollout(model, rng, 0.0).terminal;
        if !exclude.contains(&x) && seen.insert(x.clone()) {
            matrices.push(x);
        }
    }
    SampleBatch {
        short: matrices.len() < b,
        matrices,
    }
}

/// `n` on-policy terminal samples without de-duplication (diagnostics).
pub fn sample_terminals(model: &GfnModel, n: usize, rng: &mut crate::Rng) -> Vec<AllocationMatrix> {
    (0..n).map(|_| rollout(model, rng, 0.0).terminal).collect()
}

/// Exact terminal distribution of the forward policy, by propagating state
/// probabilities layer by layer through the DAG. Only for tiny instances.
pub fn terminal_distribution(model: &GfnModel) -> Result<BTreeMap<AllocationMatrix, f64>> {
    let mut layer = BTreeMap::new();
    layer.insert(AllocationMatrix::initial(model.dims), 1.0);
    for _ in 0..model.dims.devices {
        let mut next = BTreeMap::new();
        for (state, p) in &layer {
            let log_probs = model.log_probs(state)?;
            for (i, &lp) in log_probs.iter().enumerate() {
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let child = state.apply(Action::from_index(model.dims, i))?;
                *next.entry(child).or_insert(0.0) += p * libm::exp(lp);
            }
        }
        layer = next;
    }
    Ok(layer)
}
