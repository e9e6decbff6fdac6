use std::collections::BTreeMap;

use gfnal_core::gfn::{rollout, tb_loss, terminal_distribution, train_round, GfnModel, GfnTrainConfig};
use gfnal_core::rng_stream;
use gfnal_core::space::{enumerate_complete, Dims, DEFAULT_ENUMERATION_CAP};
use rand::Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn tb_gradient_matches_finite_differences() {
    let mut rng = rng_stream(11, 0);
    let h = 1e-5;
    for _ in 0..30 {
        let m = rng.gen_range(1..3);
        let w = rng.gen_range(1..3);
        let u = rng.gen_range(1..=m * w);
        let dims = Dims::new(m, w, u);
        let hidden = [rng.gen_range(2..6)];
        let mut model = GfnModel::new(dims, &hidden, &mut rng);
        model.set_log_z(rng.gen_range(-2.0..2.0));
        let tau = rollout(&model, &mut rng, 0.3);
        let reward = rng.gen_range(0.01..50.0);
        let tb = tb_loss(&model, &tau, reward).unwrap();

        let loss_at = |mdl: &GfnModel| tb_loss(mdl, &tau, reward).unwrap().loss;
        let n = model.policy().num_params();
        let mut fd = vec![0.0; n];
        for i in 0..n {
            let mut p = model.clone();
            p.policy_mut().params_mut()[i] += h;
            let hi = loss_at(&p);
            p.policy_mut().params_mut()[i] -= 2.0 * h;
            fd[i] = (hi - loss_at(&p)) / (2.0 * h);
        }
        let diff: Vec<f64> = tb.policy_grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-4 * norm(&fd).max(1e-8), "{dims:?}");

        let mut p = model.clone();
        p.set_log_z(model.log_z() + h);
        let hi = loss_at(&p);
        p.set_log_z(model.log_z() - h);
        let fd_z = (hi - loss_at(&p)) / (2.0 * h);
        assert!((tb.log_z_grad - fd_z).abs() <= 1e-4 * fd_z.abs().max(1e-8));
    }
}

#[test]
fn uniform_rollouts_hit_each_terminal_equally() {
    let dims = Dims::new(2, 2, 2);
    let mut rng = rng_stream(12, 0);
    let model = GfnModel::new(dims, &[8], &mut rng);
    let n = 100_000;
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        let tau = rollout(&model, &mut rng, 1.0);
        assert_eq!(tau.steps.len(), 2);
        *counts.entry(tau.terminal).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 12);
    let p = 1.0 / 12.0;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts.values() {
        assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sd, "{c}");
    }
}

#[test]
fn scaling_reward_only_shifts_log_z() {
    let dims = Dims::new(2, 2, 2);
    let mut rng = rng_stream(13, 0);
    let mut model = GfnModel::new(dims, &[6], &mut rng);
    model.set_log_z(0.7);
    let c: f64 = 37.5;
    let mut shifted = model.clone();
    shifted.set_log_z(0.7 + c.ln());
    for _ in 0..50 {
        let tau = rollout(&model, &mut rng, 0.2);
        let r = rng.gen_range(0.1..10.0);
        let a = tb_loss(&model, &tau, r).unwrap();
        let b = tb_loss(&shifted, &tau, c * r).unwrap();
        assert!((a.residual - b.residual).abs() < 1e-12);
        for (x, y) in a.policy_grad.iter().zip(&b.policy_grad) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn exact_terminal_distribution_matches_sampling() {
    let dims = Dims::new(2, 2, 2);
    let mut rng = rng_stream(14, 0);
    let model = GfnModel::new(dims, &[8], &mut rng);
    let exact = terminal_distribution(&model).unwrap();
    assert_eq!(exact.len(), 12);
    let n = 50_000;
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(rollout(&model, &mut rng, 0.0).terminal).or_insert(0usize) += 1;
    }
    for (x, p) in &exact {
        let c = *counts.get(x).unwrap_or(&0) as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c - n as f64 * p).abs() <= 4.0 * sd);
    }
}

#[test]
fn training_on_uniform_reward_converges() {
    let dims = Dims::new(2, 2, 2);
    let mut rng = rng_stream(15, 0);
    let mut model = GfnModel::new(dims, &[64, 64], &mut rng);
    let tc = GfnTrainConfig::default();
    let trace = train_round(&mut model, &|_| 1.0, &tc, &mut rng).unwrap();
    assert_eq!(trace.len(), tc.trajectories / tc.minibatch);
    let mut tail: Vec<f64> = trace[trace.len() - 10..].to_vec();
    tail.sort_by(f64::total_cmp);
    assert!((tail[4] + tail[5]) / 2.0 < 0.05);
    // Z = number of terminals
    assert!((model.log_z() - 12f64.ln()).abs() < 0.1);
    let all = enumerate_complete(dims, DEFAULT_ENUMERATION_CAP).unwrap();
    let exact = terminal_distribution(&model).unwrap();
    let l1: f64 = all.iter().map(|x| (exact[x] - 1.0 / 12.0).abs()).sum();
    assert!(l1 <= 0.1, "{l1}");
}
