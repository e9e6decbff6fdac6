use gfnal_core::nn::{masked_log_softmax, sample_categorical, Adam, Mlp};
use gfnal_core::rng_stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn random_sizes(rng: &mut gfnal_core::Rng) -> Vec<usize> {
    let depth = rng.gen_range(2..5);
    (0..depth).map(|_| rng.gen_range(1..7)).collect()
}

fn random_vec(rng: &mut gfnal_core::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Second evaluator: unpack the flat buffer into nalgebra matrices.
fn reference_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let sizes = net.sizes();
    let p = net.params();
    let mut a = DVector::from_column_slice(x);
    let mut off = 0;
    for l in 0..sizes.len() - 1 {
        let (i, o) = (sizes[l], sizes[l + 1]);
        // stored [in][out] row-major
        let w = DMatrix::from_row_slice(i, o, &p[off..off + i * o]);
        let b = DVector::from_column_slice(&p[off + i * o..off + i * o + o]);
        a = w.transpose() * a + b;
        if l + 2 < sizes.len() {
            a.apply(|v| *v = v.max(0.0));
        }
        off += i * o + o;
    }
    a.as_slice().to_vec()
}

#[test]
fn forward_matches_reference_evaluator() {
    let mut rng = rng_stream(1, 0);
    for _ in 0..200 {
        let sizes = random_sizes(&mut rng);
        let net = Mlp::he_init(&sizes, &mut rng);
        let x = random_vec(&mut rng, sizes[0]);
        let got = net.forward(&x).unwrap();
        let want = reference_forward(&net, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
        }
        assert_eq!(net.forward_cached(&x).unwrap().output(), &got[..]);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = rng_stream(2, 0);
    let h = 1e-5;
    for _ in 0..100 {
        let sizes = random_sizes(&mut rng);
        let mut net = Mlp::he_init(&sizes, &mut rng);
        for b in net.params_mut() {
            *b += rng.gen_range(-0.1..0.1);
        }
        let x = random_vec(&mut rng, sizes[0]);
        let up = random_vec(&mut rng, *sizes.last().unwrap());
        let f = |n: &Mlp| n.forward(&x).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum::<f64>();
        let cache = net.forward_cached(&x).unwrap();
        let mut grad = vec![0.0; net.num_params()];
        let input_grad = net.backward_into(&cache, &up, &mut grad, true).unwrap().unwrap();

        let mut fd = vec![0.0; net.num_params()];
        for i in 0..net.num_params() {
            let mut p = net.clone();
            p.params_mut()[i] += h;
            let hi = f(&p);
            p.params_mut()[i] -= 2.0 * h;
            fd[i] = (hi - f(&p)) / (2.0 * h);
        }
        let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-4 * norm(&fd).max(1e-8), "sizes {sizes:?}");

        let mut fd_x = vec![0.0; x.len()];
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let hi: f64 = net.forward(&xp).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum();
            xp[i] -= 2.0 * h;
            let lo: f64 = net.forward(&xp).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum();
            fd_x[i] = (hi - lo) / (2.0 * h);
        }
        let diff: Vec<f64> = input_grad.iter().zip(&fd_x).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-4 * norm(&fd_x).max(1e-8));
    }
}

#[test]
fn log_softmax_normalizes_and_is_shift_invariant() {
    let mut rng = rng_stream(3, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        mask[rng.gen_range(0..n)] = true;
        let lp = masked_log_softmax(&logits, &mask).unwrap();
        let total: f64 = lp.iter().zip(&mask).filter(|(_, &m)| m).map(|(l, _)| l.exp()).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(lp.iter().zip(&mask).all(|(l, &m)| m || *l == f64::NEG_INFINITY));

        let c = rng.gen_range(-500.0..500.0);
        let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
        let lp2 = masked_log_softmax(&shifted, &mask).unwrap();
        for ((a, b), &m) in lp.iter().zip(&lp2).zip(&mask) {
            if m {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }
    assert_eq!(masked_log_softmax(&[0.0, 0.0], &[true, true]).unwrap(), vec![-(2f64.ln()); 2]);
}

#[test]
fn categorical_frequencies_within_three_sigma() {
    let mut rng = rng_stream(4, 0);
    let logits = [0.3, -1.0, 2.0, 0.0, -0.5];
    let mask = [true, true, true, false, true];
    let lp = masked_log_softmax(&logits, &mask).unwrap();
    let n = 100_000;
    let mut counts = [0usize; 5];
    for _ in 0..n {
        counts[sample_categorical(&lp, &mut rng)] += 1;
    }
    assert_eq!(counts[3], 0);
    for (c, l) in counts.iter().zip(&lp) {
        let p = l.exp();
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sd.max(1e-12), "{c} vs {p}");
    }
}

#[test]
fn adam_first_step_by_hand() {
    // m = 0.1 g, v = 0.001 g^2; bias correction undoes both factors, so the
    // step is lr * g / (|g| + eps) = lr * sign(g) up to eps.
    let mut opt = Adam::new(1, 1e-3);
    let mut p = [2.0];
    opt.step(&mut p, &[1.0]).unwrap();
    let want = 2.0 - 1e-3 * 1.0 / (1.0 + 1e-8);
    assert!((p[0] - want).abs() < 1e-15);
    assert_eq!(opt.step_count(), 1);

    // second step with the same gradient: moments already at their fixed
    // point after correction, same displacement again
    opt.step(&mut p, &[1.0]).unwrap();
    assert!((p[0] - (want - 1e-3 / (1.0 + 1e-8))).abs() < 1e-12);
}
