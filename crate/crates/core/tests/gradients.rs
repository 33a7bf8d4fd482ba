//! Finite-difference checks of every analytic gradient in the crate.

use ige_core::agent::{minibatch_gradients, PolicyValueNets, PpoConfig, PpoScratch, RolloutBuffer};
use ige_core::intrinsic::{IcmConfig, IcmNets, RndConfig, RndNets, Transition};
use ige_core::numerics::{Activation, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn assert_close(analytic: &[f64], numeric: &[f64], what: &str) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let tol = 1e-6 + 1e-4 * a.abs().max(n.abs());
        assert!((a - n).abs() <= tol, "{what}[{i}]: analytic {a} vs numeric {n}");
    }
}

/// Central differences of `f` over every entry of `params`.
fn numeric_grad(params: &mut Vec<f64>, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let orig = params[i];
            params[i] = orig + H;
            let up = f(params);
            params[i] = orig - H;
            let down = f(params);
            params[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn with_params(net: &Mlp, params: &[f64]) -> Mlp {
    let mut n = net.clone();
    n.params_mut().copy_from_slice(params);
    n
}

#[test]
fn mlp_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for act in [Activation::Tanh, Activation::Relu] {
        let net = Mlp::xavier(&[5, 7, 6, 3], act, &mut rng).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = [0.3, -1.2, 0.7];
        let (grads, input_grad) = net.backward(&x, &g).unwrap();
        let objective = |n: &Mlp, x: &[f64]| n.forward(x).unwrap().iter().zip(&g).map(|(y, g)| y * g).sum::<f64>();
        let mut p = net.params().to_vec();
        let num = numeric_grad(&mut p, |p| objective(&with_params(&net, p), &x));
        assert_close(&grads, &num, "params");
        let mut xs = x.clone();
        let num_x = numeric_grad(&mut xs, |x| objective(&net, x));
        assert_close(&input_grad, &num_x, "input");
    }
}

#[test]
fn sparse_inputs_take_the_same_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Mlp::xavier(&[16, 5, 2], Activation::Tanh, &mut rng).unwrap();
    let mut x = vec![0.0; 16];
    x[3] = 1.0;
    x[11] = 0.5;
    let g = [1.0, -0.4];
    let (grads, input_grad) = net.backward(&x, &g).unwrap();
    let objective = |n: &Mlp, x: &[f64]| n.forward(x).unwrap().iter().zip(&g).map(|(y, g)| y * g).sum::<f64>();
    let mut p = net.params().to_vec();
    let num = numeric_grad(&mut p, |p| objective(&with_params(&net, p), &x));
    assert_close(&grads, &num, "params");
    let mut xs = x.clone();
    let num_x = numeric_grad(&mut xs, |x| objective(&net, x));
    assert_close(&input_grad, &num_x, "input");
}

/// Independent evaluation of the minibatch PPO loss.
fn ppo_loss(nets: &PolicyValueNets, buffer: &RolloutBuffer, adv: &[f64], ret: &[f64], idx: &[usize], cfg: &PpoConfig) -> f64 {
    let mut total = 0.0;
    for &t in idx {
        let obs = buffer.observation(t);
        let z = nets.policy.forward(obs).unwrap();
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let lse = z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        let logp: Vec<f64> = z.iter().map(|v| v - lse).collect();
        let ratio = (logp[buffer.actions[t]] - buffer.log_probs[t]).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        let surrogate = (ratio * adv[t]).min(clipped * adv[t]);
        let entropy = -logp.iter().map(|l| l.exp() * l).sum::<f64>();
        let v = nets.value.forward(obs).unwrap()[0];
        total += -surrogate + cfg.value_coef * (v - ret[t]).powi(2) - cfg.entropy_coef * entropy;
    }
    total / idx.len() as f64
}

#[test]
fn ppo_loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = PpoConfig {
        clip_epsilon: 0.2,
        entropy_coef: 0.05,
        ..PpoConfig::default()
    };
    let nets = PolicyValueNets::new(4, 3, &[8, 8], &mut rng).unwrap();
    // Enlarge the policy head so probabilities are far from uniform.
    let mut nets = nets;
    nets.policy.scale_output_layer(80.0);
    let mut buffer = RolloutBuffer::new(4, 12);
    let mut adv = Vec::new();
    let mut ret = Vec::new();
    for t in 0..12 {
        let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = nets.policy.forward(&obs).unwrap();
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let lse = z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        let action = t % 3;
        // Old log-probs shifted so ratios land on both sides of the clip range.
        let shift = [-0.5, -0.05, 0.05, 0.5][t % 4];
        buffer
            .push(&obs, action, z[action] - lse + shift, 0.0, 0.0, false, 0.0)
            .unwrap();
        adv.push(if t % 2 == 0 { 1.3 } else { -0.8 });
        ret.push(rng.random_range(-1.0..1.0));
    }
    let idx: Vec<usize> = (0..12).collect();
    let mut scratch = PpoScratch::new(&nets);
    minibatch_gradients(&nets, &buffer, &adv, &ret, &idx, &cfg, &mut scratch).unwrap();

    let mut p = nets.policy.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        let n = PolicyValueNets::from_nets(with_params(&nets.policy, p), nets.value.clone()).unwrap();
        ppo_loss(&n, &buffer, &adv, &ret, &idx, &cfg)
    });
    assert_close(&scratch.policy_grads, &num, "policy");

    let mut p = nets.value.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        let n = PolicyValueNets::from_nets(nets.policy.clone(), with_params(&nets.value, p)).unwrap();
        ppo_loss(&n, &buffer, &adv, &ret, &idx, &cfg)
    });
    assert_close(&scratch.value_grads, &num, "value");
}

fn transitions(rng: &mut ChaCha8Rng, n: usize, dim: usize, actions: usize) -> Vec<Transition> {
    (0..n)
        .map(|i| Transition {
            state: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: i % actions,
            extrinsic_reward: 0.0,
            next_state: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            done: false,
        })
        .collect()
}

#[test]
fn icm_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = IcmConfig {
        hidden: 6,
        feature_dim: 4,
        ..IcmConfig::default()
    };
    let icm = IcmNets::new(5, 3, &cfg, &mut rng).unwrap();
    let batch = transitions(&mut rng, 6, 5, 3);
    let beta = 0.3;
    let (_, grads) = icm.gradients(&batch, beta).unwrap();

    let enc = icm.encoder.clone().unwrap();
    let mut p = enc.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        let mut n = icm.clone();
        n.encoder = Some(with_params(&enc, p));
        n.losses(&batch, beta).unwrap().total(beta)
    });
    assert_close(&grads.encoder, &num, "encoder");

    let mut p = icm.forward_model.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        let mut n = icm.clone();
        n.forward_model = with_params(&icm.forward_model, p);
        n.losses(&batch, beta).unwrap().total(beta)
    });
    assert_close(&grads.forward_model, &num, "forward model");

    let inv = icm.inverse_model.clone().unwrap();
    let mut p = inv.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        let mut n = icm.clone();
        n.inverse_model = Some(with_params(&inv, p));
        n.losses(&batch, beta).unwrap().total(beta)
    });
    assert_close(&grads.inverse_model, &num, "inverse model");
}

#[test]
fn rnd_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = RndConfig {
        feature_dim: 4,
        hidden: 6,
        ..RndConfig::default()
    };
    let target = Mlp::xavier(&[3, cfg.hidden, cfg.feature_dim], Activation::Tanh, &mut rng).unwrap();
    let predictor = Mlp::xavier(&[3, cfg.hidden, cfg.feature_dim], Activation::Tanh, &mut rng).unwrap();
    let rnd = RndNets::from_nets(target.clone(), predictor.clone(), 1e-3).unwrap();
    let batch: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (_, grads) = rnd.gradients(&batch).unwrap();
    let mut p = predictor.params().to_vec();
    let num = numeric_grad(&mut p, |p| {
        RndNets::from_nets(target.clone(), with_params(&predictor, p), 1e-3)
            .unwrap()
            .loss(&batch)
            .unwrap()
    });
    assert_close(&grads, &num, "predictor");
}
