use rand::Rng;
use sitopo::adaptation::{silhouette_grad, supervised_grad, SilhouetteLossConfig, UnlabeledSample};
use sitopo::bench::{gen_dataset, sample_params, DomainShift};
use sitopo::body::{BodyParams, NUM_PARAMS};
use sitopo::fitting::{fd_gradients, Objective};
use sitopo::regressor::{forward, param_loss, RegressorInput, RegressorWeights, INPUT_DIM};
use sitopo::rng::{derive_seed, seeded};

fn random_weights(seed: u64) -> RegressorWeights {
    let mut rng = seeded(seed);
    let mut w = RegressorWeights::init(&mut rng);
    // nonzero biases so every path through the network is exercised
    for layer in &mut w.layers {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.3..0.3);
        }
    }
    w
}

fn random_batch(seed: u64, n: usize) -> Vec<(RegressorInput, BodyParams)> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|i| {
            let values: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(0.0..1.0)).collect();
            let image = sitopo::mask::GrayMap::from_vec(32, 32, values).unwrap();
            (RegressorInput::from_image(&image), sample_params(derive_seed(seed, i as u64)))
        })
        .collect()
}

fn mean_loss(w: &RegressorWeights, batch: &[(RegressorInput, BodyParams)]) -> f64 {
    batch.iter().map(|(x, t)| param_loss(&forward(w, x), t)).sum::<f64>() / batch.len() as f64
}

/// Flat indices spread over all three layers.
fn probe_indices(w: &RegressorWeights, seed: u64, per_layer: usize) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    let mut offset = 0;
    for layer in &w.layers {
        let len = layer.weights.len() + layer.bias.len();
        for _ in 0..per_layer {
            out.push(offset + rng.gen_range(0..len));
        }
        // always include one bias of each layer
        out.push(offset + layer.weights.len() + rng.gen_range(0..layer.bias.len()));
        offset += len;
    }
    out
}

#[test]
fn supervised_gradient_matches_finite_differences() {
    let h = 1e-6;
    for batch_seed in 0..5u64 {
        let w = random_weights(100 + batch_seed);
        let batch = random_batch(200 + batch_seed, 4);
        let (grad, loss) = supervised_grad(&w, &batch).unwrap();
        assert!((loss - mean_loss(&w, &batch)).abs() < 1e-12);
        let indices = probe_indices(&w, batch_seed, 6);
        assert!(indices.len() >= 20);
        for &i in &indices {
            let mut wp = w.clone();
            wp.set_flat(i, w.get_flat(i) + h);
            let mut wm = w.clone();
            wm.set_flat(i, w.get_flat(i) - h);
            let fd = (mean_loss(&wp, &batch) - mean_loss(&wm, &batch)) / (2.0 * h);
            let an = grad.get_flat(i);
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
            assert!(rel < 1e-4, "batch {batch_seed} weight {i}: analytic {an} vs fd {fd}");
        }
    }
}

/// The output-layer bias gradient of the silhouette branch is the head
/// derivative (by differences in the bias) times the output-space gradient.
#[test]
fn silhouette_gradient_follows_the_chain_rule() {
    let w = random_weights(7);
    let samples = gen_dataset(3, 21, &DomainShift::Clean, (128, 128)).unwrap();
    let items: Vec<UnlabeledSample> = samples.iter().map(|s| s.unlabeled().unwrap()).collect();
    let refs: Vec<&UnlabeledSample> = items.iter().collect();
    let cfg = SilhouetteLossConfig {
        objective: Objective::ChamferTopology,
        ..SilhouetteLossConfig::default()
    };
    let got = silhouette_grad(&w, &refs, &cfg).unwrap();
    let steps = cfg.fd_steps.as_vector();

    let last = w.layers.len() - 1;
    let bias_offset: usize = w.layers[..last].iter().map(|l| l.weights.len() + l.bias.len()).sum::<usize>()
        + w.layers[last].weights.len();
    let h = 1e-6;
    let mut expected_t = [0.0; NUM_PARAMS];
    let mut expected_s = [0.0; NUM_PARAMS];
    for item in &items {
        let pred = forward(&w, &item.input);
        let [d_t, d_s] = fd_gradients(
            |p| item.target.weighted_terms(p, cfg.objective, &cfg.weights, cfg.use_normalized_losses),
            &pred,
            &steps,
        );
        for k in 0..NUM_PARAMS {
            let mut wp = w.clone();
            wp.set_flat(bias_offset + k, w.get_flat(bias_offset + k) + h);
            let mut wm = w.clone();
            wm.set_flat(bias_offset + k, w.get_flat(bias_offset + k) - h);
            let head = (forward(&wp, &item.input).to_vector()[k] - forward(&wm, &item.input).to_vector()[k]) / (2.0 * h);
            expected_t[k] += head * d_t[k] / items.len() as f64;
            expected_s[k] += head * d_s[k] / items.len() as f64;
        }
    }
    let mut nonzero = 0;
    for k in 0..NUM_PARAMS {
        for (got, want) in [
            (got.topology.get_flat(bias_offset + k), expected_t[k]),
            (got.silhouette.get_flat(bias_offset + k), expected_s[k]),
        ] {
            let tol = 1e-6 + 1e-5 * want.abs();
            assert!((got - want).abs() <= tol, "bias {k}: {got} vs {want}");
            nonzero += usize::from(want != 0.0);
        }
    }
    assert!(nonzero > NUM_PARAMS, "the check should exercise most outputs");
}
