use marketcast_core::neural::{
    dropout_forward, run_recurrent_layer, Activation, LayerSpec, Mode, NetworkModel, Tensor,
};
use marketcast_core::zoo::{self, ZooName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn reversed_rows(t: &Tensor) -> Tensor {
    let width = t.shape()[1];
    let mut rows: Vec<&[f64]> = t.data().chunks(width).collect();
    rows.reverse();
    Tensor::new(t.shape().to_vec(), rows.concat()).unwrap()
}

#[test]
fn bidirectional_is_forward_plus_reversed_backward() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for act in [Activation::Relu, Activation::Tanh] {
        let (t_len, d, n) = (6, 3, 4);
        let seq = random_tensor(&[t_len, d], &mut rng);
        let fwd = [
            random_tensor(&[4 * n, d], &mut rng),
            random_tensor(&[4 * n, n], &mut rng),
            random_tensor(&[4 * n], &mut rng),
        ];
        let bwd = [
            random_tensor(&[4 * n, d], &mut rng),
            random_tensor(&[4 * n, n], &mut rng),
            random_tensor(&[4 * n], &mut rng),
        ];
        let all: Vec<Tensor> = fwd.iter().chain(bwd.iter()).cloned().collect();

        let bi = run_recurrent_layer(&seq, &LayerSpec::bidirectional_lstm(n, act, true), &all).unwrap();
        let f = run_recurrent_layer(&seq, &LayerSpec::lstm(n, act, true), &fwd).unwrap();
        let b = run_recurrent_layer(&reversed_rows(&seq), &LayerSpec::lstm(n, act, true), &bwd).unwrap();
        let b = reversed_rows(&b);
        assert_eq!(bi.shape(), [t_len, 2 * n]);
        for t in 0..t_len {
            let row = &bi.data()[t * 2 * n..(t + 1) * 2 * n];
            let expect = [&f.data()[t * n..(t + 1) * n], &b.data()[t * n..(t + 1) * n]].concat();
            let bits: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            let expect_bits: Vec<u64> = expect.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits, expect_bits, "step {t}");
        }

        // last-step summary: forward final state and backward state at position 0
        let last = run_recurrent_layer(&seq, &LayerSpec::bidirectional_lstm(n, act, false), &all).unwrap();
        let expect = [&f.data()[(t_len - 1) * n..], &b.data()[..n]].concat();
        assert_eq!(
            last.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            expect.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn shared_zero_parameters_give_equal_halves() {
    let n = 3;
    let seq = Tensor::new(vec![4, 1], vec![0.1, 0.5, -0.3, 0.9]).unwrap();
    let zeros = [
        Tensor::zeros(&[4 * n, 1]),
        Tensor::zeros(&[4 * n, n]),
        Tensor::zeros(&[4 * n]),
    ];
    let all: Vec<Tensor> = zeros.iter().chain(zeros.iter()).cloned().collect();
    let out = run_recurrent_layer(&seq, &LayerSpec::bidirectional_lstm(n, Activation::Tanh, false), &all)
        .unwrap();
    assert_eq!(out.data()[..n], out.data()[n..]);
}

#[test]
fn parameter_counts() {
    assert_eq!(zoo::param_count(&zoo::build_bilstm(10, 1).unwrap()), 20_901);
    assert_eq!(zoo::param_count(&zoo::build_gru_stack(10, 1).unwrap()), 15_777);
    let cnn = zoo::build_cnn_lstm(10, 1).unwrap();
    let conv_block: usize = cnn.params()[0].iter().map(Tensor::len).sum();
    assert_eq!(conv_block, 128);
    let lstm_gru = zoo::build_lstm_gru(10, 1).unwrap();
    let per_layer: Vec<usize> = lstm_gru
        .params()
        .iter()
        .map(|b| b.iter().map(Tensor::len).sum())
        .collect();
    assert_eq!(per_layer, [4_352, 8_320, 6_240, 6_240, 6_240, 33]);
    // parameter counts do not depend on the window length
    for t in [1, 5, 30] {
        assert_eq!(zoo::build_bilstm(t, 0).unwrap().param_count(), 20_901);
        assert_eq!(zoo::build_gru_stack(t, 0).unwrap().param_count(), 15_777);
    }
}

#[test]
fn dropout_statistics() {
    let x = vec![1.0; 10_000];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let out = dropout_forward(&x, 0.2, Mode::Train, &mut rng).unwrap();
    let zeros = out.iter().filter(|&&v| v == 0.0).count() as f64 / x.len() as f64;
    assert!((0.17..=0.23).contains(&zeros), "zero fraction {zeros}");
    assert!(out.iter().all(|&v| v == 0.0 || v == 1.25));

    let y: Vec<f64> = (0..10_000).map(|_| rng.random_range(-5.0..5.0)).collect();
    let before = rng.clone();
    let eval = dropout_forward(&y, 0.2, Mode::Eval, &mut rng).unwrap();
    assert_eq!(
        eval.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        y.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(rng, before, "eval mode must not consume randomness");
}

#[test]
fn gru_stack_eval_ignores_dropout() {
    let model = zoo::build_gru_stack(6, 3).unwrap();
    let windows: Vec<Vec<f64>> = (0..4).map(|i| (0..6).map(|j| (i + j) as f64 * 0.1).collect()).collect();
    let a = model.predict(&windows).unwrap();
    let b = model.predict(&windows).unwrap();
    assert_eq!(a, b);
    // removing the dropout layer leaves evaluation output unchanged
    let mut layers = model.layers().to_vec();
    let mut params = model.params().to_vec();
    layers.remove(3);
    params.remove(3);
    let plain = NetworkModel::with_params(model.input_shape().to_vec(), layers, params, 3).unwrap();
    assert_eq!(plain.predict(&windows).unwrap(), a);
}

#[test]
fn every_network_emits_a_scalar() {
    for name in ZooName::NEURAL {
        for t in [2, 5, 11] {
            let m = name.build(t, 0).unwrap();
            assert_eq!(m.output_shape(), [1], "{name} time_step {t}");
            assert!(matches!(m.layers().last(), Some(LayerSpec::Dense { units: 1, activation: Activation::Linear, .. })));
        }
    }
}
