use marketcast_core::checkpoint::{Checkpoint, SavedModel};
use marketcast_core::forecast::{forecast, roll_forward};
use marketcast_core::neural::{fit, Activation, AdamConfig, LayerSpec, NetworkModel, TrainConfig};
use marketcast_core::series::fit_minmax_values;
use marketcast_core::{arima, zoo};

#[test]
fn dense_fits_doubling_within_fifty_epochs() {
    let mut model =
        NetworkModel::new(vec![1], vec![LayerSpec::dense(1, Activation::Linear)], 42).unwrap();
    let inputs: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 50.0 - 1.0]).collect();
    let targets: Vec<f64> = inputs.iter().map(|x| 2.0 * x[0]).collect();
    let hist = fit(&mut model, &inputs, &targets, &TrainConfig::default(), 42).unwrap();
    assert_eq!(hist.epoch_losses.len(), 50);
    let last = *hist.epoch_losses.last().unwrap();
    assert!(last < 1e-4, "final loss {last}");
}

#[test]
fn one_epoch_is_one_step_per_sample() {
    let mut model =
        NetworkModel::new(vec![1], vec![LayerSpec::dense(1, Activation::Linear)], 0).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let hist = fit(&mut model, &vec![vec![0.5]; 5], &[1.0; 5], &cfg, 0).unwrap();
    assert_eq!(hist.optimizer_steps, 5);
    assert_eq!(model.adam_state().step(), 5);
}

#[test]
fn constant_gradient_steps_keep_their_size() {
    // scalar Adam recurrence: with a constant gradient m_hat / sqrt(v_hat) stays 1
    let mut model =
        NetworkModel::new(vec![1], vec![LayerSpec::dense(1, Activation::Linear)], 0).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        shuffle: false,
        adam: AdamConfig::default(),
        ..TrainConfig::default()
    };
    // zero input: only the bias moves, with gradient 2 (b - t) ~ constant for a far target
    let w0 = model.params()[0][1].data()[0];
    fit(&mut model, &[vec![0.0]], &[1e6], &cfg, 0).unwrap();
    let w1 = model.params()[0][1].data()[0];
    fit(&mut model, &[vec![0.0]], &[1e6], &cfg, 0).unwrap();
    let w2 = model.params()[0][1].data()[0];
    let (first, second) = (w1 - w0, w2 - w1);
    assert!((first - 0.001).abs() < 1e-9);
    assert!(((second - first) / first).abs() < 0.05);
}

fn neural_checkpoint(seed: u64) -> Checkpoint {
    let mut network = zoo::build_gru_stack(4, seed).unwrap();
    let train_config = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let prices: Vec<f64> = (0..30).map(|i| 100.0 + (i as f64 * 0.4).sin() * 5.0).collect();
    let scaler = fit_minmax_values(&prices).unwrap();
    let scaled: Vec<f64> = prices.iter().map(|&v| scaler.forward(v)).collect();
    let inputs: Vec<Vec<f64>> = scaled.windows(4).take(26).map(<[f64]>::to_vec).collect();
    let targets: Vec<f64> = scaled[4..].to_vec();
    fit(&mut network, &inputs, &targets, &train_config, seed).unwrap();
    Checkpoint::new(SavedModel::Neural {
        name: zoo::ZooName::Gru,
        time_step: 4,
        seed,
        network,
        train_config,
        scaler,
    })
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = neural_checkpoint(3);
    let path = dir.path().join("gru.json");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ckpt);
    let (SavedModel::Neural { network: a, .. }, SavedModel::Neural { network: b, .. }) =
        (&ckpt.model, &back.model)
    else {
        panic!("neural checkpoint expected");
    };
    let bits = |m: &NetworkModel| m.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a), bits(b));

    let series: Vec<f64> = (0..80).map(|i| 50.0 + (i % 7) as f64).collect();
    let model = arima::fit(&series, arima::ArimaOrder::new(1, 0, 1)).unwrap();
    let ckpt = Checkpoint::new(SavedModel::Arima { model });
    let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
    assert_eq!(back, ckpt);
}

#[test]
fn checkpoint_rejects_foreign_versions() {
    let text = neural_checkpoint(1).to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
    assert!(Checkpoint::from_json(&text).is_err());
    assert!(Checkpoint::from_json("{}").is_err());
}

#[test]
fn roll_forward_feeds_predictions_back() {
    let ckpt = neural_checkpoint(5);
    let SavedModel::Neural { network, scaler, .. } = &ckpt.model else {
        unreachable!()
    };
    let history = [101.0, 103.0, 104.5, 102.0, 99.0];
    let out = roll_forward(network, scaler, &history, 4, 2).unwrap();
    let window: Vec<f64> = [103.0, 104.5, 102.0, 99.0, out[0]][1..]
        .iter()
        .map(|&v| scaler.forward(v))
        .collect();
    let direct = scaler.inverse(network.predict(&[window]).unwrap()[0]);
    assert!((out[1] - direct).abs() < 1e-9);
    assert!(roll_forward(network, scaler, &history, 4, 0).is_err());
    assert!(roll_forward(network, scaler, &history[..3], 4, 1).is_err());
}

#[test]
fn arima_mean_model_forecasts_constant() {
    let series = vec![100.0; 40];
    let model = arima::fit(&series, arima::ArimaOrder::new(0, 0, 0)).unwrap();
    let out = forecast(&SavedModel::Arima { model }, &series, 3).unwrap();
    assert_eq!(out, [100.0, 100.0, 100.0]);
}
