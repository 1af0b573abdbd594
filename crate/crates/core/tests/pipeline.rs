//! End-to-end behaviour on synthetic data.

use fingerloc::augmentation::{augment, train_autoencoder, AugmentationPolicy, Strategy};
use fingerloc::dataset::{find_underrepresented, split, synth_generate, SynthSpec};
use fingerloc::nn::{self, LayerSpec, Network, Tensor};
use fingerloc::{
    centroid_baseline, drop_beacon, fit_and_evaluate, seed, BeaconLayout, ModelKind, ModelOptions, OptimizerConfig,
    SampleSource, TrainConfig,
};

pub fn dnn_memorizes_ten_samples() {
    let layout = BeaconLayout::library();
    let spec = SynthSpec { locations: 10, samples_per_location: 1, unlabelled: 0, ..Default::default() };
    let data = synth_generate(&layout, &spec, 1).unwrap();
    let cfg = TrainConfig { epochs: 2000, batch_size: 10, seed: 1, ..Default::default() };
    let mut net = fingerloc::build_model(ModelKind::Dnn, &layout, &ModelOptions::default(), 1).unwrap();
    let xs: Vec<Tensor> = data.labelled.iter().map(|s| Tensor::vector(s.rssi.normalized())).collect();
    let ts: Vec<Tensor> = data.labelled.iter().map(|s| Tensor::vector(vec![s.location.x, s.location.y])).collect();
    let history = nn::train(&mut net, &xs, &ts, &cfg).unwrap();
    let best = history.epoch_losses.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best < 0.01, "best training RMSE {best}");
}

pub fn autoencoder_loss_trends_down() {
    let layout = BeaconLayout::library();
    let spec = SynthSpec { locations: 10, samples_per_location: 1, unlabelled: 10, ..Default::default() };
    let data = synth_generate(&layout, &spec, 4).unwrap();
    let vectors: Vec<_> = data.unlabelled.iter().map(|u| u.rssi.clone()).collect();
    let policy = AugmentationPolicy { autoencoder_epochs: 500, ..Default::default() };
    let (_, history) = train_autoencoder(&vectors, &layout, &policy).unwrap();
    assert_eq!(history.epoch_losses.len(), 500);
    for (t, w) in history.epoch_losses.windows(2).enumerate() {
        assert!(w[1] <= 1.05 * w[0], "epoch {}: {} -> {}", t + 1, w[0], w[1]);
    }
    assert!(history.epoch_losses[499] < history.epoch_losses[0]);
}

pub fn dnn_beats_centroid_on_synthetic_corpus() {
    let layout = BeaconLayout::library();
    let data = synth_generate(&layout, &SynthSpec::default(), 42).unwrap();
    let (train, test) = split(&data.labelled, 0.8, 7);
    let cfg = TrainConfig { seed: 3, ..Default::default() };
    let (_, outcome) =
        fit_and_evaluate(ModelKind::Dnn, &ModelOptions::default(), &layout, &train, &test, &cfg).unwrap();
    let centroid = centroid_baseline(&train, &test, layout.cell_feet).unwrap();
    let gain = 1.0 - outcome.metrics.mean_error_ft / centroid.mean_error_ft;
    assert!(gain >= 0.3, "dnn {} ft vs centroid {} ft", outcome.metrics.mean_error_ft, centroid.mean_error_ft);
}

pub fn augmentation_accounting_on_synthetic_corpus() {
    let layout = BeaconLayout::library();
    let spec = SynthSpec { locations: 120, samples_per_location: 4, unlabelled: 500, ..Default::default() };
    let data = synth_generate(&layout, &spec, 9).unwrap();
    let vectors: Vec<_> = data.unlabelled.iter().map(|u| u.rssi.clone()).collect();
    let policy = AugmentationPolicy { autoencoder_epochs: 5, seed: 2, ..Default::default() };
    let (ae, _) = train_autoencoder(&vectors, &layout, &policy).unwrap();
    let under = find_underrepresented(&data.labelled, policy.threshold);
    let before = data.labelled.clone();
    for strategy in [Strategy::None, Strategy::Naive, Strategy::Autoencoder, Strategy::Hybrid] {
        let set = augment(&data.labelled, strategy, Some(&ae), &policy).unwrap();
        let c = set.counts;
        assert_eq!(set.samples.len(), c.original + c.naive + c.kept);
        assert_eq!(&set.samples[..c.original], before.as_slice());
        if matches!(strategy, Strategy::Naive | Strategy::Hybrid) {
            assert_eq!(c.naive, under.len());
        }
        if strategy.needs_autoencoder() {
            assert_eq!(c.kept + c.discarded, under.len());
        }
        for s in &set.samples[c.original..] {
            assert_ne!(s.source, SampleSource::Original);
            assert!(under.iter().any(|u| u.cell == s.location.cell()));
            assert!(s.rssi.as_slice().iter().all(|v| (-200.0..=0.0).contains(v)));
        }
    }
    assert_eq!(data.labelled, before);
}

pub fn rationalization_accounting_on_synthetic_corpus() {
    let layout = BeaconLayout::library();
    let data = synth_generate(&layout, &SynthSpec::default(), 5).unwrap();
    let before = data.labelled.clone();
    for (b, id) in layout.ids().enumerate() {
        let once = drop_beacon(&data.labelled, &layout, id).unwrap();
        assert_eq!(drop_beacon(&once, &layout, id).unwrap(), once);
        let single = data.labelled.iter().filter(|s| s.rssi.signal_set().collect::<Vec<_>>() == [b]).count();
        assert_eq!(data.labelled.len() - once.len(), single);
    }
    assert_eq!(data.labelled, before);
}

pub fn training_is_bit_reproducible() {
    let layout = BeaconLayout::library();
    let spec = SynthSpec { locations: 50, samples_per_location: 3, unlabelled: 0, ..Default::default() };
    let data = synth_generate(&layout, &spec, 6).unwrap();
    let (train, test) = split(&data.labelled, 0.8, 1);
    for kind in [ModelKind::Dnn, ModelKind::Cnn] {
        let cfg = TrainConfig { epochs: 3, optimizer: OptimizerConfig::sgd(), seed: 8, ..Default::default() };
        let run = || fit_and_evaluate(kind, &ModelOptions::default(), &layout, &train, &test, &cfg).unwrap();
        let (a, oa) = run();
        let (b, ob) = run();
        assert_eq!(nn::save_network(a.network()), nn::save_network(b.network()));
        assert_eq!(oa, ob);
    }
}

pub fn saved_network_predicts_identically() {
    let specs =
        [LayerSpec::Dense { inputs: 13, outputs: 20 }, LayerSpec::Relu, LayerSpec::Dense { inputs: 20, outputs: 2 }];
    let net = Network::build(vec![13], &specs, &mut seed::rng(1)).unwrap();
    let back = nn::load_network(&nn::save_network(&net)).unwrap();
    let mut rng = seed::rng(2);
    for _ in 0..100 {
        let x = Tensor::vector((0..13).map(|_| rand::Rng::random::<f64>(&mut rng)).collect());
        assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());
    }
}

// The checks are plain functions so the acceptance target can run them too.
mod tests {
    #[test]
    fn dnn_memorizes_ten_samples() {
        super::dnn_memorizes_ten_samples();
    }

    #[test]
    fn autoencoder_loss_trends_down() {
        super::autoencoder_loss_trends_down();
    }

    #[test]
    fn dnn_beats_centroid_on_synthetic_corpus() {
        super::dnn_beats_centroid_on_synthetic_corpus();
    }

    #[test]
    fn augmentation_accounting_on_synthetic_corpus() {
        super::augmentation_accounting_on_synthetic_corpus();
    }

    #[test]
    fn rationalization_accounting_on_synthetic_corpus() {
        super::rationalization_accounting_on_synthetic_corpus();
    }

    #[test]
    fn training_is_bit_reproducible() {
        super::training_is_bit_reproducible();
    }

    #[test]
    fn saved_network_predicts_identically() {
        super::saved_network_predicts_identically();
    }
}
