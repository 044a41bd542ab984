use proptest::prelude::*;
use sgmcmc::data::{synth_classification, DenseDataset, SparseDataset, SynthKind};
use sgmcmc::diagnostics::{finite_difference_gradient, relative_error};
use sgmcmc::models::{double_well_grad, double_well_potential, Activation, LogisticRegressionModel, MlpModel};
use sgmcmc::rng::Silent;
use sgmcmc::{
    make_minibatch_schedule, stochastic_neg_log_posterior_grad, Batch, BatchMode, Error, GradientModel, RngStream,
};

fn logreg_fixture(seed: u64) -> LogisticRegressionModel {
    let mut rng = RngStream::new(seed, 0);
    let mut d = SparseDataset::new(6);
    for i in 0..60 {
        let mut entries = Vec::new();
        for j in 0..6 {
            if rng.uniform() < 0.5 {
                entries.push((j, rng.normal()));
            }
        }
        d.push_row(&entries, (i % 2) as f64).unwrap();
    }
    LogisticRegressionModel::new(d, 10.0)
}

#[test]
fn double_well_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(1, 0);
    for _ in 0..20 {
        let theta = -5.0 + 9.0 * rng.uniform();
        let fd = finite_difference_gradient(|x| double_well_potential(x[0]), &[theta], 1e-6)[0];
        let g = double_well_grad(theta);
        let rel = (g - fd).abs() / g.abs().max(fd.abs());
        assert!(rel < 1e-6, "theta {theta}: {g} vs {fd}");
    }
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    let model = logreg_fixture(3);
    let mut rng = RngStream::new(4, 0);
    for _ in 0..20 {
        let theta: Vec<f64> = (0..model.dim()).map(|_| 2.0 * rng.normal()).collect();
        let fd = finite_difference_gradient(|t| model.neg_log_posterior(t).unwrap(), &theta, 1e-6);
        let rel = relative_error(&model.full_gradient(&theta), &fd);
        assert!(rel < 1e-5, "relative error {rel}");
    }
}

#[test]
fn logreg_single_datum_gradient() {
    let mut d = SparseDataset::new(2);
    d.push_row(&[(0, 1.0)], 1.0).unwrap();
    let model = LogisticRegressionModel::new(d, 10.0);
    let g = stochastic_neg_log_posterior_grad(&model, &[0.0; 3], Batch::Indices(&[0]), &mut Silent).unwrap();
    assert_eq!(g, vec![-0.5, 0.0, -0.5]);
}

fn toy_mlp(activation: Activation) -> MlpModel {
    let mut rng = RngStream::new(8, 0);
    let n = 12;
    let features: Vec<f64> = (0..4 * n).map(|_| rng.normal()).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let data = DenseDataset::new(features, labels, 4, 3).unwrap();
    MlpModel::new(vec![4, 2, 3], activation, 1.0, data).unwrap()
}

fn away_from_kinks(model: &MlpModel, theta: &[f64]) -> bool {
    (0..model.data_size()).all(|i| model.hidden_preactivations(theta, i).iter().all(|z| z.abs() > 1e-4))
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    for activation in [Activation::Relu, Activation::Sigmoid] {
        let model = toy_mlp(activation);
        let mut rng = RngStream::new(12, activation as u64);
        let mut checked = 0;
        while checked < 20 {
            let theta: Vec<f64> = (0..model.dim()).map(|_| rng.normal()).collect();
            if !away_from_kinks(&model, &theta) {
                continue;
            }
            let fd = finite_difference_gradient(|t| model.neg_log_posterior(t).unwrap(), &theta, 1e-6);
            let rel = relative_error(&model.full_gradient(&theta), &fd);
            assert!(rel < 1e-4, "{activation:?}: relative error {rel}");
            checked += 1;
        }
    }
}

#[test]
fn full_index_batch_equals_full_gradient_bitwise() {
    let model = logreg_fixture(5);
    let theta: Vec<f64> = (0..model.dim()).map(|i| 0.1 * i as f64 - 0.2).collect();
    let all: Vec<usize> = (0..model.data_size()).collect();
    let g = stochastic_neg_log_posterior_grad(&model, &theta, Batch::Indices(&all), &mut Silent).unwrap();
    let full = model.full_gradient(&theta);
    assert!(g.iter().zip(&full).all(|(a, b)| a.to_bits() == b.to_bits()));

    let mlp = toy_mlp(Activation::Sigmoid);
    let theta: Vec<f64> = (0..mlp.dim()).map(|i| (i as f64).sin()).collect();
    let all: Vec<usize> = (0..mlp.data_size()).collect();
    let g = stochastic_neg_log_posterior_grad(&mlp, &theta, Batch::Indices(&all), &mut Silent).unwrap();
    assert!(g.iter().zip(&mlp.full_gradient(&theta)).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn minibatch_gradient_is_unbiased() {
    let model = logreg_fixture(6);
    let theta: Vec<f64> = (0..model.dim()).map(|i| 0.3 - 0.1 * i as f64).collect();
    let full = model.full_gradient(&theta);
    let mut schedule =
        make_minibatch_schedule(model.data_size(), 5, BatchMode::WithReplacement, RngStream::new(3, 3)).unwrap();
    let draws = 10_000;
    let n = model.dim();
    let (mut sum, mut sum_sq) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..draws {
        let batch = schedule.next_batch().to_vec();
        let g = stochastic_neg_log_posterior_grad(&model, &theta, Batch::Indices(&batch), &mut Silent).unwrap();
        for j in 0..n {
            sum[j] += g[j];
            sum_sq[j] += g[j] * g[j];
        }
    }
    for j in 0..n {
        let mean = sum[j] / draws as f64;
        let var = sum_sq[j] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!((mean - full[j]).abs() < 3.0 * se.max(1e-12), "coordinate {j}: {mean} vs {}", full[j]);
    }
}

#[test]
fn gradient_checks_inputs() {
    let model = logreg_fixture(7);
    assert!(matches!(
        stochastic_neg_log_posterior_grad(&model, &[0.0; 2], Batch::Full, &mut Silent),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        stochastic_neg_log_posterior_grad(&model, &vec![0.0; model.dim()], Batch::Indices(&[1000]), &mut Silent),
        Err(Error::InvalidArgument(_))
    ));
    let theta = vec![f64::NAN; model.dim()];
    match stochastic_neg_log_posterior_grad(&model, &theta, Batch::Full, &mut Silent) {
        Err(Error::Divergence { theta, .. }) => assert!(theta[0].is_nan()),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn mlp_on_two_gaussians_has_uniform_start() {
    let data = synth_classification(50, SynthKind::TwoGaussians, 1);
    let model = MlpModel::new(vec![2, 8, 2], Activation::Relu, 1.0, data).unwrap();
    let probs = model.predict(&vec![0.0; model.dim()], model.data());
    assert!(probs.iter().all(|&p| p == 0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn logreg_is_convex(a in prop::collection::vec(-5.0..5.0f64, 7), b in prop::collection::vec(-5.0..5.0f64, 7)) {
        let model = logreg_fixture(11);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let u = |t: &[f64]| model.neg_log_posterior(t).unwrap();
        prop_assert!(u(&mid) <= 0.5 * (u(&a) + u(&b)) + 1e-10);
    }

    #[test]
    fn mlp_probabilities_normalized(theta in prop::collection::vec(-3.0..3.0f64, 21)) {
        let model = toy_mlp(Activation::Relu);
        for row in model.forward(&theta, &model.data().features) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
