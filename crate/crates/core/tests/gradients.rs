//! Analytic CNN gradients against central differences.

use intent_core::embeddings::EmbeddingMatrix;
use intent_core::nnet::{CnnConfig, CnnModel, DropoutSource};
use intent_core::seed;
use rand::Rng;

const H: f64 = 1e-5;
const TOLERANCE: f64 = 1e-3;

fn tiny_model(seed_value: u64, l2: f64) -> CnnModel {
    let (v, d) = (6, 4);
    let mut rng = seed::rng(seed_value);
    let mut data: Vec<f64> = (0..v * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    data[..d].fill(0.0);
    let config = CnnConfig {
        filter_widths: vec![2, 3],
        filters_per_width: 2,
        fc_size: 3,
        l2_lambda: l2,
        seed: seed_value,
        ..CnnConfig::default()
    };
    let mut model = CnnModel::new(config, EmbeddingMatrix { rows: v, dimension: d, data }, 5, 3).unwrap();
    // nonzero biases so ReLUs sit away from their kinks
    for p in model.params.iter_mut().filter(|p| p.shape.len() == 1) {
        p.data.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
    }
    model
}

fn batch() -> Vec<(Vec<usize>, usize)> {
    vec![
        (vec![2, 3, 4, 5, 1], 0),
        (vec![5, 2, 0, 0, 0], 2),
        (vec![1, 4, 3, 0, 0], 1),
        (vec![3, 0, 0, 0, 0], 2),
    ]
}

fn source(masks: Option<&[Vec<f64>]>) -> DropoutSource<'_> {
    masks.map_or(DropoutSource::Off, DropoutSource::Fixed)
}

/// Largest relative error over every parameter except the padding row,
/// which is a constant rather than a trainable parameter, and how many of
/// the analytic gradients were nonzero.
fn max_relative_error(model: &CnnModel, masks: Option<&[Vec<f64>]>) -> (f64, usize) {
    let batch = batch();
    let (_, grads) = model.backward(&batch, &mut source(masks)).unwrap();
    let loss_at = |probe: &CnnModel| probe.backward(&batch, &mut source(masks)).unwrap().0;
    let d = model.embedding_dim();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut probe = model.clone();
    for k in 0..model.params.len() {
        let start = if k == 0 { d } else { 0 };
        for i in start..model.params[k].data.len() {
            let x = model.params[k].data[i];
            probe.params[k].data[i] = x + H;
            let up = loss_at(&probe);
            probe.params[k].data[i] = x - H;
            let down = loss_at(&probe);
            probe.params[k].data[i] = x;
            let numeric = (up - down) / (2.0 * H);
            let analytic = grads[k].data[i];
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic - numeric).abs() / scale);
            checked += usize::from(analytic != 0.0);
        }
    }
    (worst, checked)
}

#[test]
fn eval_mode_gradients_match_central_differences() {
    for s in [11, 12, 13] {
        let model = tiny_model(s, 0.0);
        let (err, nonzero) = max_relative_error(&model, None);
        // a dead network would pass trivially
        assert!(nonzero > 40, "seed {s}: only {nonzero} nonzero gradients");
        assert!(err <= TOLERANCE, "seed {s}: relative error {err}");
    }
}

#[test]
fn regularized_gradients_with_fixed_dropout_masks() {
    let model = tiny_model(21, 0.01);
    let masks = vec![
        vec![2.0, 0.0, 2.0],
        vec![0.0, 2.0, 2.0],
        vec![2.0, 2.0, 0.0],
        vec![2.0, 2.0, 2.0],
    ];
    let (err, _) = max_relative_error(&model, Some(&masks));
    assert!(err <= TOLERANCE, "relative error {err}");
}

#[test]
fn padding_row_gradient_is_zero() {
    let model = tiny_model(5, 0.01);
    let (_, grads) = model.backward(&batch(), &mut DropoutSource::Off).unwrap();
    assert!(grads[0].data[..model.embedding_dim()].iter().all(|&g| g == 0.0));
}
