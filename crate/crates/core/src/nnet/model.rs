use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CnnConfig;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::seed;
use crate::textproc::PAD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "tensor shape/data mismatch");
        Tensor { shape, data }
    }

    fn uniform(shape: Vec<usize>, limit: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut t = Tensor::zeros(shape);
        for x in &mut t.data {
            *x = rng.random_range(-limit..limit);
        }
        t
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Gradients share the parameter layout of the model.
pub type Gradients = Vec<Tensor>;

/// Trainable parameters of the sentence CNN.
///
/// Parameter order: embedding `[V, D]`; per filter width `w`, weights
/// `[F, w, D]` then bias `[F]`; fully connected weights `[widths*F, H]` and
/// bias `[H]`; softmax weights `[H, C]` and bias `[C]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub max_len: usize,
    pub num_classes: usize,
    pub params: Vec<Tensor>,
}

pub struct Forward {
    pub logits: Vec<f64>,
    pub fc_activations: Vec<f64>,
}

/// Where dropout masks come from during a forward pass.
pub enum DropoutSource<'a> {
    /// Evaluation mode: no dropout, no rescaling.
    Off,
    /// Sample inverted-dropout masks from the generator.
    Sample(&'a mut ChaCha8Rng),
    /// Use the given per-example masks (already scaled by 1/keep).
    Fixed(&'a [Vec<f64>]),
}

impl DropoutSource<'_> {
    fn mask(&mut self, example: usize, size: usize, keep: f64) -> Option<Vec<f64>> {
        match self {
            DropoutSource::Off => None,
            DropoutSource::Sample(rng) => Some(
                (0..size)
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect(),
            ),
            DropoutSource::Fixed(masks) => Some(masks[example].clone()),
        }
    }
}

struct Trace {
    input: Vec<usize>,
    /// Per width, per filter: position of the max and its pre-activation.
    pooled_at: Vec<Vec<(usize, f64)>>,
    pooled: Vec<f64>,
    fc_pre: Vec<f64>,
    fc: Vec<f64>,
    mask: Option<Vec<f64>>,
    dropped: Vec<f64>,
    logits: Vec<f64>,
}

impl CnnModel {
    /// Randomly initialized network around the given embedding matrix.
    pub fn new(config: CnnConfig, embedding: EmbeddingMatrix, max_len: usize, num_classes: usize) -> Result<Self> {
        config.validate()?;
        if max_len < config.max_width() {
            return Err(Error::Config(format!(
                "max_len {max_len} is shorter than the widest filter {}",
                config.max_width()
            )));
        }
        if num_classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        let mut rng = seed::rng(seed::derive(config.seed, &["cnn", "init"], &[]));
        let (v, d) = (embedding.rows, embedding.dimension);
        let f = config.filters_per_width;
        let mut params = vec![Tensor::from_vec(vec![v, d], embedding.data)];
        for &w in &config.filter_widths {
            let limit = (6.0 / (w * d + f) as f64).sqrt();
            params.push(Tensor::uniform(vec![f, w, d], limit, &mut rng));
            params.push(Tensor::zeros(vec![f]));
        }
        let pooled = f * config.filter_widths.len();
        let h = config.fc_size;
        params.push(Tensor::uniform(vec![pooled, h], (6.0 / (pooled + h) as f64).sqrt(), &mut rng));
        params.push(Tensor::zeros(vec![h]));
        params.push(Tensor::uniform(vec![h, num_classes], (6.0 / (h + num_classes) as f64).sqrt(), &mut rng));
        params.push(Tensor::zeros(vec![num_classes]));
        Ok(CnnModel {
            config,
            max_len,
            num_classes,
            params,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.params[0].shape[0]
    }

    pub fn embedding_dim(&self) -> usize {
        self.params[0].shape[1]
    }

    pub fn embedding(&self) -> &Tensor {
        &self.params[0]
    }

    pub fn conv_weight_index(&self, branch: usize) -> usize {
        1 + 2 * branch
    }

    pub fn fc_weight_index(&self) -> usize {
        1 + 2 * self.config.filter_widths.len()
    }

    pub fn out_weight_index(&self) -> usize {
        self.fc_weight_index() + 2
    }

    /// Indices of the weight tensors covered by the L2 penalty.
    pub fn regularized(&self) -> [usize; 2] {
        [self.fc_weight_index(), self.out_weight_index()]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.data.iter().all(|x| x.is_finite()))
    }

    pub fn zero_gradients(&self) -> Gradients {
        self.params.iter().map(|p| Tensor::zeros(p.shape.clone())).collect()
    }

    fn check_input(&self, input: &[usize]) -> Result<()> {
        if input.len() != self.max_len {
            return Err(Error::DimensionMismatch {
                expected: self.max_len,
                got: input.len(),
            });
        }
        if let Some(&bad) = input.iter().find(|&&i| i >= self.vocab_size()) {
            return Err(Error::Invalid(format!(
                "token index {bad} outside vocabulary of size {}",
                self.vocab_size()
            )));
        }
        Ok(())
    }

    fn trace(&self, input: &[usize], mask: Option<Vec<f64>>) -> Trace {
        let d = self.embedding_dim();
        let emb = &self.params[0].data;
        let mut x = vec![0.0; self.max_len * d];
        for (pos, &tok) in input.iter().enumerate() {
            x[pos * d..(pos + 1) * d].copy_from_slice(&emb[tok * d..(tok + 1) * d]);
        }
        // windows starting on padding are masked out, unless there is no real token at all
        let real_len = input.iter().position(|&t| t == PAD).unwrap_or(input.len());

        let f = self.config.filters_per_width;
        let mut pooled = Vec::with_capacity(f * self.config.filter_widths.len());
        let mut pooled_at = Vec::with_capacity(self.config.filter_widths.len());
        for (b, &w) in self.config.filter_widths.iter().enumerate() {
            let weight = &self.params[self.conv_weight_index(b)].data;
            let bias = &self.params[self.conv_weight_index(b) + 1].data;
            let positions = self.max_len - w + 1;
            let valid = if real_len == 0 { positions } else { positions.min(real_len) };
            let span = w * d;
            let mut best = Vec::with_capacity(f);
            for fi in 0..f {
                let kernel = &weight[fi * span..(fi + 1) * span];
                let mut arg = (0, f64::NEG_INFINITY);
                for p in 0..valid {
                    let window = &x[p * d..p * d + span];
                    let z = bias[fi] + dot(kernel, window);
                    if z > arg.1 {
                        arg = (p, z);
                    }
                }
                pooled.push(arg.1.max(0.0));
                best.push(arg);
            }
            pooled_at.push(best);
        }

        let h = self.config.fc_size;
        let fc_w = &self.params[self.fc_weight_index()].data;
        let fc_b = &self.params[self.fc_weight_index() + 1].data;
        let mut fc_pre = fc_b.clone();
        for (i, &pi) in pooled.iter().enumerate() {
            if pi != 0.0 {
                axpy(pi, &fc_w[i * h..(i + 1) * h], &mut fc_pre);
            }
        }
        let fc: Vec<f64> = fc_pre.iter().map(|&a| a.max(0.0)).collect();
        let dropped = match &mask {
            Some(m) => fc.iter().zip(m).map(|(a, b)| a * b).collect(),
            None => fc.clone(),
        };

        let c = self.num_classes;
        let out_w = &self.params[self.out_weight_index()].data;
        let mut logits = self.params[self.out_weight_index() + 1].data.clone();
        for (j, &hj) in dropped.iter().enumerate() {
            if hj != 0.0 {
                axpy(hj, &out_w[j * c..(j + 1) * c], &mut logits);
            }
        }
        Trace {
            input: input.to_vec(),
            pooled_at,
            pooled,
            fc_pre,
            fc,
            mask,
            dropped,
            logits,
        }
    }

    /// Accumulate `scale * d(loss)/d(params)` for one example into `grads`,
    /// excluding the L2 term. Returns the example's cross-entropy.
    fn accumulate(&self, trace: &Trace, target: usize, scale: f64, grads: &mut Gradients) -> f64 {
        let probs = softmax(&trace.logits);
        let ce = -log_softmax_at(&trace.logits, target);
        let c = self.num_classes;
        let h = self.config.fc_size;

        let mut dlogits: Vec<f64> = probs.iter().map(|p| p * scale).collect();
        dlogits[target] -= scale;

        let ow = self.out_weight_index();
        let out_w = &self.params[ow].data;
        let mut d_dropped = vec![0.0; h];
        for j in 0..h {
            let row = &out_w[j * c..(j + 1) * c];
            d_dropped[j] = dot(row, &dlogits);
            if trace.dropped[j] != 0.0 {
                axpy(trace.dropped[j], &dlogits, &mut grads[ow].data[j * c..(j + 1) * c]);
            }
        }
        axpy(1.0, &dlogits, &mut grads[ow + 1].data);

        let mut d_fc_pre = d_dropped;
        for j in 0..h {
            let m = trace.mask.as_ref().map_or(1.0, |m| m[j]);
            d_fc_pre[j] *= if trace.fc_pre[j] > 0.0 { m } else { 0.0 };
        }

        let fw = self.fc_weight_index();
        let fc_w = &self.params[fw].data;
        let mut d_pooled = vec![0.0; trace.pooled.len()];
        for (i, &pi) in trace.pooled.iter().enumerate() {
            if pi > 0.0 {
                d_pooled[i] = dot(&fc_w[i * h..(i + 1) * h], &d_fc_pre);
                axpy(pi, &d_fc_pre, &mut grads[fw].data[i * h..(i + 1) * h]);
            }
        }
        axpy(1.0, &d_fc_pre, &mut grads[fw + 1].data);

        let d = self.embedding_dim();
        let f = self.config.filters_per_width;
        let trainable = self.config.embedding_trainable;
        for (b, &w) in self.config.filter_widths.iter().enumerate() {
            let cw = self.conv_weight_index(b);
            let span = w * d;
            for fi in 0..f {
                let g = d_pooled[b * f + fi];
                if g == 0.0 {
                    continue;
                }
                let (p, _) = trace.pooled_at[b][fi];
                grads[cw + 1].data[fi] += g;
                for k in 0..w {
                    let tok = trace.input[p + k];
                    if tok == PAD {
                        continue;
                    }
                    let e = &self.params[0].data[tok * d..(tok + 1) * d];
                    let off = fi * span + k * d;
                    axpy(g, e, &mut grads[cw].data[off..off + d]);
                    if trainable {
                        let kernel = &self.params[cw].data[off..off + d];
                        axpy(g, kernel, &mut grads[0].data[tok * d..(tok + 1) * d]);
                    }
                }
            }
        }
        ce
    }

    /// Mean batch loss and its exact gradient with respect to every parameter.
    /// The `PAD` embedding row is a constant and always receives zero gradient.
    pub fn backward(&self, batch: &[(Vec<usize>, usize)], dropout: &mut DropoutSource<'_>) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut grads = self.zero_gradients();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for (n, (input, target)) in batch.iter().enumerate() {
            self.check_input(input)?;
            if *target >= self.num_classes {
                return Err(Error::Invalid(format!("class {target} out of range")));
            }
            let mask = dropout.mask(n, self.config.fc_size, self.config.dropout_keep);
            let trace = self.trace(input, mask);
            total += self.accumulate(&trace, *target, scale, &mut grads);
        }
        let lambda = self.config.l2_lambda;
        let mut reg = 0.0;
        for k in self.regularized() {
            reg += self.params[k].sum_squares();
            for (g, p) in grads[k].data.iter_mut().zip(&self.params[k].data) {
                *g += 2.0 * lambda * p;
            }
        }
        Ok((total * scale + lambda * reg, grads))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], target: usize) -> f64 {
    // ln_1p over the non-max terms keeps tiny losses representable
    let (arg, max) = logits
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, z)| if z > best.1 { (i, z) } else { best });
    let rest: f64 = logits.iter().enumerate().filter(|&(i, _)| i != arg).map(|(_, z)| (z - max).exp()).sum();
    (logits[target] - max) - rest.ln_1p()
}

/// Forward pass over one index sequence of length `max_len`.
pub fn forward(model: &CnnModel, input: &[usize], dropout: &mut DropoutSource<'_>) -> Result<Forward> {
    model.check_input(input)?;
    let mask = dropout.mask(0, model.config.fc_size, model.config.dropout_keep);
    let t = model.trace(input, mask);
    Ok(Forward {
        logits: t.logits,
        fc_activations: t.fc,
    })
}

/// Softmax cross-entropy plus `l2_lambda` times the squared norm of the fully
/// connected and softmax weights.
pub fn loss(logits: &[f64], target: usize, model: &CnnModel, l2_lambda: f64) -> f64 {
    let reg: f64 = model.regularized().iter().map(|&k| model.params[k].sum_squares()).sum();
    -log_softmax_at(logits, target) + l2_lambda * reg
}

/// Eval-mode fully connected activations (post-ReLU, pre-dropout).
pub fn extract_cnn_codes(model: &CnnModel, input: &[usize]) -> Result<Vec<f64>> {
    Ok(forward(model, input, &mut DropoutSource::Off)?.fc_activations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn tiny_config(widths: Vec<usize>, filters: usize, fc: usize) -> CnnConfig {
        CnnConfig {
            filter_widths: widths,
            filters_per_width: filters,
            fc_size: fc,
            dropout_keep: 0.5,
            l2_lambda: 0.0,
            seed: 3,
            ..CnnConfig::default()
        }
    }

    fn random_embedding(v: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = seed::rng(seed);
        let mut data: Vec<f64> = (0..v * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        data[..d].iter_mut().for_each(|x| *x = 0.0);
        EmbeddingMatrix {
            rows: v,
            dimension: d,
            data,
        }
    }

    #[test]
    fn all_pad_input_with_zero_biases_gives_zero_codes() {
        let model = CnnModel::new(tiny_config(vec![2, 3], 2, 3), random_embedding(6, 4, 1), 5, 3).unwrap();
        let codes = extract_cnn_codes(&model, &[0; 5]).unwrap();
        assert_eq!(codes, vec![0.0; 3]);
    }

    #[test]
    fn zero_softmax_layer_gives_uniform_probabilities() {
        let mut model = CnnModel::new(tiny_config(vec![2], 2, 3), random_embedding(6, 4, 1), 4, 4).unwrap();
        let ow = model.out_weight_index();
        model.params[ow].data.iter_mut().for_each(|x| *x = 0.0);
        let out = forward(&model, &[2, 3, 0, 0], &mut DropoutSource::Off).unwrap();
        assert_eq!(out.logits, vec![0.0; 4]);
        assert!(softmax(&out.logits).iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((loss(&out.logits, 0, &model, 0.0) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_convolution() {
        // one width-2 filter [1, 1] over embeddings a=[1], b=[2] -> conv output 3
        let embedding = EmbeddingMatrix {
            rows: 4,
            dimension: 1,
            data: vec![0.0, 0.0, 1.0, 2.0],
        };
        let mut model = CnnModel::new(tiny_config(vec![2], 1, 1), embedding, 2, 2).unwrap();
        model.params[1].data = vec![1.0, 1.0];
        let fw = model.fc_weight_index();
        model.params[fw].data = vec![1.0];
        let codes = extract_cnn_codes(&model, &[2, 3]).unwrap();
        assert_eq!(codes, vec![3.0]);
    }

    #[test]
    fn loss_limits_and_regularizer() {
        let mut model = CnnModel::new(tiny_config(vec![2], 2, 3), random_embedding(6, 4, 1), 4, 3).unwrap();
        for k in model.regularized() {
            model.params[k].data.iter_mut().for_each(|x| *x = 0.0);
        }
        assert!((loss(&[0.0, 0.0, 0.0], 1, &model, 0.01) - 3f64.ln()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for margin in [0.0, 1.0, 5.0, 20.0, 50.0] {
            let l = loss(&[margin, 0.0, 0.0], 0, &model, 0.0);
            assert!(l < prev && l > 0.0);
            prev = l;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn regularizer_adds_two_lambda_w() {
        let mut cfg = tiny_config(vec![2], 2, 3);
        let model0 = CnnModel::new(cfg.clone(), random_embedding(6, 4, 1), 4, 3).unwrap();
        cfg.l2_lambda = 0.05;
        let model1 = CnnModel { config: cfg, ..model0.clone() };
        let batch = vec![(vec![2, 3, 4, 0], 1)];
        let (_, g0) = model0.backward(&batch, &mut DropoutSource::Off).unwrap();
        let (_, g1) = model1.backward(&batch, &mut DropoutSource::Off).unwrap();
        for k in model0.regularized() {
            for i in 0..g0[k].data.len() {
                let expect = g0[k].data[i] + 2.0 * 0.05 * model0.params[k].data[i];
                assert!((g1[k].data[i] - expect).abs() < 1e-14);
            }
        }
        assert_eq!(g0[1], g1[1]);
    }

    #[test]
    fn pad_row_gets_no_gradient() {
        let model = CnnModel::new(tiny_config(vec![2, 3], 2, 3), random_embedding(6, 4, 2), 6, 3).unwrap();
        let batch = vec![(vec![2, 3, 0, 0, 0, 0], 0), (vec![4, 0, 0, 0, 0, 0], 2)];
        let (_, g) = model.backward(&batch, &mut DropoutSource::Off).unwrap();
        assert!(g[0].data[..4].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CnnModel::new(tiny_config(vec![3], 2, 3), random_embedding(6, 4, 1), 2, 3).is_err());
        let model = CnnModel::new(tiny_config(vec![2], 2, 3), random_embedding(6, 4, 1), 4, 3).unwrap();
        assert!(forward(&model, &[1, 2], &mut DropoutSource::Off).is_err());
        assert!(forward(&model, &[1, 2, 9, 0], &mut DropoutSource::Off).is_err());
    }

    #[test]
    fn truncated_inputs_share_codes() {
        use crate::textproc::Vocabulary;
        let vocab = Vocabulary::from_tokens(["a", "b", "c", "d"].map(String::from).to_vec(), 1);
        let model = CnnModel::new(tiny_config(vec![2, 3], 3, 4), random_embedding(6, 4, 5), 3, 3).unwrap();
        let x = vocab.encode(&["a", "b", "c", "d"], 3);
        let y = vocab.encode(&["a", "b", "c", "a", "a"], 3);
        assert_eq!(extract_cnn_codes(&model, &x).unwrap(), extract_cnn_codes(&model, &y).unwrap());
    }

    #[test]
    fn eval_forward_is_repeatable() {
        let model = CnnModel::new(tiny_config(vec![2, 3], 3, 4), random_embedding(6, 4, 5), 5, 3).unwrap();
        let a = extract_cnn_codes(&model, &[2, 3, 4, 5, 0]).unwrap();
        let _ = forward(&model, &[5, 4, 0, 0, 0], &mut DropoutSource::Off).unwrap();
        let b = extract_cnn_codes(&model, &[2, 3, 4, 5, 0]).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn inverted_dropout_keeps_scale() {
        let mut rng = seed::rng(4);
        let mask = DropoutSource::Sample(&mut rng).mask(0, 20_000, 0.5).unwrap();
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
        let mean: f64 = mask.iter().sum::<f64>() / mask.len() as f64;
        assert!((mean - 1.0).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(logits in prop::collection::vec(-50.0f64..50.0, 1..10)) {
            let s: f64 = softmax(&logits).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn pooling_ignores_trailing_padding(tokens in prop::collection::vec(1usize..6, 1..4)) {
            // both lengths leave room for every window that starts on a real token
            let cfg = tiny_config(vec![2, 3], 2, 3);
            let short = CnnModel::new(cfg.clone(), random_embedding(6, 4, 8), 6, 3).unwrap();
            let long = CnnModel { max_len: 9, ..short.clone() };
            let mut a = tokens.clone();
            a.resize(6, 0);
            let mut b = tokens.clone();
            b.resize(9, 0);
            prop_assert_eq!(extract_cnn_codes(&short, &a).unwrap(), extract_cnn_codes(&long, &b).unwrap());
        }
    }
}
