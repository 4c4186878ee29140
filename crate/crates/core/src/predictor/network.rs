//! Encoder → shared LSTM stack → per-task LSTM heads → sigmoid outputs,
//! with exact gradients by backpropagation through time.
//!
//! Every recurrent layer sees the whole window. Each head's output layer
//! reads the hidden state of the head's last time step (or the last shared
//! state when a head has no recurrent layers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{argument, config, Result};
use crate::features::{FeatureVector, TargetTuple, WindowedSample};
use crate::nn::{
    lstm_sequence_backward, Activation, DenseLayer, GradientBundle, LstmCellParams, LstmState, LstmStep, ParamSet,
};

/// One task-specific branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub recurrent: Vec<LstmCellParams>,
    pub output: DenseLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: Option<DenseLayer>,
    pub shared: Vec<LstmCellParams>,
    pub heads: Vec<Head>,
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = Vec::new();
        if let Some(enc) = &self.encoder {
            t.extend(enc.tensors());
        }
        for layer in &self.shared {
            t.extend(layer.tensors());
        }
        for head in &self.heads {
            for layer in &head.recurrent {
                t.extend(layer.tensors());
            }
            t.extend(head.output.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = Vec::new();
        if let Some(enc) = &mut self.encoder {
            t.extend(enc.tensors_mut());
        }
        for layer in &mut self.shared {
            t.extend(layer.tensors_mut());
        }
        for head in &mut self.heads {
            for layer in &mut head.recurrent {
                t.extend(layer.tensors_mut());
            }
            t.extend(head.output.tensors_mut());
        }
        t
    }
}

/// Instantiate the architecture described by `cfg`. With `use_ae` the
/// pretrained encoder is copied in; everything else is freshly initialised
/// from `cfg.seed`.
pub fn build_model(cfg: &ModelConfig, encoder: Option<&DenseLayer>) -> Result<ModelParams> {
    cfg.validate()?;
    let encoder = match (cfg.use_ae, encoder) {
        (true, Some(enc)) => {
            if enc.input_dim() != FeatureVector::LEN {
                return Err(config(format!(
                    "encoder takes {} inputs, expected {}",
                    enc.input_dim(),
                    FeatureVector::LEN
                )));
            }
            Some(enc.clone())
        }
        (true, None) => return Err(config("use_ae is set but no pretrained encoder was supplied")),
        (false, _) => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut width = encoder.as_ref().map_or(FeatureVector::LEN, DenseLayer::output_dim);

    let mut shared = Vec::with_capacity(cfg.shared_layers);
    for _ in 0..cfg.shared_layers {
        shared.push(LstmCellParams::glorot(
            width,
            cfg.shared_hidden,
            cfg.forget_bias,
            &mut rng,
        ));
        width = cfg.shared_hidden;
    }

    let outputs_per_head = if cfg.multi_task { 1 } else { 4 };
    let heads = (0..cfg.head_count())
        .map(|_| {
            let mut w = width;
            let mut recurrent = Vec::with_capacity(cfg.task_layers);
            for _ in 0..cfg.task_layers {
                recurrent.push(LstmCellParams::glorot(w, cfg.head_hidden, cfg.forget_bias, &mut rng));
                w = cfg.head_hidden;
            }
            let output = DenseLayer::glorot(w, outputs_per_head, Activation::Sigmoid, &mut rng);
            Head { recurrent, output }
        })
        .collect();

    Ok(ModelParams { encoder, shared, heads })
}

struct HeadTrace {
    layers: Vec<Vec<LstmStep>>,
    readout: Vec<f64>,
    output: Vec<f64>,
}

/// Cached activations of one forward pass.
struct Trace {
    raw: Vec<[f64; 8]>,
    encoded: Option<Vec<Vec<f64>>>,
    shared: Vec<Vec<LstmStep>>,
    heads: Vec<HeadTrace>,
}

fn run_stack(layers: &[LstmCellParams], input: &[&[f64]]) -> Vec<Vec<LstmStep>> {
    let mut traces: Vec<Vec<LstmStep>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let hidden = layer.hidden_size();
        let seq: Vec<&[f64]> = match traces.last() {
            Some(prev) => prev.iter().map(|s| s.state.h.as_slice()).collect(),
            None => input.to_vec(),
        };
        let mut steps: Vec<LstmStep> = Vec::with_capacity(seq.len());
        let zero = LstmState::zeros(hidden);
        for x in seq {
            let prev = steps.last().map_or(&zero, |s| &s.state);
            let step = crate::nn::lstm_step_unchecked(layer, prev, x);
            steps.push(step);
        }
        traces.push(steps);
    }
    traces
}

fn stack_output<'a>(traces: &'a [Vec<LstmStep>], input: &[&'a [f64]]) -> Vec<&'a [f64]> {
    match traces.last() {
        Some(top) => top.iter().map(|s| s.state.h.as_slice()).collect(),
        None => input.to_vec(),
    }
}

/// Backprop a per-step gradient through a stack, top layer first. Returns
/// the gradient with respect to the stack's input sequence.
fn backprop_stack(
    layers: &[LstmCellParams],
    traces: &[Vec<LstmStep>],
    mut d_seq: Vec<Vec<f64>>,
    grads: &mut [LstmCellParams],
) -> Vec<Vec<f64>> {
    for k in (0..layers.len()).rev() {
        d_seq = lstm_sequence_backward(&layers[k], &traces[k], &d_seq, &mut grads[k]);
    }
    d_seq
}

impl ModelParams {
    pub fn input_width(&self) -> usize {
        FeatureVector::LEN
    }

    fn forward_trace(&self, window: &[FeatureVector]) -> Trace {
        let raw: Vec<[f64; 8]> = window.iter().map(FeatureVector::to_array).collect();
        let encoded = self
            .encoder
            .as_ref()
            .map(|enc| raw.iter().map(|x| enc.forward_unchecked(x)).collect::<Vec<_>>());
        let input: Vec<&[f64]> = match &encoded {
            Some(e) => e.iter().map(Vec::as_slice).collect(),
            None => raw.iter().map(|x| x.as_slice()).collect(),
        };
        let shared = run_stack(&self.shared, &input);
        let shared_out = stack_output(&shared, &input);
        let heads = self
            .heads
            .iter()
            .map(|head| {
                let layers = run_stack(&head.recurrent, &shared_out);
                let readout = stack_output(&layers, &shared_out)
                    .last()
                    .expect("window is non-empty")
                    .to_vec();
                let output = head.output.forward_unchecked(&readout);
                HeadTrace {
                    layers,
                    readout,
                    output,
                }
            })
            .collect();
        Trace {
            raw,
            encoded,
            shared,
            heads,
        }
    }

    fn outputs_of(trace: &Trace) -> [f64; 4] {
        let flat: Vec<f64> = trace.heads.iter().flat_map(|h| h.output.iter().copied()).collect();
        [flat[0], flat[1], flat[2], flat[3]]
    }

    /// The four sigmoid outputs for one window, in target order.
    pub fn forward(&self, window: &[FeatureVector]) -> Result<TargetTuple> {
        if window.is_empty() {
            return Err(argument("empty input window"));
        }
        Ok(TargetTuple::from_array(Self::outputs_of(&self.forward_trace(window))))
    }

    /// Accumulate `dL/dθ` for one sample given `dL/d(outputs)`.
    fn backward(&self, trace: &Trace, d_out: &[f64; 4], grads: &mut ModelParams, train_encoder: bool) {
        let steps = trace.raw.len();
        let shared_width = match self.shared.last() {
            Some(l) => l.hidden_size(),
            None => self.encoder.as_ref().map_or(FeatureVector::LEN, DenseLayer::output_dim),
        };
        let mut d_shared: Vec<Vec<f64>> = vec![vec![0.0; shared_width]; steps];

        let per_head = 4 / self.heads.len();
        for (k, (head, ht)) in self.heads.iter().zip(&trace.heads).enumerate() {
            let dy = &d_out[k * per_head..(k + 1) * per_head];
            let g = &mut grads.heads[k];
            let d_readout = head.output.backward(&ht.readout, &ht.output, dy, &mut g.output);
            if head.recurrent.is_empty() {
                for (acc, d) in d_shared[steps - 1].iter_mut().zip(&d_readout) {
                    *acc += d;
                }
                continue;
            }
            let top_hidden = d_readout.len();
            let mut d_top = vec![vec![0.0; top_hidden]; steps];
            d_top[steps - 1] = d_readout;
            let d_in = backprop_stack(&head.recurrent, &ht.layers, d_top, &mut g.recurrent);
            for (acc_t, d_t) in d_shared.iter_mut().zip(d_in) {
                for (acc, d) in acc_t.iter_mut().zip(d_t) {
                    *acc += d;
                }
            }
        }

        let d_input = backprop_stack(&self.shared, &trace.shared, d_shared, &mut grads.shared);

        if !train_encoder {
            return;
        }
        if let (Some(enc), Some(encoded), Some(g)) = (&self.encoder, &trace.encoded, grads.encoder.as_mut()) {
            for t in 0..steps {
                enc.backward(&trace.raw[t], &encoded[t], &d_input[t], g);
            }
        }
    }

    /// Training loss over `samples`: the sum of the four per-output MSEs for
    /// multi-task models, the plain 4-dimensional MSE for single-task ones.
    pub fn loss(&self, samples: &[&WindowedSample]) -> f64 {
        let scale = self.output_scale();
        samples
            .iter()
            .map(|s| {
                let p = Self::outputs_of(&self.forward_trace(&s.window));
                let t = s.target.to_array();
                (0..4).map(|k| (p[k] - t[k]).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            * scale
            / samples.len() as f64
    }

    fn output_scale(&self) -> f64 {
        if self.heads.len() == 4 {
            1.0
        } else {
            0.25
        }
    }

    /// Loss and exact gradient over a batch.
    pub fn loss_and_gradient(&self, samples: &[&WindowedSample], train_encoder: bool) -> (f64, ModelParams) {
        let mut grads = self.clone();
        grads.fill_zero();
        let scale = self.output_scale() / samples.len() as f64;
        let mut loss = 0.0;
        for s in samples {
            let trace = self.forward_trace(&s.window);
            let p = Self::outputs_of(&trace);
            let t = s.target.to_array();
            let mut d_out = [0.0; 4];
            for k in 0..4 {
                let r = p[k] - t[k];
                loss += r * r * scale;
                d_out[k] = 2.0 * r * scale;
            }
            self.backward(&trace, &d_out, &mut grads, train_encoder);
        }
        (loss, grads)
    }
}

/// Loss and gradient bundle for a batch of windowed samples.
pub fn compute_gradients(params: &ModelParams, samples: &[&WindowedSample]) -> Result<(f64, GradientBundle)> {
    if samples.is_empty() {
        return Err(argument("gradient over an empty batch"));
    }
    let (loss, grads) = params.loss_and_gradient(samples, true);
    Ok((loss, GradientBundle::from_params(&grads)))
}
