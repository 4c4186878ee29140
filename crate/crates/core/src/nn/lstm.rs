//! LSTM cell with forget, input, candidate and output gates acting on the
//! concatenation `[h_{t-1}, x_t]`, plus full backpropagation through time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::{glorot_uniform, Matrix, ParamSet};
use crate::error::{argument, config, Result};

/// Gate weights are `hidden × (hidden + input)`; columns `0..hidden` act on
/// the previous hidden state and the rest on the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w_forget: Matrix,
    pub w_input: Matrix,
    pub w_cell: Matrix,
    pub w_output: Matrix,
    pub b_forget: Vec<f64>,
    pub b_input: Vec<f64>,
    pub b_cell: Vec<f64>,
    pub b_output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// One evaluated time step: the new state and everything BPTT needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStep {
    pub state: LstmState,
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
    pub(crate) concat: Vec<f64>,
    pub(crate) prev_c: Vec<f64>,
    pub(crate) tanh_c: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let k = hidden + input;
        Self {
            w_forget: Matrix::zeros(hidden, k),
            w_input: Matrix::zeros(hidden, k),
            w_cell: Matrix::zeros(hidden, k),
            w_output: Matrix::zeros(hidden, k),
            b_forget: vec![0.0; hidden],
            b_input: vec![0.0; hidden],
            b_cell: vec![0.0; hidden],
            b_output: vec![0.0; hidden],
        }
    }

    /// Glorot-uniform gate weights, zero biases except the forget gate at
    /// `forget_bias`.
    pub fn glorot<R: Rng + ?Sized>(input: usize, hidden: usize, forget_bias: f64, rng: &mut R) -> Self {
        let k = hidden + input;
        Self {
            w_forget: glorot_uniform(hidden, k, rng),
            w_input: glorot_uniform(hidden, k, rng),
            w_cell: glorot_uniform(hidden, k, rng),
            w_output: glorot_uniform(hidden, k, rng),
            b_forget: vec![forget_bias; hidden],
            b_input: vec![0.0; hidden],
            b_cell: vec![0.0; hidden],
            b_output: vec![0.0; hidden],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_forget.rows()
    }

    pub fn input_size(&self) -> usize {
        self.w_forget.cols() - self.hidden_size()
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.w_forget.shape();
        let hidden = shape.0;
        let gates = [&self.w_input, &self.w_cell, &self.w_output];
        if gates.iter().any(|w| w.shape() != shape) {
            return Err(config("LSTM gate matrices differ in shape"));
        }
        if shape.1 < hidden {
            return Err(config("LSTM gate matrices narrower than the hidden size"));
        }
        let biases = [&self.b_forget, &self.b_input, &self.b_cell, &self.b_output];
        if biases.iter().any(|b| b.len() != hidden) {
            return Err(config("LSTM bias length differs from the hidden size"));
        }
        Ok(())
    }
}

impl ParamSet for LstmCellParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_forget.as_slice(),
            self.w_input.as_slice(),
            self.w_cell.as_slice(),
            self.w_output.as_slice(),
            &self.b_forget,
            &self.b_input,
            &self.b_cell,
            &self.b_output,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_forget.as_mut_slice(),
            self.w_input.as_mut_slice(),
            self.w_cell.as_mut_slice(),
            self.w_output.as_mut_slice(),
            &mut self.b_forget,
            &mut self.b_input,
            &mut self.b_cell,
            &mut self.b_output,
        ]
    }
}

/// Advance the cell by one step.
pub fn lstm_cell_step(params: &LstmCellParams, prev: &LstmState, x: &[f64]) -> Result<LstmStep> {
    let hidden = params.hidden_size();
    if prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(config(format!(
            "LSTM state has dims ({}, {}), expected {hidden}",
            prev.h.len(),
            prev.c.len()
        )));
    }
    if x.len() != params.input_size() {
        return Err(config(format!(
            "LSTM expects {} inputs, got {}",
            params.input_size(),
            x.len()
        )));
    }
    Ok(step_unchecked(params, prev, x))
}

pub(crate) fn step_unchecked(params: &LstmCellParams, prev: &LstmState, x: &[f64]) -> LstmStep {
    let hidden = params.hidden_size();
    let mut concat = Vec::with_capacity(hidden + x.len());
    concat.extend_from_slice(&prev.h);
    concat.extend_from_slice(x);

    let mut forget = vec![0.0; hidden];
    let mut input = vec![0.0; hidden];
    let mut candidate = vec![0.0; hidden];
    let mut output = vec![0.0; hidden];
    params.w_forget.affine_into(&concat, &params.b_forget, &mut forget);
    params.w_input.affine_into(&concat, &params.b_input, &mut input);
    params.w_cell.affine_into(&concat, &params.b_cell, &mut candidate);
    params.w_output.affine_into(&concat, &params.b_output, &mut output);

    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    for j in 0..hidden {
        forget[j] = sigmoid(forget[j]);
        input[j] = sigmoid(input[j]);
        candidate[j] = candidate[j].tanh();
        output[j] = sigmoid(output[j]);
        c[j] = forget[j] * prev.c[j] + input[j] * candidate[j];
        tanh_c[j] = c[j].tanh();
        h[j] = output[j] * tanh_c[j];
    }

    LstmStep {
        state: LstmState { h, c },
        forget,
        input,
        candidate,
        output,
        concat,
        prev_c: prev.c.clone(),
        tanh_c,
    }
}

/// Run the cell over a whole sequence, keeping every intermediate step.
pub fn lstm_sequence_forward<X: AsRef<[f64]>>(
    params: &LstmCellParams,
    inputs: &[X],
    init: &LstmState,
) -> Result<Vec<LstmStep>> {
    if inputs.is_empty() {
        return Err(argument("LSTM input sequence is empty"));
    }
    let mut steps: Vec<LstmStep> = Vec::with_capacity(inputs.len());
    let first = lstm_cell_step(params, init, inputs[0].as_ref())?;
    steps.push(first);
    for x in &inputs[1..] {
        let x = x.as_ref();
        if x.len() != params.input_size() {
            return Err(config(format!(
                "LSTM expects {} inputs, got {}",
                params.input_size(),
                x.len()
            )));
        }
        let next = step_unchecked(params, &steps[steps.len() - 1].state, x);
        steps.push(next);
    }
    Ok(steps)
}

/// Backpropagation through time over the full sequence.
///
/// `dh[t]` is the loss gradient arriving at `h_t` from outside the cell
/// (a layer above or an output head). Parameter gradients accumulate into
/// `grad`; the return value holds `dL/dx_t` for every step.
pub fn lstm_sequence_backward(
    params: &LstmCellParams,
    steps: &[LstmStep],
    dh: &[Vec<f64>],
    grad: &mut LstmCellParams,
) -> Vec<Vec<f64>> {
    debug_assert_eq!(steps.len(), dh.len());
    let hidden = params.hidden_size();
    let input = params.input_size();
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dx = vec![Vec::new(); steps.len()];

    let mut dz_f = vec![0.0; hidden];
    let mut dz_i = vec![0.0; hidden];
    let mut dz_c = vec![0.0; hidden];
    let mut dz_o = vec![0.0; hidden];

    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        for j in 0..hidden {
            let dh_j = dh[t][j] + dh_next[j];
            let o = s.output[j];
            let tc = s.tanh_c[j];
            let dc = dc_next[j] + dh_j * o * (1.0 - tc * tc);
            let f = s.forget[j];
            let i = s.input[j];
            let g = s.candidate[j];
            dz_o[j] = dh_j * tc * o * (1.0 - o);
            dz_f[j] = dc * s.prev_c[j] * f * (1.0 - f);
            dz_i[j] = dc * g * i * (1.0 - i);
            dz_c[j] = dc * i * (1.0 - g * g);
            dc_next[j] = dc * f;
        }

        grad.w_forget.add_outer(&dz_f, &s.concat);
        grad.w_input.add_outer(&dz_i, &s.concat);
        grad.w_cell.add_outer(&dz_c, &s.concat);
        grad.w_output.add_outer(&dz_o, &s.concat);
        for j in 0..hidden {
            grad.b_forget[j] += dz_f[j];
            grad.b_input[j] += dz_i[j];
            grad.b_cell[j] += dz_c[j];
            grad.b_output[j] += dz_o[j];
        }

        let mut dconcat = vec![0.0; hidden + input];
        params.w_forget.transpose_matvec_acc(&dz_f, &mut dconcat);
        params.w_input.transpose_matvec_acc(&dz_i, &mut dconcat);
        params.w_cell.transpose_matvec_acc(&dz_c, &mut dconcat);
        params.w_output.transpose_matvec_acc(&dz_o, &mut dconcat);
        dh_next.copy_from_slice(&dconcat[..hidden]);
        dx[t] = dconcat.split_off(hidden);
    }
    dx
}
