use super::params::LstmParams;
use super::tensor::{add_assign, mat_vec_acc, outer_acc, sigmoid, vec_mat_acc};
use crate::{Error, Result};

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LstmTrace {
    pub inputs: Vec<Vec<f64>>,
    /// Post-activation gates per step, `[i | f | g | o]`.
    gates: Vec<Vec<f64>>,
    /// Cell states `c_1..c_T`.
    cells: Vec<Vec<f64>>,
    /// Hidden states `h_1..h_T`.
    pub hidden: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn last(&self) -> &[f64] {
        self.hidden.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn check_input(seq: &[Vec<f64>], width: usize, what: &str) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::Shape(format!("{what} sequence is empty")));
    }
    if let Some((t, row)) = seq.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::Shape(format!(
            "{what} step {t} has {} values, expected {width}",
            row.len()
        )));
    }
    Ok(())
}

pub(crate) fn forward_trace(seq: &[Vec<f64>], p: &LstmParams) -> LstmTrace {
    let h = p.hidden();
    let mut prev_h = vec![0.0; h];
    let mut prev_c = vec![0.0; h];
    let mut trace = LstmTrace {
        inputs: seq.to_vec(),
        gates: Vec::with_capacity(seq.len()),
        cells: Vec::with_capacity(seq.len()),
        hidden: Vec::with_capacity(seq.len()),
    };
    for x in seq {
        let mut z = p.b.data().to_vec();
        vec_mat_acc(x, &p.w_ih, &mut z);
        vec_mat_acc(&prev_h, &p.w_hh, &mut z);
        for j in 0..h {
            z[j] = sigmoid(z[j]);
            z[h + j] = sigmoid(z[h + j]);
            z[2 * h + j] = z[2 * h + j].tanh();
            z[3 * h + j] = sigmoid(z[3 * h + j]);
        }
        let mut c = vec![0.0; h];
        let mut hs = vec![0.0; h];
        for j in 0..h {
            c[j] = z[h + j] * prev_c[j] + z[j] * z[2 * h + j];
            hs[j] = z[3 * h + j] * c[j].tanh();
        }
        trace.gates.push(z);
        trace.cells.push(c.clone());
        trace.hidden.push(hs.clone());
        prev_c = c;
        prev_h = hs;
    }
    trace
}

/// Runs the recurrence from a zero state and returns every step's hidden state.
pub fn lstm_forward(seq: &[Vec<f64>], params: &LstmParams) -> Result<Vec<Vec<f64>>> {
    check_input(seq, params.input(), "lstm input")?;
    Ok(forward_trace(seq, params).hidden)
}

/// Backpropagates `dh[t]` (gradient w.r.t. each emitted hidden state) through time,
/// accumulating parameter gradients into `grad`.
pub(crate) fn backward(trace: &LstmTrace, p: &LstmParams, dh: &[Vec<f64>], grad: &mut LstmParams) {
    let h = p.hidden();
    let steps = trace.hidden.len();
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let zero = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let g = &trace.gates[t];
        let c = &trace.cells[t];
        let c_prev = if t > 0 { &trace.cells[t - 1] } else { &zero };
        let h_prev = if t > 0 { &trace.hidden[t - 1] } else { &zero };
        for j in 0..h {
            let dhj = dh[t][j] + dh_next[j];
            let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = c[j].tanh();
            let dc = dhj * o * (1.0 - tc * tc) + dc_next[j];
            dz[j] = dc * gg * i * (1.0 - i);
            dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * h + j] = dc * i * (1.0 - gg * gg);
            dz[3 * h + j] = dhj * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        outer_acc(&trace.inputs[t], &dz, &mut grad.w_ih);
        outer_acc(h_prev, &dz, &mut grad.w_hh);
        add_assign(grad.b.data_mut(), &dz);
        dh_next.fill(0.0);
        mat_vec_acc(&p.w_hh, &dz, &mut dh_next);
    }
}
