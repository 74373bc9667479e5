//! LSTM cell and bidirectional recurrence with backpropagation through time.
//!
//! Input weights are stored input-major (`D × 4H`) and recurrent weights
//! hidden-major (`H × 4H`), so one input coordinate touches a contiguous run
//! of gate pre-activations. Gate blocks are ordered input, forget, cell,
//! output.

use crate::error::{Error, Result};

/// Borrowed weights of one LSTM direction.
#[derive(Debug, Clone, Copy)]
pub struct CellParams<'a> {
    pub input: usize,
    pub hidden: usize,
    pub w_x: &'a [f64],
    pub w_h: &'a [f64],
    pub b: &'a [f64],
}

impl CellParams<'_> {
    fn check(&self) -> Result<()> {
        let g = 4 * self.hidden;
        for (expected, got) in [
            (self.input * g, self.w_x.len()),
            (self.hidden * g, self.w_h.len()),
            (g, self.b.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `z = b + xᵀW_x + hᵀW_h`, skipping zero inputs.
fn preactivations(p: &CellParams, x: &[f64], h: &[f64], z: &mut [f64]) {
    let g = 4 * p.hidden;
    z.copy_from_slice(p.b);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let row = &p.w_x[j * g..(j + 1) * g];
            z.iter_mut().zip(row).for_each(|(zi, w)| *zi += xj * w);
        }
    }
    for (k, &hk) in h.iter().enumerate() {
        if hk != 0.0 {
            let row = &p.w_h[k * g..(k + 1) * g];
            z.iter_mut().zip(row).for_each(|(zi, w)| *zi += hk * w);
        }
    }
}

/// Applies gate nonlinearities in place and returns the new cell state.
fn activate(z: &mut [f64], c: &[f64], c_out: &mut [f64], h_out: &mut [f64], tanh_c: &mut [f64]) {
    let hd = c.len();
    for k in 0..hd {
        let i = sigmoid(z[k]);
        let f = sigmoid(z[hd + k]);
        let g = z[2 * hd + k].tanh();
        let o = sigmoid(z[3 * hd + k]);
        z[k] = i;
        z[hd + k] = f;
        z[2 * hd + k] = g;
        z[3 * hd + k] = o;
        c_out[k] = f * c[k] + i * g;
        tanh_c[k] = c_out[k].tanh();
        h_out[k] = o * tanh_c[k];
    }
}

pub fn lstm_cell(x: &[f64], h: &[f64], c: &[f64], p: &CellParams) -> Result<(Vec<f64>, Vec<f64>)> {
    p.check()?;
    if x.len() != p.input {
        return Err(Error::DimensionMismatch { expected: p.input, got: x.len() });
    }
    for v in [h, c] {
        if v.len() != p.hidden {
            return Err(Error::DimensionMismatch { expected: p.hidden, got: v.len() });
        }
    }
    let mut z = vec![0.0; 4 * p.hidden];
    preactivations(p, x, h, &mut z);
    let (mut h2, mut c2, mut tc) = (vec![0.0; p.hidden], vec![0.0; p.hidden], vec![0.0; p.hidden]);
    activate(&mut z, c, &mut c2, &mut h2, &mut tc);
    Ok((h2, c2))
}

/// Activations of one direction, indexed by sequence position.
#[derive(Debug, Clone)]
pub struct DirectionTrace {
    pub reverse: bool,
    /// `T × 4H` activated gates.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

fn order(rows: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..rows).rev())
    } else {
        Box::new(0..rows)
    }
}

/// Position of the step processed just before `t`, if any.
fn previous(t: usize, rows: usize, reverse: bool) -> Option<usize> {
    if reverse {
        (t + 1 < rows).then_some(t + 1)
    } else {
        t.checked_sub(1)
    }
}

pub fn run_direction(p: &CellParams, x: &[f64], rows: usize, reverse: bool) -> DirectionTrace {
    let (hd, d) = (p.hidden, p.input);
    let mut tr = DirectionTrace {
        reverse,
        gates: vec![0.0; rows * 4 * hd],
        c: vec![0.0; rows * hd],
        tanh_c: vec![0.0; rows * hd],
        h: vec![0.0; rows * hd],
    };
    let zeros = vec![0.0; hd];
    for t in order(rows, reverse) {
        let (h_prev, c_prev) = match previous(t, rows, reverse) {
            Some(s) => (tr.h[s * hd..(s + 1) * hd].to_vec(), tr.c[s * hd..(s + 1) * hd].to_vec()),
            None => (zeros.clone(), zeros.clone()),
        };
        let z = &mut tr.gates[t * 4 * hd..(t + 1) * 4 * hd];
        preactivations(p, &x[t * d..(t + 1) * d], &h_prev, z);
        activate(
            z,
            &c_prev,
            &mut tr.c[t * hd..(t + 1) * hd],
            &mut tr.h[t * hd..(t + 1) * hd],
            &mut tr.tanh_c[t * hd..(t + 1) * hd],
        );
    }
    tr
}

/// Gradient accumulators for one direction, laid out like [`CellParams`].
pub struct CellGrads<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// BPTT for one direction given `dh` (`T × H`), the loss gradient with
/// respect to each emitted hidden state.
pub fn backward_direction(p: &CellParams, x: &[f64], rows: usize, tr: &DirectionTrace, dh: &[f64], grads: CellGrads) {
    let (hd, d, g) = (p.hidden, p.input, 4 * p.hidden);
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; g];
    let processing: Vec<usize> = order(rows, tr.reverse).collect();
    for &t in processing.iter().rev() {
        let prev = previous(t, rows, tr.reverse);
        let gates = &tr.gates[t * g..(t + 1) * g];
        for k in 0..hd {
            let (i, f, cg, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
            let tc = tr.tanh_c[t * hd + k];
            let c_prev = prev.map_or(0.0, |s| tr.c[s * hd + k]);
            let dht = dh[t * hd + k] + dh_next[k];
            let dc = dht * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * cg * i * (1.0 - i);
            dz[hd + k] = dc * c_prev * f * (1.0 - f);
            dz[2 * hd + k] = dc * i * (1.0 - cg * cg);
            dz[3 * hd + k] = dht * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        grads.b.iter_mut().zip(&dz).for_each(|(a, b)| *a += b);
        for (j, &xj) in x[t * d..(t + 1) * d].iter().enumerate() {
            if xj != 0.0 {
                let row = &mut grads.w_x[j * g..(j + 1) * g];
                row.iter_mut().zip(&dz).for_each(|(a, b)| *a += xj * b);
            }
        }
        match prev {
            Some(s) => {
                let h_prev = &tr.h[s * hd..(s + 1) * hd];
                for k in 0..hd {
                    let wrow = &p.w_h[k * g..(k + 1) * g];
                    dh_next[k] = wrow.iter().zip(&dz).map(|(w, z)| w * z).sum();
                    if h_prev[k] != 0.0 {
                        let row = &mut grads.w_h[k * g..(k + 1) * g];
                        row.iter_mut().zip(&dz).for_each(|(a, b)| *a += h_prev[k] * b);
                    }
                }
            }
            None => dh_next.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}

/// Per-position concatenation `[h_fwd(t), h_bwd(t)]`, `T × 2H`.
pub fn concat_states(fwd: &DirectionTrace, bwd: &DirectionTrace, rows: usize, hidden: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * 2 * hidden);
    for t in 0..rows {
        out.extend_from_slice(&fwd.h[t * hidden..(t + 1) * hidden]);
        out.extend_from_slice(&bwd.h[t * hidden..(t + 1) * hidden]);
    }
    out
}

pub fn bilstm_forward(x: &[f64], rows: usize, fwd: &CellParams, bwd: &CellParams) -> Result<Vec<f64>> {
    fwd.check()?;
    bwd.check()?;
    if fwd.input != bwd.input || fwd.hidden != bwd.hidden {
        return Err(Error::DimensionMismatch { expected: fwd.hidden, got: bwd.hidden });
    }
    if rows == 0 || x.len() != rows * fwd.input {
        return Err(Error::DimensionMismatch { expected: rows.max(1) * fwd.input, got: x.len() });
    }
    let f = run_direction(fwd, x, rows, false);
    let b = run_direction(bwd, x, rows, true);
    Ok(concat_states(&f, &b, rows, fwd.hidden))
}
