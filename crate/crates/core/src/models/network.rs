//! Bidirectional LSTM classifier with pooling readout and three linear heads.
//!
//! All trainable parameters live in one flat vector; [`Layout`] records the
//! block offsets so optimizers and checkpoints can treat it uniformly.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::taxonomy::{map_label, LabelSpace, Motivation, Profile};

use super::lstm::{backward_direction, concat_states, run_direction, CellGrads, CellParams, DirectionTrace};

pub const ALIGNMENT_CLASSES: usize = 9;
pub const MOTIVATION_CLASSES: usize = Motivation::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Concatenated max and mean over time.
    MultiPool,
    /// Additive attention over time.
    Attention,
    /// Forward state at the last position and backward state at the first.
    LastState,
}

impl Readout {
    pub const ALL: [Readout; 3] = [Readout::MultiPool, Readout::Attention, Readout::LastState];

    pub fn tag(self) -> u8 {
        Self::ALL.iter().position(|&r| r == self).unwrap() as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: usize,
    /// Attention projection size; ignored by other readouts.
    pub attention: usize,
    pub readout: Readout,
    pub space: LabelSpace,
}

impl NetworkSpec {
    pub fn pooled_dim(&self) -> usize {
        match self.readout {
            Readout::MultiPool => 4 * self.hidden,
            Readout::Attention | Readout::LastState => 2 * self.hidden,
        }
    }

    pub fn classes(&self) -> usize {
        self.space.cardinality()
    }

    fn attention_size(&self) -> usize {
        if self.readout == Readout::Attention {
            self.attention
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::ConfigInvalid("input and hidden sizes must be positive".into()));
        }
        if self.readout == Readout::Attention && self.attention == 0 {
            return Err(Error::ConfigInvalid("attention size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionLayout {
    pub w_x: Range<usize>,
    pub w_h: Range<usize>,
    pub b: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadLayout {
    pub w: Range<usize>,
    pub b: Range<usize>,
    pub classes: usize,
}

/// Parameter block order: forward LSTM, backward LSTM, attention projection
/// and context (empty unless attention), then profile, alignment and
/// motivation heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub fwd: DirectionLayout,
    pub bwd: DirectionLayout,
    pub attn_proj: Range<usize>,
    pub attn_ctx: Range<usize>,
    pub heads: [HeadLayout; 3],
    pub total: usize,
}

impl Layout {
    pub fn new(spec: &NetworkSpec) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let (d, h) = (spec.input_dim, spec.hidden);
        let mut direction = || DirectionLayout { w_x: take(d * 4 * h), w_h: take(h * 4 * h), b: take(4 * h) };
        let fwd = direction();
        let bwd = direction();
        let a = spec.attention_size();
        let attn_proj = take(a * 2 * h);
        let attn_ctx = take(a);
        let f = spec.pooled_dim();
        let mut head = |k: usize| HeadLayout { w: take(k * f), b: take(k), classes: k };
        let heads = [head(spec.classes()), head(ALIGNMENT_CLASSES), head(MOTIVATION_CLASSES)];
        Layout { fwd, bwd, attn_proj, attn_ctx, heads, total: at }
    }

    /// Named blocks in storage order.
    pub fn blocks(&self) -> Vec<(&'static str, Range<usize>)> {
        vec![
            ("fwd.w_x", self.fwd.w_x.clone()),
            ("fwd.w_h", self.fwd.w_h.clone()),
            ("fwd.b", self.fwd.b.clone()),
            ("bwd.w_x", self.bwd.w_x.clone()),
            ("bwd.w_h", self.bwd.w_h.clone()),
            ("bwd.b", self.bwd.b.clone()),
            ("attn.proj", self.attn_proj.clone()),
            ("attn.ctx", self.attn_ctx.clone()),
            ("profile.w", self.heads[0].w.clone()),
            ("profile.b", self.heads[0].b.clone()),
            ("alignment.w", self.heads[1].w.clone()),
            ("alignment.b", self.heads[1].b.clone()),
            ("motivation.w", self.heads[2].w.clone()),
            ("motivation.b", self.heads[2].b.clone()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub profile: Vec<f64>,
    pub alignment: Vec<f64>,
    pub motivation: Vec<f64>,
}

impl Logits {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.profile.len(), self.alignment.len(), self.motivation.len())
    }

    fn heads(&self) -> [&Vec<f64>; 3] {
        [&self.profile, &self.alignment, &self.motivation]
    }
}

/// Class indices for the three heads. `primary` is in the network's label
/// space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Targets {
    pub primary: usize,
    pub alignment: usize,
    pub motivation: usize,
}

impl Targets {
    pub fn for_profile(profile: Profile, space: LabelSpace) -> Result<Self> {
        Ok(Targets {
            primary: map_label(profile, space)?,
            alignment: profile.alignment.rank(),
            motivation: profile.motivation.rank(),
        })
    }
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

pub fn loss(logits: &Logits, targets: &Targets, lambda_align: f64, lambda_motiv: f64) -> f64 {
    let mut l = cross_entropy(&logits.profile, targets.primary);
    if lambda_align != 0.0 {
        l += lambda_align * cross_entropy(&logits.alignment, targets.alignment);
    }
    if lambda_motiv != 0.0 {
        l += lambda_motiv * cross_entropy(&logits.motivation, targets.motivation);
    }
    l
}

/// Lowest index among maximal entries.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// `[max_t s_t, mean_t s_t]` over a `rows × width` state matrix.
pub fn multi_pool(states: &[f64], rows: usize, width: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; width];
    out.extend(std::iter::repeat(0.0).take(width));
    let mut column = Vec::with_capacity(rows);
    for k in 0..width {
        column.clear();
        column.extend((0..rows).map(|t| states[t * width + k]));
        // Summing in sorted order makes the mean exactly independent of row order.
        column.sort_unstable_by(f64::total_cmp);
        out[k] = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out[width + k] = column.iter().sum::<f64>() / rows as f64;
    }
    out
}

fn max_positions(states: &[f64], rows: usize, width: usize) -> Vec<usize> {
    (0..width)
        .map(|k| {
            let mut best = 0;
            for t in 1..rows {
                if states[t * width + k] > states[best * width + k] {
                    best = t;
                }
            }
            best
        })
        .collect()
}

/// Additive attention. Returns the pooled vector, the attention weights and
/// the projected `tanh` activations (`rows × a`).
pub fn attention_pool(
    states: &[f64],
    rows: usize,
    width: usize,
    proj: &[f64],
    ctx: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let a = ctx.len();
    let mut u = vec![0.0; rows * a];
    let mut scores = vec![0.0; rows];
    for t in 0..rows {
        let s = &states[t * width..(t + 1) * width];
        for j in 0..a {
            let pre: f64 = proj[j * width..(j + 1) * width].iter().zip(s).map(|(p, x)| p * x).sum();
            u[t * a + j] = pre.tanh();
        }
        scores[t] = u[t * a..(t + 1) * a].iter().zip(ctx).map(|(x, c)| x * c).sum();
    }
    let weights = softmax(&scores);
    let mut out = vec![0.0; width];
    for t in 0..rows {
        for k in 0..width {
            out[k] += weights[t] * states[t * width + k];
        }
    }
    (out, weights, u)
}

/// Everything the backward pass needs from one forward evaluation.
struct Trace {
    fwd: DirectionTrace,
    bwd: DirectionTrace,
    states: Vec<f64>,
    pooled: Vec<f64>,
    attn: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    layout: Layout,
}

impl Network {
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(&spec);
        Ok(Network { spec, params: vec![0.0; layout.total], layout })
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        if params.len() != net.layout.total {
            return Err(Error::DimensionMismatch { expected: net.layout.total, got: params.len() });
        }
        net.params = params;
        Ok(net)
    }

    /// Uniform ±1/√D input and ±1/√H recurrent weights, forget-gate bias 1,
    /// uniform ±1/√(2H) attention, zero heads.
    pub fn init(spec: NetworkSpec, seed_value: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let mut rng = seed::rng(&[seed::stream::INIT, seed_value]);
        let h = spec.hidden;
        let ux = 1.0 / (spec.input_dim as f64).sqrt();
        let uh = 1.0 / (h as f64).sqrt();
        let ua = 1.0 / ((2 * h) as f64).sqrt();
        let l = net.layout.clone();
        let mut fill = |r: Range<usize>, bound: f64, p: &mut [f64]| {
            for v in &mut p[r] {
                *v = rng.gen_range(-bound..bound);
            }
        };
        for dir in [&l.fwd, &l.bwd] {
            fill(dir.w_x.clone(), ux, &mut net.params);
            fill(dir.w_h.clone(), uh, &mut net.params);
            net.params[dir.b.start + h..dir.b.start + 2 * h].iter_mut().for_each(|b| *b = 1.0);
        }
        fill(l.attn_proj.clone(), ua, &mut net.params);
        fill(l.attn_ctx.clone(), ua, &mut net.params);
        Ok(net)
    }

    /// Fills every head with uniform ±1/√F weights, leaving biases at zero.
    pub fn randomize_heads(&mut self, seed_value: u64) {
        let mut rng = seed::rng(&[seed::stream::INIT, seed_value, 1]);
        let bound = 1.0 / (self.spec.pooled_dim() as f64).sqrt();
        for head in &self.layout.heads {
            for v in &mut self.params[head.w.clone()] {
                *v = rng.gen_range(-bound..bound);
            }
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    fn cell<'a>(&self, params: &'a [f64], dir: &DirectionLayout) -> CellParams<'a> {
        CellParams {
            input: self.spec.input_dim,
            hidden: self.spec.hidden,
            w_x: &params[dir.w_x.clone()],
            w_h: &params[dir.w_h.clone()],
            b: &params[dir.b.clone()],
        }
    }

    pub fn fwd_cell(&self) -> CellParams<'_> {
        self.cell(&self.params, &self.layout.fwd)
    }

    pub fn bwd_cell(&self) -> CellParams<'_> {
        self.cell(&self.params, &self.layout.bwd)
    }

    fn check_input(&self, x: &[f64], rows: usize) -> Result<()> {
        if rows == 0 || x.len() != rows * self.spec.input_dim {
            return Err(Error::DimensionMismatch { expected: rows.max(1) * self.spec.input_dim, got: x.len() });
        }
        Ok(())
    }

    fn run(&self, x: &[f64], rows: usize) -> Trace {
        let h = self.spec.hidden;
        let fwd = run_direction(&self.fwd_cell(), x, rows, false);
        let bwd = run_direction(&self.bwd_cell(), x, rows, true);
        let states = concat_states(&fwd, &bwd, rows, h);
        let (pooled, attn) = match self.spec.readout {
            Readout::MultiPool => (multi_pool(&states, rows, 2 * h), None),
            Readout::LastState => {
                let mut v = fwd.h[(rows - 1) * h..rows * h].to_vec();
                v.extend_from_slice(&bwd.h[..h]);
                (v, None)
            }
            Readout::Attention => {
                let (out, w, u) = attention_pool(
                    &states,
                    rows,
                    2 * h,
                    &self.params[self.layout.attn_proj.clone()],
                    &self.params[self.layout.attn_ctx.clone()],
                );
                (out, Some((w, u)))
            }
        };
        Trace { fwd, bwd, states, pooled, attn }
    }

    fn heads(&self, z: &[f64]) -> Logits {
        let f = z.len();
        let apply = |head: &HeadLayout| -> Vec<f64> {
            let w = &self.params[head.w.clone()];
            let b = &self.params[head.b.clone()];
            (0..head.classes)
                .map(|k| b[k] + w[k * f..(k + 1) * f].iter().zip(z).map(|(a, x)| a * x).sum::<f64>())
                .collect()
        };
        let [p, a, m] = &self.layout.heads;
        Logits { profile: apply(p), alignment: apply(a), motivation: apply(m) }
    }

    /// Pooled representation of one `rows × D` input.
    pub fn pooled(&self, x: &[f64], rows: usize) -> Result<Vec<f64>> {
        self.check_input(x, rows)?;
        Ok(self.run(x, rows).pooled)
    }

    /// Inference logits (no dropout).
    pub fn forward(&self, x: &[f64], rows: usize) -> Result<Logits> {
        self.check_input(x, rows)?;
        Ok(self.heads(&self.run(x, rows).pooled))
    }

    /// Loss for one sample, accumulating `scale · ∂loss/∂θ` into `grad`.
    /// `mask` is an optional inverted-dropout mask over the pooled vector.
    pub fn loss_and_grad(
        &self,
        x: &[f64],
        rows: usize,
        targets: &Targets,
        lambdas: (f64, f64),
        mask: Option<&[f64]>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<(f64, Logits)> {
        self.check_input(x, rows)?;
        if grad.len() != self.layout.total {
            return Err(Error::DimensionMismatch { expected: self.layout.total, got: grad.len() });
        }
        let h = self.spec.hidden;
        let tr = self.run(x, rows);
        let z: Vec<f64> = match mask {
            Some(m) => tr.pooled.iter().zip(m).map(|(a, b)| a * b).collect(),
            None => tr.pooled.clone(),
        };
        let logits = self.heads(&z);
        let value = loss(&logits, targets, lambdas.0, lambdas.1);

        // Heads.
        let f = z.len();
        let mut dz = vec![0.0; f];
        let labels = [targets.primary, targets.alignment, targets.motivation];
        let weights = [1.0, lambdas.0, lambdas.1];
        for (((head, out), &label), &lam) in self.layout.heads.iter().zip(logits.heads()).zip(&labels).zip(&weights) {
            if lam == 0.0 {
                continue;
            }
            let mut dl = softmax(out);
            dl[label] -= 1.0;
            let w = &self.params[head.w.clone()];
            for k in 0..head.classes {
                let g = scale * lam * dl[k];
                grad[head.b.start + k] += g;
                let gw = &mut grad[head.w.start + k * f..head.w.start + (k + 1) * f];
                gw.iter_mut().zip(&z).for_each(|(a, zi)| *a += g * zi);
                dz.iter_mut().zip(&w[k * f..(k + 1) * f]).for_each(|(a, wi)| *a += scale * lam * dl[k] * wi);
            }
        }
        if let Some(m) = mask {
            dz.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
        }

        // Readout.
        let width = 2 * h;
        let mut ds = vec![0.0; rows * width];
        match self.spec.readout {
            Readout::MultiPool => {
                let argmax = max_positions(&tr.states, rows, width);
                for k in 0..width {
                    ds[argmax[k] * width + k] += dz[k];
                    let share = dz[width + k] / rows as f64;
                    for t in 0..rows {
                        ds[t * width + k] += share;
                    }
                }
            }
            Readout::LastState => {
                for k in 0..h {
                    ds[(rows - 1) * width + k] += dz[k];
                    ds[h + k] += dz[h + k];
                }
            }
            Readout::Attention => {
                let (alpha, u) = tr.attn.as_ref().expect("attention trace");
                let proj = &self.params[self.layout.attn_proj.clone()];
                let ctx = &self.params[self.layout.attn_ctx.clone()];
                let a = ctx.len();
                let dalpha: Vec<f64> = (0..rows)
                    .map(|t| tr.states[t * width..(t + 1) * width].iter().zip(&dz).map(|(s, d)| s * d).sum())
                    .collect();
                let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                for t in 0..rows {
                    let s = &tr.states[t * width..(t + 1) * width];
                    for k in 0..width {
                        ds[t * width + k] += alpha[t] * dz[k];
                    }
                    let dscore = alpha[t] * (dalpha[t] - mean);
                    for j in 0..a {
                        let uj = u[t * a + j];
                        grad[self.layout.attn_ctx.start + j] += dscore * uj;
                        let dpre = dscore * ctx[j] * (1.0 - uj * uj);
                        let prow = self.layout.attn_proj.start + j * width;
                        for k in 0..width {
                            grad[prow + k] += dpre * s[k];
                            ds[t * width + k] += dpre * proj[j * width + k];
                        }
                    }
                }
            }
        }

        // Recurrences.
        let split = |offset: usize| -> Vec<f64> {
            (0..rows).flat_map(|t| ds[t * width + offset..t * width + offset + h].iter().copied()).collect()
        };
        let (dh_fwd, dh_bwd) = (split(0), split(h));
        for (dir, trace, dh) in [(&self.layout.fwd, &tr.fwd, &dh_fwd), (&self.layout.bwd, &tr.bwd, &dh_bwd)] {
            let cell = self.cell(&self.params, dir);
            let (head, rest) = grad.split_at_mut(dir.w_h.start);
            let (wh, rest) = rest.split_at_mut(dir.w_h.len());
            let b = &mut rest[..dir.b.len()];
            let grads = CellGrads { w_x: &mut head[dir.w_x.clone()], w_h: wh, b };
            backward_direction(&cell, x, rows, trace, dh, grads);
        }
        Ok((value, logits))
    }
}
