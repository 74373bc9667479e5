//! Naive scalar reference for the bidirectional LSTM, written directly from
//! the cell equations with explicit per-gate indexing. Shared by the oracle
//! tests; it deliberately avoids the library's fused loops.

#![allow(dead_code)]

pub struct RefDirection {
    pub d: usize,
    pub h: usize,
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl RefDirection {
    fn wx(&self, gate: usize, unit: usize, input: usize) -> f64 {
        self.w_x[input * 4 * self.h + gate * self.h + unit]
    }

    fn wh(&self, gate: usize, unit: usize, from: usize) -> f64 {
        self.w_h[from * 4 * self.h + gate * self.h + unit]
    }

    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let logistic = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h2 = vec![0.0; self.h];
        let mut c2 = vec![0.0; self.h];
        for u in 0..self.h {
            let mut pre = [0.0f64; 4];
            for (gate, p) in pre.iter_mut().enumerate() {
                *p = self.b[gate * self.h + u];
                for j in 0..self.d {
                    *p += self.wx(gate, u, j) * x[j];
                }
                for k in 0..self.h {
                    *p += self.wh(gate, u, k) * h[k];
                }
            }
            let i = logistic(pre[0]);
            let f = logistic(pre[1]);
            let g = pre[2].tanh();
            let o = logistic(pre[3]);
            c2[u] = f * c[u] + i * g;
            h2[u] = o * c2[u].tanh();
        }
        (h2, c2)
    }

    /// Hidden states in sequence order for a left-to-right or right-to-left
    /// pass over `xs`.
    pub fn run(&self, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
        let n = xs.len();
        let mut out = vec![Vec::new(); n];
        let mut h = vec![0.0; self.h];
        let mut c = vec![0.0; self.h];
        for s in 0..n {
            let t = if reverse { n - 1 - s } else { s };
            let (h2, c2) = self.step(&xs[t], &h, &c);
            out[t] = h2.clone();
            h = h2;
            c = c2;
        }
        out
    }
}

/// `[fwd_t, bwd_t]` per position.
pub fn ref_bilstm(fwd: &RefDirection, bwd: &RefDirection, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let f = fwd.run(xs, false);
    let b = bwd.run(xs, true);
    f.into_iter().zip(b).map(|(mut a, b)| {
        a.extend(b);
        a
    }).collect()
}
