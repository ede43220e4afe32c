//! A single LSTM layer with packed gates (order [input, forget, cell,
//! output]) and explicit reverse-mode backward used by the trainer's
//! hand-rolled backpropagation.

use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// 4*hidden x input
    pub w_x: Mat,
    /// 4*hidden x hidden
    pub w_h: Mat,
    /// 4*hidden
    pub b: Vec<f64>,
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmLayer {
            w_x: Mat::zeros(4 * hidden, input),
            w_h: Mat::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.b.len() / 4
    }

    pub fn forward(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmStepCache {
        let h = self.hidden_dim();
        let mut z = self.w_x.matvec(x);
        let zh = self.w_h.matvec(h_prev);
        for k in 0..4 * h {
            z[k] += zh[k] + self.b[k];
        }
        let i: Vec<f64> = z[0..h].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * h..4 * h].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h_out: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
        LstmStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            c,
            tanh_c,
            h: h_out,
        }
    }

    /// Accumulates parameter gradients into `grads` and returns
    /// (dx, dh_prev, dc_prev).
    pub fn backward(
        &self,
        cache: &LstmStepCache,
        dh: &[f64],
        dc_in: &[f64],
        grads: &mut LstmLayer,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.hidden_dim();
        let mut dz = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for k in 0..h {
            let d_o = dh[k] * cache.tanh_c[k];
            let dc = dc_in[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let di = dc * cache.g[k];
            let df = dc * cache.c_prev[k];
            let dg = dc * cache.i[k];
            dc_prev[k] = dc * cache.f[k];
            dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
            dz[h + k] = df * cache.f[k] * (1.0 - cache.f[k]);
            dz[2 * h + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
            dz[3 * h + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
        }
        grads.w_x.add_outer(&dz, &cache.x);
        grads.w_h.add_outer(&dz, &cache.h_prev);
        for (gb, &d) in grads.b.iter_mut().zip(&dz) {
            *gb += d;
        }
        let dx = self.w_x.matvec_t(&dz);
        let dh_prev = self.w_h.matvec_t(&dz);
        (dx, dh_prev, dc_prev)
    }
}
