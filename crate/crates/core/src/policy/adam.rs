//! Standard Adam with bias correction (beta1 = 0.9, beta2 = 0.999,
//! eps = 1e-8).

use super::PolicyParams;

#[derive(Debug, Clone)]
pub struct Adam {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub(crate) t: u64,
    pub(crate) m: PolicyParams,
    pub(crate) v: PolicyParams,
}

impl Adam {
    pub fn new(shape: &PolicyParams, alpha: f64) -> Self {
        Adam {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shape.zeros_like(),
            v: shape.zeros_like(),
        }
    }

    pub(crate) fn from_state(alpha: f64, t: u64, m: PolicyParams, v: PolicyParams) -> Self {
        Adam {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t,
            m,
            v,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut PolicyParams, grads: &PolicyParams) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let Adam { m, v, .. } = self;
        let ps = params.tensors_mut();
        let gs = grads.tensors();
        let ms = m.tensors_mut();
        let vs = v.tensors_mut();
        for (((p, g), mt), vt) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for k in 0..p.len() {
                mt[k] = self.beta1 * mt[k] + (1.0 - self.beta1) * g[k];
                vt[k] = self.beta2 * vt[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = mt[k] / bc1;
                let v_hat = vt[k] / bc2;
                p[k] -= self.alpha * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
