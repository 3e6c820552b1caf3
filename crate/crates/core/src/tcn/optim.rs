use super::model::NamedTensor;

/// First-order optimiser with per-parameter state.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    RmsProp { lr: f64, decay: f64, eps: f64, sq: Vec<Vec<f64>> },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64, step: i32, m: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
}

fn zeros_like(params: &[NamedTensor]) -> Vec<Vec<f64>> {
    params.iter().map(|t| vec![0.0; t.data.len()]).collect()
}

impl Optimizer {
    pub fn rmsprop(lr: f64, params: &[NamedTensor]) -> Self {
        Optimizer::RmsProp { lr, decay: 0.9, eps: 1e-8, sq: zeros_like(params) }
    }

    pub fn adam(lr: f64, params: &[NamedTensor]) -> Self {
        Optimizer::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros_like(params), v: zeros_like(params) }
    }

    pub fn step(&mut self, params: &mut [NamedTensor], grads: &[Vec<f64>]) {
        match self {
            Optimizer::RmsProp { lr, decay, eps, sq } => {
                for ((p, g), s) in params.iter_mut().zip(grads).zip(sq.iter_mut()) {
                    for ((w, &g), s) in p.data.iter_mut().zip(g).zip(s.iter_mut()) {
                        *s = *decay * *s + (1.0 - *decay) * g * g;
                        *w -= *lr * g / (s.sqrt() + *eps);
                    }
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps, step, m, v } => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                    for (((w, &g), m), v) in p.data.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = *beta1 * *m + (1.0 - *beta1) * g;
                        *v = *beta2 * *v + (1.0 - *beta2) * g * g;
                        *w -= *lr * (*m / c1) / ((*v / c2).sqrt() + *eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Vec<NamedTensor> {
        vec![NamedTensor { name: "w".into(), shape: vec![1], data: vec![v] }]
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut p = one(1.0);
        let mut opt = Optimizer::adam(0.1, &p);
        opt.step(&mut p, &[vec![3.0]]);
        assert!((p[0].data[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn rmsprop_first_step() {
        let mut p = one(1.0);
        let mut opt = Optimizer::rmsprop(0.01, &p);
        opt.step(&mut p, &[vec![2.0]]);
        // v = 0.1 * 4, step = 0.01 * 2 / sqrt(0.4)
        assert!((p[0].data[0] - (1.0 - 0.02 / 0.4f64.sqrt())).abs() < 1e-9);
    }
}
