use super::model::Tensor;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    /// One bias-corrected Adam update. Parameters flagged `false` in `active`
    /// are left untouched (frozen).
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor], lr: f64, active: &[bool]) {
        assert_eq!(params.len(), grads.len());
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if !active.get(k).copied().unwrap_or(true) {
                continue;
            }
            assert_eq!(p.data.len(), g.data.len(), "gradient shape mismatch");
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p.data[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> Tensor {
        Tensor::from_vec(vec![1], vec![x])
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![scalar(0.0)];
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[scalar(1.0)], 0.005, &[true]);
        let expected = -0.005 * (1.0 / (1.0 + 1e-8));
        assert!((p[0].data[0] - expected).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![Tensor::from_vec(vec![3], vec![0.3, -1.0, 2.0])];
        let before = p.clone();
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            s.step(&mut p, &[Tensor::zeros(vec![3])], 0.1, &[true]);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn second_step_matches_closed_form() {
        let mut p = vec![scalar(1.0)];
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[scalar(2.0)], 0.1, &[true]);
        s.step(&mut p, &[scalar(-1.0)], 0.1, &[true]);
        // m = 0.9*0.2 + 0.1*(-1) = 0.08, v = 0.999*0.004 + 0.001 = 0.004996
        let m_hat = 0.08 / (1.0 - 0.81);
        let v_hat = 0.004996 / (1.0 - 0.999f64.powi(2));
        let expected = 1.0 - 0.1 * (2.0 / (2.0 + 1e-8)) - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0].data[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn frozen_parameters_do_not_move() {
        let mut p = vec![scalar(1.0), scalar(1.0)];
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[scalar(1.0), scalar(1.0)], 0.1, &[false, true]);
        assert_eq!(p[0].data[0], 1.0);
        assert!(p[1].data[0] < 1.0);
    }
}
