//! Adam with L2 weight decay folded into the gradient.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamSettings {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    settings: AdamSettings,
    steps: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    /// One moment buffer pair per parameter group of the given sizes.
    pub fn new(settings: AdamSettings, group_sizes: &[usize]) -> Self {
        Self {
            settings,
            steps: 0,
            first: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Advance the step counter. Call once per batch before updating groups.
    pub fn begin_step(&mut self) {
        self.steps += 1;
    }

    pub fn update(&mut self, group: usize, params: &mut [f64], grads: &[f64]) {
        let AdamSettings { learning_rate, beta1, beta2, epsilon, weight_decay } = self.settings;
        let t = self.steps.max(1);
        let correction1 = 1.0 - libm::pow(beta1, f64::from(t));
        let correction2 = 1.0 - libm::pow(beta2, f64::from(t));
        let m = &mut self.first[group];
        let v = &mut self.second[group];
        for i in 0..params.len() {
            let g = grads[i] + weight_decay * params[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            params[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction the first step is lr·g/(|g|+ε)
        let mut adam = Adam::new(AdamSettings::new(0.1, 0.0), &[2]);
        let mut p = [1.0, -1.0];
        adam.begin_step();
        adam.update(0, &mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-7);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut adam = Adam::new(AdamSettings::new(0.05, 0.0), &[1]);
        let mut x = [4.0];
        for _ in 0..2000 {
            let g = [2.0 * (x[0] - 1.5)];
            adam.begin_step();
            adam.update(0, &mut x, &g);
        }
        assert!((x[0] - 1.5).abs() < 1e-3);
    }

    #[test]
    fn weight_decay_shrinks_without_gradient() {
        let mut adam = Adam::new(AdamSettings::new(0.01, 0.1), &[1]);
        let mut x = [1.0];
        for _ in 0..50 {
            adam.begin_step();
            adam.update(0, &mut x, &[0.0]);
        }
        assert!(x[0] < 1.0 && x[0] > 0.0);
    }
}
