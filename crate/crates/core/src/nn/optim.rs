use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::nn::layers::Parameterized;

/// Adam with bias-corrected moments and optional L2 weight decay folded
/// into the gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step: u64,
    first_moment: Vec<DenseMatrix>,
    second_moment: Vec<DenseMatrix>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// One update from the gradients currently stored in `model`.
    pub fn step<P: Parameterized + ?Sized>(&mut self, model: &mut P) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let mut slot = 0;
        let first = &mut self.first_moment;
        let second = &mut self.second_moment;
        let (b1, b2, eps, lr, wd) = (self.beta1, self.beta2, self.eps, self.lr, self.weight_decay);
        model.visit_params(&mut |p| {
            if first.len() <= slot {
                first.push(DenseMatrix::zeros(p.value.rows(), p.value.cols()));
                second.push(DenseMatrix::zeros(p.value.rows(), p.value.cols()));
            }
            let m = first[slot].as_mut_slice();
            let v = second[slot].as_mut_slice();
            let grads = p.grad.as_slice();
            for (k, theta) in p.value.as_mut_slice().iter_mut().enumerate() {
                let g = grads[k] + wd * *theta;
                m[k] = b1 * m[k] + (1.0 - b1) * g;
                v[k] = b2 * v[k] + (1.0 - b2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            slot += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::Param;

    struct Scalar(Param);

    impl Parameterized for Scalar {
        fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.0)
        }
        fn visit_params_ref(&self, f: &mut dyn FnMut(&Param)) {
            f(&self.0)
        }
    }

    fn scalar(v: f64) -> Scalar {
        Scalar(Param::new(DenseMatrix::filled(1, 1, v)))
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut s = scalar(1.25);
        let mut adam = Adam::new(0.1, 0.0);
        for _ in 0..10 {
            s.zero_grad();
            adam.step(&mut s);
        }
        assert_eq!(s.0.value.get(0, 0), 1.25);
    }

    fn run_quadratic(steps: usize) -> Vec<f64> {
        // loss = (x - 3)^2
        let mut s = scalar(-2.0);
        let mut adam = Adam::new(0.1, 0.0);
        let mut trace = Vec::new();
        for _ in 0..steps {
            let x = s.0.value.get(0, 0);
            s.0.grad.set(0, 0, 2.0 * (x - 3.0));
            adam.step(&mut s);
            let x = s.0.value.get(0, 0);
            trace.push((x - 3.0) * (x - 3.0));
        }
        trace
    }

    #[test]
    fn quadratic_converges_within_500_steps() {
        let trace = run_quadratic(500);
        let first_below = trace.iter().position(|&l| l < 1e-6);
        assert!(
            first_below.is_some(),
            "final loss {}",
            trace.last().unwrap()
        );
    }

    #[test]
    fn reruns_are_bit_identical() {
        assert_eq!(run_quadratic(200), run_quadratic(200));
    }
}
