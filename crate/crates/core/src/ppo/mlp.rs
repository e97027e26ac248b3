use rand::Rng;
use rand_distr::StandardNormal;

/// Fully connected tanh network described by its layer widths. Parameters
/// live in a flat slice owned by the caller: for each layer a row-major
/// `out x in` weight block followed by `out` biases. The output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    sizes: Vec<usize>,
}

/// Layer activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty trace")
    }
}

impl Mlp {
    pub fn new(sizes: Vec<usize>) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "invalid layer sizes");
        Self { sizes }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Gaussian weights with standard deviation `gain / sqrt(fan_in)`, zero
    /// biases; the output layer uses `out_gain`.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, out_gain: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let gain = if l == last { out_gain } else { 1.0 };
            let std = gain / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                let z: f64 = rng.sample(StandardNormal);
                p.push(z * std);
            }
            p.extend(std::iter::repeat_n(0.0, w[1]));
        }
        p
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.forward_trace(params, x).acts.pop().unwrap()
    }

    pub fn forward_trace(&self, params: &[f64], x: &[f64]) -> Trace {
        assert_eq!(params.len(), self.n_params(), "parameter length mismatch");
        assert_eq!(x.len(), self.input_dim(), "input length mismatch");
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let (weights, rest) = params[off..].split_at(n_in * n_out);
            let bias = &rest[..n_out];
            let input = &acts[l];
            let mut out: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(bias)
                .map(|(row, b)| b + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
            off += n_out * (n_in + 1);
        }
        Trace { acts }
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given `d(loss)/d(output)`.
    pub fn backward(&self, params: &[f64], trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), params.len());
        let n_layers = self.sizes.len() - 1;
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |o, w| {
                let cur = *o;
                *o += w[1] * (w[0] + 1);
                Some(cur)
            })
            .collect();
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &trace.acts[l];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
                grad[off + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let weights = &params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &weights[o * n_in..(o + 1) * n_in];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            // Hidden activations are tanh outputs: d tanh = 1 - y^2.
            prev.iter_mut().zip(input).for_each(|(p, y)| *p *= 1.0 - y * y);
            delta = prev;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        let m = Mlp::new(vec![78, 64, 64, 2]);
        assert_eq!(m.n_params(), 64 * 79 + 64 * 65 + 2 * 65);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.init(&mut rng, 0.01).len(), m.n_params());
    }

    #[test]
    fn zero_output_layer_gives_zero() {
        let m = Mlp::new(vec![3, 5, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = m.init(&mut rng, 0.0);
        assert_eq!(m.forward(&p, &[0.3, -0.9, 0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward() {
        let m = Mlp::new(vec![2, 1, 1]);
        // hidden: tanh(1*x0 + 2*x1 + 0.5), output: 3*h - 1
        let p = [1.0, 2.0, 0.5, 3.0, -1.0];
        let x = [0.2, -0.4];
        let h = (0.2 - 0.8 + 0.5f64).tanh();
        assert_eq!(m.forward(&p, &x), vec![3.0 * h - 1.0]);
    }

    #[test]
    fn backward_matches_central_differences() {
        let m = Mlp::new(vec![4, 6, 5, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = m.init(&mut rng, 1.0);
        let x = [0.1, -0.7, 0.4, 0.9];
        let w = [0.3, -1.2, 0.8];
        let loss = |q: &[f64]| m.forward(q, &x).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut g = vec![0.0; p.len()];
        m.backward(&p, &m.forward_trace(&p, &x), &w, &mut g);
        for i in 0..p.len() {
            let h = 1e-5;
            let (mut a, mut b) = (p.clone(), p.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (loss(&a) - loss(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(1e-6) + 1e-10, "param {i}: {fd} vs {}", g[i]);
        }
    }
}
