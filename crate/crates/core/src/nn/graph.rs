//! Tape-based reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! Nodes are appended in evaluation order, so the tape is already a
//! topological order and the backward pass is a single reverse sweep.

use crate::nn::matrix::Matrix;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// BCE probabilities are clamped into `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-7;

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    /// `[r, c] + [1, c]` broadcast over rows.
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Elementwise product with a constant of the same shape.
    MulConst(Var, Matrix),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    /// `x^p` for `x >= 0`.
    Powf(Var, f64),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    Sum(Var),
    Mean(Var),
    /// Weighted mean binary cross-entropy against constant targets.
    Bce {
        probs: Var,
        targets: Matrix,
        weights: Option<Matrix>,
    },
}

struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Matrix>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` target with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A leaf that receives a gradient (parameters, probed inputs).
    pub fn variable(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf without gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::MatMul(a, b), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::Add(a, b), ng)
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (m, b) = (self.value(a), self.value(bias));
        assert!(b.rows == 1 && b.cols == m.cols, "bias shape");
        let mut value = m.clone();
        for r in 0..value.rows {
            for (x, &y) in value.data[r * m.cols..(r + 1) * m.cols].iter_mut().zip(&b.data) {
                *x += y;
            }
        }
        let ng = self.ng(a) || self.ng(bias);
        self.push(value, Op::AddRow(a, bias), ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::Sub(a, b), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::Mul(a, b), ng)
    }

    pub fn mul_const(&mut self, a: Var, c: Matrix) -> Var {
        assert!(self.value(a).same_shape(&c), "mul_const shape");
        let value = self.value(a).zip_map(&c, |x, y| x * y);
        let ng = self.ng(a);
        self.push(value, Op::MulConst(a, c), ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x * s);
        let ng = self.ng(a);
        self.push(value, Op::Scale(a, s), ng)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x + s);
        let ng = self.ng(a);
        self.push(value, Op::AddScalar(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(crate::semgen::functions::sigmoid);
        let ng = self.ng(a);
        self.push(value, Op::Sigmoid(a), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let ng = self.ng(a);
        self.push(value, Op::Tanh(a), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let ng = self.ng(a);
        self.push(value, Op::Relu(a), ng)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        let ng = self.ng(a);
        self.push(value, Op::Exp(a), ng)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::ln);
        let ng = self.ng(a);
        self.push(value, Op::Log(a), ng)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        let ng = self.ng(a);
        self.push(value, Op::Square(a), ng)
    }

    pub fn powf(&mut self, a: Var, p: f64) -> Var {
        let value = self.value(a).map(|x| x.max(0.0).powf(p));
        let ng = self.ng(a);
        self.push(value, Op::Powf(a, p), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Matrix::concat_cols(&mats);
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(value, Op::ConcatCols(parts.to_vec()), ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice_cols(start, end);
        let ng = self.ng(a);
        self.push(value, Op::SliceCols(a, start), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        let ng = self.ng(a);
        self.push(value, Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let value = Matrix::scalar(m.sum() / m.len() as f64);
        let ng = self.ng(a);
        self.push(value, Op::Mean(a), ng)
    }

    /// `Σ w·-(y ln p + (1-y) ln(1-p)) / Σ w` with `p` clamped; unit weights
    /// when `weights` is `None`.
    pub fn bce(&mut self, probs: Var, targets: Matrix, weights: Option<Matrix>) -> Var {
        let p = self.value(probs);
        assert!(p.same_shape(&targets), "bce target shape");
        if let Some(w) = &weights {
            assert!(p.same_shape(w), "bce weight shape");
        }
        let mut total = 0.0;
        let mut denom = 0.0;
        for k in 0..p.len() {
            let w = weights.as_ref().map_or(1.0, |w| w.data[k]);
            if w == 0.0 {
                continue;
            }
            let q = p.data[k].clamp(P_CLAMP, 1.0 - P_CLAMP);
            let y = targets.data[k];
            total += -w * (y * q.ln() + (1.0 - y) * (1.0 - q).ln());
            denom += w;
        }
        let value = Matrix::scalar(if denom > 0.0 { total / denom } else { 0.0 });
        let ng = self.ng(probs);
        self.push(
            value,
            Op::Bce {
                probs,
                targets,
                weights,
            },
            ng,
        )
    }

    /// Reverse sweep from scalar `output` (seed gradient 1).
    pub fn backward(&mut self, output: Var) {
        assert_eq!(self.value(output).len(), 1, "backward needs a scalar output");
        let n = self.nodes.len();
        let mut grads: Vec<Option<Matrix>> = (0..n).map(|_| None).collect();
        grads[output.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=output.0).rev() {
            if !self.nodes[idx].needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        self.grads = grads;
    }

    fn propagate(&self, idx: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[idx];
        let mut acc = |v: Var, delta: Matrix| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.ng(*a) {
                    acc(*a, g.matmul_transposed(val(*b)));
                }
                if self.ng(*b) {
                    acc(*b, val(*a).transposed_matmul(g));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, bias) => {
                acc(*a, g.clone());
                if self.ng(*bias) {
                    let mut db = Matrix::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (d, &x) in db.data.iter_mut().zip(g.row(r)) {
                            *d += x;
                        }
                    }
                    acc(*bias, db);
                }
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                if self.ng(*a) {
                    acc(*a, g.zip_map(val(*b), |x, y| x * y));
                }
                if self.ng(*b) {
                    acc(*b, g.zip_map(val(*a), |x, y| x * y));
                }
            }
            Op::MulConst(a, c) => acc(*a, g.zip_map(c, |x, y| x * y)),
            Op::Scale(a, s) => acc(*a, g.map(|x| x * s)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::Sigmoid(a) => acc(*a, g.zip_map(&node.value, |x, s| x * s * (1.0 - s))),
            Op::Tanh(a) => acc(*a, g.zip_map(&node.value, |x, t| x * (1.0 - t * t))),
            Op::Relu(a) => acc(*a, g.zip_map(val(*a), |x, z| if z > 0.0 { x } else { 0.0 })),
            Op::Exp(a) => acc(*a, g.zip_map(&node.value, |x, e| x * e)),
            Op::Log(a) => acc(*a, g.zip_map(val(*a), |x, z| x / z)),
            Op::Square(a) => acc(*a, g.zip_map(val(*a), |x, z| 2.0 * x * z)),
            Op::Powf(a, p) => {
                let p = *p;
                acc(
                    *a,
                    g.zip_map(val(*a), |x, z| {
                        if z > 0.0 {
                            x * p * z.powf(p - 1.0)
                        } else {
                            0.0
                        }
                    }),
                )
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for &p in parts {
                    let w = val(p).cols;
                    if self.ng(p) {
                        acc(p, g.slice_cols(start, start + w));
                    }
                    start += w;
                }
            }
            Op::SliceCols(a, start) => {
                let src = val(*a);
                let mut d = Matrix::zeros(src.rows, src.cols);
                for r in 0..g.rows {
                    d.data[r * src.cols + start..r * src.cols + start + g.cols]
                        .copy_from_slice(g.row(r));
                }
                acc(*a, d);
            }
            Op::Sum(a) => {
                let src = val(*a);
                acc(*a, Matrix::filled(src.rows, src.cols, g.data[0]));
            }
            Op::Mean(a) => {
                let src = val(*a);
                acc(*a, Matrix::filled(src.rows, src.cols, g.data[0] / src.len() as f64));
            }
            Op::Bce {
                probs,
                targets,
                weights,
            } => {
                let p = val(*probs);
                let denom: f64 = weights.as_ref().map_or(p.len() as f64, |w| w.sum());
                let mut d = Matrix::zeros(p.rows, p.cols);
                if denom > 0.0 {
                    for k in 0..p.len() {
                        let w = weights.as_ref().map_or(1.0, |w| w.data[k]);
                        let raw = p.data[k];
                        if w == 0.0 || raw < P_CLAMP || raw > 1.0 - P_CLAMP {
                            continue;
                        }
                        let y = targets.data[k];
                        d.data[k] = g.data[0] * w * ((1.0 - y) / (1.0 - raw) - y / raw) / denom;
                    }
                }
                acc(*probs, d);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Matrix {
        let mut rng = seed::rng(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect())
    }

    /// Checks `d/dx sum(w ⊙ f(x))` against central differences.
    fn fd_check(x0: &Matrix, f: &dyn Fn(&mut Graph, Var) -> Var, seed: u64) -> f64 {
        let eval = |x: &Matrix| -> (f64, Option<Matrix>) {
            let mut g = Graph::new();
            let xv = g.variable(x.clone());
            let y = f(&mut g, xv);
            let w = random(g.value(y).rows, g.value(y).cols, -1.0, 1.0, seed);
            let wy = g.mul_const(y, w);
            let s = g.sum(wy);
            g.backward(s);
            (g.value(s).data[0], g.grad(xv).cloned())
        };
        let (_, analytic) = eval(x0);
        let analytic = analytic.unwrap_or_else(|| Matrix::zeros(x0.rows, x0.cols));
        let h = 1e-5;
        let mut worst = 0.0f64;
        for k in 0..x0.len() {
            let mut plus = x0.clone();
            plus.data[k] += h;
            let mut minus = x0.clone();
            minus.data[k] -= h;
            let numeric = (eval(&plus).0 - eval(&minus).0) / (2.0 * h);
            let a = analytic.data[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn sigmoid_derivative_at_zero() {
        let mut g = Graph::new();
        let x = g.variable(Matrix::scalar(0.0));
        let y = g.sigmoid(x);
        g.backward(y);
        assert_eq!(g.grad(x).unwrap().data[0], 0.25);
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut g = Graph::new();
        let x = g.variable(random(3, 4, -1.0, 1.0, 1));
        let s = g.sum(x);
        g.backward(s);
        assert!(g.grad(x).unwrap().data.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Matrix::scalar(2.0));
        let x = g.variable(Matrix::scalar(3.0));
        let y = g.mul(c, x);
        g.backward(y);
        assert!(g.grad(c).is_none());
        assert_eq!(g.grad(x).unwrap().data[0], 2.0);
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let mut g = Graph::new();
        let p = g.variable(Matrix::filled(2, 3, 0.5));
        let targets = Matrix::from_vec(2, 3, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let l = g.bce(p, targets, None);
        assert!((g.value(l).data[0] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_weights_mask_entries() {
        let mut g = Graph::new();
        let p = g.variable(Matrix::from_vec(1, 2, vec![0.5, 0.01]));
        let targets = Matrix::from_vec(1, 2, vec![1.0, 1.0]);
        let w = Matrix::from_vec(1, 2, vec![1.0, 0.0]);
        let l = g.bce(p, targets, Some(w));
        g.backward(l);
        assert!((g.value(l).data[0] - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.grad(p).unwrap().data[1], 0.0);
    }

    type Unary = fn(&mut Graph, Var) -> Var;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn unary_primitives_match_finite_differences(seed in 0u64..10_000) {
            let cases: [(&str, Unary, f64, f64); 8] = [
                ("sigmoid", |g, x| g.sigmoid(x), -3.0, 3.0),
                ("tanh", |g, x| g.tanh(x), -2.0, 2.0),
                ("relu", |g, x| g.relu(x), 0.1, 2.0),
                ("relu_neg", |g, x| g.relu(x), -2.0, -0.1),
                ("exp", |g, x| g.exp(x), -2.0, 2.0),
                ("log", |g, x| g.log(x), 0.2, 3.0),
                ("square", |g, x| g.square(x), -2.0, 2.0),
                ("powf", |g, x| g.powf(x, 1.5), 0.1, 2.0),
            ];
            for (name, f, lo, hi) in cases {
                let x = random(2, 3, lo, hi, seed);
                let err = fd_check(&x, &f, seed + 1);
                prop_assert!(err < 1e-4, "{}: {}", name, err);
            }
        }

        #[test]
        fn structural_primitives_match_finite_differences(seed in 0u64..10_000) {
            let other = random(3, 2, -1.0, 1.0, seed + 7);
            let bias = random(1, 3, -1.0, 1.0, seed + 8);
            let same = random(2, 3, -1.0, 1.0, seed + 9);
            let x = random(2, 3, -1.5, 1.5, seed);

            let checks: Vec<(&str, Box<dyn Fn(&mut Graph, Var) -> Var>)> = vec![
                ("matmul_left", Box::new(move |g: &mut Graph, x| { let b = g.constant(other.clone()); g.matmul(x, b) })),
                ("matmul_right", Box::new({ let o = random(4, 2, -1.0, 1.0, seed + 3); move |g: &mut Graph, x| { let a = g.constant(o.clone()); g.matmul(a, x) } })),
                ("add_row_param", Box::new(move |g: &mut Graph, x| { let b = g.constant(bias.clone()); g.add_row(x, b) })),
                ("sub_mul", Box::new(move |g: &mut Graph, x| { let c = g.constant(same.clone()); let d = g.sub(x, c); g.mul(d, x) })),
                ("concat_slice", Box::new(|g: &mut Graph, x| { let t = g.tanh(x); let c = g.concat_cols(&[x, t]); g.slice_cols(c, 2, 5) })),
                ("mean_scale", Box::new(|g: &mut Graph, x| { let s = g.square(x); let m = g.mean(s); g.scale(m, 3.0) })),
                ("bce", Box::new(|g: &mut Graph, x| {
                    let p = g.sigmoid(x);
                    g.bce(p, Matrix::from_vec(2, 3, vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]), None)
                })),
            ];
            for (name, f) in &checks {
                let err = fd_check(&x, f.as_ref(), seed + 1);
                prop_assert!(err < 1e-4, "{}: {}", name, err);
            }
        }
    }

    #[test]
    fn broadcast_bias_matches_finite_differences() {
        let m = random(4, 3, -1.0, 1.0, 4);
        let bias = random(1, 3, -1.0, 1.0, 5);
        let err = fd_check(
            &bias,
            &move |g: &mut Graph, b| {
                let a = g.constant(m.clone());
                let y = g.add_row(a, b);
                g.tanh(y)
            },
            6,
        );
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn bias_gradient_sums_rows() {
        let mut g = Graph::new();
        let x = g.constant(random(4, 3, -1.0, 1.0, 2));
        let b = g.variable(Matrix::zeros(1, 3));
        let y = g.add_row(x, b);
        let s = g.sum(y);
        g.backward(s);
        assert_eq!(g.grad(b).unwrap().data, vec![4.0; 3]);
    }
}
