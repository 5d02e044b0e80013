use serde::{Deserialize, Serialize};

use super::tree::{feature_counts, Node};
use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub max_depth: usize,
    pub n_estimators: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            max_depth: 7,
            n_estimators: 100,
            learning_rate: 0.1,
            lambda: 1.0,
        }
    }
}

/// Logistic-loss boosted trees. The probability of Correct is
/// `sigmoid(base + sum of tree outputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub dims: usize,
    pub params: GbtParams,
    pub base: f64,
    pub trees: Vec<Node>,
    /// Mean training loss before the first round and after each round.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z) - y z`, computed without overflow.
fn logistic_loss(z: f64, y: bool) -> f64 {
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - if y { z } else { 0.0 }
}

struct Booster<'a> {
    ds: &'a Dataset,
    params: GbtParams,
    margin: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    scratch: Vec<(usize, Pair)>,
}

impl Booster<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    /// Leaf weight: a damped Newton step, halved until the loss over the
    /// leaf's own samples does not increase. Leaves partition the samples,
    /// so the total loss cannot increase either.
    fn leaf(&self, idx: &[usize], g: f64, h: f64) -> Node {
        let leaf_loss = |w: f64| -> f64 {
            idx.iter()
                .map(|&i| logistic_loss(self.margin[i] + w, self.ds.correct[i]))
                .sum()
        };
        let before = leaf_loss(0.0);
        let mut w = -g / (h + self.params.lambda) * self.params.learning_rate;
        for _ in 0..60 {
            if w == 0.0 || leaf_loss(w) <= before {
                return Node::Leaf(w);
            }
            w /= 2.0;
        }
        Node::Leaf(0.0)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> Node {
        let g: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        if depth >= self.params.max_depth || idx.len() < 2 {
            return self.leaf(&idx, g, h);
        }
        let (grad, hess, scratch) = (&self.grad, &self.hess, &mut self.scratch);
        let counts = feature_counts(self.ds, &idx, |i| Pair(grad[i], hess[i]), scratch);
        let parent = self.score(g, h);
        let mut best: Option<(u32, f64)> = None;
        for (f, n1, Pair(g1, h1)) in counts {
            if n1 == idx.len() {
                continue;
            }
            let gain = self.score(g1, h1) + self.score(g - g1, h - h1) - parent;
            if gain > 1e-12 && best.is_none_or(|(_, b)| gain > b) {
                best = Some((f, gain));
            }
        }
        let Some((feature, _)) = best else {
            return self.leaf(&idx, g, h);
        };
        let ds = self.ds;
        let (present, absent): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| ds.active[i].binary_search(&feature).is_ok());
        Node::Split {
            feature,
            absent: Box::new(self.grow(absent, depth + 1)),
            present: Box::new(self.grow(present, depth + 1)),
        }
    }

    fn mean_loss(&self) -> f64 {
        let total: f64 = self
            .margin
            .iter()
            .zip(&self.ds.correct)
            .map(|(&m, &y)| logistic_loss(m, y))
            .sum();
        total / self.margin.len() as f64
    }
}

#[derive(Clone, Copy, Default)]
struct Pair(f64, f64);

impl std::ops::AddAssign for Pair {
    fn add_assign(&mut self, o: Pair) {
        self.0 += o.0;
        self.1 += o.1;
    }
}

fn eval_active(node: &Node, active: &[u32]) -> f64 {
    let mut n = node;
    loop {
        match n {
            Node::Leaf(v) => return *v,
            Node::Split {
                feature,
                absent,
                present,
            } => {
                n = if active.binary_search(feature).is_ok() {
                    present
                } else {
                    absent
                }
            }
        }
    }
}

impl GbtModel {
    pub(super) fn fit(ds: &Dataset, params: GbtParams) -> Self {
        let n = ds.len();
        let pos = ds.correct.iter().filter(|&&c| c).count() as f64;
        let base = (pos / (n as f64 - pos)).ln();
        let mut b = Booster {
            ds,
            params,
            margin: vec![base; n],
            grad: vec![0.0; n],
            hess: vec![0.0; n],
            scratch: Vec::new(),
        };
        let mut loss_history = vec![b.mean_loss()];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for _ in 0..params.n_estimators {
            for i in 0..n {
                let p = sigmoid(b.margin[i]);
                b.grad[i] = p - ds.correct[i] as u8 as f64;
                b.hess[i] = p * (1.0 - p);
            }
            let tree = b.grow((0..n).collect(), 0);
            for i in 0..n {
                b.margin[i] += eval_active(&tree, &ds.active[i]);
            }
            loss_history.push(b.mean_loss());
            trees.push(tree);
        }
        GbtModel {
            dims: ds.dims,
            params,
            base,
            trees,
            loss_history,
        }
    }

    pub fn margin(&self, bits: &[bool]) -> f64 {
        self.base + self.trees.iter().map(|t| t.eval(bits)).sum::<f64>()
    }

    pub(super) fn predict(&self, bits: &[bool]) -> f64 {
        sigmoid(self.margin(bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::fixtures::{sample, separable};
    use crate::learn::{train_model, Label, LabeledSample, Model, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gbt(data: &[LabeledSample]) -> GbtModel {
        match train_model(&ModelConfig::gbt(), data, 0).unwrap() {
            Model::Gbt(m) => m,
            _ => unreachable!(),
        }
    }

    fn assert_non_increasing(h: &[f64]) {
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn loss_history_on_separable_data() {
        let m = gbt(&separable(20));
        assert_eq!(m.loss_history.len(), 101);
        assert_non_increasing(&m.loss_history);
        assert!(m.loss_history[100] < m.loss_history[0] / 4.0);
        assert!((m.base - 0.0).abs() < 1e-12);
    }

    #[test]
    fn loss_history_on_noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let data: Vec<_> = (0..60)
                .map(|_| {
                    let bits: Vec<u8> = (0..12).map(|_| rng.gen_range(0..2)).collect();
                    let label = if rng.gen_bool(0.5) { Label::Correct } else { Label::Incorrect };
                    sample(&bits, label)
                })
                .collect();
            let m = gbt(&data);
            assert_non_increasing(&m.loss_history);
        }
    }

    #[test]
    fn large_learning_rate_still_monotone() {
        let p = GbtParams {
            learning_rate: 1.0,
            lambda: 0.0,
            ..GbtParams::default()
        };
        let data = separable(16);
        let Model::Gbt(m) = train_model(&ModelConfig::Gbt(p), &data, 0).unwrap() else {
            unreachable!()
        };
        assert_non_increasing(&m.loss_history);
    }

    #[test]
    fn loss_is_stable_at_extremes() {
        assert!(logistic_loss(800.0, true) < 1e-300);
        assert!((logistic_loss(-800.0, true) - 800.0).abs() < 1e-9);
        assert!((logistic_loss(0.0, false) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }
}
