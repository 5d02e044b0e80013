use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calibrate::{split_indices, VALIDATION_FRACTION};
use super::Dataset;

/// Binary tree over presence bits. `absent` is taken when the bit is clear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf(f64),
    Split {
        feature: u32,
        absent: Box<Node>,
        present: Box<Node>,
    },
}

impl Node {
    pub fn eval(&self, bits: &[bool]) -> f64 {
        let mut n = self;
        loop {
            match n {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    absent,
                    present,
                } => n = if bits[*feature as usize] { present } else { absent },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { absent, present, .. } => 1 + absent.depth().max(present.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { absent, present, .. } => absent.leaves() + present.leaves(),
        }
    }
}

/// Random-search space for the classification tree; ranges are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSearch {
    pub trials: usize,
    pub max_depth: (usize, usize),
    pub min_samples_leaf: (usize, usize),
}

impl Default for TreeSearch {
    fn default() -> Self {
        TreeSearch {
            trials: super::DEFAULT_TREE_TRIALS,
            max_depth: (2, 16),
            min_samples_leaf: (1, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub dims: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub root: Node,
}

/// Per-feature counts over the samples reaching a node, restricted to the
/// features that occur there, ascending.
pub(super) fn feature_counts<T: Copy + Default + std::ops::AddAssign>(
    ds: &Dataset,
    idx: &[usize],
    weight: impl Fn(usize) -> T,
    scratch: &mut Vec<(usize, T)>,
) -> Vec<(u32, usize, T)> {
    scratch.clear();
    scratch.resize(ds.dims, (0, T::default()));
    let mut touched = Vec::new();
    for &i in idx {
        let w = weight(i);
        for &f in &ds.active[i] {
            let slot = &mut scratch[f as usize];
            if slot.0 == 0 {
                touched.push(f);
            }
            slot.0 += 1;
            slot.1 += w;
        }
    }
    touched.sort_unstable();
    touched
        .into_iter()
        .map(|f| (f, scratch[f as usize].0, scratch[f as usize].1))
        .collect()
}

fn gini_mass(n: usize, c: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = c as f64 / n as f64;
    n as f64 * 2.0 * p * (1.0 - p)
}

struct Cart<'a> {
    ds: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    scratch: Vec<(usize, usize)>,
}

impl Cart<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> Node {
        let n = idx.len();
        let c = idx.iter().filter(|&&i| self.ds.correct[i]).count();
        let leaf = Node::Leaf(c as f64 / n as f64);
        if depth >= self.max_depth || c == 0 || c == n || n < 2 * self.min_leaf {
            return leaf;
        }
        let ds = self.ds;
        let counts = feature_counts(ds, &idx, |i| ds.correct[i] as usize, &mut self.scratch);
        let parent = gini_mass(n, c);
        let mut best: Option<(u32, f64)> = None;
        for (f, n1, c1) in counts {
            let n0 = n - n1;
            if n1 < self.min_leaf || n0 < self.min_leaf {
                continue;
            }
            let gain = parent - gini_mass(n1, c1) - gini_mass(n0, c - c1);
            if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((f, gain));
            }
        }
        let Some((feature, _)) = best else {
            return leaf;
        };
        let (present, absent): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| ds.active[i].binary_search(&feature).is_ok());
        Node::Split {
            feature,
            absent: Box::new(self.grow(absent, depth + 1)),
            present: Box::new(self.grow(present, depth + 1)),
        }
    }
}

pub(super) fn fit(ds: &Dataset, max_depth: usize, min_samples_leaf: usize) -> TreeModel {
    let mut cart = Cart {
        ds,
        max_depth,
        min_leaf: min_samples_leaf,
        scratch: Vec::new(),
    };
    TreeModel {
        dims: ds.dims,
        max_depth,
        min_samples_leaf,
        root: cart.grow((0..ds.len()).collect(), 0),
    }
}

fn accuracy(m: &TreeModel, ds: &Dataset) -> f64 {
    if ds.len() == 0 {
        return 0.0;
    }
    let mut bits = vec![false; ds.dims];
    let mut hits = 0;
    for (a, &y) in ds.active.iter().zip(&ds.correct) {
        bits.iter_mut().for_each(|b| *b = false);
        a.iter().for_each(|&f| bits[f as usize] = true);
        hits += ((m.root.eval(&bits) >= 0.5) == y) as usize;
    }
    hits as f64 / ds.len() as f64
}

/// Random search over (max_depth, min_samples_leaf), scored by accuracy on
/// an internal stratified hold-out; ties go to higher training accuracy and
/// then to the earlier draw. The winner is refit on all of `ds`.
pub(super) fn search(ds: &Dataset, space: TreeSearch, seed: u64) -> TreeModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_idx, val_idx) = split_indices(&ds.correct, VALIDATION_FRACTION, &mut rng);
    let train = ds.subset(&train_idx);
    let val = ds.subset(&val_idx);
    let mut best: Option<((f64, f64), (usize, usize))> = None;
    for _ in 0..space.trials {
        let depth = rng.gen_range(space.max_depth.0..=space.max_depth.1);
        let leaf = rng.gen_range(space.min_samples_leaf.0..=space.min_samples_leaf.1);
        let m = fit(&train, depth, leaf);
        let train_acc = accuracy(&m, &train);
        let score = (if val.len() > 0 { accuracy(&m, &val) } else { train_acc }, train_acc);
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, (depth, leaf)));
        }
    }
    let (_, (depth, leaf)) = best.expect("trials >= 1");
    log::debug!("tree search picked max_depth={depth} min_samples_leaf={leaf}");
    fit(ds, depth, leaf)
}
