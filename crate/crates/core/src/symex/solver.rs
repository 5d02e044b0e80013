use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{flip_comparison, negate_comparison, Interval, SymExpr, SymNode};
use crate::minilang::{BinOp, TestCase, UnOp};

pub const DEFAULT_SOLVER_CAP: u64 = 1_000_000;

/// Inclusive per-input bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDomain {
    bounds: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("input {index} has empty bounds [{lo}, {hi}]")]
    EmptyBounds { index: usize, lo: i64, hi: i64 },
    #[error("a domain needs at least one input")]
    NoInputs,
}

impl InputDomain {
    pub fn new(bounds: Vec<(i64, i64)>) -> Result<Self, DomainError> {
        if bounds.is_empty() {
            return Err(DomainError::NoInputs);
        }
        for (index, &(lo, hi)) in bounds.iter().enumerate() {
            if lo > hi {
                return Err(DomainError::EmptyBounds { index, lo, hi });
            }
        }
        Ok(InputDomain { bounds })
    }

    pub fn bounds(&self) -> &[(i64, i64)] {
        &self.bounds
    }

    pub fn arity(&self) -> usize {
        self.bounds.len()
    }

    /// Number of points, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (hi as i128 - lo as i128 + 1) as u128)
            .fold(1u128, |acc, s| acc.saturating_mul(s))
    }

    pub fn contains(&self, test: &TestCase) -> bool {
        test.values.len() == self.bounds.len()
            && test
                .values
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn lowest(&self) -> TestCase {
        TestCase::new(self.bounds.iter().map(|b| b.0).collect())
    }

    /// Every point in lexicographic order (first input most significant).
    pub fn points(&self) -> impl Iterator<Item = TestCase> + '_ {
        Odometer::new(self.bounds.clone(), (0..self.bounds.len()).collect(), self.lowest())
            .map(TestCase::new)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(TestCase),
    Unsat,
    /// The enumeration cap ran out before the pruned box was exhausted.
    Unknown,
}

/// Finds the lexicographically least point of `domain` satisfying every
/// conjunct, or proves there is none. Interval propagation first narrows
/// each input's range; the remaining box is enumerated, spending at most
/// `cap` evaluations.
pub fn solve_constraint(conjuncts: &[SymExpr], domain: &InputDomain, cap: u64) -> SolveResult {
    let mut atoms = Vec::new();
    for c in conjuncts {
        flatten(c, &mut atoms);
    }
    if atoms.iter().any(|a| a.as_const() == Some(0)) {
        return SolveResult::Unsat;
    }
    atoms.retain(|a| a.as_const().is_none());

    let mut boxes: Vec<Interval> = domain.bounds().to_vec();
    if !propagate(&atoms, &mut boxes) {
        return SolveResult::Unsat;
    }

    let mask = atoms.iter().fold(0u32, |m, a| m | a.input_mask());
    let vars: Vec<usize> = (0..boxes.len()).filter(|i| mask & (1 << i) != 0).collect();
    let mut base = TestCase::new(boxes.iter().map(|b| b.0).collect());
    if vars.is_empty() {
        // Only constants remained, all non-zero.
        return SolveResult::Sat(base);
    }

    let mut evals = 0u64;
    for point in Odometer::new(boxes, vars, base.clone()) {
        if evals >= cap {
            return SolveResult::Unknown;
        }
        evals += 1;
        if atoms.iter().all(|a| a.eval(&point) != 0) {
            base.values = point;
            return SolveResult::Sat(base);
        }
    }
    SolveResult::Unsat
}

/// Splits nested conjunctions into atoms.
fn flatten(e: &SymExpr, out: &mut Vec<SymExpr>) {
    match e.node() {
        SymNode::Binary(BinOp::And, l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        _ => out.push(e.clone()),
    }
}

/// Narrows `boxes` to a fixpoint (bounded number of rounds). Returns false
/// when some atom is unsatisfiable over the box.
fn propagate(atoms: &[SymExpr], boxes: &mut [Interval]) -> bool {
    for _ in 0..16 {
        let before = boxes.to_vec();
        for a in atoms {
            if a.interval(boxes) == (0, 0) {
                return false;
            }
            if !tighten(a, true, boxes) {
                return false;
            }
        }
        if before == boxes {
            break;
        }
    }
    true
}

/// Applies the constraint "`e` is `want`" to the boxes. Returns false if a
/// box becomes empty.
fn tighten(e: &SymExpr, want: bool, boxes: &mut [Interval]) -> bool {
    match e.node() {
        SymNode::Unary(UnOp::Not, inner) => tighten(inner, !want, boxes),
        SymNode::Binary(BinOp::And, l, r) if want => {
            tighten(l, true, boxes) && tighten(r, true, boxes)
        }
        SymNode::Binary(BinOp::Or, l, r) if !want => {
            tighten(l, false, boxes) && tighten(r, false, boxes)
        }
        SymNode::Binary(op, l, r) if op.is_comparison() => {
            let op = if want {
                *op
            } else {
                negate_comparison(*op).unwrap()
            };
            tighten_side(op, l, r, boxes) && tighten_side(flip_comparison(op).unwrap(), r, l, boxes)
        }
        SymNode::Input(_) => {
            let op = if want { BinOp::Ne } else { BinOp::Eq };
            tighten_side(op, e, &SymExpr::constant(0), boxes)
        }
        _ => true,
    }
}

/// Handles `lhs op rhs` where `lhs` is an input, optionally offset by a
/// constant that cannot wrap over the current box.
fn tighten_side(op: BinOp, lhs: &SymExpr, rhs: &SymExpr, boxes: &mut [Interval]) -> bool {
    let (var, offset) = match lhs.node() {
        SymNode::Input(i) => (*i, 0i128),
        SymNode::Binary(add @ (BinOp::Add | BinOp::Sub), a, b) => {
            let (var, c, sign) = match (a.node(), b.node()) {
                (SymNode::Input(i), SymNode::Const(c)) => (*i, *c, if *add == BinOp::Add { 1 } else { -1 }),
                (SymNode::Const(c), SymNode::Input(i)) if *add == BinOp::Add => (*i, *c, 1),
                _ => return true,
            };
            let (lo, hi) = boxes[var];
            let off = sign * c as i128;
            if lo as i128 + off < i64::MIN as i128 || hi as i128 + off > i64::MAX as i128 {
                return true;
            }
            (var, off)
        }
        _ => return true,
    };
    if rhs.input_mask() & (1 << var) != 0 {
        return true;
    }
    let (rlo, rhi) = rhs.interval(boxes);
    let (rlo, rhi) = (rlo as i128 - offset, rhi as i128 - offset);
    let (lo, hi) = boxes[var];
    let (mut lo, mut hi) = (lo as i128, hi as i128);
    match op {
        BinOp::Lt => hi = hi.min(rhi - 1),
        BinOp::Le => hi = hi.min(rhi),
        BinOp::Gt => lo = lo.max(rlo + 1),
        BinOp::Ge => lo = lo.max(rlo),
        BinOp::Eq => {
            lo = lo.max(rlo);
            hi = hi.min(rhi);
        }
        BinOp::Ne => {
            if rlo == rhi {
                if lo == rlo {
                    lo += 1;
                }
                if hi == rlo {
                    hi -= 1;
                }
            }
        }
        _ => {}
    }
    if lo > hi {
        return false;
    }
    boxes[var] = (lo as i64, hi as i64);
    true
}

/// Lexicographic walk over the listed variables; others keep `base`.
struct Odometer {
    boxes: Vec<Interval>,
    vars: Vec<usize>,
    current: Option<Vec<i64>>,
}

impl Odometer {
    fn new(boxes: Vec<Interval>, vars: Vec<usize>, base: TestCase) -> Self {
        let mut start = base.values;
        for &v in &vars {
            start[v] = boxes[v].0;
        }
        Odometer {
            boxes,
            vars,
            current: Some(start),
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut advanced = false;
        for &v in self.vars.iter().rev() {
            if cur[v] < self.boxes[v].1 {
                cur[v] += 1;
                advanced = true;
                break;
            }
            cur[v] = self.boxes[v].0;
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}
