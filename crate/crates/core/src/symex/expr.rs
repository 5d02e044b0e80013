use std::fmt;
use std::rc::Rc;

use crate::minilang::{BinOp, UnOp};

/// Closed interval of i64 values, computed in i128 to detect overflow.
pub type Interval = (i64, i64);

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum SymNode {
    Const(i64),
    /// Positional reference to the n-th program input.
    Input(usize),
    Unary(UnOp, SymExpr),
    Binary(BinOp, SymExpr, SymExpr),
}

/// Shared, immutable symbolic expression over program inputs. Booleans are
/// integers: zero is false, anything else true. Construction folds
/// constants, so a branch on a concrete value never reaches the solver.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymExpr(Rc<SymNode>);

impl SymExpr {
    pub fn node(&self) -> &SymNode {
        &self.0
    }

    pub fn constant(v: i64) -> SymExpr {
        SymExpr(Rc::new(SymNode::Const(v)))
    }

    pub fn input(i: usize) -> SymExpr {
        SymExpr(Rc::new(SymNode::Input(i)))
    }

    pub fn as_const(&self) -> Option<i64> {
        match *self.0 {
            SymNode::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn unary(op: UnOp, e: SymExpr) -> SymExpr {
        if let Some(v) = e.as_const() {
            return SymExpr::constant(match op {
                UnOp::Neg => v.wrapping_neg(),
                UnOp::Not => (v == 0) as i64,
            });
        }
        if op == UnOp::Not {
            // !!x is only the truth value of x, not x itself; fold just the
            // comparison case.
            if let SymNode::Binary(cmp, l, r) = e.node() {
                if let Some(neg) = negate_comparison(*cmp) {
                    return SymExpr::binary(neg, l.clone(), r.clone());
                }
            }
        }
        SymExpr(Rc::new(SymNode::Unary(op, e)))
    }

    pub fn not(e: SymExpr) -> SymExpr {
        SymExpr::unary(UnOp::Not, e)
    }

    /// Truth value as 0/1.
    pub fn truthy(e: SymExpr) -> SymExpr {
        if e.is_boolean() {
            e
        } else {
            SymExpr::binary(BinOp::Ne, e, SymExpr::constant(0))
        }
    }

    pub fn binary(op: BinOp, l: SymExpr, r: SymExpr) -> SymExpr {
        if let (Some(a), Some(b)) = (l.as_const(), r.as_const()) {
            if let Some(v) = op.apply(a, b) {
                return SymExpr::constant(v);
            }
        }
        match (op, l.as_const(), r.as_const()) {
            (BinOp::Add, Some(0), _) => return r,
            (BinOp::Add | BinOp::Sub, _, Some(0)) => return l,
            (BinOp::Mul, Some(1), _) => return r,
            (BinOp::Mul | BinOp::Div, _, Some(1)) => return l,
            (BinOp::Mul, Some(0), _) | (BinOp::Mul, _, Some(0)) => return SymExpr::constant(0),
            (BinOp::And, Some(0), _) | (BinOp::And, _, Some(0)) => return SymExpr::constant(0),
            (BinOp::Or, Some(c), _) | (BinOp::Or, _, Some(c)) if c != 0 => {
                return SymExpr::constant(1)
            }
            (BinOp::And, Some(_), _) => return SymExpr::truthy(r),
            (BinOp::And, _, Some(_)) => return SymExpr::truthy(l),
            (BinOp::Or, Some(0), _) => return SymExpr::truthy(r),
            (BinOp::Or, _, Some(0)) => return SymExpr::truthy(l),
            _ => {}
        }
        if l == r {
            match op {
                BinOp::Eq | BinOp::Le | BinOp::Ge => return SymExpr::constant(1),
                BinOp::Ne | BinOp::Lt | BinOp::Gt => return SymExpr::constant(0),
                BinOp::Sub => return SymExpr::constant(0),
                _ => {}
            }
        }
        SymExpr(Rc::new(SymNode::Binary(op, l, r)))
    }

    /// True when the value is always 0 or 1.
    pub fn is_boolean(&self) -> bool {
        match self.node() {
            SymNode::Const(v) => *v == 0 || *v == 1,
            SymNode::Input(_) => false,
            SymNode::Unary(UnOp::Not, _) => true,
            SymNode::Unary(UnOp::Neg, _) => false,
            SymNode::Binary(op, _, _) => op.is_comparison() || matches!(op, BinOp::And | BinOp::Or),
        }
    }

    /// Total evaluation: division or remainder by zero yields 0. Paths only
    /// reach a division after a guard asserting the divisor is non-zero.
    pub fn eval(&self, inputs: &[i64]) -> i64 {
        match self.node() {
            SymNode::Const(v) => *v,
            SymNode::Input(i) => inputs[*i],
            SymNode::Unary(UnOp::Neg, e) => e.eval(inputs).wrapping_neg(),
            SymNode::Unary(UnOp::Not, e) => (e.eval(inputs) == 0) as i64,
            SymNode::Binary(BinOp::And, l, r) => {
                (l.eval(inputs) != 0 && r.eval(inputs) != 0) as i64
            }
            SymNode::Binary(BinOp::Or, l, r) => {
                (l.eval(inputs) != 0 || r.eval(inputs) != 0) as i64
            }
            SymNode::Binary(op, l, r) => op.apply(l.eval(inputs), r.eval(inputs)).unwrap_or(0),
        }
    }

    /// Bitmask of the inputs the expression mentions.
    pub fn input_mask(&self) -> u32 {
        match self.node() {
            SymNode::Const(_) => 0,
            SymNode::Input(i) => 1 << i,
            SymNode::Unary(_, e) => e.input_mask(),
            SymNode::Binary(_, l, r) => l.input_mask() | r.input_mask(),
        }
    }

    /// Sound over-approximation of the value range when each input `i`
    /// ranges over `boxes[i]`.
    pub fn interval(&self, boxes: &[Interval]) -> Interval {
        const FULL: Interval = (i64::MIN, i64::MAX);
        let fits = |lo: i128, hi: i128| -> Interval {
            if lo < i64::MIN as i128 || hi > i64::MAX as i128 {
                FULL
            } else {
                (lo as i64, hi as i64)
            }
        };
        match self.node() {
            SymNode::Const(v) => (*v, *v),
            SymNode::Input(i) => boxes[*i],
            SymNode::Unary(UnOp::Neg, e) => {
                let (lo, hi) = e.interval(boxes);
                fits(-(hi as i128), -(lo as i128))
            }
            SymNode::Unary(UnOp::Not, e) => {
                let (lo, hi) = e.interval(boxes);
                if lo == 0 && hi == 0 {
                    (1, 1)
                } else if lo > 0 || hi < 0 {
                    (0, 0)
                } else {
                    (0, 1)
                }
            }
            SymNode::Binary(op, l, r) => {
                let (a, b) = l.interval(boxes);
                let (c, d) = r.interval(boxes);
                let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
                match op {
                    BinOp::Add => fits(a + c, b + d),
                    BinOp::Sub => fits(a - d, b - c),
                    BinOp::Mul => {
                        let p = [a * c, a * d, b * c, b * d];
                        fits(*p.iter().min().unwrap(), *p.iter().max().unwrap())
                    }
                    BinOp::Div => {
                        if c <= 0 && d >= 0 {
                            // Divisor may be zero (evaluates to 0) or tiny;
                            // bound by the dividend magnitude.
                            let m = a.abs().max(b.abs());
                            fits(-m, m)
                        } else {
                            let p = [a / c, a / d, b / c, b / d];
                            fits(*p.iter().min().unwrap(), *p.iter().max().unwrap())
                        }
                    }
                    BinOp::Rem => {
                        let m = c.abs().max(d.abs());
                        if m == 0 {
                            (0, 0)
                        } else {
                            let bound = m - 1;
                            let lo = if a >= 0 { 0 } else { -bound.min(a.abs()) };
                            let hi = if b <= 0 { 0 } else { bound.min(b) };
                            fits(lo, hi)
                        }
                    }
                    BinOp::Lt => tri(b < c, a >= d),
                    BinOp::Le => tri(b <= c, a > d),
                    BinOp::Gt => tri(a > d, b <= c),
                    BinOp::Ge => tri(a >= d, b < c),
                    BinOp::Eq => tri(a == b && b == c && c == d, b < c || d < a),
                    BinOp::Ne => tri(b < c || d < a, a == b && b == c && c == d),
                    BinOp::And => {
                        let lt = truth(a, b);
                        let rt = truth(c, d);
                        match (lt, rt) {
                            (Some(false), _) | (_, Some(false)) => (0, 0),
                            (Some(true), Some(true)) => (1, 1),
                            _ => (0, 1),
                        }
                    }
                    BinOp::Or => {
                        let lt = truth(a, b);
                        let rt = truth(c, d);
                        match (lt, rt) {
                            (Some(true), _) | (_, Some(true)) => (1, 1),
                            (Some(false), Some(false)) => (0, 0),
                            _ => (0, 1),
                        }
                    }
                }
            }
        }
    }
}

fn tri(always: bool, never: bool) -> Interval {
    if always {
        (1, 1)
    } else if never {
        (0, 0)
    } else {
        (0, 1)
    }
}

fn truth(lo: i128, hi: i128) -> Option<bool> {
    if lo == 0 && hi == 0 {
        Some(false)
    } else if lo > 0 || hi < 0 {
        Some(true)
    } else {
        None
    }
}

pub fn negate_comparison(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        _ => return None,
    })
}

/// `a op b` rewritten as `b op' a`.
pub fn flip_comparison(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        BinOp::Eq => BinOp::Eq,
        BinOp::Ne => BinOp::Ne,
        _ => return None,
    })
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            SymNode::Const(v) => write!(f, "{v}"),
            SymNode::Input(i) => write!(f, "$in{i}"),
            SymNode::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            SymNode::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            SymNode::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

impl fmt::Debug for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n() -> SymExpr {
        SymExpr::input(0)
    }

    #[test]
    fn constants_fold() {
        let e = SymExpr::binary(
            BinOp::Add,
            SymExpr::constant(2),
            SymExpr::binary(BinOp::Mul, SymExpr::constant(3), SymExpr::constant(4)),
        );
        assert_eq!(e.as_const(), Some(14));
        let cmp = SymExpr::binary(BinOp::Lt, SymExpr::constant(3), SymExpr::constant(2));
        assert_eq!(cmp.as_const(), Some(0));
        assert_eq!(SymExpr::binary(BinOp::Sub, n(), n()).as_const(), Some(0));
    }

    #[test]
    fn not_of_comparison_is_negated_comparison() {
        let gt = SymExpr::binary(BinOp::Gt, n(), SymExpr::constant(5));
        let le = SymExpr::not(gt);
        assert!(matches!(le.node(), SymNode::Binary(BinOp::Le, _, _)));
    }

    #[test]
    fn eval_is_total() {
        let e = SymExpr::binary(BinOp::Div, SymExpr::constant(7), n());
        assert_eq!(e.eval(&[0]), 0);
        assert_eq!(e.eval(&[2]), 3);
    }

    #[test]
    fn interval_bounds_are_sound_on_samples() {
        let x = SymExpr::input(0);
        let y = SymExpr::input(1);
        let exprs = [
            SymExpr::binary(BinOp::Mul, x.clone(), y.clone()),
            SymExpr::binary(BinOp::Sub, x.clone(), SymExpr::binary(BinOp::Mul, y.clone(), y.clone())),
            SymExpr::binary(BinOp::Div, x.clone(), y.clone()),
            SymExpr::binary(BinOp::Rem, x.clone(), y.clone()),
            SymExpr::binary(BinOp::Le, x.clone(), y.clone()),
            SymExpr::unary(UnOp::Neg, x.clone()),
        ];
        let boxes = [(-7, 9), (-3, 4)];
        for e in &exprs {
            let (lo, hi) = e.interval(&boxes);
            for a in boxes[0].0..=boxes[0].1 {
                for b in boxes[1].0..=boxes[1].1 {
                    let v = e.eval(&[a, b]);
                    assert!(lo <= v && v <= hi, "{e} = {v} outside [{lo}, {hi}] at ({a}, {b})");
                }
            }
        }
    }

    #[test]
    fn overflow_widens_to_full_range() {
        let e = SymExpr::binary(BinOp::Mul, n(), n());
        assert_eq!(e.interval(&[(0, i64::MAX)]), (i64::MIN, i64::MAX));
    }
}
