//! AST mutations: semantics-preserving rewrites and bug injections.
//!
//! Sites are counted in a fixed pre-order over the program, so a mutation
//! is fully described by its kind and a site index.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::minilang::{BinOp, Expr, ForClause, PrintArg, Program, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rewrite {
    /// `a + b` to `b + a` for `+`, `*`, `==`, `!=`.
    CommuteOperands,
    /// `x = e` to `int t = e; x = t`, and likewise for declarations and prints.
    IntroduceTemp,
    /// `a < b` to `b > a` and the other orderings.
    FlipRelational,
    /// Swaps adjacent declarations that do not refer to each other.
    ReorderDecls,
}

impl Rewrite {
    pub const ALL: [Rewrite; 4] = [
        Rewrite::CommuteOperands,
        Rewrite::IntroduceTemp,
        Rewrite::FlipRelational,
        Rewrite::ReorderDecls,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bug {
    /// An integer literal moved by one.
    OffByOne,
    /// `+` and `-` exchanged.
    PlusMinus,
    /// `*` and `+` exchanged.
    MulAdd,
    /// `<` and `<=` exchanged, and `>` with `>=`.
    StrictNonStrict,
    /// `a * b` to `a * b * b`.
    WrongPower,
    /// The else branch of an `if` removed.
    DropElse,
    /// The two branches of an `if` exchanged.
    SwapBranches,
}

impl Bug {
    pub const ALL: [Bug; 7] = [
        Bug::OffByOne,
        Bug::PlusMinus,
        Bug::MulAdd,
        Bug::StrictNonStrict,
        Bug::WrongPower,
        Bug::DropElse,
        Bug::SwapBranches,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bug::OffByOne => "off-by-one",
            Bug::PlusMinus => "plus-minus",
            Bug::MulAdd => "mul-add",
            Bug::StrictNonStrict => "strict-non-strict",
            Bug::WrongPower => "wrong-power",
            Bug::DropElse => "drop-else",
            Bug::SwapBranches => "swap-branches",
        }
    }

    pub fn from_name(s: &str) -> Option<Bug> {
        Bug::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// A mutation pinned to a site. `delta` only matters for `OffByOne`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mutation {
    Rewrite { kind: Rewrite, site: usize },
    Bug { kind: Bug, site: usize, delta: i64 },
}

// ---------------------------------------------------------------------------
// Traversal

fn expr_children(e: &mut Expr) -> Vec<&mut Expr> {
    match e {
        Expr::Int(_) | Expr::Var(_) => vec![],
        Expr::Unary(_, a) => vec![a.as_mut()],
        Expr::Binary(_, l, r) => vec![l.as_mut(), r.as_mut()],
    }
}

fn clause_expr(c: &mut Option<ForClause>) -> Option<&mut Expr> {
    match c {
        Some(ForClause::Decl(_, Some(e))) | Some(ForClause::Assign(_, e)) => Some(e),
        _ => None,
    }
}

/// Calls `f` on every statement list, outermost first.
fn for_each_list(stmts: &mut Vec<Stmt>, f: &mut dyn FnMut(&mut Vec<Stmt>)) {
    f(stmts);
    for s in stmts.iter_mut() {
        match s {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                for_each_list(then_body, f);
                if let Some(e) = else_body {
                    for_each_list(e, f);
                }
            }
            Stmt::While { body, .. } | Stmt::For { body, .. } | Stmt::Block(body) => {
                for_each_list(body, f)
            }
            Stmt::Switch { cases, default, .. } => {
                for c in cases.iter_mut() {
                    for_each_list(&mut c.body, f);
                }
                if let Some(d) = default {
                    for_each_list(d, f);
                }
            }
            _ => {}
        }
    }
}

/// Calls `f` on every expression node in pre-order.
fn for_each_expr(stmts: &mut Vec<Stmt>, f: &mut dyn FnMut(&mut Expr)) {
    fn walk(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
        f(e);
        for c in expr_children(e) {
            walk(c, f);
        }
    }
    for_each_list(stmts, &mut |list| {
        for s in list.iter_mut() {
            let roots: Vec<&mut Expr> = match s {
                Stmt::Decl(_, Some(e)) | Stmt::Assign(_, e) => vec![e],
                Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
                Stmt::For {
                    init, cond, update, ..
                } => clause_expr(init)
                    .into_iter()
                    .chain(cond.as_mut())
                    .chain(clause_expr(update))
                    .collect(),
                Stmt::Switch { scrutinee, .. } => vec![scrutinee],
                Stmt::Print(PrintArg::Int(e)) => vec![e],
                _ => vec![],
            };
            for r in roots {
                walk(r, f);
            }
        }
    });
}

/// Applies `edit` to the `site`-th node accepted by `pred`; returns the
/// number of accepted nodes.
fn edit_expr(
    p: &mut Program,
    pred: &dyn Fn(&Expr) -> bool,
    site: Option<usize>,
    edit: &mut dyn FnMut(&mut Expr),
) -> usize {
    let mut seen = 0;
    for_each_expr(&mut p.body, &mut |e| {
        if pred(e) {
            if Some(seen) == site {
                edit(e);
            }
            seen += 1;
        }
    });
    seen
}

/// Statement-level analogue of [`edit_expr`]: `sites` reports the site
/// positions within one list, `edit` rewrites the list at such a position.
fn edit_list(
    p: &mut Program,
    sites: &dyn Fn(&[Stmt]) -> Vec<usize>,
    site: Option<usize>,
    edit: &mut dyn FnMut(&mut Vec<Stmt>, usize),
) -> usize {
    let mut seen = 0;
    let mut pending: Option<usize> = None;
    for_each_list(&mut p.body, &mut |list| {
        for pos in sites(list) {
            if Some(seen) == site {
                pending = Some(pos);
            }
            seen += 1;
        }
        if let Some(pos) = pending.take() {
            edit(list, pos);
        }
    });
    seen
}

// ---------------------------------------------------------------------------
// Names

pub fn variable_names(p: &Program) -> BTreeSet<String> {
    let mut names: BTreeSet<String> = p.inputs.iter().cloned().collect();
    p.visit_stmts(&mut |s| match s {
        Stmt::Decl(n, _) | Stmt::Read(n) => {
            names.insert(n.clone());
        }
        Stmt::For { init, .. } => {
            if let Some(ForClause::Decl(n, _)) = init {
                names.insert(n.clone());
            }
        }
        _ => {}
    });
    names
}

const NAME_POOL: &[&str] = &[
    "n", "m", "k", "x", "y", "z", "a", "b", "c", "d", "i", "j", "p", "q", "r", "s", "t", "v", "w",
    "num", "val", "ans", "res", "sum", "tot", "cur", "acc", "tmp", "cnt", "best", "hi", "lo",
    "first", "second", "third", "value", "result", "answer", "total", "count", "temp", "out",
];

fn fresh_name(taken: &BTreeSet<String>, stem: &str) -> String {
    if !taken.contains(stem) {
        return stem.to_string();
    }
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded")
}

fn rename_stmts(stmts: &mut [Stmt], map: &dyn Fn(&str) -> String) {
    fn rename_expr(e: &mut Expr, map: &dyn Fn(&str) -> String) {
        match e {
            Expr::Var(n) => *n = map(n),
            Expr::Int(_) => {}
            Expr::Unary(_, a) => rename_expr(a, map),
            Expr::Binary(_, l, r) => {
                rename_expr(l, map);
                rename_expr(r, map);
            }
        }
    }
    fn rename_clause(c: &mut Option<ForClause>, map: &dyn Fn(&str) -> String) {
        match c {
            Some(ForClause::Decl(n, e)) => {
                *n = map(n);
                if let Some(e) = e {
                    rename_expr(e, map);
                }
            }
            Some(ForClause::Assign(n, e)) => {
                *n = map(n);
                rename_expr(e, map);
            }
            None => {}
        }
    }
    for s in stmts {
        match s {
            Stmt::Decl(n, e) => {
                *n = map(n);
                if let Some(e) = e {
                    rename_expr(e, map);
                }
            }
            Stmt::Assign(n, e) => {
                *n = map(n);
                rename_expr(e, map);
            }
            Stmt::Read(n) => *n = map(n),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                rename_expr(cond, map);
                rename_stmts(then_body, map);
                if let Some(e) = else_body {
                    rename_stmts(e, map);
                }
            }
            Stmt::While { cond, body } => {
                rename_expr(cond, map);
                rename_stmts(body, map);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                rename_clause(init, map);
                if let Some(c) = cond {
                    rename_expr(c, map);
                }
                rename_clause(update, map);
                rename_stmts(body, map);
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                rename_expr(scrutinee, map);
                for c in cases {
                    rename_stmts(&mut c.body, map);
                }
                if let Some(d) = default {
                    rename_stmts(d, map);
                }
            }
            Stmt::Print(PrintArg::Int(e)) => rename_expr(e, map),
            Stmt::Print(PrintArg::Str(_)) => {}
            Stmt::Block(b) => rename_stmts(b, map),
        }
    }
}

/// Consistently renames every variable to a distinct name drawn at random.
pub fn rename_randomly(p: &Program, rng: &mut impl Rng) -> Program {
    let old: Vec<String> = variable_names(p).into_iter().collect();
    let mut pool: Vec<String> = NAME_POOL.iter().map(|s| s.to_string()).collect();
    pool.shuffle(rng);
    let mut taken = BTreeSet::new();
    let mut fresh = Vec::with_capacity(old.len());
    for i in 0..old.len() {
        let name = match pool.get(i) {
            Some(n) => n.clone(),
            None => fresh_name(&taken, "v"),
        };
        taken.insert(name.clone());
        fresh.push(name);
    }
    rename_with(p, &|n: &str| {
        let i = old.iter().position(|o| o == n).expect("every name was collected");
        fresh[i].clone()
    })
}

pub fn rename_with(p: &Program, map: &dyn Fn(&str) -> String) -> Program {
    let mut q = p.clone();
    q.inputs = q.inputs.iter().map(|n| map(n)).collect();
    rename_stmts(&mut q.body, map);
    q
}

// ---------------------------------------------------------------------------
// Catalogue

fn is_commutative(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Binary(BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne, _, _)
    )
}

fn is_ordering(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Binary(BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _)
    )
}

fn temp_sites(list: &[Stmt]) -> Vec<usize> {
    list.iter()
        .enumerate()
        .filter(|(_, s)| match s {
            Stmt::Assign(_, e) | Stmt::Decl(_, Some(e)) | Stmt::Print(PrintArg::Int(e)) => {
                matches!(e, Expr::Binary(..))
            }
            _ => false,
        })
        .map(|(i, _)| i)
        .collect()
}

fn reorder_sites(list: &[Stmt]) -> Vec<usize> {
    (0..list.len().saturating_sub(1))
        .filter(|&i| match (&list[i], &list[i + 1]) {
            (Stmt::Decl(x, _), Stmt::Decl(_, ey)) => !ey.as_ref().is_some_and(|e| e.mentions(x)),
            _ => false,
        })
        .collect()
}

fn if_else_sites(list: &[Stmt]) -> Vec<usize> {
    list.iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, Stmt::If { else_body: Some(_), .. }))
        .map(|(i, _)| i)
        .collect()
}

fn flip(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Gt => BinOp::Lt,
        BinOp::Le => BinOp::Ge,
        BinOp::Ge => BinOp::Le,
        o => o,
    }
}

fn swap_operands(e: &mut Expr) {
    if let Expr::Binary(op, l, r) = e {
        std::mem::swap(l, r);
        *op = flip(*op);
    }
}

fn bug_pred(kind: Bug) -> Option<fn(&Expr) -> bool> {
    Some(match kind {
        Bug::OffByOne => |e| matches!(e, Expr::Int(v) if *v < i64::MAX),
        Bug::PlusMinus => |e| matches!(e, Expr::Binary(BinOp::Add | BinOp::Sub, _, _)),
        Bug::MulAdd => |e| matches!(e, Expr::Binary(BinOp::Add | BinOp::Mul, _, _)),
        Bug::StrictNonStrict => is_ordering,
        Bug::WrongPower => |e| matches!(e, Expr::Binary(BinOp::Mul, _, _)),
        Bug::DropElse | Bug::SwapBranches => return None,
    })
}

/// Number of sites at which `m`'s kind applies in `p`.
pub fn count_sites(p: &Program, m: Mutation) -> usize {
    let mut q = p.clone();
    apply_inner(&mut q, m, None)
}

/// Applies the mutation; `None` when the site does not exist.
pub fn apply(p: &Program, m: Mutation) -> Option<Program> {
    let mut q = p.clone();
    let site = match m {
        Mutation::Rewrite { site, .. } | Mutation::Bug { site, .. } => site,
    };
    (site < apply_inner(&mut q, m, Some(site))).then_some(q)
}

fn apply_inner(q: &mut Program, m: Mutation, site: Option<usize>) -> usize {
    match m {
        Mutation::Rewrite { kind, .. } => match kind {
            Rewrite::CommuteOperands => edit_expr(q, &is_commutative, site, &mut |e| {
                if let Expr::Binary(_, l, r) = e {
                    std::mem::swap(l, r);
                }
            }),
            Rewrite::FlipRelational => edit_expr(q, &is_ordering, site, &mut swap_operands),
            Rewrite::ReorderDecls => edit_list(q, &reorder_sites, site, &mut |l, i| l.swap(i, i + 1)),
            Rewrite::IntroduceTemp => {
                let t = fresh_name(&variable_names(q), "t");
                edit_list(q, &temp_sites, site, &mut |l, i| {
                    let tv = Expr::var(t.clone());
                    let (init, rest) = match l[i].clone() {
                        Stmt::Assign(x, e) => (e, Stmt::Assign(x, tv)),
                        Stmt::Decl(x, Some(e)) => (e, Stmt::Decl(x, Some(tv))),
                        Stmt::Print(PrintArg::Int(e)) => (e, Stmt::Print(PrintArg::Int(tv))),
                        _ => unreachable!("temp_sites only reports these"),
                    };
                    l[i] = rest;
                    l.insert(i, Stmt::Decl(t.clone(), Some(init)));
                })
            }
        },
        Mutation::Bug { kind, delta, .. } => match bug_pred(kind) {
            Some(pred) => edit_expr(q, &pred, site, &mut |e| match e {
                Expr::Int(v) => *e = Expr::int(v.wrapping_add(if delta < 0 { -1 } else { 1 })),
                Expr::Binary(op, l, r) => {
                    *op = match (kind, *op) {
                        (Bug::PlusMinus, BinOp::Add) => BinOp::Sub,
                        (Bug::PlusMinus, BinOp::Sub) => BinOp::Add,
                        (Bug::MulAdd, BinOp::Add) => BinOp::Mul,
                        (Bug::MulAdd, BinOp::Mul) => BinOp::Add,
                        (Bug::StrictNonStrict, BinOp::Lt) => BinOp::Le,
                        (Bug::StrictNonStrict, BinOp::Le) => BinOp::Lt,
                        (Bug::StrictNonStrict, BinOp::Gt) => BinOp::Ge,
                        (Bug::StrictNonStrict, BinOp::Ge) => BinOp::Gt,
                        (_, o) => o,
                    };
                    if kind == Bug::WrongPower {
                        let factor = r.as_ref().clone();
                        let inner = Expr::Binary(BinOp::Mul, l.clone(), r.clone());
                        *e = Expr::bin(BinOp::Mul, inner, factor);
                    }
                }
                _ => {}
            }),
            None => edit_list(q, &if_else_sites, site, &mut |l, i| {
                if let Stmt::If {
                    then_body,
                    else_body,
                    ..
                } = &mut l[i]
                {
                    if kind == Bug::DropElse {
                        *else_body = None;
                    } else if let Some(e) = else_body {
                        std::mem::swap(then_body, e);
                    }
                }
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, render};

    fn rw(kind: Rewrite, site: usize) -> Mutation {
        Mutation::Rewrite { kind, site }
    }

    fn bug(kind: Bug, site: usize) -> Mutation {
        Mutation::Bug { kind, site, delta: 1 }
    }

    fn show(src: &str, m: Mutation) -> String {
        render(&apply(&parse(src).unwrap(), m).unwrap())
    }

    const CEIL: &str = "read(a); read(b); int q = a / b; int r = a % b; if (r > 0) { q = q + 1; } print(q);";

    #[test]
    fn rewrites() {
        assert_eq!(
            show(CEIL, rw(Rewrite::CommuteOperands, 0)),
            render(&parse("read(a); read(b); int q = a / b; int r = a % b; if (r > 0) { q = 1 + q; } print(q);").unwrap())
        );
        assert_eq!(
            show(CEIL, rw(Rewrite::FlipRelational, 0)),
            render(&parse("read(a); read(b); int q = a / b; int r = a % b; if (0 < r) { q = q + 1; } print(q);").unwrap())
        );
        assert_eq!(
            show(CEIL, rw(Rewrite::ReorderDecls, 0)),
            render(&parse("read(a); read(b); int r = a % b; int q = a / b; if (r > 0) { q = q + 1; } print(q);").unwrap())
        );
        assert_eq!(
            show(CEIL, rw(Rewrite::IntroduceTemp, 2)),
            render(&parse("read(a); read(b); int q = a / b; int r = a % b; if (r > 0) { int t = q + 1; q = t; } print(q);").unwrap())
        );
    }

    #[test]
    fn site_counts() {
        let p = parse(CEIL).unwrap();
        let n = |m| count_sites(&p, m);
        assert_eq!(n(rw(Rewrite::CommuteOperands, 0)), 1);
        assert_eq!(n(rw(Rewrite::IntroduceTemp, 0)), 3);
        assert_eq!(n(rw(Rewrite::ReorderDecls, 0)), 1);
        assert_eq!(n(bug(Bug::OffByOne, 0)), 2);
        assert_eq!(n(bug(Bug::DropElse, 0)), 0);
        assert!(apply(&p, rw(Rewrite::ReorderDecls, 1)).is_none());
    }

    #[test]
    fn dependent_decls_are_not_reordered() {
        let p = parse("read(n); int a = n; int b = a + 1; print(b);").unwrap();
        assert_eq!(count_sites(&p, rw(Rewrite::ReorderDecls, 0)), 0);
    }

    #[test]
    fn bugs() {
        let sq = "read(n); int ans = n * n; print(ans);";
        assert_eq!(
            show(sq, bug(Bug::WrongPower, 0)),
            render(&parse("read(n); int ans = n * n * n; print(ans);").unwrap())
        );
        assert_eq!(
            show(sq, bug(Bug::MulAdd, 0)),
            render(&parse("read(n); int ans = n + n; print(ans);").unwrap())
        );
        let wm = "read(w); if (w % 2 == 0 && w > 2) { print(\"YES\"); } else { print(\"NO\"); }";
        assert_eq!(
            show(wm, bug(Bug::SwapBranches, 0)),
            render(&parse("read(w); if (w % 2 == 0 && w > 2) { print(\"NO\"); } else { print(\"YES\"); }").unwrap())
        );
        assert_eq!(
            show(wm, bug(Bug::DropElse, 0)),
            render(&parse("read(w); if (w % 2 == 0 && w > 2) { print(\"YES\"); }").unwrap())
        );
        assert_eq!(
            show(wm, bug(Bug::StrictNonStrict, 0)),
            render(&parse("read(w); if (w % 2 == 0 && w >= 2) { print(\"YES\"); } else { print(\"NO\"); }").unwrap())
        );
        let down = Mutation::Bug {
            kind: Bug::OffByOne,
            site: 1,
            delta: -1,
        };
        assert_eq!(
            show(wm, down),
            render(&parse("read(w); if (w % 2 == -1 && w > 2) { print(\"YES\"); } else { print(\"NO\"); }").unwrap())
        );
    }

    #[test]
    fn renaming_is_consistent() {
        let p = parse(CEIL).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        for _ in 0..20 {
            let q = rename_randomly(&p, &mut rng);
            let text = render(&q);
            let back = parse(&text).unwrap();
            assert_eq!(back, q);
            assert_eq!(variable_names(&q).len(), variable_names(&p).len());
            assert_eq!(crate::features::token_texts(&q), crate::features::token_texts(&p));
        }
    }
}
