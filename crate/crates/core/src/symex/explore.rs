use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::expr::SymExpr;
use super::solver::{solve_constraint, InputDomain, SolveResult, DEFAULT_SOLVER_CAP};
use crate::minilang::{
    BinOp, Expr, ForClause, PrintArg, Program, RuntimeErrorKind, Stmt, TestCase,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreBudget {
    pub max_paths: usize,
    /// Loop bodies run at most this many times on any one path.
    pub max_unroll: u32,
    pub wall_clock_ms: u64,
    /// Evaluation cap handed to every solver call.
    pub solver_cap: u64,
}

impl Default for ExploreBudget {
    fn default() -> Self {
        ExploreBudget {
            max_paths: 4096,
            max_unroll: 64,
            wall_clock_ms: 15_000,
            solver_cap: DEFAULT_SOLVER_CAP,
        }
    }
}

/// Why an exploration (or an equivalence check built on one) could not
/// cover the whole domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Incompleteness {
    Timeout,
    PathBudget,
    SolverCap,
    UnrollBound,
}

impl fmt::Display for Incompleteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Incompleteness::Timeout => "Timeout",
            Incompleteness::PathBudget => "PathBudget",
            Incompleteness::SolverCap => "SolverCap",
            Incompleteness::UnrollBound => "UnrollBound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymOutput {
    Int(SymExpr),
    Str(String),
    Error(RuntimeErrorKind),
}

impl fmt::Display for SymOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymOutput::Int(e) => write!(f, "{e}"),
            SymOutput::Str(s) => write!(f, "{s:?}"),
            SymOutput::Error(k) => write!(f, "error:{k}"),
        }
    }
}

/// One feasible path: the conjunction of branch conditions that leads to
/// it, the value it prints, and a concrete input that takes it.
#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub condition: Vec<SymExpr>,
    pub output: SymOutput,
    pub witness: TestCase,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub outcomes: Vec<PathOutcome>,
    /// True iff no budget was hit; the outcome conditions then partition
    /// the domain.
    pub complete: bool,
    /// First limit that was hit, if any.
    pub incomplete: Option<Incompleteness>,
    /// Inputs that drive paths cut off by a budget, for concrete follow-up.
    pub truncated: Vec<TestCase>,
}

#[derive(Clone)]
struct State {
    env: HashMap<String, SymExpr>,
    condition: Vec<SymExpr>,
    witness: TestCase,
    printed: Option<SymOutput>,
    next_input: usize,
}

enum Flow {
    Live(State),
    Done(PathOutcome),
}

struct Explorer<'d> {
    domain: &'d InputDomain,
    budget: ExploreBudget,
    deadline: Instant,
    paths: usize,
    incomplete: Option<Incompleteness>,
    truncated: Vec<TestCase>,
}

/// Enumerates the feasible paths of `program` over `domain`, depth-first
/// with the then-branch first.
///
/// Panics if the domain arity differs from the program's.
pub fn explore_paths(program: &Program, domain: &InputDomain, budget: ExploreBudget) -> Exploration {
    explore_with_deadline(
        program,
        domain,
        budget,
        Instant::now() + Duration::from_millis(budget.wall_clock_ms),
    )
}

pub(crate) fn explore_with_deadline(
    program: &Program,
    domain: &InputDomain,
    budget: ExploreBudget,
    deadline: Instant,
) -> Exploration {
    assert_eq!(program.arity(), domain.arity(), "domain arity mismatch");
    let mut ex = Explorer {
        domain,
        budget,
        deadline,
        paths: 1,
        incomplete: None,
        truncated: Vec::new(),
    };
    let init = State {
        env: HashMap::new(),
        condition: Vec::new(),
        witness: domain.lowest(),
        printed: None,
        next_input: 0,
    };
    let flows = ex.block(&program.body, vec![Flow::Live(init)]);
    let outcomes = flows
        .into_iter()
        .map(|f| match f {
            Flow::Done(o) => o,
            Flow::Live(st) => PathOutcome {
                output: st
                    .printed
                    .unwrap_or(SymOutput::Error(RuntimeErrorKind::NoPrintReached)),
                condition: st.condition,
                witness: st.witness,
            },
        })
        .collect();
    Exploration {
        outcomes,
        complete: ex.incomplete.is_none(),
        incomplete: ex.incomplete,
        truncated: ex.truncated,
    }
}

type Evaluated = Vec<(State, Result<SymExpr, RuntimeErrorKind>)>;

impl Explorer<'_> {
    fn mark(&mut self, why: Incompleteness) {
        self.incomplete.get_or_insert(why);
    }

    fn out_of_time(&mut self) -> bool {
        if Instant::now() >= self.deadline {
            self.mark(Incompleteness::Timeout);
            true
        } else {
            false
        }
    }

    fn finish(st: State, kind: RuntimeErrorKind) -> Flow {
        Flow::Done(PathOutcome {
            condition: st.condition,
            output: SymOutput::Error(kind),
            witness: st.witness,
        })
    }

    /// Extends the path with `cond` if the result is feasible.
    fn assume(&mut self, st: &State, cond: SymExpr) -> Option<State> {
        match cond.as_const() {
            Some(0) => return None,
            Some(_) => return Some(st.clone()),
            None => {}
        }
        if st.condition.contains(&cond) {
            return Some(st.clone());
        }
        let mut next = st.clone();
        next.condition.push(cond.clone());
        if cond.eval(&st.witness.values) != 0 {
            return Some(next);
        }
        match solve_constraint(&next.condition, self.domain, self.budget.solver_cap) {
            SolveResult::Sat(w) => {
                next.witness = w;
                Some(next)
            }
            SolveResult::Unsat => None,
            SolveResult::Unknown => {
                self.mark(Incompleteness::SolverCap);
                None
            }
        }
    }

    /// Splits a state on a condition; then-side first. A second feasible
    /// side counts as a new path against the budget.
    fn fork(&mut self, st: State, cond: &SymExpr) -> (Option<State>, Option<State>) {
        let cond = SymExpr::truthy(cond.clone());
        let then = self.assume(&st, cond.clone());
        let mut other = self.assume(&st, SymExpr::not(cond));
        if then.is_some() && other.is_some() {
            if self.paths >= self.budget.max_paths {
                self.mark(Incompleteness::PathBudget);
                if let Some(o) = other.take() {
                    self.truncated.push(o.witness);
                }
            } else {
                self.paths += 1;
            }
        }
        (then, other)
    }

    fn block(&mut self, stmts: &[Stmt], flows: Vec<Flow>) -> Vec<Flow> {
        let mut current = flows;
        for s in stmts {
            let mut next = Vec::with_capacity(current.len());
            for f in current {
                match f {
                    Flow::Live(st) => next.extend(self.stmt(s, st)),
                    done => next.push(done),
                }
            }
            current = next;
        }
        current
    }

    fn stmt(&mut self, s: &Stmt, st: State) -> Vec<Flow> {
        if self.out_of_time() {
            return Vec::new();
        }
        match s {
            Stmt::Decl(name, None) => {
                let mut st = st;
                st.env.insert(name.clone(), SymExpr::constant(0));
                vec![Flow::Live(st)]
            }
            Stmt::Decl(name, Some(e)) | Stmt::Assign(name, e) => self.assign(name, e, st),
            Stmt::Read(name) => {
                let mut st = st;
                st.env.insert(name.clone(), SymExpr::input(st.next_input));
                st.next_input += 1;
                vec![Flow::Live(st)]
            }
            Stmt::Print(arg) => {
                let evaluated = match arg {
                    PrintArg::Int(e) => self.eval(e, st),
                    PrintArg::Str(_) => vec![(st, Ok(SymExpr::constant(0)))],
                };
                evaluated
                    .into_iter()
                    .map(|(mut st, v)| match v {
                        Err(k) => Self::finish(st, k),
                        Ok(_) if st.printed.is_some() => {
                            Self::finish(st, RuntimeErrorKind::MultiplePrints)
                        }
                        Ok(v) => {
                            st.printed = Some(match arg {
                                PrintArg::Int(_) => SymOutput::Int(v),
                                PrintArg::Str(s) => SymOutput::Str(s.clone()),
                            });
                            Flow::Live(st)
                        }
                    })
                    .collect()
            }
            Stmt::Block(body) => self.block(body, vec![Flow::Live(st)]),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let mut out = Vec::new();
                for (st, c) in self.eval(cond, st) {
                    let c = match c {
                        Ok(c) => c,
                        Err(k) => {
                            out.push(Self::finish(st, k));
                            continue;
                        }
                    };
                    let (t, e) = self.fork(st, &c);
                    if let Some(t) = t {
                        out.extend(self.block(then_body, vec![Flow::Live(t)]));
                    }
                    if let Some(e) = e {
                        match else_body {
                            Some(body) => out.extend(self.block(body, vec![Flow::Live(e)])),
                            None => out.push(Flow::Live(e)),
                        }
                    }
                }
                out
            }
            Stmt::While { cond, body } => self.run_loop(Some(cond), body, None, st, 0),
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                let started = match init {
                    Some(c) => self.clause(c, st),
                    None => vec![Flow::Live(st)],
                };
                let mut out = Vec::new();
                for f in started {
                    match f {
                        Flow::Live(st) => {
                            out.extend(self.run_loop(cond.as_ref(), body, update.as_ref(), st, 0))
                        }
                        done => out.push(done),
                    }
                }
                out
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let mut out = Vec::new();
                for (st, v) in self.eval(scrutinee, st) {
                    let v = match v {
                        Ok(v) => v,
                        Err(k) => {
                            out.push(Self::finish(st, k));
                            continue;
                        }
                    };
                    let mut rest = Some(st);
                    for case in cases {
                        let Some(st) = rest.take() else { break };
                        let hit = SymExpr::binary(BinOp::Eq, v.clone(), SymExpr::constant(case.value));
                        let (t, e) = self.fork(st, &hit);
                        if let Some(t) = t {
                            out.extend(self.block(&case.body, vec![Flow::Live(t)]));
                        }
                        rest = e;
                    }
                    if let Some(st) = rest {
                        match default {
                            Some(d) => out.extend(self.block(d, vec![Flow::Live(st)])),
                            None => out.push(Flow::Live(st)),
                        }
                    }
                }
                out
            }
        }
    }

    fn assign(&mut self, name: &str, e: &Expr, st: State) -> Vec<Flow> {
        self.eval(e, st)
            .into_iter()
            .map(|(mut st, v)| match v {
                Ok(v) => {
                    st.env.insert(name.to_string(), v);
                    Flow::Live(st)
                }
                Err(k) => Self::finish(st, k),
            })
            .collect()
    }

    fn clause(&mut self, c: &ForClause, st: State) -> Vec<Flow> {
        match c {
            ForClause::Decl(name, None) => {
                let mut st = st;
                st.env.insert(name.clone(), SymExpr::constant(0));
                vec![Flow::Live(st)]
            }
            ForClause::Decl(name, Some(e)) | ForClause::Assign(name, e) => {
                self.assign(name, e, st)
            }
        }
    }

    /// `iteration` bodies have already run on this path.
    fn run_loop(
        &mut self,
        cond: Option<&Expr>,
        body: &[Stmt],
        update: Option<&ForClause>,
        st: State,
        iteration: u32,
    ) -> Vec<Flow> {
        if self.out_of_time() {
            return Vec::new();
        }
        let tested = match cond {
            Some(c) => self.eval(c, st),
            None => vec![(st, Ok(SymExpr::constant(1)))],
        };
        let mut out = Vec::new();
        for (st, c) in tested {
            let c = match c {
                Ok(c) => c,
                Err(k) => {
                    out.push(Self::finish(st, k));
                    continue;
                }
            };
            let (t, e) = self.fork(st, &c);
            if let Some(t) = t {
                if iteration >= self.budget.max_unroll {
                    self.mark(Incompleteness::UnrollBound);
                    self.truncated.push(t.witness);
                } else {
                    for f in self.block(body, vec![Flow::Live(t)]) {
                        let after = match (f, update) {
                            (Flow::Live(st), Some(u)) => self.clause(u, st),
                            (f, _) => vec![f],
                        };
                        for f in after {
                            match f {
                                Flow::Live(st) => out.extend(self.run_loop(
                                    cond,
                                    body,
                                    update,
                                    st,
                                    iteration + 1,
                                )),
                                done => out.push(done),
                            }
                        }
                    }
                }
            }
            if let Some(e) = e {
                out.push(Flow::Live(e));
            }
        }
        out
    }

    fn eval(&mut self, e: &Expr, st: State) -> Evaluated {
        match e {
            Expr::Int(v) => vec![(st, Ok(SymExpr::constant(*v)))],
            Expr::Var(name) => {
                let v = st
                    .env
                    .get(name)
                    .cloned()
                    .unwrap_or_else(|| SymExpr::constant(0));
                vec![(st, Ok(v))]
            }
            Expr::Unary(op, inner) => self
                .eval(inner, st)
                .into_iter()
                .map(|(st, v)| (st, v.map(|v| SymExpr::unary(*op, v))))
                .collect(),
            Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) if r.may_fault() => {
                // The right operand may fault, so short-circuiting must be
                // explicit: fork on the left operand.
                let mut out = Vec::new();
                for (st, lv) in self.eval(l, st) {
                    let lv = match lv {
                        Ok(v) => v,
                        Err(k) => {
                            out.push((st, Err(k)));
                            continue;
                        }
                    };
                    let (t, e) = self.fork(st, &lv);
                    let (eval_right, short) = match op {
                        BinOp::And => (t, e.map(|s| (s, 0))),
                        _ => (e, t.map(|s| (s, 1))),
                    };
                    let short_first = *op == BinOp::Or;
                    let mut right = Vec::new();
                    if let Some(s) = eval_right {
                        right = self
                            .eval(r, s)
                            .into_iter()
                            .map(|(s, v)| (s, v.map(SymExpr::truthy)))
                            .collect();
                    }
                    let short = short.map(|(s, v)| (s, Ok(SymExpr::constant(v))));
                    if short_first {
                        out.extend(short);
                        out.extend(right);
                    } else {
                        out.extend(right);
                        out.extend(short);
                    }
                }
                out
            }
            Expr::Binary(op, l, r) => {
                let mut out = Vec::new();
                for (st, lv) in self.eval(l, st) {
                    let lv = match lv {
                        Ok(v) => v,
                        Err(k) => {
                            out.push((st, Err(k)));
                            continue;
                        }
                    };
                    for (st, rv) in self.eval(r, st) {
                        let rv = match rv {
                            Ok(v) => v,
                            Err(k) => {
                                out.push((st, Err(k)));
                                continue;
                            }
                        };
                        if matches!(op, BinOp::Div | BinOp::Rem) {
                            let kind = if *op == BinOp::Div {
                                RuntimeErrorKind::DivideByZero
                            } else {
                                RuntimeErrorKind::ModByZero
                            };
                            let zero = SymExpr::binary(BinOp::Eq, rv.clone(), SymExpr::constant(0));
                            let (bad, good) = self.fork(st, &zero);
                            if let Some(b) = bad {
                                out.push((b, Err(kind)));
                            }
                            if let Some(g) = good {
                                out.push((g, Ok(SymExpr::binary(*op, lv.clone(), rv))));
                            }
                        } else {
                            out.push((st, Ok(SymExpr::binary(*op, lv.clone(), rv))));
                        }
                    }
                }
                out
            }
        }
    }
}
