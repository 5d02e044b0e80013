use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, Expr, ForClause, PrintArg, Program, Stmt, UnOp};

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Concrete input values, one per `read` in program order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestCase {
    pub values: Vec<i64>,
}

impl TestCase {
    pub fn new(values: Vec<i64>) -> Self {
        TestCase { values }
    }
}

impl From<Vec<i64>> for TestCase {
    fn from(values: Vec<i64>) -> Self {
        TestCase { values }
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuntimeErrorKind {
    DivideByZero,
    ModByZero,
    NoPrintReached,
    MultiplePrints,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeErrorKind::DivideByZero => "DivideByZero",
            RuntimeErrorKind::ModByZero => "ModByZero",
            RuntimeErrorKind::NoPrintReached => "NoPrintReached",
            RuntimeErrorKind::MultiplePrints => "MultiplePrints",
        })
    }
}

/// The observable behaviour of one run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    IntOutput(i64),
    StrOutput(String),
    RuntimeError(RuntimeErrorKind),
    FuelExhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::IntOutput(v) => write!(f, "{v}"),
            Outcome::StrOutput(s) => f.write_str(&super::lexer::escape_string(s)),
            Outcome::RuntimeError(k) => write!(f, "error:{k}"),
            Outcome::FuelExhausted => f.write_str("fuel-exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub outcome: Outcome,
    pub steps_used: u64,
}

enum Halt {
    Error(RuntimeErrorKind),
    Fuel,
}

struct Machine<'a> {
    env: HashMap<&'a str, i64>,
    inputs: std::slice::Iter<'a, i64>,
    output: Option<Outcome>,
    steps: u64,
    fuel: u64,
}

/// Runs `program` on `test` with a budget of `fuel` statement evaluations
/// (each executed statement and each loop-condition test costs one step).
///
/// Panics if the test's arity differs from the program's.
pub fn run_concrete(program: &Program, test: &TestCase, fuel: u64) -> ExecutionResult {
    assert_eq!(
        program.arity(),
        test.values.len(),
        "test case arity does not match program"
    );
    let mut m = Machine {
        env: HashMap::new(),
        inputs: test.values.iter(),
        output: None,
        steps: 0,
        fuel,
    };
    let outcome = match m.block(&program.body) {
        Ok(()) => m
            .output
            .take()
            .unwrap_or(Outcome::RuntimeError(RuntimeErrorKind::NoPrintReached)),
        Err(Halt::Error(k)) => Outcome::RuntimeError(k),
        Err(Halt::Fuel) => Outcome::FuelExhausted,
    };
    ExecutionResult {
        outcome,
        steps_used: m.steps,
    }
}

impl<'a> Machine<'a> {
    fn tick(&mut self) -> Result<(), Halt> {
        if self.steps >= self.fuel {
            return Err(Halt::Fuel);
        }
        self.steps += 1;
        Ok(())
    }

    fn block(&mut self, stmts: &'a [Stmt]) -> Result<(), Halt> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn clause(&mut self, c: &'a ForClause) -> Result<(), Halt> {
        let (name, v) = match c {
            ForClause::Decl(name, Some(e)) | ForClause::Assign(name, e) => (name, self.eval(e)?),
            ForClause::Decl(name, None) => (name, 0),
        };
        self.env.insert(name, v);
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<(), Halt> {
        self.tick()?;
        match s {
            Stmt::Decl(name, init) => {
                let v = match init {
                    Some(e) => self.eval(e)?,
                    None => 0,
                };
                self.env.insert(name, v);
            }
            Stmt::Assign(name, e) => {
                let v = self.eval(e)?;
                self.env.insert(name, v);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval(cond)? != 0 {
                    self.block(then_body)?;
                } else if let Some(e) = else_body {
                    self.block(e)?;
                }
            }
            Stmt::While { cond, body } => loop {
                self.tick()?;
                if self.eval(cond)? == 0 {
                    break;
                }
                self.block(body)?;
            },
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(c) = init {
                    self.clause(c)?;
                }
                loop {
                    self.tick()?;
                    if let Some(c) = cond {
                        if self.eval(c)? == 0 {
                            break;
                        }
                    }
                    self.block(body)?;
                    if let Some(u) = update {
                        self.clause(u)?;
                    }
                }
            }
            Stmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let v = self.eval(scrutinee)?;
                match cases.iter().find(|c| c.value == v) {
                    Some(c) => self.block(&c.body)?,
                    None => {
                        if let Some(d) = default {
                            self.block(d)?;
                        }
                    }
                }
            }
            Stmt::Read(name) => {
                let v = *self.inputs.next().expect("arity checked");
                self.env.insert(name, v);
            }
            Stmt::Print(arg) => {
                let out = match arg {
                    PrintArg::Int(e) => Outcome::IntOutput(self.eval(e)?),
                    PrintArg::Str(s) => Outcome::StrOutput(s.clone()),
                };
                if self.output.is_some() {
                    return Err(Halt::Error(RuntimeErrorKind::MultiplePrints));
                }
                self.output = Some(out);
            }
            Stmt::Block(body) => self.block(body)?,
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr) -> Result<i64, Halt> {
        Ok(match e {
            Expr::Int(v) => *v,
            Expr::Var(name) => *self.env.get(name.as_str()).unwrap_or(&0),
            Expr::Unary(UnOp::Neg, inner) => self.eval(inner)?.wrapping_neg(),
            Expr::Unary(UnOp::Not, inner) => (self.eval(inner)? == 0) as i64,
            Expr::Binary(BinOp::And, l, r) => {
                if self.eval(l)? == 0 {
                    0
                } else {
                    (self.eval(r)? != 0) as i64
                }
            }
            Expr::Binary(BinOp::Or, l, r) => {
                if self.eval(l)? != 0 {
                    1
                } else {
                    (self.eval(r)? != 0) as i64
                }
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                match op.apply(a, b) {
                    Some(v) => v,
                    None if *op == BinOp::Div => {
                        return Err(Halt::Error(RuntimeErrorKind::DivideByZero))
                    }
                    None => return Err(Halt::Error(RuntimeErrorKind::ModByZero)),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    fn run(src: &str, input: &[i64]) -> Outcome {
        let p = parse(src).unwrap();
        run_concrete(&p, &TestCase::new(input.to_vec()), DEFAULT_FUEL).outcome
    }

    const CUBE: &str = "read(x); int ans; ans = x*x*x; print(ans);";
    const SQUARE: &str = "read(inp); print(inp*inp);";

    #[test]
    fn cube_and_square_on_two() {
        assert_eq!(run(CUBE, &[2]), Outcome::IntOutput(8));
        assert_eq!(run(SQUARE, &[2]), Outcome::IntOutput(4));
    }

    #[test]
    fn divide_by_zero() {
        assert_eq!(
            run("read(n); print(n / (n-1));", &[1]),
            Outcome::RuntimeError(RuntimeErrorKind::DivideByZero)
        );
        assert_eq!(
            run("read(n); print(n % (n-1));", &[1]),
            Outcome::RuntimeError(RuntimeErrorKind::ModByZero)
        );
        assert_eq!(run("read(n); print(n / (n-1));", &[3]), Outcome::IntOutput(1));
    }

    #[test]
    fn short_circuit_guards_division() {
        let src = "read(n); if (n != 0 && 10 / n > 2) print(1); else print(0);";
        assert_eq!(run(src, &[0]), Outcome::IntOutput(0));
        assert_eq!(run(src, &[3]), Outcome::IntOutput(1));
        let src = "read(n); print(n == 0 || 10 / n);";
        assert_eq!(run(src, &[0]), Outcome::IntOutput(1));
    }

    #[test]
    fn print_discipline() {
        assert_eq!(
            run("read(n); if (n > 0) print(1);", &[0]),
            Outcome::RuntimeError(RuntimeErrorKind::NoPrintReached)
        );
        assert_eq!(
            run("read(n); print(1); print(2);", &[0]),
            Outcome::RuntimeError(RuntimeErrorKind::MultiplePrints)
        );
    }

    #[test]
    fn wrapping_arithmetic() {
        assert_eq!(
            run("read(n); print(n + 1);", &[i64::MAX]),
            Outcome::IntOutput(i64::MIN)
        );
        assert_eq!(
            run("read(n); print(n / -1);", &[i64::MIN]),
            Outcome::IntOutput(i64::MIN)
        );
        assert_eq!(run("read(n); print(-7 % n);", &[2]), Outcome::IntOutput(-1));
        assert_eq!(run("read(n); print(-7 / n);", &[2]), Outcome::IntOutput(-3));
    }

    #[test]
    fn loops_and_fuel() {
        let sum = "read(n); int s = 0; for (int i = 1; i <= n; i = i + 1) { s = s + i; } print(s);";
        assert_eq!(run(sum, &[10]), Outcome::IntOutput(55));
        let spin = "read(n); while (1) { n = n + 1; } print(n);";
        let p = parse(spin).unwrap();
        let r = run_concrete(&p, &TestCase::new(vec![0]), 1000);
        assert_eq!(r.outcome, Outcome::FuelExhausted);
        assert_eq!(r.steps_used, 1000);
    }

    #[test]
    fn switch_without_fallthrough() {
        let src = "read(n); switch (n) { case 1: print(\"one\"); case 2: print(\"two\"); default: print(\"many\"); }";
        assert_eq!(run(src, &[1]), Outcome::StrOutput("one".into()));
        assert_eq!(run(src, &[2]), Outcome::StrOutput("two".into()));
        assert_eq!(run(src, &[7]), Outcome::StrOutput("many".into()));
    }

    #[test]
    fn uninitialised_is_zero_and_loop_decl_resets() {
        assert_eq!(run("read(n); int x; print(x + n);", &[4]), Outcome::IntOutput(4));
        let src = "read(n); int s = 0; int i = 0; while (i < n) { int t; t = t + 1; s = s + t; i = i + 1; } print(s);";
        assert_eq!(run(src, &[3]), Outcome::IntOutput(3));
    }
}
