use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    /// Evaluates on concrete values with 64-bit wrapping arithmetic.
    /// Division and remainder by zero return `None`; `&&`/`||` here are
    /// strict (callers handle short-circuiting).
    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        Some(match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div => {
                if b == 0 {
                    return None;
                }
                a.wrapping_div(b)
            }
            BinOp::Rem => {
                if b == 0 {
                    return None;
                }
                a.wrapping_rem(b)
            }
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::And => (a != 0 && b != 0) as i64,
            BinOp::Or => (a != 0 || b != 0) as i64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    /// Literals are non-negative; negative constants are `Unary(Neg, Int)`.
    Int(i64),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    /// Builds the literal for any i64, wrapping negatives in a unary minus.
    pub fn int(v: i64) -> Expr {
        if v >= 0 {
            Expr::Int(v)
        } else if v == i64::MIN {
            // -(MAX) - 1
            Expr::bin(
                BinOp::Sub,
                Expr::Unary(UnOp::Neg, Box::new(Expr::Int(i64::MAX))),
                Expr::Int(1),
            )
        } else {
            Expr::Unary(UnOp::Neg, Box::new(Expr::Int(-v)))
        }
    }

    /// True when evaluating the expression can raise a division error.
    pub fn may_fault(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Var(_) => false,
            Expr::Unary(_, e) => e.may_fault(),
            Expr::Binary(op, l, r) => {
                matches!(op, BinOp::Div | BinOp::Rem) || l.may_fault() || r.may_fault()
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Int(_) => false,
            Expr::Var(v) => v == name,
            Expr::Unary(_, e) => e.mentions(name),
            Expr::Binary(_, l, r) => l.mentions(name) || r.mentions(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrintArg {
    Int(Expr),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchCase {
    pub value: i64,
    pub body: Vec<Stmt>,
}

/// Initialiser or update clause of a `for` header.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForClause {
    Decl(String, Option<Expr>),
    Assign(String, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stmt {
    Decl(String, Option<Expr>),
    Assign(String, Expr),
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<ForClause>,
        cond: Option<Expr>,
        update: Option<ForClause>,
        body: Vec<Stmt>,
    },
    /// No fall-through: exactly one arm runs, `default` when nothing matches.
    Switch {
        scrutinee: Expr,
        cases: Vec<SwitchCase>,
        default: Option<Vec<Stmt>>,
    },
    Read(String),
    Print(PrintArg),
    Block(Vec<Stmt>),
}

/// A parsed MiniC program. `inputs` lists the variables bound by the
/// top-level `read` statements, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    pub inputs: Vec<String>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    /// Pre-order walk over every statement, including nested ones.
    pub fn visit_stmts<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
            for s in stmts {
                f(s);
                match s {
                    Stmt::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        walk(then_body, f);
                        if let Some(e) = else_body {
                            walk(e, f);
                        }
                    }
                    Stmt::While { body, .. } | Stmt::For { body, .. } | Stmt::Block(body) => {
                        walk(body, f)
                    }
                    Stmt::Switch { cases, default, .. } => {
                        for c in cases {
                            walk(&c.body, f);
                        }
                        if let Some(d) = default {
                            walk(d, f);
                        }
                    }
                    _ => {}
                }
            }
        }
        walk(&self.body, f)
    }

    /// True when some print statement emits a string literal.
    pub fn prints_strings(&self) -> bool {
        let mut found = false;
        self.visit_stmts(&mut |s| {
            if matches!(s, Stmt::Print(PrintArg::Str(_))) {
                found = true;
            }
        });
        found
    }
}
