use std::fmt::Write;

use super::ast::{Expr, ForClause, PrintArg, Program, Stmt, UnOp};
use super::lexer::escape_string;

const INDENT: &str = "    ";

/// Canonical source text for a program. Bodies are always braced and
/// parentheses appear only where precedence requires them, so the output
/// re-parses to the same tree.
pub fn render(program: &Program) -> String {
    let mut out = String::new();
    for s in &program.body {
        stmt(&mut out, s, 0);
    }
    out
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in body {
        stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn clause(out: &mut String, c: &ForClause) {
    match c {
        ForClause::Decl(name, None) => {
            let _ = write!(out, "int {name}");
        }
        ForClause::Decl(name, Some(e)) => {
            let _ = write!(out, "int {name} = ");
            expr(out, e, 0);
        }
        ForClause::Assign(name, e) => {
            let _ = write!(out, "{name} = ");
            expr(out, e, 0);
        }
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Decl(name, init) => {
            clause(out, &ForClause::Decl(name.clone(), init.clone()));
            out.push_str(";\n");
        }
        Stmt::Assign(name, e) => {
            let _ = write!(out, "{name} = ");
            expr(out, e, 0);
            out.push_str(";\n");
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            out.push_str("if (");
            expr(out, cond, 0);
            out.push_str(") ");
            block(out, then_body, depth);
            if let Some(e) = else_body {
                out.push_str(" else ");
                block(out, e, depth);
            }
            out.push('\n');
        }
        Stmt::While { cond, body } => {
            out.push_str("while (");
            expr(out, cond, 0);
            out.push_str(") ");
            block(out, body, depth);
            out.push('\n');
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
        } => {
            out.push_str("for (");
            if let Some(c) = init {
                clause(out, c);
            }
            out.push_str("; ");
            if let Some(c) = cond {
                expr(out, c, 0);
            }
            out.push_str("; ");
            if let Some(c) = update {
                clause(out, c);
            }
            out.push_str(") ");
            block(out, body, depth);
            out.push('\n');
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
        } => {
            out.push_str("switch (");
            expr(out, scrutinee, 0);
            out.push_str(") {\n");
            let arm = |out: &mut String, label: String, body: &[Stmt]| {
                indent(out, depth + 1);
                out.push_str(&label);
                out.push('\n');
                for s in body {
                    stmt(out, s, depth + 2);
                }
                indent(out, depth + 2);
                out.push_str("break;\n");
            };
            for c in cases {
                arm(out, format!("case {}:", c.value), &c.body);
            }
            if let Some(d) = default {
                arm(out, "default:".to_string(), d);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::Read(name) => {
            let _ = writeln!(out, "read({name});");
        }
        Stmt::Print(PrintArg::Int(e)) => {
            out.push_str("print(");
            expr(out, e, 0);
            out.push_str(");\n");
        }
        Stmt::Print(PrintArg::Str(s)) => {
            let _ = writeln!(out, "print({});", escape_string(s));
        }
        Stmt::Block(body) => {
            block(out, body, depth);
            out.push('\n');
        }
    }
}

/// Unary operators bind tighter than every binary operator.
const UNARY_PREC: u8 = 7;

fn expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            expr(out, inner, UNARY_PREC);
        }
        Expr::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            expr(out, l, prec);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    fn round_trip(src: &str) {
        let p = parse(src).unwrap();
        let text = render(&p);
        let q = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(p, q, "rendered:\n{text}");
    }

    #[test]
    fn square_round_trip() {
        let p = parse("read(n); print(n*n);").unwrap();
        assert_eq!(render(&p), "read(n);\nprint(n * n);\n");
        round_trip("read(n); print(n*n);");
    }

    #[test]
    fn nested_if_gets_braces() {
        let src = "read(n); if (n > 5) if (n > 100) print(2); else print(1); else print(0);";
        let p = parse(src).unwrap();
        let text = render(&p);
        assert!(text.contains("if (n > 5) {"));
        assert!(text.contains("} else {"));
        round_trip(src);
    }

    #[test]
    fn string_literal_byte_exact() {
        let src = r#"read(n); if (n % 2 == 0) print("YES \"even\"\t\\"); else print("NO");"#;
        let p = parse(src).unwrap();
        assert!(render(&p).contains(r#"print("YES \"even\"\t\\");"#));
        round_trip(src);
    }

    #[test]
    fn parenthesisation_is_minimal_and_faithful() {
        round_trip("read(a); print(a - (1 - 2));");
        round_trip("read(a); print((a + 1) * (a - 1) / -(a % 3));");
        round_trip("read(a); print(!(a < 3) || a == 2 && !!a);");
        round_trip("read(a); print(- -a);");
        let p = parse("read(a); print(a - (1 - 2));").unwrap();
        assert!(render(&p).contains("a - (1 - 2)"));
    }

    #[test]
    fn loops_and_switch_round_trip() {
        round_trip(
            "read(n); int s = 0; for (int i = 1; i <= n; i = i + 1) s = s + i; \
             int k; while (k < 3) { k = k + 1; } \
             switch (s) { case 1: print(1); break; case -2: { int q = 3; print(q); } default: print(0); }",
        );
        round_trip("read(n); for (;;) { print(1); } ");
        round_trip("read(n); int i; for (i = 0; n > i; ) { i = i + 2; } print(i);");
    }

    #[test]
    fn extreme_literals() {
        let p = Program {
            inputs: vec!["n".into()],
            body: vec![
                Stmt::Read("n".into()),
                Stmt::Print(PrintArg::Int(Expr::int(i64::MIN))),
            ],
        };
        let q = parse(&render(&p)).unwrap();
        assert_eq!(p, q);
    }
}
