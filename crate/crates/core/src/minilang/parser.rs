use std::collections::HashSet;

use thiserror::Error;

use super::ast::{BinOp, Expr, ForClause, PrintArg, Program, Stmt, SwitchCase, UnOp};
use super::lexer::{tokenize, unescape_string, LexError, Position, Token, TokenKind};

pub const MAX_INPUTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{position}: expected {expected}, found {found}")]
    Syntax {
        position: Position,
        expected: String,
        found: String,
    },
    #[error("program reads {count} inputs; between 1 and {MAX_INPUTS} are allowed")]
    Arity { count: usize },
    #[error("program has no print statement")]
    NoPrint,
    #[error("{position}: variable `{name}` used before declaration")]
    Undeclared { name: String, position: Position },
    #[error("{position}: variable `{name}` is already declared")]
    Redeclared { name: String, position: Position },
    #[error("{position}: read is only allowed at the top level")]
    NestedRead { position: Position },
    #[error("{position}: duplicate case label {value}")]
    DuplicateCase { value: i64, position: Position },
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    Parser::new(&tokens).program()
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    scopes: Vec<HashSet<String>>,
    inputs: Vec<String>,
    prints: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            scopes: vec![HashSet::new()],
            inputs: Vec::new(),
            prints: 0,
        }
    }

    fn program(mut self) -> PResult<Program> {
        let mut body = Vec::new();
        while self.peek().is_some() {
            body.push(self.stmt()?);
        }
        if self.inputs.is_empty() || self.inputs.len() > MAX_INPUTS {
            return Err(ParseError::Arity {
                count: self.inputs.len(),
            });
        }
        if self.prints == 0 {
            return Err(ParseError::NoPrint);
        }
        Ok(Program {
            inputs: self.inputs,
            body,
        })
    }

    // -- token helpers --

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Position {
        self.peek()
            .or_else(|| self.tokens.last())
            .map(|t| t.position)
            .unwrap_or_default()
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.at(TokenKind::Keyword, kw)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.at(TokenKind::Punct, p)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        Err(ParseError::Syntax {
            position: self.here(),
            expected: expected.to_string(),
            found,
        })
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<()> {
        if self.at(kind, text) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&format!("`{text}`"))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        self.expect(TokenKind::Punct, p)
    }

    fn ident(&mut self) -> PResult<(String, Position)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok((t.text.clone(), t.position))
            }
            _ => self.error("identifier"),
        }
    }

    // -- scopes --

    fn is_declared(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn declare(&mut self, name: &str, position: Position) -> PResult<()> {
        if self.is_declared(name) {
            return Err(ParseError::Redeclared {
                name: name.to_string(),
                position,
            });
        }
        self.scopes.last_mut().unwrap().insert(name.to_string());
        Ok(())
    }

    fn require_declared(&self, name: &str, position: Position) -> PResult<()> {
        if self.is_declared(name) {
            Ok(())
        } else {
            Err(ParseError::Undeclared {
                name: name.to_string(),
                position,
            })
        }
    }

    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.scopes.push(HashSet::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn top_level(&self) -> bool {
        self.scopes.len() == 1
    }

    // -- statements --

    fn stmt(&mut self) -> PResult<Stmt> {
        let Some(tok) = self.peek() else {
            return self.error("statement");
        };
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "int") => {
                let s = self.decl()?;
                self.expect_punct(";")?;
                Ok(s)
            }
            (TokenKind::Keyword, "if") => self.if_stmt(),
            (TokenKind::Keyword, "while") => self.while_stmt(),
            (TokenKind::Keyword, "for") => self.for_stmt(),
            (TokenKind::Keyword, "switch") => self.switch_stmt(),
            (TokenKind::Keyword, "read") => self.read_stmt(),
            (TokenKind::Keyword, "print") => self.print_stmt(),
            (TokenKind::Punct, "{") => {
                self.pos += 1;
                let body = self.scoped(|p| p.stmts_until_brace())?;
                Ok(Stmt::Block(body))
            }
            (TokenKind::Ident, _) => {
                let s = self.assign()?;
                self.expect_punct(";")?;
                Ok(s)
            }
            _ => self.error("statement"),
        }
    }

    /// Parses statements up to and including the closing `}`.
    fn stmts_until_brace(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.error("`}`");
            }
            out.push(self.stmt()?);
        }
        self.pos += 1;
        Ok(out)
    }

    /// Body of `if`/`while`/`for`: a braced block or a single statement,
    /// always in its own scope.
    fn body(&mut self) -> PResult<Vec<Stmt>> {
        self.scoped(|p| {
            if p.at_punct("{") {
                p.pos += 1;
                p.stmts_until_brace()
            } else {
                Ok(vec![p.stmt()?])
            }
        })
    }

    fn decl(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "int")?;
        let (name, at) = self.ident()?;
        let init = if self.at(TokenKind::Operator, "=") {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };
        // The initialiser cannot see the variable being declared.
        self.declare(&name, at)?;
        Ok(Stmt::Decl(name, init))
    }

    fn assign(&mut self) -> PResult<Stmt> {
        let (name, at) = self.ident()?;
        self.require_declared(&name, at)?;
        self.expect(TokenKind::Operator, "=")?;
        let value = self.expr()?;
        Ok(Stmt::Assign(name, value))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_body = self.body()?;
        let else_body = if self.at_kw("else") {
            self.pos += 1;
            Some(self.body()?)
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then_body,
            else_body,
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "while")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let body = self.body()?;
        Ok(Stmt::While { cond, body })
    }

    fn for_clause(&mut self, allow_decl: bool) -> PResult<ForClause> {
        if allow_decl && self.at_kw("int") {
            match self.decl()? {
                Stmt::Decl(n, e) => Ok(ForClause::Decl(n, e)),
                _ => unreachable!(),
            }
        } else {
            match self.assign()? {
                Stmt::Assign(n, e) => Ok(ForClause::Assign(n, e)),
                _ => unreachable!(),
            }
        }
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "for")?;
        self.expect_punct("(")?;
        self.scoped(|p| {
            let init = if p.at_punct(";") {
                None
            } else {
                Some(p.for_clause(true)?)
            };
            p.expect_punct(";")?;
            let cond = if p.at_punct(";") {
                None
            } else {
                Some(p.expr()?)
            };
            p.expect_punct(";")?;
            let update = if p.at_punct(")") {
                None
            } else {
                Some(p.for_clause(false)?)
            };
            p.expect_punct(")")?;
            let body = p.body()?;
            Ok(Stmt::For {
                init,
                cond,
                update,
                body,
            })
        })
    }

    fn case_label(&mut self) -> PResult<i64> {
        let negative = if self.at(TokenKind::Operator, "-") {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(t) if t.kind == TokenKind::IntLiteral => {
                self.pos += 1;
                let v: i64 = t.text.parse().expect("lexer checked range");
                Ok(if negative { -v } else { v })
            }
            _ => self.error("integer case label"),
        }
    }

    /// Statements of one switch arm. A trailing `break;` is accepted and
    /// dropped; arms never fall through.
    fn case_arm(&mut self) -> PResult<Vec<Stmt>> {
        self.scoped(|p| {
            let mut body = Vec::new();
            loop {
                if p.at_kw("case") || p.at_kw("default") || p.at_punct("}") {
                    break;
                }
                if p.at_kw("break") {
                    p.pos += 1;
                    p.expect_punct(";")?;
                    if !(p.at_kw("case") || p.at_kw("default") || p.at_punct("}")) {
                        return p.error("`case`, `default` or `}` after break");
                    }
                    break;
                }
                if p.peek().is_none() {
                    return p.error("`}`");
                }
                body.push(p.stmt()?);
            }
            Ok(body)
        })
    }

    fn switch_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "switch")?;
        self.expect_punct("(")?;
        let scrutinee = self.expr()?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut cases: Vec<SwitchCase> = Vec::new();
        let mut default = None;
        loop {
            if self.at_punct("}") {
                self.pos += 1;
                break;
            }
            let at = self.here();
            if self.at_kw("case") {
                self.pos += 1;
                let value = self.case_label()?;
                self.expect_punct(":")?;
                if cases.iter().any(|c| c.value == value) {
                    return Err(ParseError::DuplicateCase { value, position: at });
                }
                let body = self.case_arm()?;
                cases.push(SwitchCase { value, body });
            } else if self.at_kw("default") {
                if default.is_some() {
                    return self.error("at most one `default`");
                }
                self.pos += 1;
                self.expect_punct(":")?;
                default = Some(self.case_arm()?);
            } else {
                return self.error("`case`, `default` or `}`");
            }
        }
        Ok(Stmt::Switch {
            scrutinee,
            cases,
            default,
        })
    }

    fn read_stmt(&mut self) -> PResult<Stmt> {
        let at = self.here();
        if !self.top_level() {
            return Err(ParseError::NestedRead { position: at });
        }
        self.expect(TokenKind::Keyword, "read")?;
        self.expect_punct("(")?;
        let (name, pos) = self.ident()?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        if !self.is_declared(&name) {
            self.declare(&name, pos)?;
        }
        self.inputs.push(name.clone());
        if self.inputs.len() > MAX_INPUTS {
            return Err(ParseError::Arity {
                count: self.inputs.len(),
            });
        }
        Ok(Stmt::Read(name))
    }

    fn print_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::Keyword, "print")?;
        self.expect_punct("(")?;
        let arg = match self.peek() {
            Some(t) if t.kind == TokenKind::StrLiteral => {
                self.pos += 1;
                PrintArg::Str(unescape_string(&t.text))
            }
            _ => PrintArg::Int(self.expr()?),
        };
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        self.prints += 1;
        Ok(Stmt::Print(arg))
    }

    // -- expressions --

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Operator => match BinOp::from_symbol(&t.text) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(TokenKind::Operator, "-") {
            self.pos += 1;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.at(TokenKind::Operator, "!") {
            self.pos += 1;
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::IntLiteral => {
                self.pos += 1;
                Ok(Expr::Int(t.text.parse().expect("lexer checked range")))
            }
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                self.require_declared(&t.text, t.position)?;
                Ok(Expr::Var(t.text.clone()))
            }
            Some(t) if t.is(TokenKind::Punct, "(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_program() {
        let p = parse("read(n); print(n*n);").unwrap();
        assert_eq!(p.inputs, ["n"]);
        assert_eq!(p.body.len(), 2);
        assert_eq!(
            p.body[1],
            Stmt::Print(PrintArg::Int(Expr::bin(
                BinOp::Mul,
                Expr::var("n"),
                Expr::var("n")
            )))
        );
    }

    #[test]
    fn five_reads_is_arity_error() {
        let err = parse("read(a); read(b); read(c); read(d); read(e); print(a);").unwrap_err();
        assert_eq!(err, ParseError::Arity { count: 5 });
    }

    #[test]
    fn zero_reads_is_arity_error() {
        assert_eq!(parse("print(1);").unwrap_err(), ParseError::Arity { count: 0 });
    }

    #[test]
    fn branching_print() {
        let p = parse("read(n); if (n > 2) print(1); else print(0);").unwrap();
        assert_eq!(p.arity(), 1);
        match &p.body[1] {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                assert_eq!(then_body.len(), 1);
                assert_eq!(else_body.as_ref().unwrap().len(), 1);
            }
            other => panic!("expected if, got {other:?}"),
        }
    }

    #[test]
    fn missing_print() {
        assert_eq!(parse("read(n); int x = n;").unwrap_err(), ParseError::NoPrint);
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse("read(a); print(a - 1 - 2 * 3 < 4 && !a || 1);").unwrap();
        let Stmt::Print(PrintArg::Int(e)) = &p.body[1] else {
            panic!()
        };
        // ((((a - 1) - (2 * 3)) < 4) && !a) || 1
        let sub1 = Expr::bin(BinOp::Sub, Expr::var("a"), Expr::Int(1));
        let sub2 = Expr::bin(
            BinOp::Sub,
            sub1,
            Expr::bin(BinOp::Mul, Expr::Int(2), Expr::Int(3)),
        );
        let lt = Expr::bin(BinOp::Lt, sub2, Expr::Int(4));
        let and = Expr::bin(BinOp::And, lt, Expr::not(Expr::var("a")));
        assert_eq!(*e, Expr::bin(BinOp::Or, and, Expr::Int(1)));
    }

    #[test]
    fn undeclared_and_redeclared() {
        assert!(matches!(
            parse("read(n); print(m);"),
            Err(ParseError::Undeclared { .. })
        ));
        assert!(matches!(
            parse("read(n); int n = 1; print(n);"),
            Err(ParseError::Redeclared { .. })
        ));
        assert!(matches!(
            parse("read(n); int x = x; print(n);"),
            Err(ParseError::Undeclared { .. })
        ));
        // Sibling blocks may reuse a name.
        assert!(parse("read(n); { int t = 1; } { int t = 2; } print(n);").is_ok());
        // Block-local names do not leak.
        assert!(matches!(
            parse("read(n); { int t = 1; } print(t);"),
            Err(ParseError::Undeclared { .. })
        ));
    }

    #[test]
    fn nested_read_rejected() {
        assert!(matches!(
            parse("read(n); if (n) { read(m); } print(n);"),
            Err(ParseError::NestedRead { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("read(n);\nprint(n * );").unwrap_err();
        match err {
            ParseError::Syntax {
                position, found, ..
            } => {
                assert_eq!(position.line, 2);
                assert_eq!(found, "`)`");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn for_and_switch() {
        let src = r#"
            read(n);
            int s = 0;
            for (int i = 1; i <= n; i = i + 1) { s = s + i; }
            switch (s % 3) {
                case 0: print("zero"); break;
                case -1: print("neg");
                default: print(s);
            }
        "#;
        let p = parse(src).unwrap();
        assert_eq!(p.body.len(), 4);
        match &p.body[3] {
            Stmt::Switch { cases, default, .. } => {
                assert_eq!(cases.len(), 2);
                assert_eq!(cases[1].value, -1);
                assert!(default.is_some());
            }
            _ => panic!(),
        }
        assert!(matches!(
            parse("read(n); switch (n) { case 1: print(1); case 1: print(2); }"),
            Err(ParseError::DuplicateCase { value: 1, .. })
        ));
    }

    #[test]
    fn read_of_declared_variable() {
        let p = parse("int n; read(n); print(n);").unwrap();
        assert_eq!(p.inputs, ["n"]);
    }
}
