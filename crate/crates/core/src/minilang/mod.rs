//! MiniC: a small C-like language of integer programs that read up to four
//! inputs and print exactly one integer or string.
//!
//! The grammar is documented in `docs/minic.md`.

mod ast;
mod interp;
mod lexer;
mod parser;
mod render;

pub use ast::{BinOp, Expr, ForClause, PrintArg, Program, Stmt, SwitchCase, UnOp};
pub use interp::{
    run_concrete, ExecutionResult, Outcome, RuntimeErrorKind, TestCase, DEFAULT_FUEL,
};
pub use lexer::{escape_string, tokenize, unescape_string, LexError, Position, Token, TokenKind, KEYWORDS};
pub use parser::{parse, ParseError, MAX_INPUTS};
pub use render::{render, render_expr};

/// Tokens of the program's canonical rendering.
pub fn program_tokens(program: &Program) -> Vec<Token> {
    tokenize(&render(program)).expect("rendered programs always lex")
}
