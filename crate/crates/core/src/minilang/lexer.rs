use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Ident,
    IntLiteral,
    StrLiteral,
    Operator,
    Punct,
}

/// 1-based line and column of the first character of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A lexed token. For string literals `text` holds the quoted source form
/// (escapes intact), so joining token texts re-lexes to the same sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub position: Position,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, position: Position) -> Self {
        Token {
            kind,
            text: text.into(),
            position,
        }
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "int", "if", "else", "while", "for", "switch", "case", "default", "break", "read", "print",
];

const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "=", "<", ">", "!",
];

const PUNCT: &[char] = &['(', ')', '{', '}', ';', ':', ','];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{position}: unexpected character {character:?}")]
    UnexpectedChar { position: Position, character: char },
    #[error("{position}: unterminated string literal")]
    UnterminatedString { position: Position },
    #[error("{position}: invalid escape sequence \\{character}")]
    BadEscape { position: Position, character: char },
    #[error("{position}: integer literal {text} does not fit in 64 bits")]
    IntOverflow { position: Position, text: String },
    #[error("{position}: unterminated block comment")]
    UnterminatedComment { position: Position },
}

impl LexError {
    pub fn position(&self) -> Position {
        match self {
            LexError::UnexpectedChar { position, .. }
            | LexError::UnterminatedString { position }
            | LexError::BadEscape { position, .. }
            | LexError::IntOverflow { position, .. }
            | LexError::UnterminatedComment { position } => *position,
        }
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(source: &'a str) -> Self {
        Cursor {
            chars: source.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits MiniC source into tokens. Whitespace and `//` / `/* */` comments
/// are skipped; anything else outside the alphabet is an error.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor::new(source);
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.position();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek2() == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.bump() {
                    None => return Err(LexError::UnterminatedComment { position: start }),
                    Some('*') if cur.peek() == Some('/') => {
                        cur.bump();
                        break;
                    }
                    Some(_) => {}
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    text.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = if KEYWORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            out.push(Token::new(kind, text, start));
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            if text.parse::<i64>().is_err() {
                return Err(LexError::IntOverflow {
                    position: start,
                    text,
                });
            }
            out.push(Token::new(TokenKind::IntLiteral, text, start));
            continue;
        }
        if c == '"' {
            let mut text = String::from('"');
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(LexError::UnterminatedString { position: start })
                    }
                    Some('"') => {
                        text.push('"');
                        break;
                    }
                    Some('\\') => {
                        let esc_pos = cur.position();
                        match cur.bump() {
                            Some(e @ ('"' | '\\' | 'n' | 't')) => {
                                text.push('\\');
                                text.push(e);
                            }
                            Some(e) => {
                                return Err(LexError::BadEscape {
                                    position: esc_pos,
                                    character: e,
                                })
                            }
                            None => {
                                return Err(LexError::UnterminatedString { position: start })
                            }
                        }
                    }
                    Some(ch) if ch.is_control() => {
                        return Err(LexError::UnexpectedChar {
                            position: start,
                            character: ch,
                        })
                    }
                    Some(ch) => text.push(ch),
                }
            }
            out.push(Token::new(TokenKind::StrLiteral, text, start));
            continue;
        }
        if PUNCT.contains(&c) {
            cur.bump();
            out.push(Token::new(TokenKind::Punct, c.to_string(), start));
            continue;
        }
        let two: Option<String> = cur.peek2().map(|d| [c, d].iter().collect());
        if let Some(op) = two.filter(|t| OPERATORS.contains(&t.as_str())) {
            cur.bump();
            cur.bump();
            out.push(Token::new(TokenKind::Operator, op, start));
            continue;
        }
        let one = c.to_string();
        if OPERATORS.contains(&one.as_str()) {
            cur.bump();
            out.push(Token::new(TokenKind::Operator, one, start));
            continue;
        }
        return Err(LexError::UnexpectedChar {
            position: start,
            character: c,
        });
    }
    Ok(out)
}

/// Decodes the body of a quoted string token (`"a\"b"` becomes `a"b`).
pub fn unescape_string(quoted: &str) -> String {
    let inner = &quoted[1..quoted.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
