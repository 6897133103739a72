//! Tokenizer and recursive-descent parser for `.cl` source files.
//!
//! ```text
//! program  := fundef* "do" expr
//! fundef   := "let" ident "(" params? ")" ":" type ":=" expr
//! expr     := stmt (";" expr)?
//! stmt     := "var" ident ":=" expr "in" expr
//!           | ident ":=" stmt
//!           | "if" expr "then" expr "else" expr "end"
//!           | "case" expr "=>" expr ("|" expr "=>" expr)* "end"
//!           | "while" expr "do" expr "end"
//!           | "lim" ident "." expr
//!           | cmp
//! cmp      := sum (("<" | "=") sum)?
//! sum      := term (("+" | "-") term)*
//! term     := unary ("*" unary)*
//! unary    := "-" unary | atom
//! atom     := ident | ident "(" args? ")" | int | "skip" | "true" | "false"
//!           | "real" "(" expr ")" | "inv" "(" expr ")" | "2" "^" unary
//!           | "(" expr ")"
//! ```

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::syntax::{ArithOp, BaseType, Context, Expr, ExprKind, FunDef, Program, SourceSpan, TopEnv};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Let,
    Do,
    Var,
    In,
    If,
    Then,
    Else,
    End,
    Case,
    While,
    Lim,
    Skip,
    True,
    False,
    IntType,
    BoolType,
    RealKw,
    UnitType,
    Inv,
    Ident(String),
    IntLit(BigInt),
    Plus,
    Minus,
    Star,
    Less,
    Equal,
    Assign,
    Arrow,
    Bar,
    Semi,
    Caret,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(x) => format!("identifier `{x}`"),
            Token::IntLit(k) => format!("integer `{k}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Token::Let => "let",
            Token::Do => "do",
            Token::Var => "var",
            Token::In => "in",
            Token::If => "if",
            Token::Then => "then",
            Token::Else => "else",
            Token::End => "end",
            Token::Case => "case",
            Token::While => "while",
            Token::Lim => "lim",
            Token::Skip => "skip",
            Token::True => "true",
            Token::False => "false",
            Token::IntType => "int",
            Token::BoolType => "bool",
            Token::RealKw => "real",
            Token::UnitType => "unit",
            Token::Inv => "inv",
            Token::Ident(_) => "identifier",
            Token::IntLit(_) => "integer",
            Token::Plus => "+",
            Token::Minus => "-",
            Token::Star => "*",
            Token::Less => "<",
            Token::Equal => "=",
            Token::Assign => ":=",
            Token::Arrow => "=>",
            Token::Bar => "|",
            Token::Semi => ";",
            Token::Caret => "^",
            Token::LParen => "(",
            Token::RParen => ")",
            Token::Colon => ":",
            Token::Comma => ",",
            Token::Dot => ".",
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

const KEYWORDS: &[(&str, Token)] = &[
    ("let", Token::Let),
    ("do", Token::Do),
    ("var", Token::Var),
    ("in", Token::In),
    ("if", Token::If),
    ("then", Token::Then),
    ("else", Token::Else),
    ("end", Token::End),
    ("case", Token::Case),
    ("while", Token::While),
    ("lim", Token::Lim),
    ("skip", Token::Skip),
    ("true", Token::True),
    ("false", Token::False),
    ("int", Token::IntType),
    ("bool", Token::BoolType),
    ("real", Token::RealKw),
    ("unit", Token::UnitType),
    ("inv", Token::Inv),
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|(k, _)| *k == word)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

/// Splits source text into tokens. `#` starts a comment running to the end
/// of the line.
pub fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        let start = SourceSpan::point(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let begin = i;
        let token = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[begin..i].iter().collect();
            Token::IntLit(digits.parse().expect("ascii digits form an integer"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            KEYWORDS
                .iter()
                .find(|(k, _)| *k == word)
                .map(|(_, t)| t.clone())
                .unwrap_or(Token::Ident(word))
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                (':', Some('=')) => (Token::Assign, 2),
                ('=', Some('>')) => (Token::Arrow, 2),
                ('+', _) => (Token::Plus, 1),
                ('-', _) => (Token::Minus, 1),
                ('*', _) => (Token::Star, 1),
                ('<', _) => (Token::Less, 1),
                ('=', _) => (Token::Equal, 1),
                ('|', _) => (Token::Bar, 1),
                (';', _) => (Token::Semi, 1),
                ('^', _) => (Token::Caret, 1),
                ('(', _) => (Token::LParen, 1),
                (')', _) => (Token::RParen, 1),
                (':', _) => (Token::Colon, 1),
                (',', _) => (Token::Comma, 1),
                ('.', _) => (Token::Dot, 1),
                _ => {
                    return Err(ParseError {
                        span: start,
                        message: format!("illegal character {c:?}"),
                        expected: Vec::new(),
                    })
                }
            };
            i += len;
            tok
        };
        let width = (i - begin) as u32;
        col += width;
        let mut span = start;
        span.end_col = col - 1;
        tokens.push(Spanned { token, span });
    }
    Ok(tokens)
}

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(source)?;
    let program = p.program()?;
    Ok(program)
}

/// Parses a file, tagging every span with its path.
pub fn parse_file(path: &std::path::Path) -> Result<Program, ParseError> {
    let source = std::fs::read_to_string(path).map_err(|e| ParseError {
        span: SourceSpan::default(),
        message: format!("cannot read {}: {e}", path.display()),
        expected: Vec::new(),
    })?;
    let mut p = Parser::new(&source)?;
    let name = path.display().to_string();
    for t in &mut p.tokens {
        t.span.file = Some(name.clone());
    }
    p.program().map_err(|mut e| {
        e.span.file = Some(name);
        e
    })
}

/// Parses a single expression (no function definitions, no `do`).
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(source)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(source: &str) -> PResult<Self> {
        Ok(Parser {
            tokens: tokenize(source)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.token)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset).map(|t| &t.token)
    }

    fn span(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(t) => t.span.clone(),
            None => self
                .tokens
                .last()
                .map(|t| {
                    let mut s = t.span.clone();
                    s.start_col = s.end_col + 1;
                    s.end_col = s.start_col;
                    s
                })
                .unwrap_or_else(|| SourceSpan::point(1, 1)),
        }
    }

    fn prev_span(&self) -> SourceSpan {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map(|t| t.span.clone())
            .unwrap_or_default()
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        ParseError {
            span: self.span(),
            message: format!("unexpected {found}, expected {}", expected.join(" or ")),
            expected,
        }
    }

    fn eat(&mut self, t: &Token) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Token) -> PResult<SourceSpan> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            Err(self.error(&[&t.describe()]))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error(&["end of input"])),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Token::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn base_type(&mut self) -> PResult<BaseType> {
        let ty = match self.peek() {
            Some(Token::UnitType) => BaseType::Unit,
            Some(Token::BoolType) => BaseType::Boolean,
            Some(Token::IntType) => BaseType::Integer,
            Some(Token::RealKw) => BaseType::Real,
            _ => return Err(self.error(&["`unit`", "`bool`", "`int`", "`real`"])),
        };
        self.pos += 1;
        Ok(ty)
    }

    fn program(&mut self) -> PResult<Program> {
        let mut env = TopEnv::default();
        while self.peek() == Some(&Token::Let) {
            env.functions.push(self.fundef()?);
        }
        if !self.eat(&Token::Do) {
            return Err(self.error(&["`let`", "`do`"]));
        }
        let main = self.expr()?;
        self.expect_eof()?;
        Ok(Program { env, main })
    }

    fn fundef(&mut self) -> PResult<FunDef> {
        let start = self.expect(Token::Let)?;
        let name = self.ident()?;
        self.expect(Token::LParen)?;
        let mut params = Context::new();
        if self.peek() != Some(&Token::RParen) {
            loop {
                let x = self.ident()?;
                self.expect(Token::Colon)?;
                let t = self.base_type()?;
                params.entries.push((x, t));
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        self.expect(Token::RParen)?;
        self.expect(Token::Colon)?;
        let return_type = self.base_type()?;
        self.expect(Token::Assign)?;
        let body = self.expr()?;
        Ok(FunDef {
            name,
            params,
            return_type,
            span: start.to(&self.prev_span()),
            body,
        })
    }

    fn node(&self, kind: ExprKind, start: &SourceSpan) -> Expr {
        Expr::with_span(kind, start.to(&self.prev_span()))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let first = self.stmt()?;
        if self.eat(&Token::Semi) {
            let rest = self.expr()?;
            Ok(self.node(ExprKind::Seq(Box::new(first), Box::new(rest)), &start))
        } else {
            Ok(first)
        }
    }

    fn stmt(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek() {
            Some(Token::Var) => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect(Token::Assign)?;
                let init = self.expr()?;
                self.expect(Token::In)?;
                let body = self.expr()?;
                Ok(self.node(ExprKind::NewVar(x, Box::new(init), Box::new(body)), &start))
            }
            Some(Token::Ident(_)) if self.peek_at(1) == Some(&Token::Assign) => {
                let x = self.ident()?;
                self.pos += 1;
                let rhs = self.stmt()?;
                Ok(self.node(ExprKind::Assign(x, Box::new(rhs)), &start))
            }
            Some(Token::If) => {
                self.pos += 1;
                let c = self.expr()?;
                self.expect(Token::Then)?;
                let t = self.expr()?;
                self.expect(Token::Else)?;
                let f = self.expr()?;
                self.expect(Token::End)?;
                Ok(self.node(ExprKind::If(Box::new(c), Box::new(t), Box::new(f)), &start))
            }
            Some(Token::Case) => {
                self.pos += 1;
                let mut branches = Vec::new();
                // A leading `|` before the first branch is tolerated.
                self.eat(&Token::Bar);
                loop {
                    let g = self.expr()?;
                    self.expect(Token::Arrow)?;
                    let b = self.expr()?;
                    branches.push((g, b));
                    if self.eat(&Token::Bar) {
                        continue;
                    }
                    if self.eat(&Token::End) {
                        break;
                    }
                    return Err(self.error(&["`|`", "`end`"]));
                }
                Ok(self.node(ExprKind::Case(branches), &start))
            }
            Some(Token::While) => {
                self.pos += 1;
                let c = self.expr()?;
                self.expect(Token::Do)?;
                let b = self.expr()?;
                self.expect(Token::End)?;
                Ok(self.node(ExprKind::While(Box::new(c), Box::new(b)), &start))
            }
            Some(Token::Lim) => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect(Token::Dot)?;
                let body = self.expr()?;
                Ok(self.node(ExprKind::Lim(x, Box::new(body)), &start))
            }
            _ => self.cmp(),
        }
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lhs = self.sum()?;
        if self.eat(&Token::Less) {
            let rhs = self.sum()?;
            return Ok(self.node(ExprKind::Less(Box::new(lhs), Box::new(rhs)), &start));
        }
        if self.eat(&Token::Equal) {
            let rhs = self.sum()?;
            return Ok(self.node(ExprKind::Equal(Box::new(lhs), Box::new(rhs)), &start));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => ArithOp::Add,
                Some(Token::Minus) => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = self.node(ExprKind::Arith(op, Box::new(lhs), Box::new(rhs)), &start);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.unary()?;
        while self.eat(&Token::Star) {
            let rhs = self.unary()?;
            lhs = self.node(ExprKind::Arith(ArithOp::Mul, Box::new(lhs), Box::new(rhs)), &start);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat(&Token::Minus) {
            // `-k` for a literal k is itself a literal, except in `-2 ^ e`.
            if let Some(Token::IntLit(k)) = self.peek() {
                if self.peek_at(1) != Some(&Token::Caret) {
                    let k = -k.clone();
                    self.pos += 1;
                    return Ok(self.node(ExprKind::Int(k), &start));
                }
            }
            let e = self.unary()?;
            return Ok(self.node(ExprKind::Neg(Box::new(e)), &start));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error(&["expression"]));
        };
        self.pos += 1;
        let kind = match tok {
            Token::Ident(x) => {
                if self.eat(&Token::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Token::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Token::Comma) {
                                continue;
                            }
                            self.expect(Token::RParen)?;
                            break;
                        }
                    }
                    ExprKind::Call(x, args)
                } else {
                    ExprKind::Var(x)
                }
            }
            Token::IntLit(k) => {
                if self.eat(&Token::Caret) {
                    if k != BigInt::from(2) {
                        return Err(ParseError {
                            span: start,
                            message: format!("only `2 ^ e` is supported, found base {k}"),
                            expected: vec!["`2`".into()],
                        });
                    }
                    let e = self.unary()?;
                    ExprKind::Pow2(Box::new(e))
                } else {
                    ExprKind::Int(k)
                }
            }
            Token::Skip => ExprKind::Skip,
            Token::True => ExprKind::True,
            Token::False => ExprKind::False,
            Token::RealKw => {
                self.expect(Token::LParen)?;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                ExprKind::Coerce(Box::new(e))
            }
            Token::Inv => {
                self.expect(Token::LParen)?;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                ExprKind::Recip(Box::new(e))
            }
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                // Keep the inner node; parentheses carry no meaning.
                return Ok(e);
            }
            _ => {
                self.pos -= 1;
                return Err(self.error(&["expression"]));
            }
        };
        Ok(self.node(kind, &start))
    }
}
