//! Abstract syntax shared by the parser, the type checker and both semantics.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;

/// The four base types of the language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Unit,
    Boolean,
    Integer,
    Real,
}

impl BaseType {
    pub fn keyword(self) -> &'static str {
        match self {
            BaseType::Unit => "unit",
            BaseType::Boolean => "bool",
            BaseType::Integer => "int",
            BaseType::Real => "real",
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A region of source text. Lines and columns are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn point(line: u32, col: u32) -> Self {
        SourceSpan {
            file: None,
            start_line: line,
            start_col: col,
            end_line: line,
            end_col: col,
        }
    }

    pub fn to(&self, end: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: end.end_line,
            end_col: end.end_col,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

/// Surface arithmetic operators. They are overloaded between integers and
/// reals until the type checker resolves them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

/// An expression together with the source region it was parsed from.
///
/// Spans do not take part in equality: two expressions are equal when their
/// trees are.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    True,
    False,
    Int(BigInt),
    Skip,
    /// `real(e)`
    Coerce(Box<Expr>),
    /// `2 ^ e`
    Pow2(Box<Expr>),
    /// Unary minus; integer `0 - e` or real `real(0) - e` depending on type.
    Neg(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    /// `inv(e)`
    Recip(Box<Expr>),
    /// `<`, integer or real.
    Less(Box<Expr>, Box<Expr>),
    /// `=`, integers only.
    Equal(Box<Expr>, Box<Expr>),
    Lim(String, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    NewVar(String, Box<Expr>, Box<Expr>),
    Assign(String, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Guarded choice. Always has at least one branch.
    Case(Vec<(Expr, Expr)>),
    While(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: SourceSpan::default(),
        }
    }

    pub fn with_span(kind: ExprKind, span: SourceSpan) -> Self {
        Expr { kind, span }
    }

    /// Identifiers occurring free in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let note = |name: &String, bound: &Vec<String>, out: &mut BTreeSet<String>| {
        if !bound.iter().any(|b| b == name) {
            out.insert(name.clone());
        }
    };
    match &e.kind {
        ExprKind::Var(x) => note(x, bound, out),
        ExprKind::True | ExprKind::False | ExprKind::Int(_) | ExprKind::Skip => {}
        ExprKind::Coerce(a) | ExprKind::Pow2(a) | ExprKind::Neg(a) | ExprKind::Recip(a) => {
            collect_free(a, bound, out)
        }
        ExprKind::Arith(_, a, b)
        | ExprKind::Less(a, b)
        | ExprKind::Equal(a, b)
        | ExprKind::Seq(a, b)
        | ExprKind::While(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        ExprKind::Lim(x, body) => {
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ExprKind::NewVar(x, init, body) => {
            collect_free(init, bound, out);
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ExprKind::Assign(x, rhs) => {
            note(x, bound, out);
            collect_free(rhs, bound, out);
        }
        ExprKind::If(c, t, f) => {
            collect_free(c, bound, out);
            collect_free(t, bound, out);
            collect_free(f, bound, out);
        }
        ExprKind::Case(branches) => {
            for (g, b) in branches {
                collect_free(g, bound, out);
                collect_free(b, bound, out);
            }
        }
        ExprKind::Call(_, args) => {
            for a in args {
                collect_free(a, bound, out);
            }
        }
    }
}

/// An ordered typing context. Names are expected to be distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub entries: Vec<(String, BaseType)>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with(mut self, name: &str, ty: BaseType) -> Self {
        self.entries.push((name.to_string(), ty));
        self
    }

    pub fn lookup(&self, name: &str) -> Option<BaseType> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub params: Context,
    pub return_type: BaseType,
    pub body: Expr,
    pub span: SourceSpan,
}

/// Top-level function definitions, in definition order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopEnv {
    pub functions: Vec<FunDef>,
}

impl TopEnv {
    pub fn get(&self, name: &str) -> Option<&FunDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub env: TopEnv,
    pub main: Expr,
}

// ---------------------------------------------------------------------------
// Pretty printing
//
// Printing levels mirror the grammar: an expression printed at a position
// that requires a tighter level than its own is parenthesised.

const SEQ: u8 = 0;
const STMT: u8 = 1;
const CMP: u8 = 2;
const SUM: u8 = 3;
const TERM: u8 = 4;
const UNARY: u8 = 5;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Seq(..) | ExprKind::Lim(..) | ExprKind::NewVar(..) => SEQ,
        ExprKind::Assign(..) | ExprKind::If(..) | ExprKind::Case(..) | ExprKind::While(..) => STMT,
        ExprKind::Less(..) | ExprKind::Equal(..) => CMP,
        ExprKind::Arith(ArithOp::Add | ArithOp::Sub, ..) => SUM,
        ExprKind::Arith(ArithOp::Mul, ..) => TERM,
        ExprKind::Neg(_) => UNARY,
        ExprKind::Int(k) if k.is_negative() => UNARY,
        _ => UNARY + 1,
    }
}

/// Renders an expression in concrete syntax that parses back to the same tree.
pub fn pretty_print(e: &Expr) -> String {
    let mut out = String::new();
    print_at(e, SEQ, &mut out);
    out
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.env.functions {
        out.push_str("let ");
        out.push_str(&f.name);
        out.push('(');
        for (i, (x, t)) in f.params.entries.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("{x} : {t}"));
        }
        out.push_str(&format!(") : {} :=\n  ", f.return_type));
        print_at(&f.body, SEQ, &mut out);
        out.push('\n');
    }
    out.push_str("do ");
    print_at(&p.main, SEQ, &mut out);
    out.push('\n');
    out
}

fn print_at(e: &Expr, min: u8, out: &mut String) {
    if level(e) < min {
        out.push('(');
        print_node(e, out);
        out.push(')');
    } else {
        print_node(e, out);
    }
}

fn print_node(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::True => out.push_str("true"),
        ExprKind::False => out.push_str("false"),
        ExprKind::Int(k) => out.push_str(&k.to_string()),
        ExprKind::Skip => out.push_str("skip"),
        ExprKind::Coerce(a) => {
            out.push_str("real(");
            print_at(a, SEQ, out);
            out.push(')');
        }
        ExprKind::Recip(a) => {
            out.push_str("inv(");
            print_at(a, SEQ, out);
            out.push(')');
        }
        ExprKind::Pow2(a) => {
            out.push_str("2 ^ ");
            print_operand(a, UNARY, out);
        }
        ExprKind::Neg(a) => {
            out.push('-');
            // `-3` would read back as a negative literal.
            if matches!(a.kind, ExprKind::Int(_)) {
                out.push('(');
                print_node(a, out);
                out.push(')');
            } else {
                print_operand(a, UNARY, out);
            }
        }
        ExprKind::Arith(op, a, b) => {
            let (l, r) = if *op == ArithOp::Mul {
                (TERM, UNARY)
            } else {
                (SUM, TERM)
            };
            print_operand(a, l, out);
            out.push_str(&format!(" {} ", op.symbol()));
            print_operand(b, r, out);
        }
        ExprKind::Less(a, b) => {
            print_operand(a, SUM, out);
            out.push_str(" < ");
            print_operand(b, SUM, out);
        }
        ExprKind::Equal(a, b) => {
            print_operand(a, SUM, out);
            out.push_str(" = ");
            print_operand(b, SUM, out);
        }
        ExprKind::Lim(x, body) => {
            out.push_str(&format!("lim {x}. "));
            print_at(body, SEQ, out);
        }
        ExprKind::Seq(a, b) => {
            print_at(a, STMT, out);
            out.push_str(" ; ");
            print_at(b, SEQ, out);
        }
        ExprKind::NewVar(x, init, body) => {
            out.push_str(&format!("var {x} := "));
            print_at(init, SEQ, out);
            out.push_str(" in ");
            print_at(body, SEQ, out);
        }
        ExprKind::Assign(x, rhs) => {
            out.push_str(&format!("{x} := "));
            print_at(rhs, CMP, out);
        }
        ExprKind::If(c, t, f) => {
            out.push_str("if ");
            print_at(c, SEQ, out);
            out.push_str(" then ");
            print_at(t, SEQ, out);
            out.push_str(" else ");
            print_at(f, SEQ, out);
            out.push_str(" end");
        }
        ExprKind::Case(branches) => {
            out.push_str("case ");
            for (i, (g, b)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                print_at(g, SEQ, out);
                out.push_str(" => ");
                print_at(b, SEQ, out);
            }
            out.push_str(" end");
        }
        ExprKind::While(c, b) => {
            out.push_str("while ");
            print_at(c, SEQ, out);
            out.push_str(" do ");
            print_at(b, SEQ, out);
            out.push_str(" end");
        }
        ExprKind::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_at(a, SEQ, out);
            }
            out.push(')');
        }
    }
}

/// Operands of operators: statements are always parenthesised there.
fn print_operand(e: &Expr, min: u8, out: &mut String) {
    print_at(e, min.max(CMP), out)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}
