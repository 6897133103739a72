//! Read-only / read-write typing judgements and elaboration into a typed AST.
//!
//! Variables live in a single lexical stack. Every position where the typing
//! rules demand a pure expression (guards, conditions, initializers,
//! right-hand sides, operands, call arguments and limit bodies) freezes the
//! stack: entries below the freeze mark are readable but not assignable.
//! That is the canonical split of the read-only context into `Γ; Δ`.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::syntax::{ArithOp, BaseType, Context, Expr, ExprKind, Program, SourceSpan, TopEnv};

/// Which judgement form was being derived when checking failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Judgement {
    ReadOnly,
    ReadWrite,
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Judgement::ReadOnly => "read-only",
            Judgement::ReadWrite => "read-write",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message} ({judgement} judgement)")]
pub struct TypeError {
    pub span: SourceSpan,
    pub message: String,
    pub judgement: Judgement,
}

/// A read-write context: `ro` variables may be read, `rw` also assigned.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RwContext {
    pub ro: Context,
    pub rw: Context,
}

/// A variable resolved to its slot in the evaluation stack of the enclosing
/// function body (or main program).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarRef {
    pub slot: usize,
    pub writable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealOp {
    Add,
    Sub,
    Mul,
}

/// Index into [`TypedProgram::functions`].
pub type FunId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TKind,
    pub ty: BaseType,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TKind {
    Var(VarRef),
    Bool(bool),
    Int(BigInt),
    Skip,
    Coerce(Box<TExpr>),
    Pow2(Box<TExpr>),
    IntOp(IntOp, Box<TExpr>, Box<TExpr>),
    RealOp(RealOp, Box<TExpr>, Box<TExpr>),
    Recip(Box<TExpr>),
    IntEq(Box<TExpr>, Box<TExpr>),
    IntLt(Box<TExpr>, Box<TExpr>),
    RealLt(Box<TExpr>, Box<TExpr>),
    /// The binder occupies the next free slot while the body runs.
    Lim(Box<TExpr>),
    Seq(Box<TExpr>, Box<TExpr>),
    /// The new variable occupies the next free slot while the body runs.
    NewVar(Box<TExpr>, Box<TExpr>),
    Assign(VarRef, Box<TExpr>),
    If(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Case(Vec<(TExpr, TExpr)>),
    While(Box<TExpr>, Box<TExpr>),
    Call(FunId, Vec<TExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedFun {
    pub name: String,
    pub params: Vec<BaseType>,
    pub return_type: BaseType,
    pub body: TExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram {
    pub functions: Vec<TypedFun>,
    pub main: TExpr,
}

impl TypedProgram {
    pub fn main_type(&self) -> BaseType {
        self.main.ty
    }
}

#[derive(Clone, Debug)]
struct Entry {
    name: String,
    ty: BaseType,
}

struct Checker<'a> {
    env: &'a TopEnv,
    /// Functions visible to the expression being checked.
    visible: usize,
    /// Function whose body is being checked, for the self-call diagnostic.
    current: Option<&'a str>,
    scope: Vec<Entry>,
    /// Entries with index below this mark are read-only.
    frozen: usize,
}

type TResult<T> = Result<T, TypeError>;

impl<'a> Checker<'a> {
    fn judgement(&self) -> Judgement {
        if self.frozen == self.scope.len() {
            Judgement::ReadOnly
        } else {
            Judgement::ReadWrite
        }
    }

    fn fail<T>(&self, span: &SourceSpan, message: impl Into<String>) -> TResult<T> {
        Err(TypeError {
            span: span.clone(),
            message: message.into(),
            judgement: self.judgement(),
        })
    }

    fn lookup(&self, name: &str) -> Option<(usize, BaseType)> {
        self.scope
            .iter()
            .enumerate()
            .rev()
            .find(|(_, e)| e.name == name)
            .map(|(i, e)| (i, e.ty))
    }

    /// Checks `e` read-only in the current scope.
    fn pure(&mut self, e: &Expr) -> TResult<TExpr> {
        let saved = self.frozen;
        self.frozen = self.scope.len();
        let r = self.check(e);
        self.frozen = saved;
        r
    }

    fn pure_expect(&mut self, e: &Expr, ty: BaseType, what: &str) -> TResult<TExpr> {
        let t = self.pure(e)?;
        if t.ty != ty {
            return self.fail(&e.span, format!("{what} must have type {ty}, found {}", t.ty));
        }
        Ok(t)
    }

    fn with_binding<T>(&mut self, name: &str, ty: BaseType, f: impl FnOnce(&mut Self) -> TResult<T>) -> TResult<T> {
        self.scope.push(Entry {
            name: name.to_string(),
            ty,
        });
        let r = f(self);
        self.scope.pop();
        r
    }

    fn check(&mut self, e: &Expr) -> TResult<TExpr> {
        use BaseType::*;
        let span = e.span.clone();
        let node = |kind, ty| TExpr {
            kind,
            ty,
            span: span.clone(),
        };
        match &e.kind {
            ExprKind::Var(x) => match self.lookup(x) {
                Some((slot, ty)) => Ok(node(
                    TKind::Var(VarRef {
                        slot,
                        writable: slot >= self.frozen,
                    }),
                    ty,
                )),
                None => self.fail(&e.span, format!("unbound variable `{x}`")),
            },
            ExprKind::True => Ok(node(TKind::Bool(true), Boolean)),
            ExprKind::False => Ok(node(TKind::Bool(false), Boolean)),
            ExprKind::Int(k) => Ok(node(TKind::Int(k.clone()), Integer)),
            ExprKind::Skip => Ok(node(TKind::Skip, Unit)),
            ExprKind::Coerce(a) => {
                let a = self.pure_expect(a, Integer, "argument of `real`")?;
                Ok(node(TKind::Coerce(Box::new(a)), Real))
            }
            ExprKind::Pow2(a) => {
                let a = self.pure_expect(a, Integer, "exponent of `2 ^`")?;
                Ok(node(TKind::Pow2(Box::new(a)), Real))
            }
            ExprKind::Recip(a) => {
                let a = self.pure_expect(a, Real, "argument of `inv`")?;
                Ok(node(TKind::Recip(Box::new(a)), Real))
            }
            ExprKind::Neg(a) => {
                let a = self.pure(a)?;
                let zero_span = a.span.clone();
                match a.ty {
                    Integer => {
                        let zero = TExpr {
                            kind: TKind::Int(BigInt::from(0)),
                            ty: Integer,
                            span: zero_span,
                        };
                        Ok(node(TKind::IntOp(IntOp::Sub, Box::new(zero), Box::new(a)), Integer))
                    }
                    Real => {
                        let zero = TExpr {
                            kind: TKind::Int(BigInt::from(0)),
                            ty: Integer,
                            span: zero_span.clone(),
                        };
                        let zero = TExpr {
                            kind: TKind::Coerce(Box::new(zero)),
                            ty: Real,
                            span: zero_span,
                        };
                        Ok(node(TKind::RealOp(RealOp::Sub, Box::new(zero), Box::new(a)), Real))
                    }
                    other => self.fail(&e.span, format!("cannot negate a value of type {other}")),
                }
            }
            ExprKind::Arith(op, a, b) => {
                let a = self.pure(a)?;
                let b = self.pure(b)?;
                match (a.ty, b.ty) {
                    (Integer, Integer) => {
                        let op = match op {
                            ArithOp::Add => IntOp::Add,
                            ArithOp::Sub => IntOp::Sub,
                            ArithOp::Mul => IntOp::Mul,
                        };
                        Ok(node(TKind::IntOp(op, Box::new(a), Box::new(b)), Integer))
                    }
                    (Real, Real) => {
                        let op = match op {
                            ArithOp::Add => RealOp::Add,
                            ArithOp::Sub => RealOp::Sub,
                            ArithOp::Mul => RealOp::Mul,
                        };
                        Ok(node(TKind::RealOp(op, Box::new(a), Box::new(b)), Real))
                    }
                    (l, r) => self.fail(
                        &e.span,
                        format!(
                            "operands of `{}` must both be int or both be real, found {l} and {r}",
                            op.symbol()
                        ),
                    ),
                }
            }
            ExprKind::Less(a, b) => {
                let a = self.pure(a)?;
                let b = self.pure(b)?;
                match (a.ty, b.ty) {
                    (Integer, Integer) => Ok(node(TKind::IntLt(Box::new(a), Box::new(b)), Boolean)),
                    (Real, Real) => Ok(node(TKind::RealLt(Box::new(a), Box::new(b)), Boolean)),
                    (l, r) => self.fail(
                        &e.span,
                        format!("operands of `<` must both be int or both be real, found {l} and {r}"),
                    ),
                }
            }
            ExprKind::Equal(a, b) => {
                let a = self.pure(a)?;
                let b = self.pure(b)?;
                match (a.ty, b.ty) {
                    (Integer, Integer) => Ok(node(TKind::IntEq(Box::new(a), Box::new(b)), Boolean)),
                    (Real, Real) => self.fail(&e.span, "reals cannot be compared for equality"),
                    (l, r) => self.fail(&e.span, format!("operands of `=` must be int, found {l} and {r}")),
                }
            }
            ExprKind::Lim(x, body) => {
                let saved = self.frozen;
                self.frozen = self.scope.len() + 1;
                let r = self.with_binding(x, Integer, |c| c.check(body));
                self.frozen = saved;
                let body = r?;
                if body.ty != Real {
                    return self.fail(&e.span, format!("body of `lim` must have type real, found {}", body.ty));
                }
                Ok(node(TKind::Lim(Box::new(body)), Real))
            }
            ExprKind::Seq(a, b) => {
                let a = self.check(a)?;
                if a.ty != Unit {
                    return self.fail(
                        &a.span,
                        format!("left side of `;` must have type unit, found {}", a.ty),
                    );
                }
                let b = self.check(b)?;
                let ty = b.ty;
                Ok(node(TKind::Seq(Box::new(a), Box::new(b)), ty))
            }
            ExprKind::NewVar(x, init, body) => {
                let init = self.pure(init)?;
                let body = self.with_binding(x, init.ty, |c| c.check(body))?;
                let ty = body.ty;
                Ok(node(TKind::NewVar(Box::new(init), Box::new(body)), ty))
            }
            ExprKind::Assign(x, rhs) => {
                let Some((slot, ty)) = self.lookup(x) else {
                    return self.fail(&e.span, format!("unbound variable `{x}`"));
                };
                if slot < self.frozen {
                    return self.fail(&e.span, format!("variable `{x}` is read-only here"));
                }
                let rhs = self.pure(rhs)?;
                if rhs.ty != ty {
                    return self.fail(
                        &e.span,
                        format!("cannot assign a value of type {} to `{x}` of type {ty}", rhs.ty),
                    );
                }
                Ok(node(TKind::Assign(VarRef { slot, writable: true }, Box::new(rhs)), Unit))
            }
            ExprKind::If(c, t, f) => {
                let c = self.pure_expect(c, Boolean, "condition of `if`")?;
                let t = self.check(t)?;
                let f = self.check(f)?;
                if t.ty != f.ty {
                    return self.fail(
                        &e.span,
                        format!("branches of `if` have different types {} and {}", t.ty, f.ty),
                    );
                }
                let ty = t.ty;
                Ok(node(TKind::If(Box::new(c), Box::new(t), Box::new(f)), ty))
            }
            ExprKind::Case(branches) => {
                if branches.is_empty() {
                    return self.fail(&e.span, "`case` needs at least one branch");
                }
                let mut out = Vec::with_capacity(branches.len());
                for (g, b) in branches {
                    let g = self.pure_expect(g, Boolean, "guard of `case`")?;
                    let b = self.check(b)?;
                    if let Some((_, first)) = out.first() {
                        let first: &TExpr = first;
                        if first.ty != b.ty {
                            return self.fail(
                                &b.span,
                                format!("branches of `case` have different types {} and {}", first.ty, b.ty),
                            );
                        }
                    }
                    out.push((g, b));
                }
                let ty = out[0].1.ty;
                Ok(node(TKind::Case(out), ty))
            }
            ExprKind::While(c, b) => {
                let c = self.pure_expect(c, Boolean, "condition of `while`")?;
                let b = self.check(b)?;
                if b.ty != Unit {
                    return self.fail(&b.span, format!("body of `while` must have type unit, found {}", b.ty));
                }
                Ok(node(TKind::While(Box::new(c), Box::new(b)), Unit))
            }
            ExprKind::Call(f, args) => {
                let Some(id) = self.env.functions.iter().position(|d| &d.name == f) else {
                    return self.fail(&e.span, format!("unknown function `{f}`"));
                };
                if id >= self.visible {
                    if self.current == Some(f.as_str()) {
                        return self.fail(&e.span, format!("function `{f}` may not call itself"));
                    }
                    return self.fail(&e.span, format!("function `{f}` is defined later and cannot be called here"));
                }
                let def = &self.env.functions[id];
                let signature = format!(
                    "{f}({}) : {}",
                    def.params
                        .entries
                        .iter()
                        .map(|(x, t)| format!("{x} : {t}"))
                        .collect::<Vec<_>>()
                        .join(", "),
                    def.return_type
                );
                if def.params.len() != args.len() {
                    return self.fail(
                        &e.span,
                        format!("`{signature}` expects {} arguments, found {}", def.params.len(), args.len()),
                    );
                }
                let mut targs = Vec::with_capacity(args.len());
                for (a, (x, t)) in args.iter().zip(def.params.entries.iter()) {
                    let ta = self.pure(a)?;
                    if ta.ty != *t {
                        return self.fail(
                            &a.span,
                            format!("argument `{x}` of `{signature}` must have type {t}, found {}", ta.ty),
                        );
                    }
                    targs.push(ta);
                }
                Ok(node(TKind::Call(id, targs), def.return_type))
            }
        }
    }
}

fn checker<'a>(env: &'a TopEnv, entries: &[(String, BaseType)], frozen: usize) -> Checker<'a> {
    Checker {
        env,
        visible: env.functions.len(),
        current: None,
        scope: entries
            .iter()
            .map(|(name, ty)| Entry {
                name: name.clone(),
                ty: *ty,
            })
            .collect(),
        frozen,
    }
}

/// `Γ ⊢ro e : τ`
pub fn check_ro(env: &TopEnv, gamma: &Context, e: &Expr) -> Result<BaseType, TypeError> {
    elaborate_ro(env, gamma, e).map(|t| t.ty)
}

pub fn elaborate_ro(env: &TopEnv, gamma: &Context, e: &Expr) -> Result<TExpr, TypeError> {
    let mut c = checker(env, &gamma.entries, gamma.len());
    c.check(e)
}

/// `Γ; Δ ⊢rw c : τ`
pub fn check_rw(env: &TopEnv, ctx: &RwContext, e: &Expr) -> Result<BaseType, TypeError> {
    elaborate_rw(env, ctx, e).map(|t| t.ty)
}

pub fn elaborate_rw(env: &TopEnv, ctx: &RwContext, e: &Expr) -> Result<TExpr, TypeError> {
    let mut entries = ctx.ro.entries.clone();
    entries.extend(ctx.rw.entries.iter().cloned());
    let mut c = checker(env, &entries, ctx.ro.len());
    c.check(e)
}

fn check_functions(env: &TopEnv) -> Result<Vec<TypedFun>, TypeError> {
    let mut out = Vec::with_capacity(env.functions.len());
    for (i, f) in env.functions.iter().enumerate() {
        if env.functions[..i].iter().any(|g| g.name == f.name) {
            return Err(TypeError {
                span: f.span.clone(),
                message: format!("function `{}` is already defined", f.name),
                judgement: Judgement::ReadOnly,
            });
        }
        for (j, (x, _)) in f.params.entries.iter().enumerate() {
            if f.params.entries[..j].iter().any(|(y, _)| y == x) {
                return Err(TypeError {
                    span: f.span.clone(),
                    message: format!("parameter `{x}` of `{}` is declared twice", f.name),
                    judgement: Judgement::ReadOnly,
                });
            }
        }
        let mut c = checker(env, &f.params.entries, f.params.len());
        c.visible = i;
        c.current = Some(&f.name);
        let body = c.check(&f.body)?;
        if body.ty != f.return_type {
            return Err(TypeError {
                span: f.body.span.clone(),
                message: format!(
                    "body of `{}` has type {}, but the signature says {}",
                    f.name, body.ty, f.return_type
                ),
                judgement: Judgement::ReadOnly,
            });
        }
        out.push(TypedFun {
            name: f.name.clone(),
            params: f.params.entries.iter().map(|(_, t)| *t).collect(),
            return_type: f.return_type,
            body,
        });
    }
    Ok(out)
}

/// Validates a top-level environment: each body is pure over its
/// parameters and calls only functions defined before it.
pub fn check_env(env: &TopEnv) -> Result<(), TypeError> {
    check_functions(env).map(|_| ())
}

/// Checks the environment and the main expression (read-only, empty context)
/// and produces the typed program.
pub fn elaborate(p: &Program) -> Result<TypedProgram, TypeError> {
    let functions = check_functions(&p.env)?;
    let main = elaborate_ro(&p.env, &Context::new(), &p.main)?;
    Ok(TypedProgram { functions, main })
}
