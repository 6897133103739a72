//! Exact denotational semantics for the finite fragment of the language:
//! programs without `lim`, with reals represented as exact rationals.
//!
//! Results live in the powerdomain of finite sets of values, possibly
//! containing the divergence marker ⊥, plus a distinguished error element.
//! Loops are approximated by finitely many unrollings of their defining
//! functional, starting from the everywhere-⊥ function.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::syntax::BaseType;
use crate::typecheck::{IntOp, RealOp, TExpr, TKind, TypedProgram};

/// An element of the powerdomain over `T`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PowerSet<T: Ord> {
    /// The empty set, denoting an erroneous computation.
    Error,
    /// A nonempty set: `values`, plus ⊥ when `bottom` is set.
    Set { values: BTreeSet<T>, bottom: bool },
}

impl<T: Ord> PowerSet<T> {
    /// Builds a set, collapsing the empty set to [`PowerSet::Error`].
    pub fn new(values: BTreeSet<T>, bottom: bool) -> Self {
        if values.is_empty() && !bottom {
            PowerSet::Error
        } else {
            PowerSet::Set { values, bottom }
        }
    }

    /// `{⊥}`, the least element.
    pub fn bottom() -> Self {
        PowerSet::Set {
            values: BTreeSet::new(),
            bottom: true,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, PowerSet::Error)
    }

    pub fn has_bottom(&self) -> bool {
        matches!(self, PowerSet::Set { bottom: true, .. })
    }

    /// The non-⊥ members; empty for `Error`.
    pub fn values(&self) -> impl Iterator<Item = &T> {
        let set = match self {
            PowerSet::Error => None,
            PowerSet::Set { values, .. } => Some(values),
        };
        set.into_iter().flatten()
    }

    pub fn contains(&self, x: &T) -> bool {
        match self {
            PowerSet::Error => false,
            PowerSet::Set { values, .. } => values.contains(x),
        }
    }

    /// The single value of a ⊥-free singleton.
    pub fn as_singleton(&self) -> Option<&T> {
        match self {
            PowerSet::Set { values, bottom: false } if values.len() == 1 => values.iter().next(),
            _ => None,
        }
    }

    pub fn map<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> PowerSet<U> {
        match self {
            PowerSet::Error => PowerSet::Error,
            PowerSet::Set { values, bottom } => PowerSet::new(values.iter().map(&mut f).collect(), *bottom),
        }
    }
}

pub fn pd_unit<T: Ord>(x: T) -> PowerSet<T> {
    PowerSet::Set {
        values: BTreeSet::from([x]),
        bottom: false,
    }
}

/// Monadic bind: sequencing of nondeterministic computations.
pub fn pd_bind<S: Ord, T: Ord>(x: &PowerSet<S>, mut f: impl FnMut(&S) -> PowerSet<T>) -> PowerSet<T> {
    let (values, bottom) = match x {
        PowerSet::Error => return PowerSet::Error,
        PowerSet::Set { values, bottom } => (values, *bottom),
    };
    let mut out = BTreeSet::new();
    let mut out_bottom = bottom;
    for v in values {
        match f(v) {
            PowerSet::Error => return PowerSet::Error,
            PowerSet::Set { values, bottom } => {
                out.extend(values);
                out_bottom |= bottom;
            }
        }
    }
    PowerSet::new(out, out_bottom)
}

/// Strict union: nondeterministic choice, absorbing errors.
pub fn pd_strict_union<T: Ord + Clone>(x: &PowerSet<T>, y: &PowerSet<T>) -> PowerSet<T> {
    match (x, y) {
        (
            PowerSet::Set {
                values: a,
                bottom: ba,
            },
            PowerSet::Set {
                values: b,
                bottom: bb,
            },
        ) => PowerSet::new(a.union(b).cloned().collect(), *ba || *bb),
        _ => PowerSet::Error,
    }
}

/// The Egli-Milner order, with `Error` above every set containing ⊥.
pub fn pd_leq<T: Ord>(x: &PowerSet<T>, y: &PowerSet<T>) -> bool {
    if x == y {
        return true;
    }
    match x {
        PowerSet::Set { values, bottom: true } => match y {
            PowerSet::Error => true,
            PowerSet::Set { values: ys, .. } => values.is_subset(ys),
        },
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("elements {0} and {next} of the sequence are not ordered", next = .0 + 1)]
pub struct NotAChain(pub usize);

/// Supremum of an increasing chain.
pub fn pd_sup_chain<T: Ord + Clone>(chain: &[PowerSet<T>]) -> Result<PowerSet<T>, NotAChain> {
    if let Some(i) = chain.windows(2).position(|w| !pd_leq(&w[0], &w[1])) {
        return Err(NotAChain(i));
    }
    if let Some(stable) = chain.iter().find(|x| !x.has_bottom()) {
        return Ok(stable.clone());
    }
    let values = chain.iter().flat_map(|x| x.values().cloned()).collect();
    Ok(PowerSet::Set { values, bottom: true })
}

impl<T: Ord + fmt::Display> fmt::Display for PowerSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerSet::Error => f.write_str("error"),
            PowerSet::Set { values, bottom } => {
                let mut parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                if *bottom {
                    parts.push("⊥".to_string());
                }
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

/// A value of the fragment; reals are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FragValue {
    Unit,
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
}

impl FragValue {
    pub fn base_type(&self) -> BaseType {
        match self {
            FragValue::Unit => BaseType::Unit,
            FragValue::Bool(_) => BaseType::Boolean,
            FragValue::Int(_) => BaseType::Integer,
            FragValue::Real(_) => BaseType::Real,
        }
    }
}

impl fmt::Display for FragValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragValue::Unit => f.write_str("()"),
            FragValue::Bool(b) => write!(f, "{b}"),
            FragValue::Int(k) => write!(f, "{k}"),
            FragValue::Real(q) if q.denom().is_one() => write!(f, "{}", q.numer()),
            FragValue::Real(q) => write!(f, "{}/{}", q.numer(), q.denom()),
        }
    }
}

/// Values of the variables in scope, innermost last.
pub type FragState = Vec<FragValue>;

/// Denotation of a general expression at one input state.
pub type StateSet = PowerSet<(FragState, FragValue)>;

/// Largest `|n|` accepted in `2 ^ n` by the oracle.
pub const MAX_ORACLE_POW2: i64 = 4096;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("outside the finite fragment: {0}")]
pub struct FragmentViolation(pub String);

type DResult<T> = Result<T, FragmentViolation>;

struct Denoter<'p> {
    program: &'p TypedProgram,
    fuel: u64,
}

fn bool_of(v: &FragValue) -> bool {
    match v {
        FragValue::Bool(b) => *b,
        other => unreachable!("expected a boolean, found {other}"),
    }
}

/// Like [`pd_bind`], but threads fragment violations through `f`.
fn try_bind<S: Ord, T: Ord>(x: &PowerSet<S>, mut f: impl FnMut(&S) -> DResult<PowerSet<T>>) -> DResult<PowerSet<T>> {
    let mut err = None;
    let out = pd_bind(x, |v| match f(v) {
        Ok(r) => r,
        Err(e) => {
            err.get_or_insert(e);
            PowerSet::Error
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

impl<'p> Denoter<'p> {
    /// Denotation of an expression in a read-only position: its value set.
    fn pure(&self, state: &FragState, e: &TExpr) -> DResult<PowerSet<FragValue>> {
        Ok(self.general(state, e)?.map(|(_, v)| v.clone()))
    }

    fn pure_pair(
        &self,
        state: &FragState,
        a: &TExpr,
        b: &TExpr,
        mut f: impl FnMut(&FragValue, &FragValue) -> DResult<PowerSet<FragValue>>,
    ) -> DResult<StateSet> {
        let da = self.pure(state, a)?;
        let db = self.pure(state, b)?;
        let values = try_bind(&da, |x| try_bind(&db, |y| f(x, y)))?;
        Ok(values.map(|v| (state.clone(), v.clone())))
    }

    fn general(&self, state: &FragState, e: &TExpr) -> DResult<StateSet> {
        let here = |v: FragValue| pd_unit((state.clone(), v));
        let lift = |values: PowerSet<FragValue>| values.map(|v| (state.clone(), v.clone()));
        Ok(match &e.kind {
            TKind::Var(r) => here(state[r.slot].clone()),
            TKind::Bool(b) => here(FragValue::Bool(*b)),
            TKind::Int(k) => here(FragValue::Int(k.clone())),
            TKind::Skip => here(FragValue::Unit),
            TKind::Coerce(a) => lift(self.pure(state, a)?.map(|v| match v {
                FragValue::Int(k) => FragValue::Real(BigRational::from_integer(k.clone())),
                other => unreachable!("coercion of {other}"),
            })),
            TKind::Pow2(a) => {
                let d = self.pure(state, a)?;
                lift(try_bind(&d, |v| {
                    let FragValue::Int(k) = v else { unreachable!("exponent {v}") };
                    let n = k
                        .to_i64()
                        .filter(|n| n.abs() <= MAX_ORACLE_POW2)
                        .ok_or_else(|| FragmentViolation(format!("exponent {k} of `2 ^` is too large")))?;
                    let p = BigInt::one() << n.unsigned_abs();
                    let q = if n >= 0 {
                        BigRational::from_integer(p)
                    } else {
                        BigRational::new(BigInt::one(), p)
                    };
                    Ok(pd_unit(FragValue::Real(q)))
                })?)
            }
            TKind::Recip(a) => lift(pd_bind(&self.pure(state, a)?, |v| match v {
                FragValue::Real(q) if q.is_zero() => PowerSet::bottom(),
                FragValue::Real(q) => pd_unit(FragValue::Real(q.recip())),
                other => unreachable!("reciprocal of {other}"),
            })),
            TKind::IntOp(op, a, b) => self.pure_pair(state, a, b, |x, y| {
                let (FragValue::Int(x), FragValue::Int(y)) = (x, y) else {
                    unreachable!()
                };
                Ok(pd_unit(FragValue::Int(match op {
                    IntOp::Add => x + y,
                    IntOp::Sub => x - y,
                    IntOp::Mul => x * y,
                })))
            })?,
            TKind::RealOp(op, a, b) => self.pure_pair(state, a, b, |x, y| {
                let (FragValue::Real(x), FragValue::Real(y)) = (x, y) else {
                    unreachable!()
                };
                Ok(pd_unit(FragValue::Real(match op {
                    RealOp::Add => x + y,
                    RealOp::Sub => x - y,
                    RealOp::Mul => x * y,
                })))
            })?,
            TKind::IntEq(a, b) => self.pure_pair(state, a, b, |x, y| Ok(pd_unit(FragValue::Bool(x == y))))?,
            TKind::IntLt(a, b) => self.pure_pair(state, a, b, |x, y| Ok(pd_unit(FragValue::Bool(x < y))))?,
            TKind::RealLt(a, b) => self.pure_pair(state, a, b, |x, y| {
                Ok(if x == y {
                    PowerSet::bottom()
                } else {
                    pd_unit(FragValue::Bool(x < y))
                })
            })?,
            TKind::Lim(_) => {
                return Err(FragmentViolation(format!("`lim` at {}", e.span)));
            }
            TKind::Seq(a, b) => {
                let first = self.general(state, a)?;
                try_bind(&first, |(s, _)| self.general(s, b))?
            }
            TKind::NewVar(init, body) => {
                let values = self.pure(state, init)?;
                try_bind(&values, |v| {
                    let mut inner = state.clone();
                    inner.push(v.clone());
                    let r = self.general(&inner, body)?;
                    Ok(r.map(|(s, w)| (s[..s.len() - 1].to_vec(), w.clone())))
                })?
            }
            TKind::Assign(r, rhs) => self.pure(state, rhs)?.map(|v| {
                let mut s = state.clone();
                s[r.slot] = v.clone();
                (s, FragValue::Unit)
            }),
            TKind::If(c, t, f) => {
                let conds = self.pure(state, c)?;
                try_bind(&conds, |b| self.general(state, if bool_of(b) { t } else { f }))?
            }
            TKind::Case(branches) => self.case(state, branches)?,
            TKind::While(c, b) => self.unroll(state, c, b, self.fuel)?,
            TKind::Call(f, args) => {
                let fun = &self.program.functions[*f];
                let mut arg_sets = Vec::with_capacity(args.len());
                for a in args {
                    arg_sets.push(self.pure(state, a)?);
                }
                let tuples = pair_all(&arg_sets);
                let results = try_bind(&tuples, |actuals| self.pure(actuals, &fun.body))?;
                lift(results)
            }
        })
    }

    fn case(&self, state: &FragState, branches: &[(TExpr, TExpr)]) -> DResult<StateSet> {
        let tt = FragValue::Bool(true);
        let mut guards = Vec::with_capacity(branches.len());
        for (g, _) in branches {
            guards.push(self.pure(state, g)?);
        }
        if guards.iter().any(PowerSet::is_error) {
            return Ok(PowerSet::Error);
        }
        let mut values = BTreeSet::new();
        let mut bottom = guards.iter().all(|g| g.as_singleton() != Some(&tt));
        for (g, (_, body)) in guards.iter().zip(branches) {
            if !g.contains(&tt) {
                continue;
            }
            match self.general(state, body)? {
                PowerSet::Error => return Ok(PowerSet::Error),
                PowerSet::Set { values: v, bottom: b } => {
                    values.extend(v);
                    bottom |= b;
                }
            }
        }
        Ok(PowerSet::new(values, bottom))
    }

    /// `W^k(⊥)` at `state`.
    fn unroll(&self, state: &FragState, c: &TExpr, b: &TExpr, k: u64) -> DResult<StateSet> {
        if k == 0 {
            return Ok(PowerSet::bottom());
        }
        let conds = self.pure(state, c)?;
        try_bind(&conds, |v| {
            if bool_of(v) {
                let after = self.general(state, b)?;
                try_bind(&after, |(s, _)| self.unroll(s, c, b, k - 1))
            } else {
                Ok(pd_unit((state.clone(), FragValue::Unit)))
            }
        })
    }
}

/// Monadic pairing of a list of sets into a set of tuples.
fn pair_all(sets: &[PowerSet<FragValue>]) -> PowerSet<Vec<FragValue>> {
    sets.iter().fold(pd_unit(Vec::new()), |acc, set| {
        pd_bind(&acc, |prefix| {
            set.map(|v| {
                let mut t = prefix.clone();
                t.push(v.clone());
                t
            })
        })
    })
}

/// Denotation of `e` at `state`, with every loop unrolled `fuel` times.
pub fn denote(program: &TypedProgram, state: &FragState, e: &TExpr, fuel: u64) -> Result<StateSet, FragmentViolation> {
    Denoter { program, fuel }.general(state, e)
}

/// Value set of the main expression from the empty state.
pub fn denote_program(program: &TypedProgram, fuel: u64) -> Result<PowerSet<FragValue>, FragmentViolation> {
    Ok(denote(program, &Vec::new(), &program.main, fuel)?.map(|(_, v)| v.clone()))
}

/// The approximants `W^0(⊥), …, W^k(⊥)` of `while cond do body end`,
/// each evaluated at every probe state.
pub fn while_chain(
    program: &TypedProgram,
    cond: &TExpr,
    body: &TExpr,
    k: u64,
    probes: &[FragState],
) -> Result<Vec<Vec<StateSet>>, FragmentViolation> {
    let d = Denoter { program, fuel: k };
    (0..=k)
        .map(|j| probes.iter().map(|s| d.unroll(s, cond, body, j)).collect())
        .collect()
}

/// Default value of a type, for building probe states.
pub fn default_value(ty: BaseType) -> FragValue {
    match ty {
        BaseType::Unit => FragValue::Unit,
        BaseType::Boolean => FragValue::Bool(false),
        BaseType::Integer => FragValue::Int(BigInt::zero()),
        BaseType::Real => FragValue::Real(BigRational::zero()),
    }
}
