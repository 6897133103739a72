//! Interval evaluator for typed programs.
//!
//! Evaluation is an explicit small-step machine so that the guards of a
//! `case` can be interleaved fairly: every guard runs on its own machine over
//! a private copy of the store, and the scheduler advances each live guard by
//! a bounded number of steps per round.

use std::fmt;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{
    iv_add, iv_compare, iv_mul, iv_pow2, iv_recip, iv_sub, iv_widen, to_decimal_detailed, Comparison, Dyadic, Interval,
    Precision,
};
use crate::syntax::BaseType;
use crate::typecheck::{FunId, IntOp, RealOp, TExpr, TKind, TypedProgram};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(BigInt),
    Real(Interval),
}

impl Value {
    pub fn base_type(&self) -> BaseType {
        match self {
            Value::Unit => BaseType::Unit,
            Value::Bool(_) => BaseType::Boolean,
            Value::Int(_) => BaseType::Integer,
            Value::Real(_) => BaseType::Real,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(k) => write!(f, "{k}"),
            Value::Real(a) => write!(f, "{a}"),
        }
    }
}

/// Variable slots of the current function body, innermost last.
pub type Store = Vec<Value>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done(Value),
    /// A comparison or reciprocal could not be decided; retry at a higher
    /// precision.
    PrecisionLoss,
    /// Every guard of some `case` evaluated to false.
    Deadlock,
    FuelExhausted,
    /// Unrecoverable evaluation error (for instance an out-of-range `2 ^ n`).
    Fault(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub precision: Precision,
    /// Steps a guard may take before the scheduler moves to the next one.
    pub guard_step_budget: usize,
    /// Maximum number of condition evaluations per `while` loop instance.
    pub fuel: Option<u64>,
    /// `lim` bodies are evaluated at index `precision + limit_index_offset`.
    pub limit_index_offset: i64,
    /// Shuffles guard polling order each round when set.
    pub scheduler_seed: Option<u64>,
    /// Times a `lim` body is retried at a higher precision before the loss
    /// of precision propagates.
    pub limit_retries: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            precision: Precision::new(DEFAULT_PRECISION),
            guard_step_budget: 256,
            fuel: None,
            limit_index_offset: 2,
            scheduler_seed: None,
            limit_retries: 3,
        }
    }
}

pub const DEFAULT_PRECISION: u64 = 60;
pub const DEFAULT_PRECISION_CAP: u64 = 1_000_000;

/// Next working precision: `ceil(1.25 p) + 32`.
pub fn next_precision(p: Precision) -> Precision {
    let b = p.bits();
    Precision::new((5 * b).div_ceil(4) + 32)
}

/// Steps each live guard received during one completed scheduling round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    /// `(branch index, steps)` for every guard live at the start of the round.
    pub steps: Vec<(usize, usize)>,
}

struct Runtime<'p> {
    cfg: &'p EvalConfig,
    program: &'p TypedProgram,
    rng: Option<ChaCha8Rng>,
    steps: u64,
    trace: Option<Vec<RoundRecord>>,
}

enum Ctrl<'p> {
    Eval(&'p TExpr),
    Ret(Value),
    /// The top frame (a `case` or `lim`) drives a sub-machine.
    Wait,
}

enum Frame<'p> {
    Unary(&'p TExpr),
    BinLeft(&'p TExpr, &'p TExpr),
    BinRight(&'p TExpr, Value),
    Seq(&'p TExpr),
    NewVar(&'p TExpr),
    PopVar,
    Assign(usize),
    If(&'p TExpr, &'p TExpr),
    WhileCond(&'p TExpr, &'p TExpr, u64),
    WhileBody(&'p TExpr, &'p TExpr, u64),
    CallArgs(FunId, &'p [TExpr], Vec<Value>),
    CallReturn(Store),
    Case(CaseState<'p>),
    Lim(LimState<'p>),
}

enum Drive<'p> {
    Continue,
    Eval(&'p TExpr),
    Return(Value),
    Finish(Outcome),
}

struct Machine<'p> {
    store: Store,
    ctrl: Ctrl<'p>,
    frames: Vec<Frame<'p>>,
    precision: Precision,
}

enum Guard<'p> {
    Running(Box<Machine<'p>>),
    Ended(Outcome),
}

struct CaseState<'p> {
    branches: &'p [(TExpr, TExpr)],
    guards: Vec<Guard<'p>>,
    order: Vec<usize>,
    pos: usize,
    used: usize,
    round_steps: Vec<usize>,
    live_at_start: Vec<bool>,
}

struct LimState<'p> {
    body: &'p TExpr,
    store: Store,
    eps: Dyadic,
    precision: Precision,
    attempts: u32,
    sub: Box<Machine<'p>>,
}

impl<'p> Machine<'p> {
    fn new(store: Store, e: &'p TExpr, precision: Precision) -> Self {
        Machine {
            store,
            ctrl: Ctrl::Eval(e),
            frames: Vec::new(),
            precision,
        }
    }

    fn run(&mut self, rt: &mut Runtime<'p>) -> Outcome {
        loop {
            if let Some(o) = self.step(rt) {
                return o;
            }
        }
    }

    /// One primitive transition; `Some` once the machine has finished.
    fn step(&mut self, rt: &mut Runtime<'p>) -> Option<Outcome> {
        rt.steps += 1;
        match std::mem::replace(&mut self.ctrl, Ctrl::Wait) {
            Ctrl::Eval(e) => self.enter(e, rt),
            Ctrl::Ret(v) => self.ret(v, rt),
            Ctrl::Wait => self.drive(rt),
        }
    }

    fn enter(&mut self, e: &'p TExpr, rt: &mut Runtime<'p>) -> Option<Outcome> {
        let next = match &e.kind {
            TKind::Var(r) => Ctrl::Ret(self.store[r.slot].clone()),
            TKind::Bool(b) => Ctrl::Ret(Value::Bool(*b)),
            TKind::Int(k) => Ctrl::Ret(Value::Int(k.clone())),
            TKind::Skip => Ctrl::Ret(Value::Unit),
            TKind::Coerce(a) | TKind::Pow2(a) | TKind::Recip(a) => {
                self.frames.push(Frame::Unary(e));
                Ctrl::Eval(a)
            }
            TKind::IntOp(_, a, b)
            | TKind::RealOp(_, a, b)
            | TKind::IntEq(a, b)
            | TKind::IntLt(a, b)
            | TKind::RealLt(a, b) => {
                self.frames.push(Frame::BinLeft(e, b));
                Ctrl::Eval(a)
            }
            TKind::Seq(a, b) => {
                self.frames.push(Frame::Seq(b));
                Ctrl::Eval(a)
            }
            TKind::NewVar(init, body) => {
                self.frames.push(Frame::NewVar(body));
                Ctrl::Eval(init)
            }
            TKind::Assign(r, rhs) => {
                self.frames.push(Frame::Assign(r.slot));
                Ctrl::Eval(rhs)
            }
            TKind::If(c, t, f) => {
                self.frames.push(Frame::If(t, f));
                Ctrl::Eval(c)
            }
            TKind::While(c, b) => {
                if rt.cfg.fuel.is_some_and(|f| f < 1) {
                    return Some(Outcome::FuelExhausted);
                }
                self.frames.push(Frame::WhileCond(c, b, 1));
                Ctrl::Eval(c)
            }
            TKind::Call(f, args) => {
                if args.is_empty() {
                    let saved = std::mem::take(&mut self.store);
                    self.frames.push(Frame::CallReturn(saved));
                    Ctrl::Eval(&rt.program.functions[*f].body)
                } else {
                    self.frames.push(Frame::CallArgs(*f, args, Vec::with_capacity(args.len())));
                    Ctrl::Eval(&args[0])
                }
            }
            TKind::Case(branches) => {
                let state = CaseState::new(branches, &self.store, self.precision, rt);
                self.frames.push(Frame::Case(state));
                Ctrl::Wait
            }
            TKind::Lim(body) => {
                let n = self.precision.bits() as i64 + rt.cfg.limit_index_offset;
                let mut store = self.store.clone();
                store.push(Value::Int(BigInt::from(n)));
                let sub = Box::new(Machine::new(store.clone(), body, self.precision));
                self.frames.push(Frame::Lim(LimState {
                    body,
                    store,
                    eps: Dyadic::pow2(-n),
                    precision: self.precision,
                    attempts: 0,
                    sub,
                }));
                Ctrl::Wait
            }
        };
        self.ctrl = next;
        None
    }

    fn ret(&mut self, v: Value, rt: &mut Runtime<'p>) -> Option<Outcome> {
        let Some(frame) = self.frames.pop() else {
            return Some(Outcome::Done(v));
        };
        let next = match frame {
            Frame::Unary(e) => match unary(e, v, self.precision) {
                Ok(v) => Ctrl::Ret(v),
                Err(o) => return Some(o),
            },
            Frame::BinLeft(e, right) => {
                self.frames.push(Frame::BinRight(e, v));
                Ctrl::Eval(right)
            }
            Frame::BinRight(e, left) => match binary(e, left, v, self.precision) {
                Ok(v) => Ctrl::Ret(v),
                Err(o) => return Some(o),
            },
            Frame::Seq(next) => Ctrl::Eval(next),
            Frame::NewVar(body) => {
                self.store.push(v);
                self.frames.push(Frame::PopVar);
                Ctrl::Eval(body)
            }
            Frame::PopVar => {
                self.store.pop();
                Ctrl::Ret(v)
            }
            Frame::Assign(slot) => {
                self.store[slot] = v;
                Ctrl::Ret(Value::Unit)
            }
            Frame::If(t, f) => match v {
                Value::Bool(true) => Ctrl::Eval(t),
                Value::Bool(false) => Ctrl::Eval(f),
                other => unreachable!("condition evaluated to {other}"),
            },
            Frame::WhileCond(c, b, count) => match v {
                Value::Bool(true) => {
                    self.frames.push(Frame::WhileBody(c, b, count));
                    Ctrl::Eval(b)
                }
                Value::Bool(false) => Ctrl::Ret(Value::Unit),
                other => unreachable!("loop condition evaluated to {other}"),
            },
            Frame::WhileBody(c, b, count) => {
                let count = count + 1;
                if rt.cfg.fuel.is_some_and(|f| count > f) {
                    return Some(Outcome::FuelExhausted);
                }
                self.frames.push(Frame::WhileCond(c, b, count));
                Ctrl::Eval(c)
            }
            Frame::CallArgs(f, args, mut vals) => {
                vals.push(v);
                if vals.len() < args.len() {
                    let next = &args[vals.len()];
                    self.frames.push(Frame::CallArgs(f, args, vals));
                    Ctrl::Eval(next)
                } else {
                    let saved = std::mem::replace(&mut self.store, vals);
                    self.frames.push(Frame::CallReturn(saved));
                    Ctrl::Eval(&rt.program.functions[f].body)
                }
            }
            Frame::CallReturn(saved) => {
                self.store = saved;
                Ctrl::Ret(v)
            }
            Frame::Case(_) | Frame::Lim(_) => unreachable!("value returned into a waiting frame"),
        };
        self.ctrl = next;
        None
    }

    fn drive(&mut self, rt: &mut Runtime<'p>) -> Option<Outcome> {
        let action = match self.frames.last_mut() {
            Some(Frame::Case(state)) => state.step(rt),
            Some(Frame::Lim(state)) => state.step(rt),
            _ => unreachable!("machine waiting without a driving frame"),
        };
        match action {
            Drive::Continue => {
                self.ctrl = Ctrl::Wait;
                None
            }
            Drive::Eval(e) => {
                self.frames.pop();
                self.ctrl = Ctrl::Eval(e);
                None
            }
            Drive::Return(v) => {
                self.frames.pop();
                self.ctrl = Ctrl::Ret(v);
                None
            }
            Drive::Finish(o) => Some(o),
        }
    }
}

impl<'p> CaseState<'p> {
    fn new(branches: &'p [(TExpr, TExpr)], store: &Store, precision: Precision, rt: &mut Runtime<'p>) -> Self {
        let guards = branches
            .iter()
            .map(|(g, _)| Guard::Running(Box::new(Machine::new(store.clone(), g, precision))))
            .collect();
        let mut order: Vec<usize> = (0..branches.len()).collect();
        if let Some(rng) = rt.rng.as_mut() {
            order.shuffle(rng);
        }
        CaseState {
            branches,
            guards,
            order,
            pos: 0,
            used: 0,
            round_steps: vec![0; branches.len()],
            live_at_start: vec![true; branches.len()],
        }
    }

    fn all_ended(&self) -> bool {
        self.guards.iter().all(|g| matches!(g, Guard::Ended(_)))
    }

    /// Outcome when every guard has ended without one being true.
    fn resolve(&self) -> Outcome {
        let ends = self.guards.iter().filter_map(|g| match g {
            Guard::Ended(o) => Some(o),
            Guard::Running(_) => None,
        });
        let mut result = Outcome::Deadlock;
        for o in ends {
            match o {
                Outcome::Fault(_) => return o.clone(),
                Outcome::PrecisionLoss => result = Outcome::PrecisionLoss,
                Outcome::FuelExhausted if result == Outcome::Deadlock => result = Outcome::FuelExhausted,
                _ => {}
            }
        }
        result
    }

    fn advance(&mut self, rt: &mut Runtime<'p>) {
        self.used = 0;
        self.pos += 1;
        if self.pos == self.order.len() {
            if let Some(trace) = rt.trace.as_mut() {
                let steps = (0..self.guards.len())
                    .filter(|&i| self.live_at_start[i])
                    .map(|i| (i, self.round_steps[i]))
                    .collect();
                trace.push(RoundRecord { steps });
            }
            self.pos = 0;
            for (i, g) in self.guards.iter().enumerate() {
                self.live_at_start[i] = matches!(g, Guard::Running(_));
                self.round_steps[i] = 0;
            }
            if let Some(rng) = rt.rng.as_mut() {
                self.order.shuffle(rng);
            }
        }
    }

    fn step(&mut self, rt: &mut Runtime<'p>) -> Drive<'p> {
        while matches!(self.guards[self.order[self.pos]], Guard::Ended(_)) {
            self.advance(rt);
        }
        let i = self.order[self.pos];
        let Guard::Running(m) = &mut self.guards[i] else {
            unreachable!()
        };
        let result = m.step(rt);
        self.used += 1;
        self.round_steps[i] += 1;
        match result {
            None => {
                if self.used >= rt.cfg.guard_step_budget {
                    self.advance(rt);
                }
                Drive::Continue
            }
            Some(Outcome::Done(Value::Bool(true))) => Drive::Eval(&self.branches[i].1),
            Some(o) => {
                self.guards[i] = Guard::Ended(o);
                if self.all_ended() {
                    return Drive::Finish(self.resolve());
                }
                self.advance(rt);
                Drive::Continue
            }
        }
    }
}

impl<'p> LimState<'p> {
    fn step(&mut self, rt: &mut Runtime<'p>) -> Drive<'p> {
        match self.sub.step(rt) {
            None => Drive::Continue,
            Some(Outcome::Done(Value::Real(a))) => Drive::Return(Value::Real(iv_widen(&a, &self.eps))),
            Some(Outcome::PrecisionLoss | Outcome::Deadlock) => {
                if self.attempts >= rt.cfg.limit_retries {
                    return Drive::Finish(Outcome::PrecisionLoss);
                }
                self.attempts += 1;
                self.precision = next_precision(self.precision);
                *self.sub = Machine::new(self.store.clone(), self.body, self.precision);
                Drive::Continue
            }
            Some(Outcome::Done(other)) => unreachable!("limit body evaluated to {other}"),
            Some(o) => Drive::Finish(o),
        }
    }
}

fn unary(e: &TExpr, v: Value, p: Precision) -> Result<Value, Outcome> {
    match (&e.kind, v) {
        (TKind::Coerce(_), Value::Int(k)) => Ok(Value::Real(Interval::from_int(k))),
        (TKind::Pow2(_), Value::Int(k)) => iv_pow2(&k, p)
            .map(Value::Real)
            .map_err(|err| Outcome::Fault(err.to_string())),
        (TKind::Recip(_), Value::Real(a)) => iv_recip(&a, p)
            .map(Value::Real)
            .map_err(|_| Outcome::PrecisionLoss),
        (_, v) => unreachable!("ill-typed unary operand {v}"),
    }
}

fn binary(e: &TExpr, l: Value, r: Value, p: Precision) -> Result<Value, Outcome> {
    Ok(match (&e.kind, l, r) {
        (TKind::IntOp(op, ..), Value::Int(a), Value::Int(b)) => Value::Int(match op {
            IntOp::Add => a + b,
            IntOp::Sub => a - b,
            IntOp::Mul => a * b,
        }),
        (TKind::RealOp(op, ..), Value::Real(a), Value::Real(b)) => Value::Real(match op {
            RealOp::Add => iv_add(&a, &b, p),
            RealOp::Sub => iv_sub(&a, &b, p),
            RealOp::Mul => iv_mul(&a, &b, p),
        }),
        (TKind::IntEq(..), Value::Int(a), Value::Int(b)) => Value::Bool(a == b),
        (TKind::IntLt(..), Value::Int(a), Value::Int(b)) => Value::Bool(a < b),
        (TKind::RealLt(..), Value::Real(a), Value::Real(b)) => match iv_compare(&a, &b) {
            Comparison::Lt => Value::Bool(true),
            Comparison::Gt => Value::Bool(false),
            Comparison::Inconclusive => return Err(Outcome::PrecisionLoss),
        },
        (_, l, r) => unreachable!("ill-typed binary operands {l} and {r}"),
    })
}

/// Statistics gathered alongside an evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub steps: u64,
    /// Completed guard scheduling rounds, when tracing was requested.
    pub rounds: Option<Vec<RoundRecord>>,
}

/// Evaluates `e` against `store`, returning the outcome and the final store.
pub fn eval(cfg: &EvalConfig, program: &TypedProgram, store: Store, e: &TExpr) -> (Outcome, Store) {
    let (o, s, _) = eval_with_stats(cfg, program, store, e, false);
    (o, s)
}

pub fn eval_with_stats(
    cfg: &EvalConfig,
    program: &TypedProgram,
    store: Store,
    e: &TExpr,
    trace_rounds: bool,
) -> (Outcome, Store, EvalStats) {
    let mut rt = Runtime {
        cfg,
        program,
        rng: cfg.scheduler_seed.map(ChaCha8Rng::seed_from_u64),
        steps: 0,
        trace: trace_rounds.then(Vec::new),
    };
    let mut m = Machine::new(store, e, cfg.precision);
    let o = m.run(&mut rt);
    let stats = EvalStats {
        steps: rt.steps,
        rounds: rt.trace,
    };
    (o, m.store, stats)
}

/// Evaluates the main expression of a program from the empty store.
pub fn eval_program(cfg: &EvalConfig, program: &TypedProgram) -> Outcome {
    eval(cfg, program, Vec::new(), &program.main).0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    Deadlock { precision: u64 },
    FuelExhausted { precision: u64 },
    PrecisionCap { last_precision: u64 },
    Fault { message: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Deadlock { precision } => {
                write!(f, "deadlock: every guard of a case is false (at {precision} bits)")
            }
            Diagnostic::FuelExhausted { precision } => {
                write!(f, "fuel exhausted: a loop exceeded its iteration budget (at {precision} bits)")
            }
            Diagnostic::PrecisionCap { last_precision } => {
                write!(f, "precision cap reached without a result (last tried {last_precision} bits)")
            }
            Diagnostic::Fault { message } => write!(f, "evaluation fault: {message}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    /// Canonical one-line rendering of the result.
    pub text: String,
    pub value: Value,
    /// Every working precision tried, in order.
    pub schedule: Vec<u64>,
}

/// Extra precisions tried when a real result straddles a digit boundary,
/// in the hope of printing its truncation instead of a rounding.
pub const TRUNCATION_RETRIES: u32 = 2;

/// Runs a program at increasing working precisions until the result can be
/// printed with `digits` correct decimals.
pub fn run_with_restarts(
    program: &TypedProgram,
    digits: u32,
    base: &EvalConfig,
    precision_cap: u64,
) -> Result<RunResult, Diagnostic> {
    let mut cfg = base.clone();
    let mut schedule = Vec::new();
    let mut rounded: Option<(String, Value)> = None;
    let mut rounded_attempts = 0;
    loop {
        let p = cfg.precision.bits();
        schedule.push(p);
        let mut found = None;
        match eval_program(&cfg, program) {
            Outcome::Done(Value::Real(a)) => {
                if let Ok(dec) = to_decimal_detailed(&a, digits) {
                    if dec.truncated {
                        found = Some((dec.text, Value::Real(a)));
                    } else {
                        rounded_attempts += 1;
                        rounded = Some((dec.text, Value::Real(a)));
                    }
                }
            }
            Outcome::Done(v) => found = Some((v.to_string(), v)),
            Outcome::PrecisionLoss => {}
            Outcome::Deadlock => return Err(Diagnostic::Deadlock { precision: p }),
            Outcome::FuelExhausted => return Err(Diagnostic::FuelExhausted { precision: p }),
            Outcome::Fault(message) => return Err(Diagnostic::Fault { message }),
        }
        if found.is_none() && (rounded_attempts > TRUNCATION_RETRIES || p >= precision_cap) {
            found = rounded.take();
        }
        if let Some((text, value)) = found {
            return Ok(RunResult { text, value, schedule });
        }
        if p >= precision_cap {
            return Err(Diagnostic::PrecisionCap { last_precision: p });
        }
        let next = next_precision(cfg.precision).bits().min(precision_cap);
        cfg.precision = Precision::new(next);
    }
}
