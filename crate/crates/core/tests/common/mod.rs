//! Random well-typed programs over the limit-free fragment, and the check
//! that the interpreter agrees with the denotational oracle on them.

#![allow(dead_code)]

pub mod numeric;
pub mod pi;
pub mod powerdomain;
pub mod typing;

use clerical::eval::{eval_program, EvalConfig, Outcome, Value};
use clerical::numerics::Precision;
use clerical::oracle::{denote_program, FragValue, PowerSet};
use clerical::parser::parse_program;
use clerical::syntax::BaseType;
use clerical::typecheck::elaborate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FUEL: u64 = 32;
pub const MAX_DEPTH: u32 = 5;
pub const MAX_LOOP_BOUND: u32 = 8;

#[derive(Clone)]
struct Var {
    name: String,
    ty: BaseType,
    writable: bool,
}

struct Fun {
    name: String,
    params: Vec<BaseType>,
    ret: BaseType,
}

pub struct ProgramGen {
    rng: ChaCha8Rng,
    fresh: usize,
    funs: Vec<Fun>,
    /// Nesting depth of loop bodies. Choices inside loops would make the
    /// exact denotation grow exponentially with the iteration count, so
    /// loop bodies are kept deterministic.
    in_loop: u32,
}

const VALUE_TYPES: [BaseType; 3] = [BaseType::Boolean, BaseType::Integer, BaseType::Real];

fn frozen(env: &[Var]) -> Vec<Var> {
    env.iter()
        .map(|v| Var {
            writable: false,
            ..v.clone()
        })
        .collect()
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fresh: 0,
            funs: Vec::new(),
            in_loop: 0,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn any_type(&mut self) -> BaseType {
        *VALUE_TYPES.choose(&mut self.rng).unwrap()
    }

    /// A complete program: up to two helper functions, then a main
    /// expression of random type.
    pub fn program(&mut self) -> String {
        self.fresh = 0;
        self.funs.clear();
        let mut out = String::new();
        for _ in 0..self.rng.gen_range(0..=2) {
            let name = self.fresh("f");
            let arity = self.rng.gen_range(0..=2);
            let params: Vec<BaseType> = (0..arity).map(|_| self.any_type()).collect();
            let ret = self.any_type();
            let env: Vec<Var> = params
                .iter()
                .enumerate()
                .map(|(i, t)| Var {
                    name: format!("p{i}"),
                    ty: *t,
                    writable: false,
                })
                .collect();
            let body = self.expr(ret, 3, &env);
            let sig: Vec<String> = env.iter().map(|v| format!("{} : {}", v.name, v.ty)).collect();
            out.push_str(&format!("let {name}({}) : {ret} :=\n  {body}\n\n", sig.join(", ")));
            self.funs.push(Fun { name, params, ret });
        }
        let ty = if self.rng.gen_bool(0.15) {
            BaseType::Unit
        } else {
            self.any_type()
        };
        let main = self.expr(ty, MAX_DEPTH, &[]);
        out.push_str(&format!("do {main}\n"));
        out
    }

    fn var_of(&mut self, ty: BaseType, env: &[Var], writable: bool) -> Option<String> {
        let candidates: Vec<&Var> = env.iter().filter(|v| v.ty == ty && (!writable || v.writable)).collect();
        candidates.choose(&mut self.rng).map(|v| v.name.clone())
    }

    fn leaf(&mut self, ty: BaseType, env: &[Var]) -> String {
        if self.rng.gen_bool(0.4) {
            if let Some(x) = self.var_of(ty, env, false) {
                return x;
            }
        }
        match ty {
            BaseType::Unit => "skip".into(),
            BaseType::Boolean => if self.rng.gen() { "true" } else { "false" }.into(),
            BaseType::Integer => self.rng.gen_range(-3..=5).to_string(),
            BaseType::Real => match self.rng.gen_range(0..3) {
                0 => format!("real({})", self.rng.gen_range(-3..=5)),
                1 => format!("inv(real({}))", self.rng.gen_range(-3..=4)),
                _ => format!("2 ^ ({})", self.rng.gen_range(-4..=4)),
            },
        }
    }

    /// A pure subexpression: every variable in scope is read-only.
    fn pure(&mut self, ty: BaseType, depth: u32, env: &[Var]) -> String {
        self.expr(ty, depth, &frozen(env))
    }

    fn expr(&mut self, ty: BaseType, depth: u32, env: &[Var]) -> String {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(ty, env);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 => {
                let c = self.pure(BaseType::Boolean, d, env);
                let a = self.expr(ty, d, env);
                let b = self.expr(ty, d, env);
                format!("(if {c} then {a} else {b} end)")
            }
            1 if self.in_loop == 0 => {
                let n = self.rng.gen_range(1..=3);
                let branches: Vec<String> = (0..n)
                    .map(|_| {
                        let g = self.guard(d, env);
                        let b = self.expr(ty, d, env);
                        format!("{g} => {b}")
                    })
                    .collect();
                format!("(case {} end)", branches.join(" | "))
            }
            2 => {
                let t = self.any_type();
                let x = self.fresh("v");
                let init = self.pure(t, d, env);
                let mut inner = env.to_vec();
                inner.push(Var {
                    name: x.clone(),
                    ty: t,
                    writable: true,
                });
                let body = self.expr(ty, d, &inner);
                format!("(var {x} := {init} in {body})")
            }
            3 => {
                let c = self.expr(BaseType::Unit, d, env);
                let e = self.expr(ty, d, env);
                format!("({c} ; {e})")
            }
            4 if !self.funs.is_empty() && self.in_loop == 0 => {
                let matching: Vec<usize> = (0..self.funs.len()).filter(|&i| self.funs[i].ret == ty).collect();
                match matching.choose(&mut self.rng) {
                    Some(&i) => {
                        let params = self.funs[i].params.clone();
                        let name = self.funs[i].name.clone();
                        let args: Vec<String> = params.iter().map(|t| self.pure(*t, d.min(2), env)).collect();
                        format!("{name}({})", args.join(", "))
                    }
                    None => self.leaf(ty, env),
                }
            }
            _ => self.typed(ty, d, env),
        }
    }

    fn typed(&mut self, ty: BaseType, d: u32, env: &[Var]) -> String {
        match ty {
            BaseType::Unit => self.command(d, env),
            BaseType::Boolean => match self.rng.gen_range(0..5) {
                0 => {
                    let a = self.pure(BaseType::Integer, d, env);
                    let b = self.pure(BaseType::Integer, d, env);
                    format!("({a} < {b})")
                }
                1 => {
                    let a = self.pure(BaseType::Integer, d, env);
                    let b = self.pure(BaseType::Integer, d, env);
                    format!("({a} = {b})")
                }
                2 => {
                    let a = self.pure(BaseType::Real, d, env);
                    let b = self.pure(BaseType::Real, d, env);
                    format!("({a} < {b})")
                }
                3 if self.rng.gen_bool(0.2) => {
                    let b = self.leaf(BaseType::Boolean, env);
                    format!("(while true do skip end ; {b})")
                }
                _ => self.leaf(BaseType::Boolean, env),
            },
            BaseType::Integer => match self.rng.gen_range(0..5) {
                0..=2 => {
                    let op = ["+", "-", "*"].choose(&mut self.rng).unwrap();
                    let a = self.pure(BaseType::Integer, d, env);
                    let b = self.pure(BaseType::Integer, d, env);
                    format!("({a} {op} {b})")
                }
                3 => {
                    let a = self.pure(BaseType::Integer, d, env);
                    format!("(-{a})")
                }
                _ => self.counted_loop(BaseType::Integer, d, env),
            },
            BaseType::Real => match self.rng.gen_range(0..6) {
                0..=2 => {
                    let op = ["+", "-", "*"].choose(&mut self.rng).unwrap();
                    let a = self.pure(BaseType::Real, d, env);
                    let b = self.pure(BaseType::Real, d, env);
                    format!("({a} {op} {b})")
                }
                3 => {
                    let a = self.pure(BaseType::Integer, d, env);
                    format!("real({a})")
                }
                4 => {
                    let a = self.pure(BaseType::Real, d.min(2), env);
                    format!("inv({a})")
                }
                _ => self.counted_loop(BaseType::Real, d, env),
            },
        }
    }

    fn guard(&mut self, d: u32, env: &[Var]) -> String {
        self.pure(BaseType::Boolean, d, env)
    }

    fn command(&mut self, d: u32, env: &[Var]) -> String {
        match self.rng.gen_range(0..4) {
            0 | 1 => {
                let t = self.any_type();
                match self.var_of(t, env, true) {
                    Some(x) => {
                        let rhs = self.pure(t, d, env);
                        format!("({x} := {rhs})")
                    }
                    None => "skip".into(),
                }
            }
            2 => {
                let a = self.command(d, env);
                let b = self.command(d, env);
                format!("({a} ; {b})")
            }
            _ => {
                let bound = self.rng.gen_range(0..=MAX_LOOP_BOUND);
                let i = self.fresh("i");
                let mut inner = env.to_vec();
                inner.push(Var {
                    name: i.clone(),
                    ty: BaseType::Integer,
                    writable: false,
                });
                self.in_loop += 1;
                let body = self.command(d, &inner);
                self.in_loop -= 1;
                format!("(var {i} := 0 in while {i} < {bound} do {body} ; {i} := {i} + 1 end)")
            }
        }
    }

    /// `var acc := init in (loop k times updating acc) ; acc`.
    fn counted_loop(&mut self, ty: BaseType, d: u32, env: &[Var]) -> String {
        let bound = self.rng.gen_range(0..=MAX_LOOP_BOUND);
        let acc = self.fresh("a");
        let i = self.fresh("i");
        let init = self.pure(ty, d, env);
        let mut inner = env.to_vec();
        inner.push(Var {
            name: acc.clone(),
            ty,
            writable: true,
        });
        inner.push(Var {
            name: i.clone(),
            ty: BaseType::Integer,
            writable: false,
        });
        self.in_loop += 1;
        let step = self.pure(ty, d.min(2), &inner);
        self.in_loop -= 1;
        let op = if ty == BaseType::Real { "+" } else { ["+", "-", "*"].choose(&mut self.rng).copied().unwrap() };
        format!(
            "(var {acc} := {init} in var {i} := 0 in \
             (while {i} < {bound} do {acc} := {acc} {op} {step} ; {i} := {i} + 1 end ; {acc}))"
        )
    }
}

/// Interpreter outcome after raising precision past transient losses.
pub fn interpret(src: &str, seed: u64) -> Outcome {
    let typed = elaborate(&parse_program(src).expect("generated program parses")).expect("generated program typechecks");
    let mut last = Outcome::PrecisionLoss;
    for bits in [64, 128, 256, 512] {
        let cfg = EvalConfig {
            precision: Precision::new(bits),
            fuel: Some(FUEL),
            scheduler_seed: Some(seed),
            ..EvalConfig::default()
        };
        last = eval_program(&cfg, &typed);
        if !matches!(last, Outcome::PrecisionLoss) {
            break;
        }
    }
    last
}

pub fn value_in(v: &Value, set: &PowerSet<FragValue>) -> bool {
    set.values().any(|w| value_matches(v, w))
}

pub fn value_matches(v: &Value, w: &FragValue) -> bool {
    match (v, w) {
        (Value::Unit, FragValue::Unit) => true,
        (Value::Bool(a), FragValue::Bool(b)) => a == b,
        (Value::Int(a), FragValue::Int(b)) => a == b,
        (Value::Real(iv), FragValue::Real(q)) => iv.contains(q),
        _ => false,
    }
}

/// Checks one program: a finished value lies in the denotation, a
/// non-terminating run requires ⊥ in it, and a ⊥-free singleton must be
/// matched exactly.
pub fn agrees_with_oracle(src: &str, seed: u64) -> Result<(), String> {
    let typed = elaborate(&parse_program(src).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let denotation = denote_program(&typed, FUEL).map_err(|e| format!("oracle refused: {e}"))?;
    if denotation.is_error() {
        return Err("oracle returned the error set".into());
    }
    let outcome = interpret(src, seed);
    let ok = match &outcome {
        Outcome::Done(v) => {
            let single_ok = match denotation.as_singleton() {
                Some(w) if !denotation.has_bottom() => value_matches(v, w),
                _ => true,
            };
            value_in(v, &denotation) && single_ok
        }
        Outcome::Deadlock | Outcome::FuelExhausted | Outcome::PrecisionLoss => denotation.has_bottom(),
        Outcome::Fault(_) => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("interpreter gave {outcome:?}, oracle gave {denotation}\n{src}"))
    }
}
