//! Accepting and rejecting cases for every typing rule, plus the
//! top-level environment rules.

use clerical::parser::{parse_expr, parse_program};
use clerical::syntax::{BaseType, Context, TopEnv};
use clerical::typecheck::{check_ro, check_rw, elaborate, RwContext};

use BaseType::{Boolean as B, Integer as Z, Real as R, Unit as U};

pub enum Form {
    /// `Γ ⊢ro e`
    Ro(&'static [(&'static str, BaseType)]),
    /// `Γ; Δ ⊢rw e`
    Rw(&'static [(&'static str, BaseType)], &'static [(&'static str, BaseType)]),
    /// A whole program with its function environment.
    Program,
}

pub struct Case {
    pub rule: &'static str,
    pub form: Form,
    pub src: &'static str,
    /// `None` when the case must be rejected.
    pub expected: Option<BaseType>,
}

fn ctx(entries: &[(&str, BaseType)]) -> Context {
    entries.iter().fold(Context::new(), |c, (x, t)| c.with(x, *t))
}

impl Case {
    /// Type assigned by the checker, or the error message.
    pub fn run(&self) -> Result<BaseType, String> {
        let env = TopEnv::default();
        match &self.form {
            Form::Ro(gamma) => {
                let e = parse_expr(self.src).map_err(|e| e.to_string())?;
                check_ro(&env, &ctx(gamma), &e).map_err(|e| e.to_string())
            }
            Form::Rw(gamma, delta) => {
                let e = parse_expr(self.src).map_err(|e| e.to_string())?;
                let c = RwContext {
                    ro: ctx(gamma),
                    rw: ctx(delta),
                };
                check_rw(&env, &c, &e).map_err(|e| e.to_string())
            }
            Form::Program => {
                let p = parse_program(self.src).map_err(|e| e.to_string())?;
                elaborate(&p).map(|t| t.main_type()).map_err(|e| e.to_string())
            }
        }
    }

    pub fn passes(&self) -> bool {
        match (self.run(), self.expected) {
            (Ok(t), Some(want)) => t == want,
            (Err(_), None) => true,
            _ => false,
        }
    }
}

const ABS: &str = "lim n. case x < 2 ^ (-n - 1) => -x | -(2 ^ (-n - 1)) < x => x end";

macro_rules! case {
    ($rule:expr, $form:expr, $src:expr, $expected:expr) => {
        Case {
            rule: $rule,
            form: $form,
            src: $src,
            expected: $expected,
        }
    };
}

pub fn cases() -> Vec<Case> {
    use Form::*;
    vec![
        case!("Ty-Rw-Ro", Ro(&[]), "var x := 1 in (x := 2 ; x)", Some(Z)),
        case!("Ty-Rw-Ro", Ro(&[("x", Z)]), "x := 2", None),
        case!("Ty-Ro-Rw", Rw(&[("x", Z)], &[("y", Z)]), "x + y", Some(Z)),
        case!("Ty-Ro-Rw", Rw(&[("x", Z)], &[]), "x + true", None),
        case!("Ty-Var", Ro(&[("x", R)]), "x", Some(R)),
        case!("Ty-Var", Ro(&[("x", R)]), "y", None),
        case!("Ty-Var", Ro(&[("x", R), ("x", Z)]), "x", Some(Z)),
        case!("Ty-False", Ro(&[]), "false", Some(B)),
        case!("Ty-False", Ro(&[]), "false + 1", None),
        case!("Ty-True", Ro(&[]), "true", Some(B)),
        case!("Ty-True", Ro(&[]), "true < false", None),
        case!("Ty-Int", Ro(&[]), "42", Some(Z)),
        case!("Ty-Int", Ro(&[]), "42 < real(1)", None),
        case!("Ty-Skip", Ro(&[]), "skip", Some(U)),
        case!("Ty-Skip", Ro(&[]), "skip + 1", None),
        case!("Ty-Coerce", Ro(&[]), "real(3)", Some(R)),
        case!("Ty-Coerce", Ro(&[]), "real(real(3))", None),
        case!("Ty-Exp", Ro(&[("k", Z)]), "2 ^ (-k)", Some(R)),
        case!("Ty-Exp", Ro(&[]), "2 ^ real(1)", None),
        case!("Ty-Int-Op", Ro(&[]), "1 + 2 * 3 - 4", Some(Z)),
        case!("Ty-Int-Op", Ro(&[]), "1 + real(2)", None),
        case!("Ty-Int-Op", Program, "do real(1) + 2", None),
        case!("Ty-Real-Op", Ro(&[]), "real(1) - inv(real(2)) * 2 ^ 3", Some(R)),
        case!("Ty-Real-Op", Ro(&[]), "real(1) * true", None),
        case!("Ty-Recip", Ro(&[]), "inv(real(2))", Some(R)),
        case!("Ty-Recip", Ro(&[]), "inv(2)", None),
        case!("Ty-Int-Lt", Ro(&[]), "1 < 2", Some(B)),
        case!("Ty-Int-Lt", Ro(&[]), "1 < true", None),
        case!("Ty-Int-Eq", Ro(&[]), "1 = 2", Some(B)),
        case!("Ty-Int-Eq", Ro(&[]), "real(1) = real(1)", None),
        case!("Ty-Real-Lt", Ro(&[]), "real(1) < 2 ^ 1", Some(B)),
        case!("Ty-Real-Lt", Ro(&[]), "real(1) < 1", None),
        case!("Ty-Lim", Ro(&[("x", R)]), ABS, Some(R)),
        case!("Ty-Lim", Ro(&[]), "lim n. n", None),
        case!("Ty-Lim", Ro(&[]), "lim n. var y := real(0) in (y := 2 ^ (-n) ; y)", Some(R)),
        case!("Ty-Lim", Ro(&[("x", R)]), "lim n. (x := real(1) ; x)", None),
        case!("Ty-Lim", Rw(&[], &[("x", R)]), "lim n. (x := real(1) ; x)", None),
        case!("Ty-Lim", Ro(&[]), "lim n. (n := n + 1 ; real(n))", None),
        case!("Ty-Sequence", Rw(&[], &[("x", Z)]), "x := 1 ; x", Some(Z)),
        case!("Ty-Sequence", Ro(&[]), "1 ; 2", None),
        case!("Ty-New-Var", Ro(&[]), "var x := real(1) in x", Some(R)),
        case!("Ty-New-Var", Rw(&[], &[("y", Z)]), "var x := (y := 1 ; 2) in x", None),
        case!("Ty-New-Var", Ro(&[]), "var x := 1 in (x := true)", None),
        case!("Ty-Assign", Rw(&[], &[("x", Z)]), "x := 1", Some(U)),
        case!("Ty-Assign", Rw(&[("x", Z)], &[]), "x := 1", None),
        case!("Ty-Assign", Rw(&[], &[("x", Z)]), "x := true", None),
        case!("Ty-Cond", Rw(&[], &[("x", Z)]), "if x < 0 then x := 0 else skip end", Some(U)),
        case!("Ty-Cond", Rw(&[], &[("x", Z)]), "if (x := 1 ; true) then skip else skip end", None),
        case!("Ty-Cond", Ro(&[]), "if true then 1 else skip end", None),
        case!("Ty-Case", Rw(&[], &[("x", Z)]), "case x < 1 => x := 1 | 0 < x => skip end", Some(U)),
        case!("Ty-Case", Rw(&[], &[("x", Z)]), "case (x := 1 ; true) => skip end", None),
        case!("Ty-Case", Ro(&[]), "case true => 1 | false => real(1) end", None),
        case!("Ty-While", Rw(&[], &[("x", Z)]), "while x < 3 do x := x + 1 end", Some(U)),
        case!("Ty-While", Ro(&[]), "while true do 1 end", None),
        case!("Ty-While", Rw(&[], &[("x", Z)]), "while (x := 1 ; true) do skip end", None),
        case!("Ty-While", Ro(&[]), "while 1 do skip end", None),
        case!("Ty-Ro-Call", Program, "let f(x : real) : real := x * x\ndo f(real(2))", Some(R)),
        case!("Ty-Ro-Call", Program, "let f(x : real) : real := x * x\ndo f(2)", None),
        case!("Ty-Ro-Call", Program, "let f(x : real) : real := x * x\ndo f(real(1), real(2))", None),
        case!("Ty-Ro-Call", Program, "do g(1)", None),
        case!("Env-Empty", Program, "do 1 + 2", Some(Z)),
        case!("Env-Empty", Program, "do x := 1", None),
        case!(
            "Env-Extend",
            Program,
            "let abs(x : real) : real :=\n  lim n. case x < 2 ^ (-n - 1) => -x | -(2 ^ (-n - 1)) < x => x end\n\
             let twice(x : real) : real := abs(x) + abs(x)\ndo twice(real(-3))",
            Some(R)
        ),
        case!("Env-Extend", Program, "let f(x : int) : int := f(x)\ndo f(1)", None),
        case!("Env-Extend", Program, "let f(x : int) : int := g(x)\nlet g(x : int) : int := x\ndo f(1)", None),
        case!("Env-Extend", Program, "let f(x : int) : int := x\nlet f(x : int) : int := x\ndo f(1)", None),
        case!("Env-Extend", Program, "let f(x : int) : real := x\ndo f(1)", None),
        case!("Env-Extend", Program, "let f(x : int) : unit := x := 1\ndo f(1)", None),
    ]
}
