//! The bundled example programs and an empirical checker for the properties
//! they are expected to satisfy.

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{eval_program, run_with_restarts, EvalConfig, Outcome, Value, DEFAULT_PRECISION_CAP};
use crate::oracle::{denote_program, pd_leq, FragValue, PowerSet};
use crate::parser::{parse_expr, parse_program};
use crate::syntax::Program;
use crate::typecheck::{elaborate, TypedProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    /// Lies in the exact fragment and can be checked against the oracle.
    Fragment,
    /// Uses limits; checked against exact reference values.
    Real,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub file_name: &'static str,
    pub source: &'static str,
    pub kind: EntryKind,
    /// Human-readable statement of the checked property.
    pub property: &'static str,
}

impl CorpusEntry {
    pub fn program(&self) -> Program {
        parse_program(self.source).unwrap_or_else(|e| panic!("corpus entry {} does not parse: {e}", self.name))
    }

    pub fn typed(&self) -> TypedProgram {
        elaborate(&self.program()).unwrap_or_else(|e| panic!("corpus entry {} does not typecheck: {e}", self.name))
    }

    /// The program with its main expression replaced.
    pub fn with_main(&self, main: &str) -> TypedProgram {
        let mut p = self.program();
        p.main = parse_expr(main).unwrap_or_else(|e| panic!("bad wrapper `{main}`: {e}"));
        elaborate(&p).unwrap_or_else(|e| panic!("wrapper `{main}` for {} does not typecheck: {e}", self.name))
    }

    /// The program with the bodies of the named functions replaced.
    pub fn with_bodies(&self, bodies: &[(&str, &str)]) -> TypedProgram {
        let mut p = self.program();
        for (name, body) in bodies {
            let f = p
                .env
                .functions
                .iter_mut()
                .find(|f| f.name == *name)
                .unwrap_or_else(|| panic!("{} has no function `{name}`", self.name));
            f.body = parse_expr(body).unwrap_or_else(|e| panic!("bad body `{body}`: {e}"));
        }
        elaborate(&p).unwrap_or_else(|e| panic!("substituted {} does not typecheck: {e}", self.name))
    }
}

macro_rules! entry {
    ($name:literal, $kind:expr, $property:literal) => {
        CorpusEntry {
            name: $name,
            file_name: concat!($name, ".cl"),
            source: include_str!(concat!("../../../corpus/", $name, ".cl")),
            kind: $kind,
            property: $property,
        }
    };
}

pub fn load_corpus() -> Vec<CorpusEntry> {
    use EntryKind::*;
    vec![
        entry!("abs", Real, "|abs(x) - |x|| < 10^-d for rational x in [-10, 10]"),
        entry!("sin", Real, "|sin(x) - S(j, x)| + |t(j+1, x)| < 10^-d for rational x in (3, 4)"),
        entry!("pi", Real, "the first d decimals of pi"),
        entry!("soft_cmp", Fragment, "true below the band y - 2^-n, false above y + 2^-n, either inside"),
        entry!("binary_choice", Fragment, "results lie in {0, 1}"),
        entry!("amb", Fragment, "ambiguous choice removes divergence unless both operands diverge"),
        entry!("neg", Fragment, "negation table"),
        entry!("strict_or", Fragment, "strict disjunction table"),
        entry!("parallel_or", Fragment, "Kleene three-valued disjunction table"),
        entry!("nonmono_diverge", Fragment, "denotes {()}"),
        entry!("nonmono_true", Fragment, "denotes {(), ⊥}"),
    ]
}

pub fn find_entry(name: &str) -> Option<CorpusEntry> {
    load_corpus().into_iter().find(|e| e.name == name)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub input: String,
    pub output: String,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub entry: String,
    pub samples: usize,
    pub failures: Vec<Failure>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} samples", self.entry, self.samples)?;
        if !self.passed() {
            write!(f, ", {} failures", self.failures.len())?;
        }
        write!(f, ")")?;
        for fail in &self.failures {
            write!(f, "\n  input {}: got {}, expected {}", fail.input, fail.output, fail.expected)?;
        }
        Ok(())
    }
}

/// Writes one tab-separated line per report: name, pass/fail, samples.
pub fn write_summary(reports: &[PropertyReport], path: &Path) -> std::io::Result<()> {
    let mut out = std::fs::File::create(path)?;
    for r in reports {
        let status = if r.passed() { "pass" } else { "fail" };
        writeln!(out, "{}\t{status}\t{}", r.entry, r.samples)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub trials: usize,
    pub digits: u32,
    pub seed: u64,
    /// Loop fuel used where an operand is meant to diverge.
    pub fuel: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            trials: 100,
            digits: 12,
            seed: 0,
            fuel: 32,
        }
    }
}

pub fn check_entry(entry: &CorpusEntry, trials: usize, digits: u32) -> PropertyReport {
    check_entry_with(
        entry,
        &CheckConfig {
            trials,
            digits,
            ..CheckConfig::default()
        },
    )
}

pub fn check_entry_with(entry: &CorpusEntry, cfg: &CheckConfig) -> PropertyReport {
    let mut report = PropertyReport {
        entry: entry.name.to_string(),
        samples: 0,
        failures: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match entry.name {
        "abs" => check_abs(entry, cfg, &mut rng, &mut report),
        "sin" => check_sin(entry, cfg, &mut rng, &mut report),
        "pi" => check_pi(entry, cfg, &mut report),
        "soft_cmp" => check_soft_cmp(entry, cfg, &mut report),
        "binary_choice" => check_binary_choice(entry, cfg, &mut report),
        "amb" => check_amb(entry, cfg, &mut report),
        "neg" | "strict_or" | "parallel_or" => check_boolean_table(entry, cfg, &mut report),
        "nonmono_diverge" | "nonmono_true" => check_nonmono(entry, cfg, &mut report),
        other => report.failures.push(Failure {
            input: other.to_string(),
            output: "no checker".to_string(),
            expected: "a known corpus entry".to_string(),
        }),
    }
    report
}

/// `real(a) * inv(real(b))` for the rational `a / b`.
pub fn rational_literal(q: &BigRational) -> String {
    if q.denom().is_one() {
        format!("real({})", q.numer())
    } else {
        format!("real({}) * inv(real({}))", q.numer(), q.denom())
    }
}

/// Parses decimal output such as `-1.250` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mantissa: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    let q = BigRational::new(mantissa, scale);
    Some(if neg { -q } else { q })
}

fn ten_pow_neg(d: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(d))
}

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> BigRational {
    let den: i64 = rng.gen_range(1..=997);
    let num: i64 = rng.gen_range(lo * den..=hi * den);
    BigRational::new(num.into(), den.into())
}

/// Runs a real-valued program and returns its decimal output as a rational.
fn run_real(program: &TypedProgram, digits: u32, cfg: &EvalConfig) -> Result<(String, BigRational), String> {
    match run_with_restarts(program, digits, cfg, DEFAULT_PRECISION_CAP) {
        Ok(r) => match parse_decimal(&r.text) {
            Some(q) => Ok((r.text, q)),
            None => Err(format!("non-decimal output {}", r.text)),
        },
        Err(d) => Err(d.to_string()),
    }
}

fn check_abs(entry: &CorpusEntry, cfg: &CheckConfig, rng: &mut ChaCha8Rng, report: &mut PropertyReport) {
    let bound = ten_pow_neg(cfg.digits);
    for _ in 0..cfg.trials {
        let x = random_rational(rng, -10, 10);
        let program = entry.with_main(&format!("abs({})", rational_literal(&x)));
        report.samples += 1;
        match run_real(&program, cfg.digits + 1, &EvalConfig::default()) {
            Ok((_, y)) if (&y - x.abs()).abs() < bound => {}
            Ok((text, _)) => report.failures.push(Failure {
                input: x.to_string(),
                output: text,
                expected: format!("{} within 10^-{}", x.abs(), cfg.digits),
            }),
            Err(e) => report.failures.push(Failure {
                input: x.to_string(),
                output: e,
                expected: x.abs().to_string(),
            }),
        }
    }
}

fn check_sin(entry: &CorpusEntry, cfg: &CheckConfig, rng: &mut ChaCha8Rng, report: &mut PropertyReport) {
    let bound = ten_pow_neg(cfg.digits);
    let tail = ten_pow_neg(cfg.digits + 8);
    for _ in 0..cfg.trials {
        let mut x = random_rational(rng, 3, 4);
        while x == BigRational::from_integer(3.into()) || x == BigRational::from_integer(4.into()) {
            x = random_rational(rng, 3, 4);
        }
        let program = entry.with_main(&format!("sin({})", rational_literal(&x)));
        report.samples += 1;
        let (s, t) = reference::sin_partial_sum(&x, &tail);
        match run_real(&program, cfg.digits + 1, &EvalConfig::default()) {
            Ok((_, y)) if (&y - &s).abs() + t.abs() < bound => {}
            Ok((text, _)) => report.failures.push(Failure {
                input: x.to_string(),
                output: text,
                expected: format!("partial sum within 10^-{}", cfg.digits),
            }),
            Err(e) => report.failures.push(Failure {
                input: x.to_string(),
                output: e,
                expected: "a decimal value".to_string(),
            }),
        }
    }
}

fn check_pi(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    report.samples += 1;
    let expected = reference::pi_digits(cfg.digits);
    let output = match run_with_restarts(&entry.typed(), cfg.digits, &EvalConfig::default(), DEFAULT_PRECISION_CAP) {
        Ok(r) => r.text,
        Err(d) => d.to_string(),
    };
    if output != expected {
        report.failures.push(Failure {
            input: format!("digits {}", cfg.digits),
            output,
            expected,
        });
    }
}

/// Values a boolean outcome may take in the evaluator, as oracle values.
fn outcome_value(o: &Outcome) -> Result<FragValue, String> {
    match o {
        Outcome::Done(Value::Bool(b)) => Ok(FragValue::Bool(*b)),
        Outcome::Done(Value::Int(k)) => Ok(FragValue::Int(k.clone())),
        Outcome::Done(Value::Unit) => Ok(FragValue::Unit),
        other => Err(format!("{other:?}")),
    }
}

fn bools(values: &[bool], bottom: bool) -> PowerSet<FragValue> {
    PowerSet::new(values.iter().map(|&b| FragValue::Bool(b)).collect(), bottom)
}

fn check_soft_cmp(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    // x = y + k / 1024 on a grid straddling the band y ± 2^-3 = y ± 128/1024.
    let y = BigRational::from_integer(1.into());
    let half = (cfg.trials / 2) as i64;
    for k in -half..(cfg.trials as i64 - half) {
        let x = &y + BigRational::new(k.into(), 1024.into());
        let main = format!("soft_cmp({}, {}, 3)", rational_literal(&x), rational_literal(&y));
        let program = entry.with_main(&main);
        report.samples += 1;
        let expected = if k <= -128 {
            bools(&[true], false)
        } else if k >= 128 {
            bools(&[false], false)
        } else {
            bools(&[false, true], false)
        };
        let denotation = denote_program(&program, cfg.fuel);
        if denotation.as_ref() != Ok(&expected) {
            report.failures.push(Failure {
                input: format!("x = {x} (oracle)"),
                output: format!("{denotation:?}"),
                expected: expected.to_string(),
            });
            continue;
        }
        let eval_cfg = EvalConfig {
            scheduler_seed: Some(cfg.seed.wrapping_add(k as u64)),
            ..EvalConfig::default()
        };
        let out = run_with_restarts(&program, 1, &eval_cfg, DEFAULT_PRECISION_CAP)
            .map(|r| r.value)
            .map_err(|d| d.to_string());
        let ok = match &out {
            Ok(Value::Bool(b)) => expected.contains(&FragValue::Bool(*b)),
            _ => false,
        };
        if !ok {
            report.failures.push(Failure {
                input: format!("x = {x}"),
                output: format!("{out:?}"),
                expected: expected.to_string(),
            });
        }
    }
}

fn check_binary_choice(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    let program = entry.typed();
    let expected = PowerSet::new([FragValue::Int(0.into()), FragValue::Int(1.into())].into(), false);
    let denotation = denote_program(&program, cfg.fuel);
    report.samples += 1;
    if denotation.as_ref() != Ok(&expected) {
        report.failures.push(Failure {
            input: "oracle".to_string(),
            output: format!("{denotation:?}"),
            expected: expected.to_string(),
        });
    }
    for seed in 0..cfg.trials as u64 {
        report.samples += 1;
        let eval_cfg = EvalConfig {
            scheduler_seed: Some(cfg.seed.wrapping_add(seed)),
            ..EvalConfig::default()
        };
        let out = outcome_value(&eval_program(&eval_cfg, &program));
        if !matches!(&out, Ok(v) if expected.contains(v)) {
            report.failures.push(Failure {
                input: format!("seed {seed}"),
                output: format!("{out:?}"),
                expected: expected.to_string(),
            });
        }
    }
}

const DIVERGE_INT: &str = "(while true do skip end ; 0)";
const DIVERGE_BOOL: &str = "(while true do skip end ; true)";

/// Compares oracle and evaluator on one substituted program. The oracle
/// set must equal `expected`; the evaluator must return a member of it, or
/// exhaust its fuel when ⊥ is the only possibility.
fn check_against(
    program: &TypedProgram,
    input: String,
    expected: &PowerSet<FragValue>,
    cfg: &CheckConfig,
    report: &mut PropertyReport,
) {
    report.samples += 1;
    let denotation = denote_program(program, cfg.fuel);
    if denotation.as_ref() != Ok(expected) {
        report.failures.push(Failure {
            input: format!("{input} (oracle)"),
            output: match denotation {
                Ok(d) => d.to_string(),
                Err(e) => e.to_string(),
            },
            expected: expected.to_string(),
        });
        return;
    }
    let eval_cfg = EvalConfig {
        fuel: Some(cfg.fuel),
        ..EvalConfig::default()
    };
    let outcome = eval_program(&eval_cfg, program);
    let ok = match &outcome {
        Outcome::FuelExhausted | Outcome::Deadlock => expected.has_bottom(),
        o => matches!(outcome_value(o), Ok(v) if expected.contains(&v)),
    };
    if !ok {
        report.failures.push(Failure {
            input,
            output: format!("{outcome:?}"),
            expected: expected.to_string(),
        });
    }
}

fn check_amb(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    // Operands: divergent, 0, 1. The expected set is the strict union with ⊥
    // removed unless both operands diverge.
    let operands: [(&str, Option<i64>); 3] = [(DIVERGE_INT, None), ("0", Some(0)), ("1", Some(1))];
    for (b1, v1) in operands {
        for (b2, v2) in operands {
            let program = entry.with_bodies(&[("e1", b1), ("e2", b2)]);
            let values = [v1, v2].into_iter().flatten().map(|k| FragValue::Int(k.into())).collect();
            let expected = PowerSet::new(values, v1.is_none() && v2.is_none());
            check_against(&program, format!("e1 = {b1}, e2 = {b2}"), &expected, cfg, report);
        }
    }
}

fn check_boolean_table(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    // None stands for a diverging operand.
    let operands: [(&str, Option<bool>); 3] = [("true", Some(true)), ("false", Some(false)), (DIVERGE_BOOL, None)];
    let expect = |v: Option<bool>| match v {
        Some(b) => bools(&[b], false),
        None => PowerSet::bottom(),
    };
    if entry.name == "neg" {
        for (b, v) in operands {
            let program = entry.with_bodies(&[("b", b)]);
            check_against(&program, format!("b = {b}"), &expect(v.map(|b| !b)), cfg, report);
        }
        return;
    }
    for (b1, v1) in operands {
        for (b2, v2) in operands {
            let result = match entry.name {
                "strict_or" => match (v1, v2) {
                    (Some(x), Some(y)) => Some(x || y),
                    _ => None,
                },
                _ => match (v1, v2) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                },
            };
            let program = entry.with_bodies(&[("b1", b1), ("b2", b2)]);
            check_against(&program, format!("b1 = {b1}, b2 = {b2}"), &expect(result), cfg, report);
        }
    }
}

fn check_nonmono(entry: &CorpusEntry, cfg: &CheckConfig, report: &mut PropertyReport) {
    let program = entry.typed();
    let unit = PowerSet::new([FragValue::Unit].into(), false);
    let expected = if entry.name == "nonmono_diverge" {
        unit.clone()
    } else {
        PowerSet::new([FragValue::Unit].into(), true)
    };
    check_against(&program, entry.name.to_string(), &expected, cfg, report);
    if entry.name == "nonmono_true" && pd_leq(&unit, &expected) {
        report.failures.push(Failure {
            input: "order".to_string(),
            output: format!("{unit} below {expected}"),
            expected: "unordered".to_string(),
        });
    }
}

/// Exact reference values.
pub mod reference {
    use super::*;

    /// `arctan(1/x) · scale`, truncated, by its alternating series.
    fn arctan_inv(x: u32, scale: &BigInt) -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut power = scale / &x;
        let mut sum = BigInt::zero();
        let mut k = 0u32;
        while !power.is_zero() {
            let term = &power / BigInt::from(2 * k + 1);
            if k.is_multiple_of(2) {
                sum += term;
            } else {
                sum -= term;
            }
            power /= &x2;
            k += 1;
        }
        sum
    }

    /// The first `d` decimals of pi, truncated, as `3.1415…`.
    pub fn pi_digits(d: u32) -> String {
        let guard = 10;
        let scale = BigInt::from(10u32).pow(d + guard);
        let pi = BigInt::from(16) * arctan_inv(5, &scale) - BigInt::from(4) * arctan_inv(239, &scale);
        let digits = (pi / BigInt::from(10u32).pow(guard)).to_string();
        format!("{}.{}", &digits[..1], &digits[1..])
    }

    /// Taylor partial sum `S(j, x)` together with the next term `t(j+1, x)`,
    /// for the first `j` with `|t(j+1, x)| < tol`.
    pub fn sin_partial_sum(x: &BigRational, tol: &BigRational) -> (BigRational, BigRational) {
        let x2 = x * x;
        let mut s = x.clone();
        let mut t = -x * &x2 / BigRational::from_integer(6.into());
        let mut j: i64 = 0;
        while t.abs() >= *tol {
            j += 1;
            s += &t;
            let d = BigInt::from((2 * j + 2) * (2 * j + 3));
            t = -t * &x2 / BigRational::from_integer(d);
        }
        (s, t)
    }
}
