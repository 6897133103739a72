//! Randomized soundness checks of interval operations against exact
//! rational arithmetic.

use clerical::numerics::{
    iv_add, iv_compare, iv_mul, iv_pow2, iv_recip, iv_sub, iv_widen, to_decimal, Comparison, Dyadic, Interval,
    Precision,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

pub fn dyadic(rng: &mut impl Rng) -> Dyadic {
    let bits = rng.gen_range(1..=90);
    let mut m = BigInt::from(rng.gen::<u64>() >> (64 - bits.min(64)));
    if bits > 64 {
        m = (m << (bits - 64)) + BigInt::from(rng.gen::<u32>());
    }
    if rng.gen() {
        m = -m;
    }
    Dyadic::new(m, rng.gen_range(-80..=40))
}

/// A random interval together with a random rational point inside it.
pub fn interval_with_point(rng: &mut impl Rng) -> (Interval, BigRational) {
    let a = dyadic(rng);
    let iv = if rng.gen_bool(0.3) {
        Interval::point(a)
    } else {
        let b = dyadic(rng);
        if a <= b {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    };
    let lo = iv.lo().to_rational();
    let hi = iv.hi().to_rational();
    let k: u32 = rng.gen_range(0..=1000);
    let t = BigRational::new(k.into(), 1000.into());
    let x = &lo + (&hi - &lo) * t;
    (iv, x)
}

pub fn precision(rng: &mut impl Rng) -> Precision {
    Precision::new(rng.gen_range(2..=120))
}

/// Runs one randomly chosen operation and checks that the exact result is
/// enclosed.
pub fn check_random_op(rng: &mut impl Rng) -> Result<(), String> {
    let (a, x) = interval_with_point(rng);
    let (b, y) = interval_with_point(rng);
    let p = precision(rng);
    let fail = |what: &str, out: &dyn std::fmt::Display, exact: &BigRational| {
        Err(format!("{what}: {out} misses {exact} (a = {a}, b = {b}, {p})"))
    };
    match rng.gen_range(0..8) {
        0 => {
            let r = iv_add(&a, &b, p);
            let e = &x + &y;
            if !r.contains(&e) {
                return fail("add", &r, &e);
            }
        }
        1 => {
            let r = iv_sub(&a, &b, p);
            let e = &x - &y;
            if !r.contains(&e) {
                return fail("sub", &r, &e);
            }
        }
        2 => {
            let r = iv_mul(&a, &b, p);
            let e = &x * &y;
            if !r.contains(&e) {
                return fail("mul", &r, &e);
            }
        }
        3 => match iv_recip(&a, p) {
            Ok(r) => {
                if x.is_zero() {
                    return Err(format!("recip of {a} succeeded although it contains 0"));
                }
                let e = x.recip();
                if !r.contains(&e) {
                    return fail("recip", &r, &e);
                }
            }
            Err(_) => {
                if !a.contains_zero() {
                    return Err(format!("recip of {a} refused although it excludes 0"));
                }
            }
        },
        4 => {
            let n: i64 = rng.gen_range(-200..=200);
            let r = iv_pow2(&BigInt::from(n), p).map_err(|e| e.to_string())?;
            let e = if n >= 0 {
                BigRational::from_integer(BigInt::from(1) << n as usize)
            } else {
                BigRational::new(1.into(), BigInt::from(1) << (-n) as usize)
            };
            if r.lo() != r.hi() || !r.contains(&e) {
                return fail("pow2", &r, &e);
            }
        }
        5 => {
            let r = a.neg();
            let e = -&x;
            if !r.contains(&e) {
                return fail("neg", &r, &e);
            }
        }
        6 => {
            let ok = match iv_compare(&a, &b) {
                Comparison::Lt => x < y,
                Comparison::Gt => x > y,
                Comparison::Inconclusive => a.overlaps(&b),
            };
            if !ok {
                return Err(format!("compare {a} with {b} contradicts {x} vs {y}"));
            }
        }
        _ => {
            let eps = dyadic(rng).abs();
            let r = iv_widen(&a, &eps);
            let e = &x + eps.to_rational();
            if !r.contains(&e) || !r.contains(&(&x - eps.to_rational())) {
                return fail("widen", &r, &e);
            }
            let d: u32 = rng.gen_range(1..=8);
            if let Ok(text) = to_decimal(&a, d) {
                let v = parse_fixed(&text);
                let bound = BigRational::new(1.into(), BigInt::from(10).pow(d));
                if (&v - &x).abs() >= bound {
                    return Err(format!("to_decimal({a}, {d}) = {text} is not within 10^-{d} of {x}"));
                }
            }
        }
    }
    Ok(())
}

pub fn parse_fixed(text: &str) -> BigRational {
    clerical::corpus::parse_decimal(text).expect("decimal output")
}
