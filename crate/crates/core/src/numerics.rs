//! Dyadic numbers `m · 2^e` with directed rounding, and closed intervals
//! over them with outward-rounded arithmetic.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest accepted magnitude for a `2 ^ n` exponent.
pub const MAX_POW2_EXPONENT: i64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundDir {
    Down,
    Up,
}

/// Working precision in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u64);

impl Precision {
    /// Panics when `bits < 2`.
    pub fn new(bits: u64) -> Self {
        assert!(bits >= 2, "precision must be at least 2 bits, got {bits}");
        Precision(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

fn exp_add(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect("dyadic exponent out of range")
}

fn exp_sub(a: i64, b: i64) -> i64 {
    a.checked_sub(b).expect("dyadic exponent out of range")
}

fn as_i64(x: u64) -> i64 {
    i64::try_from(x).expect("dyadic exponent out of range")
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Dyadic::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            return Dyadic { mantissa, exponent };
        }
        Dyadic {
            mantissa: mantissa >> tz,
            exponent: exp_add(exponent, as_i64(tz)),
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic::pow2(0)
    }

    pub fn from_int(k: impl Into<BigInt>) -> Self {
        Dyadic::new(k.into(), 0)
    }

    pub fn pow2(e: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: e,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn signum(&self) -> Sign {
        self.mantissa.sign()
    }

    /// Exponent of the leading bit: `2^top ≤ |x| < 2^(top+1)`.
    fn top(&self) -> i64 {
        exp_add(self.exponent, as_i64(self.mantissa.bits()) - 1)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << (self.exponent as u64))
        } else {
            BigRational::new(self.mantissa.clone(), BigInt::one() << self.exponent.unsigned_abs())
        }
    }

    /// Approximate `f64` value, for diagnostics only.
    pub fn to_f64_lossy(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn mul(&self, other: &Dyadic) -> Self {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: exp_add(self.exponent, other.exponent),
        }
    }

    /// Exact sum.
    pub fn add(&self, other: &Dyadic) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (lo, hi) = if self.exponent <= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let shift = exp_sub(hi.exponent, lo.exponent) as u64;
        Dyadic::new(&lo.mantissa + (&hi.mantissa << shift), lo.exponent)
    }

    pub fn sub(&self, other: &Dyadic) -> Self {
        self.add(&other.neg())
    }

    /// Sum rounded in direction `dir` to `p` bits. Equal to
    /// `round_dir(self + other, p, dir)` but avoids materializing huge
    /// intermediate mantissas when the exponents are far apart.
    pub fn add_round(&self, other: &Dyadic, p: Precision, dir: RoundDir) -> Self {
        if self.is_zero() || other.is_zero() {
            return round_dir(&self.add(other), p, dir);
        }
        let (big, small) = if self.top() >= other.top() {
            (self, other)
        } else {
            (other, self)
        };
        // Any perturbation below both the p-bit ulp of `big` and its own
        // lowest bit rounds the same way, so `small` can be replaced by a
        // tiny stand-in of the same sign.
        let t = (big.top() - as_i64(p.bits())).min(big.exponent) - 2;
        if small.top() < t {
            let stand_in = Dyadic {
                mantissa: BigInt::from_biguint(small.mantissa.sign(), 1u32.into()),
                exponent: t,
            };
            return round_dir(&big.add(&stand_in), p, dir);
        }
        round_dir(&big.add(small), p, dir)
    }

    /// `1 / self` rounded in direction `dir` to `p` bits. Panics on zero.
    pub fn recip_round(&self, p: Precision, dir: RoundDir) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        // 1/(m 2^e) = (2^s / m) 2^(-s-e), with enough quotient bits.
        let s = p.bits() + self.mantissa.bits() + 1;
        let num = BigInt::one() << s;
        let q = match dir {
            RoundDir::Down => num.div_floor(&self.mantissa),
            RoundDir::Up => -((-num).div_floor(&self.mantissa)),
        };
        let e = exp_sub(-as_i64(s), self.exponent);
        round_dir(&Dyadic::new(q, e), p, dir)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb || sa == Sign::NoSign {
            return sa.cmp(&sb);
        }
        let mag = match self.top().cmp(&other.top()) {
            Ordering::Equal => {
                let e = self.exponent.min(other.exponent);
                let a = self.mantissa.abs() << ((self.exponent - e) as u64);
                let b = other.mantissa.abs() << ((other.exponent - e) as u64);
                a.cmp(&b)
            }
            o => o,
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}*2^{}", self.mantissa, self.exponent)
        }
    }
}

/// Rounds `x` to a mantissa of at most `p` bits, downwards or upwards.
pub fn round_dir(x: &Dyadic, p: Precision, dir: RoundDir) -> Dyadic {
    let bits = x.mantissa.bits();
    if bits <= p.bits() {
        return x.clone();
    }
    let shift = bits - p.bits();
    let m = match dir {
        // `>>` on BigInt rounds towards negative infinity.
        RoundDir::Down => &x.mantissa >> shift,
        RoundDir::Up => -((-&x.mantissa) >> shift),
    };
    Dyadic::new(m, exp_add(x.exponent, as_i64(shift)))
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Gt,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("interval contains zero; reciprocal is inconclusive at this precision")]
pub struct Inconclusive;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("interval too wide for the requested number of digits")]
pub struct NotTightEnough;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("exponent {0} of `2 ^` is outside the supported range")]
pub struct ExponentRange(pub BigInt);

impl Interval {
    /// Panics when `lo > hi`.
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_int(k: impl Into<BigInt>) -> Self {
        Interval::point(Dyadic::from_int(k))
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo.to_rational() <= x && x <= &self.hi.to_rational()
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.signum() != Sign::Plus && self.hi.signum() != Sign::Minus
    }

    /// Whether the two closed intervals share a point.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn iv_add(a: &Interval, b: &Interval, p: Precision) -> Interval {
    Interval {
        lo: a.lo.add_round(&b.lo, p, RoundDir::Down),
        hi: a.hi.add_round(&b.hi, p, RoundDir::Up),
    }
}

pub fn iv_sub(a: &Interval, b: &Interval, p: Precision) -> Interval {
    iv_add(a, &b.neg(), p)
}

pub fn iv_mul(a: &Interval, b: &Interval, p: Precision) -> Interval {
    let products = [
        a.lo.mul(&b.lo),
        a.lo.mul(&b.hi),
        a.hi.mul(&b.lo),
        a.hi.mul(&b.hi),
    ];
    let lo = products.iter().min().expect("four products");
    let hi = products.iter().max().expect("four products");
    Interval {
        lo: round_dir(lo, p, RoundDir::Down),
        hi: round_dir(hi, p, RoundDir::Up),
    }
}

pub fn iv_recip(a: &Interval, p: Precision) -> Result<Interval, Inconclusive> {
    if a.contains_zero() {
        return Err(Inconclusive);
    }
    Ok(Interval {
        lo: a.hi.recip_round(p, RoundDir::Down),
        hi: a.lo.recip_round(p, RoundDir::Up),
    })
}

/// `[2^n, 2^n]`; always exact since the mantissa is 1.
pub fn iv_pow2(n: &BigInt, _p: Precision) -> Result<Interval, ExponentRange> {
    match n.to_i64() {
        Some(e) if e.abs() <= MAX_POW2_EXPONENT => Ok(Interval::point(Dyadic::pow2(e))),
        _ => Err(ExponentRange(n.clone())),
    }
}

pub fn iv_compare(a: &Interval, b: &Interval) -> Comparison {
    if a.hi < b.lo {
        Comparison::Lt
    } else if b.hi < a.lo {
        Comparison::Gt
    } else {
        Comparison::Inconclusive
    }
}

/// `[lo - eps, hi + eps]`, exactly.
pub fn iv_widen(a: &Interval, eps: &Dyadic) -> Interval {
    assert!(eps.signum() != Sign::Minus, "widening by a negative amount");
    Interval {
        lo: a.lo.sub(eps),
        hi: a.hi.add(eps),
    }
}

/// `x · 10^d` as an exact rational.
fn scaled(x: &Dyadic, d: u32) -> BigRational {
    x.to_rational() * BigRational::from_integer(BigInt::from(10u32).pow(d))
}

fn format_fixed(k: &BigInt, d: u32) -> String {
    let mut digits = k.abs().to_string();
    let d = d as usize;
    if digits.len() <= d {
        digits = format!("{}{}", "0".repeat(d + 1 - digits.len()), digits);
    }
    let (int, frac) = digits.split_at(digits.len() - d);
    let sign = if k.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{frac}")
}

/// Decimal rendering of an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decimal {
    pub text: String,
    /// Every point of the interval truncates to `text`; otherwise `text` is
    /// the decimal nearest to the midpoint.
    pub truncated: bool,
}

/// Renders an interval with `d` fractional digits such that every point of
/// the interval is within `10^-d` of the printed value.
///
/// When the whole interval truncates to the same `d`-digit decimal, that
/// truncation is printed; otherwise the decimal nearest to the midpoint is.
pub fn to_decimal(a: &Interval, d: u32) -> Result<String, NotTightEnough> {
    to_decimal_detailed(a, d).map(|r| r.text)
}

pub fn to_decimal_detailed(a: &Interval, d: u32) -> Result<Decimal, NotTightEnough> {
    assert!(d >= 1, "at least one digit is required");
    let lo = scaled(&a.lo, d);
    let hi = scaled(&a.hi, d);
    if &hi - &lo >= BigRational::one() {
        return Err(NotTightEnough);
    }
    let (tlo, thi) = (lo.trunc(), hi.trunc());
    let truncated = tlo == thi
        && (lo.is_zero()
            || hi.is_zero()
            || lo.is_positive() == hi.is_positive()
            || tlo.is_zero());
    let k = if truncated {
        tlo.to_integer()
    } else {
        ((lo + hi) / BigRational::from_integer(BigInt::from(2))).round().to_integer()
    };
    Ok(Decimal {
        text: format_fixed(&k, d),
        truncated,
    })
}
