//! π by a Machin-like formula, independent of the one used by the corpus
//! checker: π = 20 atan(1/7) + 8 atan(3/79).

use num_bigint::BigInt;
use num_traits::Zero;

/// `atan(p/q) · scale`, truncated, with an error of a few units.
fn atan_scaled(p: u32, q: u32, scale: &BigInt) -> BigInt {
    let (p, q) = (BigInt::from(p), BigInt::from(q));
    let (p2, q2) = (&p * &p, &q * &q);
    let mut term = scale * &p / &q;
    let mut sum = BigInt::zero();
    let mut k = 0u32;
    while !term.is_zero() {
        let t = &term / (2 * k + 1);
        if k.is_multiple_of(2) {
            sum += t;
        } else {
            sum -= t;
        }
        term = term * &p2 / &q2;
        k += 1;
    }
    sum
}

/// The first `d` decimals of π, truncated, as `3.1415…`.
pub fn pi_truncated(d: u32) -> String {
    let guard = 20;
    let scale = BigInt::from(10).pow(d + guard);
    let pi: BigInt = atan_scaled(1, 7, &scale) * 20 + atan_scaled(3, 79, &scale) * 8;
    let digits = (pi / BigInt::from(10).pow(guard)).to_string();
    format!("{}.{}", &digits[..1], &digits[1..])
}
