//! Random powerdomain elements and checks of the algebraic laws.

use std::collections::BTreeSet;

use clerical::oracle::{pd_bind, pd_leq, pd_strict_union, pd_sup_chain, pd_unit, PowerSet};
use rand::Rng;

pub type P = PowerSet<u8>;

const UNIVERSE: u8 = 6;

pub fn random_set(rng: &mut impl Rng) -> P {
    if rng.gen_bool(0.1) {
        return PowerSet::Error;
    }
    let values: BTreeSet<u8> = (0..UNIVERSE).filter(|_| rng.gen_bool(0.3)).collect();
    PowerSet::new(values, rng.gen_bool(0.4))
}

/// A function `u8 -> P` given by a table.
pub fn random_fn(rng: &mut impl Rng) -> Vec<P> {
    (0..UNIVERSE).map(|_| random_set(rng)).collect()
}

/// An increasing chain: ⊥-containing sets that grow, possibly ending in a
/// ⊥-free set or in the error set, after which the chain is constant.
pub fn random_chain(rng: &mut impl Rng) -> Vec<P> {
    let len = rng.gen_range(1..=6);
    let mut values = BTreeSet::new();
    let mut chain = vec![PowerSet::bottom()];
    while chain.len() < len {
        let last = chain.last().unwrap().clone();
        let next = if !last.has_bottom() {
            last
        } else {
            match rng.gen_range(0..6) {
                0 => PowerSet::Error,
                1 => {
                    values.insert(rng.gen_range(0..UNIVERSE));
                    PowerSet::new(values.clone(), false)
                }
                _ => {
                    values.insert(rng.gen_range(0..UNIVERSE));
                    PowerSet::new(values.clone(), true)
                }
            }
        };
        chain.push(next);
    }
    chain
}

/// Binding is order-independent except when one side is the error set and
/// the other is `{⊥}`: a set with no proper values never runs its
/// continuation, so the error is only observed if it is bound first.
pub fn commutes_by_definition(m: &P, n: &P) -> bool {
    let only_bottom = |x: &P| x.has_bottom() && x.values().next().is_none();
    !((m.is_error() && only_bottom(n)) || (n.is_error() && only_bottom(m)))
}

fn expect(cond: bool, what: &str, detail: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(format!("{what} fails: {}", detail()))
    }
}

/// Checks every law family once on fresh random inputs.
pub fn check_laws(rng: &mut impl Rng) -> Result<(), String> {
    let (m, n, k) = (random_set(rng), random_set(rng), random_set(rng));
    let (f, g) = (random_fn(rng), random_fn(rng));
    let a = rng.gen_range(0..UNIVERSE);
    let fa = |x: &u8| f[*x as usize].clone();
    let ga = |x: &u8| g[*x as usize].clone();

    expect(pd_bind(&pd_unit(a), fa) == fa(&a), "left unit", || format!("{a}"))?;
    expect(pd_bind(&m, |x| pd_unit(*x)) == m, "right unit", || format!("{m}"))?;
    let lhs = pd_bind(&pd_bind(&m, fa), ga);
    let rhs = pd_bind(&m, |x| pd_bind(&fa(x), ga));
    expect(lhs == rhs, "associativity", || format!("{m}: {lhs} vs {rhs}"))?;

    let mn = pd_bind(&m, |x| pd_bind(&n, |y| pd_unit((*x, *y))));
    let nm = pd_bind(&n, |y| pd_bind(&m, |x| pd_unit((*x, *y))));
    if commutes_by_definition(&m, &n) {
        expect(mn == nm, "commutativity", || format!("{m}, {n}"))?;
    } else {
        expect(mn.is_error() != nm.is_error(), "order-sensitive pair", || format!("{m}, {n}"))?;
    }

    let u = |x: &P, y: &P| pd_strict_union(x, y);
    expect(u(&m, &n) == u(&n, &m), "union commutativity", || format!("{m}, {n}"))?;
    expect(u(&u(&m, &n), &k) == u(&m, &u(&n, &k)), "union associativity", || format!("{m}, {n}, {k}"))?;
    expect(u(&m, &m) == m, "union idempotence", || format!("{m}"))?;
    expect(u(&m, &PowerSet::Error).is_error(), "union strictness", || format!("{m}"))?;
    let dist = pd_bind(&u(&m, &n), fa) == u(&pd_bind(&m, fa), &pd_bind(&n, fa));
    expect(dist, "bind distributes over union", || format!("{m}, {n}"))?;

    expect(pd_leq(&m, &m), "reflexivity", || format!("{m}"))?;
    if pd_leq(&m, &n) && pd_leq(&n, &m) {
        expect(m == n, "antisymmetry", || format!("{m}, {n}"))?;
    }
    if pd_leq(&m, &n) && pd_leq(&n, &k) {
        expect(pd_leq(&m, &k), "transitivity", || format!("{m}, {n}, {k}"))?;
    }
    expect(pd_leq(&PowerSet::bottom(), &m), "least element", || format!("{m}"))?;
    if !m.has_bottom() {
        expect(!pd_leq(&m, &n) || m == n, "⊥-free sets are maximal", || format!("{m}, {n}"))?;
    }
    if pd_leq(&m, &n) {
        let (bm, bn) = (pd_bind(&m, fa), pd_bind(&n, fa));
        expect(pd_leq(&bm, &bn), "bind is monotone", || format!("{m} ≤ {n}"))?;
    }

    let chain = random_chain(rng);
    let sup = pd_sup_chain(&chain).map_err(|e| format!("chain rejected: {e}"))?;
    for x in &chain {
        expect(pd_leq(x, &sup), "supremum is an upper bound", || format!("{x} vs {sup}"))?;
    }
    if chain.iter().all(|x| pd_leq(x, &k)) {
        expect(pd_leq(&sup, &k), "supremum is least", || format!("{sup} vs {k}"))?;
    }
    if !pd_leq(&m, &n) {
        expect(pd_sup_chain(&[m.clone(), n.clone()]).is_err(), "non-chains rejected", || format!("{m}, {n}"))?;
    }
    Ok(())
}
