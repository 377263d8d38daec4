//! Congruence algebra over arbitrary-precision naturals.
//!
//! A [`CongruenceClass`] is the set `{ x : x ≡ residue (mod modulus) }`. Two
//! classes merge into one class modulo the lcm of their moduli whenever
//! `gcd(m1, m2)` divides `a1 - a2`; otherwise they are [`Incompatible`].
//! Merging is associative and commutative, with `0 mod 1` as its identity,
//! so a whole system is solved by folding.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `residue mod modulus`, always normalized so that `residue < modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CongruenceClass {
    #[serde(with = "crate::serde_decimal")]
    residue: BigUint,
    #[serde(with = "crate::serde_decimal")]
    modulus: BigUint,
}

impl CongruenceClass {
    /// Builds the class of `residue` modulo `modulus`, reducing the residue.
    pub fn new(residue: impl Into<BigUint>, modulus: impl Into<BigUint>) -> Result<Self> {
        let modulus = modulus.into();
        if modulus.is_zero() {
            return Err(Error::ZeroModulus);
        }
        let residue = residue.into() % &modulus;
        Ok(Self { residue, modulus })
    }

    /// The class of every integer: `0 mod 1`.
    pub fn universe() -> Self {
        Self {
            residue: BigUint::zero(),
            modulus: BigUint::one(),
        }
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn into_parts(self) -> (BigUint, BigUint) {
        (self.residue, self.modulus)
    }

    pub fn contains(&self, x: &BigUint) -> bool {
        x % &self.modulus == self.residue
    }

    /// Reduces the class to a coarser modulus. `modulus` must divide the
    /// class modulus for the result to be meaningful.
    pub fn reduce(&self, modulus: &BigUint) -> Result<Self> {
        Self::new(&self.residue % modulus, modulus.clone())
    }
}

impl fmt::Display for CongruenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

/// Two congruences with no common solution.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{left} and {right} have no common solution")]
pub struct Incompatible {
    pub left: CongruenceClass,
    pub right: CongruenceClass,
}

/// Extended Euclid: returns `(g, x, y)` with `g = gcd(a, b)` and `a·x + b·y = g`.
pub fn ext_gcd(a: &BigUint, b: &BigUint) -> Result<(BigUint, BigInt, BigInt)> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::UndefinedGcd);
    }
    if a.is_one() {
        return Ok((BigUint::one(), BigInt::one(), BigInt::zero()));
    }

    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let (q, rem) = old_r.div_rem(&r);
        old_r = std::mem::replace(&mut r, rem);
        let q = BigInt::from(q);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    Ok((old_r, old_s, old_t))
}

/// Non-negative representative of `x mod m` for a signed `x`.
fn mod_floor(x: &BigInt, m: &BigUint) -> BigUint {
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    x.mod_floor(&m)
        .to_biguint()
        .expect("mod_floor by a positive modulus is non-negative")
}

/// Merges two congruences into one modulo `lcm(m1, m2)`.
pub fn merge(
    c1: &CongruenceClass,
    c2: &CongruenceClass,
) -> std::result::Result<CongruenceClass, Incompatible> {
    if c1.modulus.is_one() {
        return Ok(c2.clone());
    }
    if c2.modulus.is_one() {
        return Ok(c1.clone());
    }

    // Everything below only matters modulo m2 (g divides m2), so reduce the
    // possibly huge first class before running Euclid.
    let m2 = &c2.modulus;
    let (g, x, _) = ext_gcd(&(&c1.modulus % m2), m2).expect("moduli are positive");
    let diff = (&c2.residue + m2 - &c1.residue % m2) % m2;
    if !(&diff % &g).is_zero() {
        return Err(Incompatible {
            left: c1.clone(),
            right: c2.clone(),
        });
    }

    // m1·x ≡ g (mod m2), so t = (diff/g)·x solves m1·t ≡ diff (mod m2/g).
    let step = m2 / &g;
    let t = mod_floor(&(BigInt::from(diff / &g) * x), &step);
    let modulus = &c1.modulus * &step;
    let residue = (&c1.residue + &c1.modulus * t) % &modulus;
    Ok(CongruenceClass { residue, modulus })
}

/// Machine-word merge of `a mod p` and `b mod q` for coprime `p, q` with
/// `p·q < 2^64`. Returns the residue modulo `p·q`, or `None` when the moduli
/// are not coprime or too large.
pub fn merge_coprime_u64(a: u64, p: u64, b: u64, q: u64) -> Option<u64> {
    let modulus = p.checked_mul(q)?;
    let (g, x) = inverse_i128(p as i128 % q as i128, q as i128);
    if g != 1 {
        return None;
    }
    let (a, b) = (a % p, b % q);
    // t = (b - a)·p^-1 mod q, result a + p·t
    let diff = (b as i128 - (a % q) as i128).rem_euclid(q as i128);
    let t = (diff * x.rem_euclid(q as i128)).rem_euclid(q as i128) as u128;
    let value = a as u128 + p as u128 * t;
    debug_assert!(value < modulus as u128);
    Some(value as u64)
}

// (gcd, x) with a·x ≡ gcd (mod m)
fn inverse_i128(a: i128, m: i128) -> (i128, i128) {
    let (mut old_r, mut r) = (a, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r, old_s)
}

/// Left fold of [`merge`] over the system. An empty system yields `0 mod 1`.
pub fn solve_system<'a, I>(classes: I) -> std::result::Result<CongruenceClass, Incompatible>
where
    I: IntoIterator<Item = &'a CongruenceClass>,
{
    classes
        .into_iter()
        .try_fold(CongruenceClass::universe(), |acc, c| merge(&acc, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_coprime_u64_matches_merge() {
        for p in 1..40u64 {
            for q in 1..40u64 {
                for (a, b) in [(0, 0), (1, 2), (p.saturating_sub(1), q.saturating_sub(1)), (7, 5)] {
                    let big = merge(&class(a % p, p), &class(b % q, q));
                    let small = merge_coprime_u64(a, p, b, q);
                    if p.gcd(&q) == 1 {
                        assert_eq!(small.map(BigUint::from), Some(big.unwrap().residue), "{a} {p} {b} {q}");
                    } else {
                        assert_eq!(small, None);
                    }
                }
            }
        }
        let (p, q) = (4_294_967_291u64, 4_294_967_279u64);
        let r = merge_coprime_u64(p - 1, p, 3, q).unwrap();
        assert_eq!((r % p, r % q), (p - 1, 3));
    }

    fn class(a: u64, m: u64) -> CongruenceClass {
        CongruenceClass::new(a, m).unwrap()
    }

    fn bezout_holds(a: u64, b: u64) {
        let (g, x, y) = ext_gcd(&a.into(), &b.into()).unwrap();
        assert_eq!(g, BigUint::from(a.gcd(&b)));
        assert_eq!(
            BigInt::from(a) * x + BigInt::from(b) * y,
            BigInt::from(g),
            "bezout for ({a}, {b})"
        );
    }

    #[test]
    fn ext_gcd_examples() {
        // Any Bezout pair is accepted; the brute-force search just confirms one exists.
        let found = (-20i64..=20)
            .flat_map(|x| (-20i64..=20).map(move |y| (x, y)))
            .any(|(x, y)| 33 * x + 77 * y == 11);
        assert!(found);
        bezout_holds(33, 77);
        bezout_holds(12, 18);
        bezout_holds(0, 9);
        bezout_holds(9, 0);
        for n in [1u64, 2, 7, 1 << 40] {
            let (g, x, y) = ext_gcd(&BigUint::one(), &n.into()).unwrap();
            assert_eq!((g, x, y), (BigUint::one(), BigInt::one(), BigInt::zero()));
        }
    }

    #[test]
    fn ext_gcd_rejects_double_zero() {
        assert_eq!(
            ext_gcd(&BigUint::zero(), &BigUint::zero()),
            Err(Error::UndefinedGcd)
        );
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge(&class(2, 33), &class(46, 77)).unwrap(), class(200, 231));
        assert_eq!(merge(&class(7, 12), &class(7, 12)).unwrap(), class(7, 12));
        assert!(merge(&class(1, 4), &class(2, 6)).is_err());
    }

    #[test]
    fn solve_system_examples() {
        assert_eq!(
            solve_system(&[class(2, 33), class(25, 35)]).unwrap(),
            class(200, 1155)
        );
        assert_eq!(solve_system(&[class(9, 10)]).unwrap(), class(9, 10));
        assert_eq!(
            solve_system(&[class(5, 6), class(5, 10), class(5, 15)]).unwrap(),
            class(5, 30)
        );
        assert_eq!(solve_system(&[]).unwrap(), CongruenceClass::universe());
    }

    #[test]
    fn brute_force_small_systems() {
        // Exhaustive over tiny moduli: merge agrees with a direct scan of 0..lcm.
        for m1 in 1u64..=12 {
            for m2 in 1u64..=12 {
                let l = m1.lcm(&m2);
                for a1 in 0..m1 {
                    for a2 in 0..m2 {
                        let hits: Vec<u64> = (0..l).filter(|x| x % m1 == a1 && x % m2 == a2).collect();
                        match merge(&class(a1, m1), &class(a2, m2)) {
                            Ok(c) => assert_eq!(hits, vec![c.residue().try_into().unwrap()]),
                            Err(_) => assert!(hits.is_empty()),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_modulus_rejected() {
        assert_eq!(CongruenceClass::new(1u32, 0u32), Err(Error::ZeroModulus));
        assert_eq!(class(17, 5), class(2, 5));
    }
}
