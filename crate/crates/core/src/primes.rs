//! Primality, m-bit prime counting and prime-pool generation.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest bit length for which exact m-bit prime counts are computed by sieve.
pub const MAX_SIEVE_BITS: u32 = 24;

/// Pools above the sieve range are capped at this many primes.
const MAX_SAMPLED_POOL: usize = 1 << 20;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Sieve of Eratosthenes; `sieve(n)[i]` tells whether `i < n` is prime.
pub fn sieve(limit: usize) -> Vec<bool> {
    let mut flags = vec![true; limit];
    for f in flags.iter_mut().take(2) {
        *f = false;
    }
    let mut i = 2;
    while i * i < limit {
        if flags[i] {
            for j in (i * i..limit).step_by(i) {
                flags[j] = false;
            }
        }
        i += 1;
    }
    flags
}

fn check_bits(bit_length: u32) -> Result<()> {
    if (2..=64).contains(&bit_length) {
        Ok(())
    } else {
        Err(Error::InvalidBitLength(bit_length))
    }
}

fn bit_range(bit_length: u32) -> (u64, u64) {
    let lo = 1u64 << (bit_length - 1);
    let hi = if bit_length == 64 {
        u64::MAX
    } else {
        (1u64 << bit_length) - 1
    };
    (lo, hi)
}

pub fn bit_len(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// Every prime with exactly `bit_length` bits, ascending.
pub fn primes_with_bits(bit_length: u32) -> Result<Vec<u64>> {
    check_bits(bit_length)?;
    if bit_length > MAX_SIEVE_BITS {
        return Err(Error::UnsupportedSize(format!(
            "enumerating {bit_length}-bit primes (sieve limit is {MAX_SIEVE_BITS} bits)"
        )));
    }
    let (lo, hi) = bit_range(bit_length);
    let flags = sieve(hi as usize + 1);
    Ok((lo..=hi).filter(|&n| flags[n as usize]).collect())
}

/// Exact number of primes with exactly `bit_length` bits.
pub fn count_primes_with_bits(bit_length: u32) -> Result<usize> {
    primes_with_bits(bit_length).map(|p| p.len())
}

/// Smallest `m` whose m-bit primes number at least `prime_count`.
pub fn min_bit_length(prime_count: usize) -> Result<u32> {
    if prime_count == 0 {
        return Err(Error::Config("prime count must be at least 1".into()));
    }
    let (_, hi) = bit_range(MAX_SIEVE_BITS);
    let flags = sieve(hi as usize + 1);
    for bits in 2..=MAX_SIEVE_BITS {
        let (lo, hi) = bit_range(bits);
        let count = flags[lo as usize..=hi as usize].iter().filter(|&&p| p).count();
        if count >= prime_count {
            return Ok(bits);
        }
    }
    Err(Error::UnsupportedSize(format!(
        "{prime_count} primes need more than {MAX_SIEVE_BITS} bits"
    )))
}

/// Distinct primes of one common bit length, in selection order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePool {
    primes: Vec<u64>,
    bit_length: u32,
}

impl PrimePool {
    /// Validates that every entry is a distinct prime of exactly `bit_length` bits.
    pub fn new(primes: Vec<u64>, bit_length: u32) -> Result<Self> {
        check_bits(bit_length)?;
        if let Some(&p) = primes.iter().find(|&&p| bit_len(p) != bit_length) {
            return Err(Error::InvalidPool(format!(
                "{p} is not a {bit_length}-bit number"
            )));
        }
        Self::custom_with_bits(primes, bit_length)
    }

    /// Pool of distinct primes of mixed sizes, as in hand-built examples. The
    /// bit length is that of the largest prime.
    pub fn custom(primes: Vec<u64>) -> Result<Self> {
        let bits = primes.iter().map(|&p| bit_len(p)).max().unwrap_or(2).max(2);
        Self::custom_with_bits(primes, bits)
    }

    fn custom_with_bits(primes: Vec<u64>, bit_length: u32) -> Result<Self> {
        let mut seen = HashSet::with_capacity(primes.len());
        for &p in &primes {
            if !is_prime(p) {
                return Err(Error::InvalidPool(format!("{p} is not prime")));
            }
            if !seen.insert(p) {
                return Err(Error::InvalidPool(format!("{p} appears twice")));
            }
        }
        Ok(Self { primes, bit_length })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn bit_length(&self) -> u32 {
        self.bit_length
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Consecutive pairs `(p_1, p_2), (p_3, p_4), ...`.
    pub fn pairs(&self) -> Result<Vec<(u64, u64)>> {
        if !self.primes.len().is_multiple_of(2) {
            return Err(Error::InvalidPool(format!(
                "{} primes cannot be grouped into pairs",
                self.primes.len()
            )));
        }
        Ok(self.primes.chunks_exact(2).map(|c| (c[0], c[1])).collect())
    }
}

/// Draws `count` distinct `bit_length`-bit primes.
///
/// Candidates are sampled uniformly and kept when prime and unseen. When the
/// request exceeds half of all available primes the pool is instead drawn
/// without replacement from the full enumeration.
pub fn generate_primes<R: Rng + ?Sized>(
    count: usize,
    bit_length: u32,
    rng: &mut R,
) -> Result<PrimePool> {
    check_bits(bit_length)?;
    let (lo, hi) = bit_range(bit_length);
    generate_in_range(count, bit_length, lo, hi, rng)
}

/// Smallest `x` with `x² ≥ 2^(2m-1)`: any two primes at or above it multiply
/// to at least `2^(2m-1)`.
pub fn identity_floor(bit_length: u32) -> u64 {
    let target = 1u128 << (2 * bit_length - 1);
    let mut x = (target as f64).sqrt() as u128;
    while x * x >= target {
        x -= 1;
    }
    while x * x < target {
        x += 1;
    }
    x as u64
}

/// Like [`generate_primes`], restricted to primes in `[identity_floor(m), 2^m)`
/// so that every pair's product exceeds any `(2m-1)`-bit message.
pub fn generate_identity_primes<R: Rng + ?Sized>(
    count: usize,
    bit_length: u32,
    rng: &mut R,
) -> Result<PrimePool> {
    check_bits(bit_length)?;
    let (_, hi) = bit_range(bit_length);
    generate_in_range(count, bit_length, identity_floor(bit_length), hi, rng)
}

fn generate_in_range<R: Rng + ?Sized>(
    count: usize,
    bit_length: u32,
    lo: u64,
    hi: u64,
    rng: &mut R,
) -> Result<PrimePool> {
    if count == 0 {
        return Err(Error::Config("prime count must be at least 1".into()));
    }

    // Roughly (hi - lo) / ln(hi) primes lie in range. Sampling is safe when the
    // request is far below that; otherwise enumerate and check exactly.
    let estimate = (hi - lo) as f64 / (hi as f64).ln();
    let sparse_request = (count as f64) * 8.0 < estimate;
    if bit_length <= MAX_SIEVE_BITS && !sparse_request {
        let all: Vec<u64> = primes_with_bits(bit_length)?
            .into_iter()
            .filter(|&p| p >= lo && p <= hi)
            .collect();
        if count > all.len() {
            return Err(Error::InsufficientPrimes {
                requested: count,
                available: all.len(),
                bit_length,
            });
        }
        if 2 * count > all.len() {
            let picked = index::sample(rng, all.len(), count)
                .into_iter()
                .map(|i| all[i])
                .collect();
            return PrimePool::new(picked, bit_length);
        }
    } else if bit_length > MAX_SIEVE_BITS && count > MAX_SAMPLED_POOL {
        return Err(Error::UnsupportedSize(format!(
            "{count} primes of {bit_length} bits (limit {MAX_SAMPLED_POOL})"
        )));
    }

    let mut seen = HashSet::with_capacity(count);
    let mut primes = Vec::with_capacity(count);
    while primes.len() < count {
        // hi is odd, so setting the low bit stays in range
        let candidate = rng.gen_range(lo..=hi) | 1;
        if is_prime(candidate) && seen.insert(candidate) {
            primes.push(candidate);
        }
    }
    PrimePool::new(primes, bit_length)
}
