//! Per-node coding: source encoding, internal recoding and receiver decoding.
//!
//! Every packet carries `u` residues and a header of two distinct primes
//! `(p, q)`. Whatever path a packet took, each residue is congruent to the
//! corresponding hidden message modulo `p·q`; recoding only ever solves
//! congruences and reduces, so that property is preserved hop by hop.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crt::{merge, merge_coprime_u64, solve_system, CongruenceClass};
use crate::error::{Error, Result};
use crate::primes::{is_prime, PrimePool};

pub type PrimePair = (u64, u64);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    #[serde(with = "crate::serde_decimal::vec")]
    residues: Vec<BigUint>,
    pair: PrimePair,
}

impl Packet {
    /// Checks the header primes are distinct primes and every residue is
    /// already reduced modulo their product.
    pub fn new(residues: Vec<BigUint>, pair: PrimePair) -> Result<Self> {
        let (p, q) = pair;
        if p == q {
            return Err(Error::InvalidPacket(format!("header repeats prime {p}")));
        }
        if let Some(bad) = [p, q].into_iter().find(|&x| !is_prime(x)) {
            return Err(Error::InvalidPacket(format!("header field {bad} is not prime")));
        }
        if residues.is_empty() {
            return Err(Error::InvalidPacket("payload is empty".into()));
        }
        let modulus = BigUint::from(p) * q;
        if let Some(r) = residues.iter().find(|r| **r >= modulus) {
            return Err(Error::InvalidPacket(format!(
                "residue {r} is not below {p}·{q}"
            )));
        }
        Ok(Self { residues, pair })
    }

    /// Recoding output: both primes come from already validated headers and
    /// every residue was reduced modulo their product by construction.
    pub(crate) fn recoded(residues: Vec<BigUint>, pair: PrimePair) -> Self {
        debug_assert!(pair.0 != pair.1 && !residues.is_empty());
        debug_assert!(residues.iter().all(|r| *r < BigUint::from(pair.0) * pair.1));
        Self { residues, pair }
    }

    pub fn residues(&self) -> &[BigUint] {
        &self.residues
    }

    pub fn pair(&self) -> PrimePair {
        self.pair
    }

    pub fn slots(&self) -> usize {
        self.residues.len()
    }

    pub fn modulus(&self) -> BigUint {
        BigUint::from(self.pair.0) * self.pair.1
    }

    pub fn contains_prime(&self, prime: u64) -> bool {
        self.pair.0 == prime || self.pair.1 == prime
    }

    /// The congruence carried in payload slot `slot`.
    pub fn class(&self, slot: usize) -> CongruenceClass {
        CongruenceClass::new(self.residues[slot].clone(), self.modulus())
            .expect("header product is positive")
    }
}

impl std::fmt::Display for Packet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let residues: Vec<String> = self.residues.iter().map(|r| r.to_string()).collect();
        write!(f, "[{} | {},{}]", residues.join(","), self.pair.0, self.pair.1)
    }
}

/// The fixed prime pair identifying source `index` (1-based) in multi-source mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceIdentity {
    pub index: usize,
    pub pair: PrimePair,
}

/// Splits a pool of `2k` primes into `k` identities, `(p_{2i-1}, p_{2i})` for source `i`.
pub fn assign_identities(pool: &PrimePool) -> Result<Vec<SourceIdentity>> {
    Ok(pool
        .pairs()?
        .into_iter()
        .enumerate()
        .map(|(i, pair)| SourceIdentity { index: i + 1, pair })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecodePolicy {
    /// One prime pick shared by all output links of a node.
    #[default]
    PerNode,
    /// An independent pick for every output link.
    PerEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecodePath {
    /// Solve the whole input system, then reduce.
    #[default]
    Full,
    /// Solve only the two congruences selected by the pick.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionMode {
    /// One source holding every message; the source splits it over its `k` out-links.
    Single,
    /// `k` sources, each owning one identity pair and one message per slot.
    Multi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mode: SessionMode,
    /// Prime bit length.
    pub m: u32,
    /// Residues per packet.
    pub u: usize,
    /// Message bit length.
    pub n: u32,
    /// Number of sources (multi) or source out-links (single).
    pub k: usize,
    pub recode_policy: RecodePolicy,
    pub recode_path: RecodePath,
    pub seed: u64,
}

impl SessionConfig {
    /// Multi-source session: messages are `(2m-1)`-bit.
    pub fn multi_source(m: u32, u: usize, k: usize, seed: u64) -> Self {
        Self {
            mode: SessionMode::Multi,
            m,
            u,
            n: 2 * m - 1,
            k,
            recode_policy: RecodePolicy::default(),
            recode_path: RecodePath::default(),
            seed,
        }
    }

    pub fn single_source(m: u32, u: usize, n: u32, k: usize, seed: u64) -> Self {
        Self {
            mode: SessionMode::Single,
            m,
            u,
            n,
            k,
            recode_policy: RecodePolicy::default(),
            recode_path: RecodePath::default(),
            seed,
        }
    }

    pub fn with_policy(mut self, policy: RecodePolicy) -> Self {
        self.recode_policy = policy;
        self
    }

    pub fn with_path(mut self, path: RecodePath) -> Self {
        self.recode_path = path;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=64).contains(&self.m) {
            return Err(Error::InvalidBitLength(self.m));
        }
        if self.u == 0 {
            return Err(Error::Config("u must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("message length n must be at least 1".into()));
        }
        if self.mode == SessionMode::Multi && self.n != 2 * self.m - 1 {
            return Err(Error::Config(format!(
                "multi-source messages are {} bits for m = {}, got n = {}",
                2 * self.m - 1,
                self.m,
                self.n
            )));
        }
        Ok(())
    }
}

/// What a receiver learns about one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RecoveryOutcome {
    /// The message itself.
    Full {
        #[serde(with = "crate::serde_decimal")]
        value: BigUint,
    },
    /// Only `message ≡ residue (mod modulus)` is known.
    PartialMod {
        #[serde(with = "crate::serde_decimal")]
        residue: BigUint,
        #[serde(with = "crate::serde_decimal")]
        modulus: BigUint,
    },
    /// Nothing about the message reached the receiver.
    Unrecovered,
}

impl RecoveryOutcome {
    pub fn is_full(&self) -> bool {
        matches!(self, RecoveryOutcome::Full { .. })
    }
}

fn check_message(x: &BigUint, limit: u32) -> Result<()> {
    let bits = x.bits();
    if bits > u64::from(limit) {
        return Err(Error::MessageTooLarge { bits, limit });
    }
    Ok(())
}

/// Source step of single-source multicast: packet `i` carries `X mod p_{2i-1}p_{2i}`.
pub fn source_encode_single(x: &BigUint, n: u32, pool: &PrimePool) -> Result<Vec<Packet>> {
    pool.pairs()?
        .into_iter()
        .map(|pair| source_encode_parallel(std::slice::from_ref(x), n, pair))
        .collect()
}

/// One packet carrying `u` messages reduced modulo `p·q`.
pub fn source_encode_parallel(messages: &[BigUint], n: u32, pair: PrimePair) -> Result<Packet> {
    for x in messages {
        check_message(x, n)?;
    }
    let modulus = BigUint::from(pair.0) * pair.1;
    Packet::new(messages.iter().map(|x| x % &modulus).collect(), pair)
}

/// Multi-source step: source `i` sends its `(2m-1)`-bit messages unreduced
/// under its identity pair. Each message must lie below `p·q`; pools from
/// [`generate_identity_primes`](crate::primes::generate_identity_primes)
/// guarantee this for every `(2m-1)`-bit message.
pub fn source_encode_multi(
    identity: &SourceIdentity,
    messages: &[BigUint],
    m: u32,
) -> Result<Packet> {
    let product = BigUint::from(identity.pair.0) * identity.pair.1;
    for x in messages {
        check_message(x, 2 * m - 1)?;
        if *x >= product {
            return Err(Error::MessageExceedsIdentity {
                pair: identity.pair,
            });
        }
    }
    Packet::new(messages.to_vec(), identity.pair)
}

fn header_primes(inputs: &[Packet]) -> Vec<u64> {
    inputs
        .iter()
        .flat_map(|p| [p.pair.0, p.pair.1])
        .collect()
}

/// Picks two distinct prime values uniformly among ordered pairs of entries of
/// the input header multiset. Returns `None` when fewer than two distinct
/// primes are present.
pub fn pick_primes<R: Rng + ?Sized>(inputs: &[Packet], rng: &mut R) -> Option<PrimePair> {
    HeaderSample::new(inputs).pick(rng)
}

/// Header multiset of one node, built once and sampled per pick.
struct HeaderSample {
    multiset: Vec<u64>,
    forced: Option<PrimePair>,
    distinct: usize,
}

impl HeaderSample {
    fn new(inputs: &[Packet]) -> Self {
        let multiset = header_primes(inputs);
        let distinct: BTreeSet<u64> = multiset.iter().copied().collect();
        let mut it = distinct.iter().copied();
        let forced = match distinct.len() {
            2 => Some((it.next().unwrap(), it.next().unwrap())),
            _ => None,
        };
        HeaderSample {
            multiset,
            forced,
            distinct: distinct.len(),
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<PrimePair> {
        match self.distinct {
            0 | 1 => None,
            2 => self.forced,
            _ => loop {
                let a = self.multiset[rng.gen_range(0..self.multiset.len())];
                let b = self.multiset[rng.gen_range(0..self.multiset.len())];
                if a != b {
                    break Some((a, b));
                }
            },
        }
    }
}

fn check_pick(inputs: &[Packet], pick: PrimePair) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidPacket("no input packets to recode".into()));
    }
    if pick.0 == pick.1 {
        return Err(Error::InvalidPacket(format!("pick repeats prime {}", pick.0)));
    }
    for prime in [pick.0, pick.1] {
        if !inputs.iter().any(|p| p.contains_prime(prime)) {
            return Err(Error::InvalidPacket(format!(
                "picked prime {prime} is not in any input header"
            )));
        }
    }
    Ok(())
}

fn slot_count(inputs: &[Packet]) -> Result<usize> {
    let u = inputs.first().map(Packet::slots).unwrap_or(0);
    if inputs.iter().any(|p| p.slots() != u) {
        return Err(Error::InvalidPacket("packets disagree on payload width".into()));
    }
    Ok(u)
}

/// Solves every slot's system over all inputs, then reduces modulo the picked pair.
pub fn recode_full_with(inputs: &[Packet], pick: PrimePair) -> Result<Packet> {
    check_pick(inputs, pick)?;
    reduce_solution(&receiver_solve(inputs)?, pick)
}

/// Reduces one input containing `p` modulo `p`, one containing `q` modulo `q`,
/// and solves just those two congruences.
pub fn recode_fast_with(inputs: &[Packet], pick: PrimePair) -> Result<Packet> {
    check_pick(inputs, pick)?;
    FastRecoder::new(inputs)?.recode(pick)
}

/// Fast-path recoder with a prime -> first holding input index, so a node
/// with many picks scans its inputs once.
struct FastRecoder<'a> {
    inputs: &'a [Packet],
    holders: HashMap<u64, usize>,
    slots: usize,
}

impl<'a> FastRecoder<'a> {
    fn new(inputs: &'a [Packet]) -> Result<Self> {
        let slots = slot_count(inputs)?;
        let mut holders = HashMap::new();
        for (i, pkt) in inputs.iter().enumerate() {
            holders.entry(pkt.pair.0).or_insert(i);
            holders.entry(pkt.pair.1).or_insert(i);
        }
        Ok(FastRecoder { inputs, holders, slots })
    }

    fn holder(&self, prime: u64) -> Result<&'a Packet> {
        self.holders
            .get(&prime)
            .map(|&i| &self.inputs[i])
            .ok_or_else(|| Error::InvalidPacket(format!("picked prime {prime} is not in any input header")))
    }

    fn recode(&self, pick: PrimePair) -> Result<Packet> {
        let (p, q) = pick;
        if p == q {
            return Err(Error::InvalidPacket(format!("pick repeats prime {p}")));
        }
        let (from_p, from_q) = (self.holder(p)?, self.holder(q)?);

        if std::ptr::eq(from_p, from_q) {
            let modulus = BigUint::from(p) * q;
            return Ok(Packet::recoded(
                from_p.residues.iter().map(|r| r % &modulus).collect(),
                pick,
            ));
        }

        let residue_mod = |r: &BigUint, prime: u64| (r % prime).to_u64().expect("below a u64 prime");
        let residues = (0..self.slots)
            .map(|slot| {
                let a = residue_mod(&from_p.residues[slot], p);
                let b = residue_mod(&from_q.residues[slot], q);
                if let Some(x) = merge_coprime_u64(a, p, b, q) {
                    return Ok(BigUint::from(x));
                }
                // distinct primes are coprime, so this cannot fail
                let c = merge(&CongruenceClass::new(a, p)?, &CongruenceClass::new(b, q)?)
                    .map_err(Error::corruption)?;
                Ok(c.into_parts().0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Packet::recoded(residues, pick))
    }
}

/// Fast path for many picks over the same inputs.
pub fn recode_fast_many(inputs: &[Packet], picks: &[PrimePair]) -> Result<Vec<Packet>> {
    if inputs.is_empty() {
        return Err(Error::InvalidPacket("no input packets to recode".into()));
    }
    let recoder = FastRecoder::new(inputs)?;
    picks.iter().map(|&pick| recoder.recode(pick)).collect()
}

/// Recodes with the given path and an explicit pick.
pub fn recode_with(inputs: &[Packet], pick: PrimePair, path: RecodePath) -> Result<Packet> {
    match path {
        RecodePath::Full => recode_full_with(inputs, pick),
        RecodePath::Fast => recode_fast_with(inputs, pick),
    }
}

/// Draws the prime picks for `out_degree` output links under `policy`.
pub fn draw_picks<R: Rng + ?Sized>(
    inputs: &[Packet],
    out_degree: usize,
    policy: RecodePolicy,
    rng: &mut R,
) -> Result<Vec<PrimePair>> {
    let sample = HeaderSample::new(inputs);
    let mut pick = || {
        sample
            .pick(rng)
            .ok_or_else(|| Error::InvalidPacket("no input packets to recode".into()))
    };
    match policy {
        RecodePolicy::PerNode => {
            if out_degree == 0 {
                return Ok(Vec::new());
            }
            let shared = pick()?;
            Ok(vec![shared; out_degree])
        }
        RecodePolicy::PerEdge => (0..out_degree).map(|_| pick()).collect(),
    }
}

fn reduce_solution(solutions: &[CongruenceClass], pick: PrimePair) -> Result<Packet> {
    let modulus = BigUint::from(pick.0) * pick.1;
    Ok(Packet::recoded(
        solutions.iter().map(|c| c.residue() % &modulus).collect(),
        pick,
    ))
}

fn internal_recode<R: Rng + ?Sized>(
    inputs: &[Packet],
    out_degree: usize,
    policy: RecodePolicy,
    path: RecodePath,
    rng: &mut R,
) -> Result<Vec<Packet>> {
    match path {
        RecodePath::Full => {
            let solutions = receiver_solve(inputs)?;
            draw_picks(inputs, out_degree, policy, rng)?
                .into_iter()
                .map(|pick| {
                    check_pick(inputs, pick)?;
                    reduce_solution(&solutions, pick)
                })
                .collect()
        }
        RecodePath::Fast => {
            let picks = draw_picks(inputs, out_degree, policy, rng)?;
            recode_fast_many(inputs, &picks)
        }
    }
}

/// Internal node, full path: solve all inputs, pick two primes, reduce.
pub fn internal_recode_full<R: Rng + ?Sized>(
    inputs: &[Packet],
    out_degree: usize,
    policy: RecodePolicy,
    rng: &mut R,
) -> Result<Vec<Packet>> {
    internal_recode(inputs, out_degree, policy, RecodePath::Full, rng)
}

/// Internal node, fast path: pick two primes, solve only their two congruences.
pub fn internal_recode_fast<R: Rng + ?Sized>(
    inputs: &[Packet],
    out_degree: usize,
    policy: RecodePolicy,
    rng: &mut R,
) -> Result<Vec<Packet>> {
    internal_recode(inputs, out_degree, policy, RecodePath::Fast, rng)
}

/// Per-slot solution of the congruence system formed by all inputs.
/// Without inputs every slot is the trivial class `0 mod 1`.
pub fn receiver_solve(inputs: &[Packet]) -> Result<Vec<CongruenceClass>> {
    let u = slot_count(inputs)?;
    if u == 0 {
        return Ok(Vec::new());
    }
    // Packets sharing a header only need to be checked for equality.
    let mut distinct: Vec<&Packet> = Vec::with_capacity(inputs.len());
    for pkt in inputs {
        match distinct.iter().find(|d| d.pair == pkt.pair) {
            Some(d) if d.residues == pkt.residues => {}
            _ => distinct.push(pkt),
        }
    }
    (0..u)
        .map(|slot| {
            let classes: Vec<CongruenceClass> = distinct.iter().map(|p| p.class(slot)).collect();
            solve_system(&classes).map_err(Error::corruption)
        })
        .collect()
}

/// Decides whether `c mod N` pins down a unique `n`-bit message.
///
/// Candidates are `c, c + N, c + 2N, ...`; exactly one lies below `2^n` iff
/// `c < 2^n ≤ c + N`.
pub fn finalize_single(c: &BigUint, modulus: &BigUint, n: u32) -> RecoveryOutcome {
    let bound = BigUint::one() << n;
    if *c < bound && c + modulus >= bound {
        RecoveryOutcome::Full { value: c.clone() }
    } else {
        RecoveryOutcome::PartialMod {
            residue: c.clone(),
            modulus: modulus.clone(),
        }
    }
}

/// Classifies what a receiver's solution reveals about one source's message.
pub fn classify_recovery(solution: &CongruenceClass, identity: &SourceIdentity) -> RecoveryOutcome {
    let (p, q) = identity.pair;
    let divides = |prime: u64| (solution.modulus() % prime).is_zero();
    match (divides(p), divides(q)) {
        (true, true) => RecoveryOutcome::Full {
            value: solution.residue() % (BigUint::from(p) * q),
        },
        (true, false) => RecoveryOutcome::PartialMod {
            residue: solution.residue() % p,
            modulus: p.into(),
        },
        (false, true) => RecoveryOutcome::PartialMod {
            residue: solution.residue() % q,
            modulus: q.into(),
        },
        (false, false) => RecoveryOutcome::Unrecovered,
    }
}
