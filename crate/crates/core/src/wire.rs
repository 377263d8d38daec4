//! Fixed-width big-endian packet codec.
//!
//! Layout for prime bit length `m` and `u` payload slots:
//!
//! ```text
//! | p: ⌈m/8⌉ bytes | q: ⌈m/8⌉ bytes | r_1: ⌈2m/8⌉ bytes | ... | r_u: ⌈2m/8⌉ bytes |
//! ```
//!
//! Every packet of a session therefore has the same length.

use num_bigint::BigUint;
use thiserror::Error;

use crate::coding::Packet;
use crate::primes::is_prime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("bit length {0} is outside 2..=64")]
    BitLength(u32),
    #[error("header field {0} is not prime")]
    NotPrime(u64),
    #[error("header repeats prime {0}")]
    RepeatedPrime(u64),
    #[error("value {value} does not fit in {bits} bits")]
    Overflow { value: String, bits: u32 },
    #[error("residue {residue} is not below {p}·{q}")]
    ResidueRange { residue: String, p: u64, q: u64 },
    #[error("packet has {actual} residues, session uses {expected}")]
    SlotCount { expected: usize, actual: usize },
}

/// Bytes per header prime.
pub fn prime_width(m: u32) -> usize {
    m.div_ceil(8) as usize
}

/// Bytes per residue.
pub fn residue_width(m: u32) -> usize {
    (2 * m).div_ceil(8) as usize
}

/// Header bytes (two primes).
pub fn header_len(m: u32) -> usize {
    2 * prime_width(m)
}

pub fn packet_len(m: u32, u: usize) -> usize {
    header_len(m) + u * residue_width(m)
}

fn check_m(m: u32) -> Result<(), WireError> {
    if (2..=64).contains(&m) {
        Ok(())
    } else {
        Err(WireError::BitLength(m))
    }
}

fn put(out: &mut Vec<u8>, value: &BigUint, width: usize, bits: u32) -> Result<(), WireError> {
    if value.bits() > u64::from(bits) {
        return Err(WireError::Overflow {
            value: value.to_string(),
            bits,
        });
    }
    let be = value.to_bytes_be();
    let be: &[u8] = if be == [0] { &[] } else { &be };
    out.extend(std::iter::repeat_n(0u8, width - be.len()));
    out.extend_from_slice(be);
    Ok(())
}

pub fn encode_wire(pkt: &Packet, m: u32, u: usize) -> Result<Vec<u8>, WireError> {
    check_m(m)?;
    if pkt.slots() != u {
        return Err(WireError::SlotCount {
            expected: u,
            actual: pkt.slots(),
        });
    }
    let mut out = Vec::with_capacity(packet_len(m, u));
    let (p, q) = pkt.pair();
    put(&mut out, &p.into(), prime_width(m), m)?;
    put(&mut out, &q.into(), prime_width(m), m)?;
    for r in pkt.residues() {
        put(&mut out, r, residue_width(m), 2 * m)?;
    }
    Ok(out)
}

fn read_prime(bytes: &[u8], m: u32) -> Result<u64, WireError> {
    let value = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b));
    if value >> (m - 1) >> 1 != 0 {
        return Err(WireError::Overflow {
            value: value.to_string(),
            bits: m,
        });
    }
    if !is_prime(value) {
        return Err(WireError::NotPrime(value));
    }
    Ok(value)
}

pub fn decode_wire(bytes: &[u8], m: u32, u: usize) -> Result<Packet, WireError> {
    check_m(m)?;
    let expected = packet_len(m, u);
    if bytes.len() != expected {
        return Err(WireError::Length {
            expected,
            actual: bytes.len(),
        });
    }
    let pw = prime_width(m);
    let p = read_prime(&bytes[..pw], m)?;
    let q = read_prime(&bytes[pw..2 * pw], m)?;
    if p == q {
        return Err(WireError::RepeatedPrime(p));
    }
    let modulus = BigUint::from(p) * q;
    let residues = bytes[2 * pw..]
        .chunks_exact(residue_width(m))
        .map(|chunk| {
            let r = BigUint::from_bytes_be(chunk);
            if r >= modulus {
                Err(WireError::ResidueRange {
                    residue: r.to_string(),
                    p,
                    q,
                })
            } else {
                Ok(r)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Packet::new(residues, (p, q)).expect("fields validated above"))
}
