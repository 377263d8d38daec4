//! Fixtures shared by the benchmarks.

use crt_netcode::coding::{assign_identities, source_encode_multi};
use crt_netcode::primes::generate_identity_primes;
use crt_netcode::simulator::stream_rng;
use crt_netcode::{CongruenceClass, Packet};
use num_bigint::{BigUint, RandBigInt};
use rand::Rng;

/// `count` congruences modulo distinct `m`-bit primes, all consistent with one
/// random value.
pub fn consistent_system(count: usize, m: u32, seed: u64) -> Vec<CongruenceClass> {
    let mut rng = stream_rng(seed, 0);
    let pool = generate_identity_primes(count, m, &mut rng).expect("enough primes");
    let x = rng.gen_biguint(u64::from(m) * count as u64);
    pool.primes()
        .iter()
        .map(|&p| CongruenceClass::new(&x % p, p).expect("p > 0"))
        .collect()
}

/// Packets from `sources` distinct sources, each as if heard over `copies`
/// different links, like the input of one internal node.
pub fn node_inputs(sources: usize, copies: usize, m: u32, seed: u64) -> Vec<Packet> {
    let mut rng = stream_rng(seed, 0);
    let pool = generate_identity_primes(2 * sources, m, &mut rng).expect("enough primes");
    let mut out = Vec::with_capacity(sources * copies);
    for id in assign_identities(&pool).expect("even pool") {
        let x: BigUint = rng.gen_biguint(u64::from(2 * m - 1));
        let pkt = source_encode_multi(&id, &[x], m).expect("identity primes fit");
        out.extend(std::iter::repeat_n(pkt, copies));
    }
    // shuffle so holders are spread over the list
    for i in (1..out.len()).rev() {
        out.swap(i, rng.gen_range(0..=i));
    }
    out
}
