use std::collections::BTreeSet;

use crt_netcode::analysis::{coverage_exact_small_rational, expected_recovery_exact_formula};
use crt_netcode::coding::{
    finalize_single, recode_fast_with, recode_full_with, source_encode_multi,
};
use crt_netcode::crt::{merge, solve_system};
use crt_netcode::primes::{
    count_primes_with_bits, generate_identity_primes, generate_primes, is_prime,
};
use crt_netcode::simulator::{run_session, stream_rng};
use crt_netcode::topology::generate_layered;
use crt_netcode::wire::{decode_wire, encode_wire};
use crt_netcode::{
    CongruenceClass, LayeredParams, Packet, RecoveryOutcome, SessionConfig, SourceIdentity,
    Topology,
};
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn class(a: u64, m: u64) -> CongruenceClass {
    CongruenceClass::new(a, m).unwrap()
}

fn small(c: &CongruenceClass) -> (u64, u64) {
    (c.residue().to_u64().unwrap(), c.modulus().to_u64().unwrap())
}

proptest! {
    #[test]
    fn merge_is_commutative_with_lcm_modulus(a1 in 0u64..5000, m1 in 1u64..2000, a2 in 0u64..5000, m2 in 1u64..2000) {
        let (c1, c2) = (class(a1, m1), class(a2, m2));
        let ab = merge(&c1, &c2);
        let ba = merge(&c2, &c1);
        prop_assert_eq!(ab.is_ok(), ba.is_ok());
        let compatible = (a1 % m1).abs_diff(a2 % m2) % m1.gcd(&m2) == 0;
        prop_assert_eq!(ab.is_ok(), compatible);
        if let (Ok(ab), Ok(ba)) = (ab, ba) {
            prop_assert_eq!(&ab, &ba);
            let (x, m) = small(&ab);
            prop_assert_eq!(m, m1.lcm(&m2));
            prop_assert_eq!(x % m1, a1 % m1);
            prop_assert_eq!(x % m2, a2 % m2);
        }
    }

    #[test]
    fn solve_system_ignores_order(seed in any::<u64>(), count in 1usize..7) {
        let mut rng = stream_rng(seed, 0);
        let x: u64 = rng.gen_range(0..1_000_000_000);
        let mut classes: Vec<CongruenceClass> = (0..count)
            .map(|_| {
                let m = rng.gen_range(1..300);
                class(x % m, m)
            })
            .collect();
        let forward = solve_system(&classes).unwrap();
        classes.shuffle(&mut rng);
        let shuffled = solve_system(&classes).unwrap();
        prop_assert_eq!(&forward, &shuffled);
        prop_assert!(forward.contains(&BigUint::from(x)));
        let lcm = classes.iter().fold(1u64, |acc, c| acc.lcm(&small(c).1));
        prop_assert_eq!(small(&forward).1, lcm);
    }

    #[test]
    fn generated_primes_are_distinct_m_bit_primes(seed in any::<u64>(), m in 5u32..=40, count in 1usize..40) {
        let mut rng = stream_rng(seed, 1);
        let available = if m <= 24 { count_primes_with_bits(m).unwrap() } else { usize::MAX };
        let result = generate_primes(count, m, &mut rng);
        prop_assert_eq!(result.is_err(), count > available);
        let Ok(pool) = result else { return Ok(()); };
        let distinct: BTreeSet<u64> = pool.primes().iter().copied().collect();
        prop_assert_eq!(distinct.len(), count);
        for &p in pool.primes() {
            prop_assert!(is_prime(p));
            prop_assert_eq!(64 - p.leading_zeros(), m);
        }
    }

    #[test]
    fn identity_pairs_cover_every_message(seed in any::<u64>(), m in 8u32..=32) {
        let mut rng = stream_rng(seed, 1);
        let pool = generate_identity_primes(6, m, &mut rng).unwrap();
        let limit = BigUint::one() << (2 * m - 1);
        for pair in pool.primes().chunks(2) {
            prop_assert!(BigUint::from(pair[0]) * pair[1] >= limit);
        }
    }

    #[test]
    fn layered_generation_follows_fanout_law(seed in any::<u64>(), sources in 1usize..6, width in 1usize..10,
                                             depth in 0usize..4, receivers in 1usize..5, sigma in 0.1f64..=1.0) {
        let params = LayeredParams { sources, width, depth, receivers, sigma };
        let first = generate_layered(&params, &mut stream_rng(seed, 2));
        let again = generate_layered(&params, &mut stream_rng(seed, 2));
        prop_assert_eq!(first.is_ok(), again.is_ok());
        let Ok(topo) = first else { return Ok(()); };
        let topo2 = again.unwrap();
        prop_assert_eq!(topo.edges(), topo2.edges());
        prop_assert!(topo.is_strictly_layered());

        let sizes = topo.level_sizes().to_vec();
        prop_assert_eq!(&sizes, &params.level_sizes());
        for level in 0..sizes.len() - 1 {
            let next = sizes[level + 1];
            let want = ((sigma * next as f64).round() as usize).clamp(1, next);
            for node in topo.level(level) {
                prop_assert_eq!(topo.out_degree(node), want);
                let targets: BTreeSet<usize> =
                    topo.out_edges(node).iter().map(|&e| topo.edge(e).1).collect();
                prop_assert_eq!(targets.len(), want, "no parallel edges");
            }
        }
        let parsed: Topology = topo.to_string().parse().unwrap();
        prop_assert_eq!(parsed.edges(), topo.edges());
    }

    #[test]
    fn fast_and_full_recode_agree(seed in any::<u64>(), sources in 2usize..6, copies in 1usize..4, u in 1usize..3) {
        let mut rng = stream_rng(seed, 3);
        let m = 12;
        let pool = generate_identity_primes(2 * sources, m, &mut rng).unwrap();
        let mut inputs = Vec::new();
        for (i, pair) in pool.primes().chunks(2).enumerate() {
            let id = SourceIdentity { index: i + 1, pair: (pair[0], pair[1]) };
            let msgs: Vec<BigUint> = (0..u).map(|_| rng.gen_biguint(u64::from(2 * m - 1))).collect();
            let pkt = source_encode_multi(&id, &msgs, m).unwrap();
            for _ in 0..rng.gen_range(1..=copies) {
                inputs.push(pkt.clone());
            }
        }
        // recoded packets mixing two sources are valid inputs too
        let mixed = recode_full_with(&inputs, (pool.primes()[0], pool.primes()[2])).unwrap();
        inputs.push(mixed);
        inputs.shuffle(&mut rng);

        let primes = pool.primes();
        for _ in 0..10 {
            let p = *primes.choose(&mut rng).unwrap();
            let q = *primes.choose(&mut rng).unwrap();
            if p == q {
                continue;
            }
            let full = recode_full_with(&inputs, (p, q)).unwrap();
            let fast = recode_fast_with(&inputs, (p, q)).unwrap();
            prop_assert_eq!(encode_wire(&full, m, u).unwrap(), encode_wire(&fast, m, u).unwrap());
        }
    }

    #[test]
    fn wire_round_trip_and_rejects_resized(seed in any::<u64>(), m in 2u32..=64, u in 1usize..5, cut in 1usize..4) {
        let mut rng = stream_rng(seed, 4);
        let Ok(pool) = generate_primes(2, m, &mut rng) else { return Ok(()); };
        let (p, q) = (pool.primes()[0], pool.primes()[1]);
        let modulus = BigUint::from(p) * q;
        let pkt = Packet::new((0..u).map(|_| rng.gen_biguint_below(&modulus)).collect(), (p, q)).unwrap();
        let bytes = encode_wire(&pkt, m, u).unwrap();
        prop_assert_eq!(decode_wire(&bytes, m, u).unwrap(), pkt);
        let cut = cut.min(bytes.len());
        prop_assert!(decode_wire(&bytes[..bytes.len() - cut], m, u).is_err());
        let mut longer = bytes.clone();
        longer.extend(std::iter::repeat_n(0u8, cut));
        prop_assert!(decode_wire(&longer, m, u).is_err());
    }

    #[test]
    fn finalize_single_matches_scan(modulus in 1u64..1 << 16, c_seed in any::<u64>(), n in 0u32..20) {
        let c = c_seed % modulus;
        let bound = 1u64 << n;
        let below = (0..3u64).map(|j| c + j * modulus).filter(|&x| x < bound).count();
        match finalize_single(&c.into(), &modulus.into(), n) {
            RecoveryOutcome::Full { value } => {
                prop_assert_eq!(below, 1);
                prop_assert_eq!(value, BigUint::from(c));
            }
            RecoveryOutcome::PartialMod { residue, modulus: got } => {
                prop_assert_ne!(below, 1);
                prop_assert_eq!((residue, got), (BigUint::from(c), BigUint::from(modulus)));
            }
            RecoveryOutcome::Unrecovered => prop_assert!(false, "single-source never yields None"),
        }
    }
}

// Receivers: t_i counts the distinct primes heard and the solved modulus is
// their product.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn receiver_modulus_is_product_of_collected_primes(seed in any::<u64>(), sources in 1usize..6,
                                                       width in 1usize..8, depth in 0usize..3) {
        let params = LayeredParams { sources, width, depth, receivers: 3, sigma: 0.6 };
        let Ok(topo) = generate_layered(&params, &mut stream_rng(seed, 2)) else { return Ok(()); };
        let config = SessionConfig::multi_source(12, 1, sources, seed);
        let mut rng = stream_rng(seed, 3);
        let messages: Vec<Vec<BigUint>> = (0..sources).map(|_| vec![rng.gen_biguint(23)]).collect();
        let report = run_session(&topo, &config, &messages).unwrap();
        for r in &report.receivers {
            prop_assert_eq!(r.primes_collected(), r.collected_primes.len());
            let product = r.collected_primes.iter().fold(BigUint::one(), |acc, &p| acc * p);
            prop_assert_eq!(r.solution[0].modulus(), &product);
            for (i, id) in report.identities.iter().enumerate() {
                let both = r.collected_primes.contains(&id.pair.0) && r.collected_primes.contains(&id.pair.1);
                prop_assert_eq!(r.outcomes[i][0].is_full(), both);
                if both {
                    prop_assert_eq!(&r.outcomes[i][0], &RecoveryOutcome::Full { value: messages[i][0].clone() });
                }
            }
        }
    }
}

// All ordered sequences of l draws of a 2-subset of {0..2k}; returns the mean
// fraction of fully covered pairs {2i, 2i+1}.
fn enumerate_coverage(k: usize, l: u32) -> BigRational {
    let subsets: Vec<(usize, usize)> = (0..2 * k)
        .flat_map(|a| (a + 1..2 * k).map(move |b| (a, b)))
        .collect();
    let total = subsets.len().pow(l);
    let mut covered_sum = 0usize;
    for mut index in 0..total {
        let mut seen = vec![false; 2 * k];
        for _ in 0..l {
            let (a, b) = subsets[index % subsets.len()];
            index /= subsets.len();
            seen[a] = true;
            seen[b] = true;
        }
        covered_sum += seen.chunks(2).filter(|p| p[0] && p[1]).count();
    }
    BigRational::new(covered_sum.into(), (total * k).into())
}

#[test]
fn exact_coverage_agrees_with_enumeration() {
    for k in 1..=3usize {
        for l in 0..=4u32 {
            assert_eq!(
                coverage_exact_small_rational(k as u64, u64::from(l)).unwrap(),
                enumerate_coverage(k, l),
                "k={k} l={l}"
            );
        }
    }
}

#[test]
fn closed_form_approaches_exact_for_large_k() {
    for l in [100u64, 200, 300] {
        let exact = coverage_exact_small_rational(100, l).unwrap().to_f64().unwrap();
        let formula = expected_recovery_exact_formula(100, l);
        assert!((exact - formula).abs() < 0.01, "l={l}: {exact} vs {formula}");
    }
}
