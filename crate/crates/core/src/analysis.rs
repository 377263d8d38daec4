//! Recovery-rate estimators and header-overhead accounting.
//!
//! The coverage model: `k` sources own the disjoint pairs `S_i = {2i-1, 2i}`
//! of a `2k`-element set, and a receiver sees `l` independent, uniformly
//! chosen 2-subsets. Source `i` is recovered when both elements of `S_i` are
//! covered. Three estimates of the expected recovered fraction are offered:
//!
//! - [`expected_recovery_exact_formula`], the closed form `(1-(1-1/k)^l)^2`,
//!   which treats the two elements of a pair as independently covered;
//! - [`coverage_exact_small`], the exact value by inclusion-exclusion;
//! - [`coverage_oracle`], a Monte Carlo simulation of the draws.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The constant used for `(1 - 1/k)^k` at three-digit `k`.
pub const INV_E_APPROX: f64 = 0.367;

/// `r` values of the tabulated approximation, with the tabulated `R*`.
pub const TABLE1: [(f64, f64); 7] = [
    (1.0, 0.40),
    (1.5, 0.60),
    (2.0, 0.75),
    (2.5, 0.84),
    (3.0, 0.90),
    (3.5, 0.94),
    (4.0, 0.96),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageParams {
    pub k: u64,
    pub l: u64,
}

impl CoverageParams {
    pub fn new(k: u64, l: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(Self { k, l })
    }

    /// `r = l / k`.
    pub fn ratio(&self) -> f64 {
        self.l as f64 / self.k as f64
    }
}

/// `(1 - (1 - 1/k)^l)^2`, the closed-form expected recover rate.
pub fn expected_recovery_exact_formula(k: u64, l: u64) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let miss = (1.0 - 1.0 / k as f64).powf(l as f64);
    (1.0 - miss).powi(2)
}

/// `(1 - 0.367^r)^2`.
pub fn approx_recovery(r: f64) -> f64 {
    (1.0 - INV_E_APPROX.powf(r)).powi(2)
}

/// The tabulated approximation as `(r, R*)` rows.
pub fn table1() -> Vec<(f64, f64)> {
    TABLE1.iter().map(|&(r, _)| (r, approx_recovery(r))).collect()
}

fn choose2(n: u64) -> BigInt {
    if n < 2 {
        BigInt::zero()
    } else {
        BigInt::from(n) * BigInt::from(n - 1) / 2
    }
}

/// Exact `E[R*]` as a rational.
///
/// For a fixed pair `S_1 = {a, b}`: `P(covered) = 1 - 2·P(a missed) + P(a and b missed)`,
/// where a single draw avoids `a` with probability `C(2k-1, 2)/C(2k, 2)` and
/// avoids both with probability `C(2k-2, 2)/C(2k, 2)`. By symmetry this is the
/// expected covered fraction.
pub fn coverage_exact_small_rational(k: u64, l: u64) -> Result<BigRational> {
    CoverageParams::new(k, l)?;
    let l = u32::try_from(l)
        .map_err(|_| Error::UnsupportedSize(format!("l = {l} is too large for exact powers")))?;
    let total = choose2(2 * k);
    let miss_one = BigRational::new(choose2(2 * k - 1), total.clone());
    let miss_both = BigRational::new(choose2(2 * k - 2), total);
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(BigRational::one() - two * pow(&miss_one, l) + pow(&miss_both, l))
}

fn pow(base: &BigRational, exp: u32) -> BigRational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Exact `E[R*]` as a float.
pub fn coverage_exact_small(k: u64, l: u64) -> Result<f64> {
    coverage_exact_small_rational(k, l).map(|r| r.to_f64().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte Carlo estimate of `E[R*]`: `trials` independent rounds of `l`
/// uniform 2-subsets of `{0, .., 2k-1}`.
pub fn coverage_oracle<R: Rng + ?Sized>(
    k: u64,
    l: u64,
    trials: u64,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    CoverageParams::new(k, l)?;
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let elements = 2 * k as usize;
    let mut covered = vec![false; elements];
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        covered.fill(false);
        for _ in 0..l {
            let a = rng.gen_range(0..elements);
            let mut b = rng.gen_range(0..elements - 1);
            if b >= a {
                b += 1;
            }
            covered[a] = true;
            covered[b] = true;
        }
        let full = covered.chunks_exact(2).filter(|p| p[0] && p[1]).count();
        let rate = full as f64 / k as f64;
        sum += rate;
        sum_sq += rate * rate;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadComparison {
    pub k: u64,
    pub receivers: u64,
    pub q: u64,
    pub m: u32,
    pub frame_bytes: u64,
    /// `k·⌈log₂ q⌉`.
    pub coding_vector_bits: u64,
    pub coding_vector_bytes: u64,
    /// `2·⌈m/8⌉`.
    pub crt_head_bytes: u64,
    pub coding_vector_fraction: f64,
    pub crt_fraction: f64,
    pub coding_vector_infeasible: bool,
    pub crt_infeasible: bool,
}

fn ceil_log2(q: u64) -> u64 {
    u64::from(64 - (q - 1).leading_zeros())
}

/// Compares a coding-vector header against a two-prime header on a frame of
/// `frame_bytes`. A head larger than the frame is flagged infeasible.
pub fn compare_overhead(
    k: u64,
    receivers: u64,
    q: u64,
    m: u32,
    frame_bytes: u64,
) -> Result<OverheadComparison> {
    if q <= receivers {
        return Err(Error::InvalidField { q, receivers });
    }
    if k == 0 || receivers == 0 || frame_bytes == 0 {
        return Err(Error::Config(
            "k, receiver count and frame size must be positive".into(),
        ));
    }
    if !(2..=64).contains(&m) {
        return Err(Error::InvalidBitLength(m));
    }
    let coding_vector_bits = k * ceil_log2(q);
    let coding_vector_bytes = coding_vector_bits.div_ceil(8);
    let crt_head_bytes = 2 * u64::from(m.div_ceil(8));
    let frame = frame_bytes as f64;
    Ok(OverheadComparison {
        k,
        receivers,
        q,
        m,
        frame_bytes,
        coding_vector_bits,
        coding_vector_bytes,
        crt_head_bytes,
        coding_vector_fraction: coding_vector_bytes as f64 / frame,
        crt_fraction: crt_head_bytes as f64 / frame,
        coding_vector_infeasible: coding_vector_bytes > frame_bytes,
        crt_infeasible: crt_head_bytes > frame_bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Enumerates every sequence of `l` 2-subsets of `{0..2k}`.
    fn brute_force(k: usize, l: u32) -> BigRational {
        let n = 2 * k;
        let subsets: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let total = subsets.len().pow(l);
        let mut full_sum = 0usize;
        for idx in 0..total {
            let mut covered = vec![false; n];
            let mut rest = idx;
            for _ in 0..l {
                let (a, b) = subsets[rest % subsets.len()];
                rest /= subsets.len();
                covered[a] = true;
                covered[b] = true;
            }
            full_sum += covered.chunks(2).filter(|p| p[0] && p[1]).count();
        }
        BigRational::new(BigInt::from(full_sum), BigInt::from(total * k))
    }

    #[test]
    fn exact_matches_enumeration() {
        for (k, l) in [(1, 0), (1, 1), (1, 3), (2, 0), (2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (4, 2)] {
            assert_eq!(
                coverage_exact_small_rational(k as u64, l as u64).unwrap(),
                brute_force(k, l),
                "k={k} l={l}"
            );
        }
        assert_eq!(
            coverage_exact_small_rational(2, 1).unwrap(),
            BigRational::new(1.into(), 6.into())
        );
    }

    #[test]
    fn formula_examples() {
        assert!((expected_recovery_exact_formula(100, 100) - 0.40192).abs() < 1e-5);
        assert_eq!(expected_recovery_exact_formula(100, 0), 0.0);
        assert_eq!(expected_recovery_exact_formula(1, 1), 1.0);
        // the closed form overstates small cases
        assert_eq!(expected_recovery_exact_formula(2, 1), 0.25);
    }

    #[test]
    fn formula_is_increasing_in_l() {
        for k in 2..20 {
            // stop before the value rounds to 1.0 in f64
            let vals: Vec<f64> = (0..)
                .map(|l| expected_recovery_exact_formula(k, l))
                .take_while(|&v| v < 1.0 - 1e-9)
                .collect();
            assert!(vals.len() > 10);
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "k={k}");
        }
        assert!(expected_recovery_exact_formula(10, 2000) > 1.0 - 1e-12);
    }

    #[test]
    fn approx_examples() {
        assert!((approx_recovery(2.0) - 0.75).abs() <= 0.005);
        assert!((approx_recovery(4.0) - 0.96).abs() <= 0.005);
        assert_eq!(approx_recovery(0.0), 0.0);
    }

    #[test]
    fn exact_vs_formula_at_k100() {
        let exact = coverage_exact_small(100, 100).unwrap();
        let formula = expected_recovery_exact_formula(100, 100);
        assert!((exact - formula).abs() < 0.002, "{exact} vs {formula}");
        assert_eq!(coverage_exact_small(1, 5).unwrap(), 1.0);
    }

    #[test]
    fn oracle_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = coverage_oracle(1, 1, 1000, &mut rng).unwrap();
        assert_eq!((one.mean, one.std_error), (1.0, 0.0));
        let est = coverage_oracle(2, 1, 200_000, &mut rng).unwrap();
        assert!((est.mean - 1.0 / 6.0).abs() < 4.0 * est.std_error, "{est:?}");
        assert!(coverage_oracle(2, 1, 0, &mut rng).is_err());
    }

    #[test]
    fn overhead_examples() {
        let cv = compare_overhead(100, 1, 16, 16, 30).unwrap();
        assert_eq!(cv.coding_vector_bits, 400);
        assert_eq!(cv.coding_vector_bytes, 50);
        assert!(cv.coding_vector_infeasible);
        assert_eq!(cv.crt_head_bytes, 4);
        assert_eq!(format!("{:.1}", cv.crt_fraction * 100.0), "13.3");
        assert!(!cv.crt_infeasible);

        let tiny = compare_overhead(1, 1, 2, 2, 30).unwrap();
        assert_eq!(tiny.coding_vector_bits, 1);
        assert_eq!(tiny.coding_vector_bytes, 1);
        assert_eq!(tiny.crt_head_bytes, 2);

        assert_eq!(
            compare_overhead(100, 16, 16, 16, 30),
            Err(Error::InvalidField { q: 16, receivers: 16 })
        );
    }

    #[test]
    fn crt_head_ignores_receiver_count() {
        let a = compare_overhead(10, 3, 257, 24, 64).unwrap();
        let b = compare_overhead(10, 200, 257, 24, 64).unwrap();
        assert_eq!(a.crt_head_bytes, b.crt_head_bytes);
        assert_eq!(a.crt_head_bytes, 6);
        assert_eq!(a.coding_vector_bits, 90);
    }
}
