//! Exact modular arithmetic over small prime fields.
//!
//! Residues are canonical representatives in `[0, p - 1]`. Products are
//! widened to `u128` before reduction, so every routine here is overflow-free
//! for any `u64` modulus; [`GroupParams`] additionally caps the modulus at
//! [`MAX_MODULUS`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by [`GroupParams`] (2^31).
pub const MAX_MODULUS: u64 = 1 << 31;

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod modulus` by square-and-multiply.
pub fn mod_pow(base: u64, exp: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::ModulusTooSmall {
            got: modulus,
            min: 2,
        });
    }
    Ok(mod_pow_unchecked(base, exp, modulus))
}

pub(crate) fn mod_pow_unchecked(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut base = base % modulus;
    let mut acc = 1 % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse of `a` modulo the prime `p`, via Fermat's little theorem.
pub fn mod_inv(a: u64, p: u64) -> Result<u64> {
    if p < 2 {
        return Err(Error::ModulusTooSmall { got: p, min: 2 });
    }
    let a = a % p;
    if a == 0 {
        return Err(Error::NoInverse { a, p });
    }
    Ok(mod_pow_unchecked(a, p - 2, p))
}

/// Deterministic primality test, exact for every `u64`.
///
/// Trial division by the small primes, then strong-probable-prime rounds with
/// the first twelve prime bases, which is known to be exact below 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n == b {
            return true;
        }
        if n.is_multiple_of(b) {
            return false;
        }
    }
    let tz = (n - 1).trailing_zeros();
    let odd = (n - 1) >> tz;
    'witness: for &a in &BASES {
        let mut y = mod_pow_unchecked(a, odd, n);
        if y == 1 || y == n - 1 {
            continue;
        }
        for _ in 1..tz {
            y = mul_mod(y, y, n);
            if y == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    let mut f = 2u64;
    while f.saturating_mul(f) <= n {
        if n.is_multiple_of(f) {
            factors.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

/// True iff `g` has multiplicative order `p - 1` modulo the prime `p`.
///
/// `g = 1` has order one and is reported as `false`; `g = 0` or `g >= p` is a
/// parameter error.
pub fn is_primitive_root(g: u64, p: u64) -> Result<bool> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if g == 0 || g >= p {
        return Err(Error::GeneratorOutOfRange { g, p });
    }
    if p == 2 {
        return Ok(g == 1);
    }
    if g == 1 {
        return Ok(false);
    }
    let order = p - 1;
    Ok(prime_factors(order)
        .into_iter()
        .all(|f| mod_pow_unchecked(g, order / f, p) != 1))
}

/// Smallest primitive root of the prime `p`.
pub fn first_primitive_root(p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Ok(1);
    }
    for g in 2..p {
        if is_primitive_root(g, p)? {
            return Ok(g);
        }
    }
    unreachable!("every prime has a primitive root")
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> Result<u64> {
    let mut candidate = n.max(2);
    while !is_prime(candidate) {
        candidate = candidate
            .checked_add(1)
            .ok_or(Error::Overflow("next prime"))?;
    }
    Ok(candidate)
}

/// Public group description: prime modulus `p` and a primitive root `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GroupParams {
    p: u64,
    g: u64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: u64,
    g: u64,
    q: u64,
}

impl TryFrom<RawParams> for GroupParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = GroupParams::new(raw.p, raw.g)?;
        if raw.q != params.order() {
            return Err(Error::InvalidParameter(format!(
                "group order {} does not match p - 1 = {}",
                raw.q,
                params.order()
            )));
        }
        Ok(params)
    }
}

impl From<GroupParams> for RawParams {
    fn from(params: GroupParams) -> Self {
        RawParams {
            p: params.p,
            g: params.g,
            q: params.order(),
        }
    }
}

impl GroupParams {
    /// Validates `p` (an odd prime, at most [`MAX_MODULUS`]) and `g` (a primitive root).
    pub fn new(p: u64, g: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::ModulusTooSmall { got: p, min: 3 });
        }
        if p > MAX_MODULUS {
            return Err(Error::ModulusTooLarge {
                got: p,
                max: MAX_MODULUS,
            });
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if !is_primitive_root(g, p)? {
            return Err(Error::NotGenerator { g, p });
        }
        Ok(GroupParams { p, g })
    }

    /// `p` paired with its smallest primitive root.
    pub fn with_first_root(p: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::ModulusTooSmall { got: p, min: 3 });
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        GroupParams::new(p, first_primitive_root(p)?)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.g
    }

    /// Group order `q = p - 1`.
    pub fn order(&self) -> u64 {
        self.p - 1
    }

    /// `g^exp mod p`.
    pub fn pow_g(&self, exp: u64) -> u64 {
        mod_pow_unchecked(self.g, exp, self.p)
    }

    /// `base^exp mod p`.
    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        mod_pow_unchecked(base, exp, self.p)
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        mod_inv(a, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn naive_pow(base: u64, exp: u64, p: u64) -> u64 {
        let mut acc = 1 % p;
        for _ in 0..exp {
            acc = acc * base % p;
        }
        acc
    }

    fn naive_is_prime(n: u64) -> bool {
        n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(3, 2, 7).unwrap(), 2);
        assert_eq!(mod_pow(5, 0, 7).unwrap(), 1);
        assert_eq!(mod_pow(3, 3, 7).unwrap(), 6);
        assert_eq!(
            mod_pow(3, 3, 1),
            Err(Error::ModulusTooSmall { got: 1, min: 2 })
        );
    }

    #[test]
    fn mod_pow_matches_repeated_multiplication() {
        for p in 2..=100u64 {
            for base in 0..p {
                for exp in 0..=200 {
                    assert_eq!(
                        mod_pow(base, exp, p).unwrap(),
                        naive_pow(base, exp, p),
                        "{base}^{exp} mod {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn mod_pow_large_exponent() {
        let p = 2_147_483_647;
        assert_eq!(mod_pow(16807, (p - 1) * 1_000_000_007, p).unwrap(), 1);
        // 2^64 - 59 is the largest 64-bit prime.
        let big = u64::MAX - 58;
        assert!(is_prime(big));
        assert_eq!(mod_pow(12345, big - 1, big).unwrap(), 1);
    }

    #[test]
    fn mod_inv_examples() {
        assert_eq!(mod_inv(2, 7).unwrap(), 4);
        assert_eq!(mod_inv(1, 13).unwrap(), 1);
        assert_eq!(mod_inv(3, 7).unwrap(), 5);
        assert_eq!(mod_inv(0, 7), Err(Error::NoInverse { a: 0, p: 7 }));
        assert_eq!(mod_inv(14, 7), Err(Error::NoInverse { a: 0, p: 7 }));
    }

    #[test]
    fn mod_inv_matches_scan() {
        for p in [3u64, 5, 7, 11, 13, 97] {
            for a in 1..p {
                let scanned = (1..p).find(|b| a * b % p == 1).unwrap();
                assert_eq!(mod_inv(a, p).unwrap(), scanned);
            }
        }
    }

    #[test]
    fn primality() {
        assert!(is_prime(7));
        assert!(!is_prime(1));
        assert!(!is_prime(91));
        assert!(!is_prime(0));
        assert!(is_prime(2));
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive_is_prime(n), "{n}");
        }
        assert!(is_prime(2_147_483_647));
        assert!(is_prime(4_294_967_291));
        // strong pseudoprimes to several small bases
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(2_152_302_898_747));
        assert!(!is_prime(4_294_967_297));
    }

    #[test]
    fn primitive_roots() {
        assert!(is_primitive_root(3, 7).unwrap());
        assert!(!is_primitive_root(2, 7).unwrap());
        assert!(!is_primitive_root(1, 7).unwrap());
        assert!(!is_primitive_root(1, 11).unwrap());
        assert_eq!(
            is_primitive_root(7, 7),
            Err(Error::GeneratorOutOfRange { g: 7, p: 7 })
        );
        assert_eq!(is_primitive_root(3, 8), Err(Error::NotPrime(8)));
        assert_eq!(first_primitive_root(7).unwrap(), 3);
        assert_eq!(first_primitive_root(11).unwrap(), 2);
        assert_eq!(first_primitive_root(1009).unwrap(), 11);
    }

    #[test]
    fn primitive_root_check_matches_power_enumeration() {
        for p in (3..200u64).filter(|&n| is_prime(n)) {
            for g in 1..p {
                let powers: HashSet<u64> = (1..p).map(|k| naive_pow(g, k, p)).collect();
                assert_eq!(
                    is_primitive_root(g, p).unwrap(),
                    powers.len() as u64 == p - 1,
                    "g={g} p={p}"
                );
            }
        }
    }

    #[test]
    fn params_validation() {
        let params = GroupParams::new(7, 3).unwrap();
        assert_eq!(
            (params.modulus(), params.generator(), params.order()),
            (7, 3, 6)
        );
        assert_eq!(GroupParams::new(8, 3), Err(Error::NotPrime(8)));
        assert_eq!(GroupParams::new(7, 2), Err(Error::NotGenerator { g: 2, p: 7 }));
        assert!(matches!(
            GroupParams::new(2, 1),
            Err(Error::ModulusTooSmall { .. })
        ));
        assert!(matches!(
            GroupParams::new(4_294_967_291, 2),
            Err(Error::ModulusTooLarge { .. })
        ));
        assert_eq!(GroupParams::with_first_root(13).unwrap().generator(), 2);
        assert_eq!(next_prime(1000).unwrap(), 1009);
        assert_eq!(next_prime(7).unwrap(), 7);
    }

    #[test]
    fn params_serde_rejects_inconsistent_order() {
        let params = GroupParams::new(7, 3).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        assert_eq!(json, r#"{"p":7,"g":3,"q":6}"#);
        assert_eq!(serde_json::from_str::<GroupParams>(&json).unwrap(), params);
        assert!(serde_json::from_str::<GroupParams>(r#"{"p":7,"g":3,"q":5}"#).is_err());
        assert!(serde_json::from_str::<GroupParams>(r#"{"p":7,"g":2,"q":6}"#).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn small_prime() -> impl Strategy<Value = u64> {
            prop::sample::select(vec![3u64, 5, 7, 11, 13, 101, 1009, 65_537, 2_147_483_647])
        }

        proptest! {
            #[test]
            fn fermat(p in small_prime(), a in 1u64..u64::MAX) {
                let a = a % (p - 1) + 1;
                prop_assert_eq!(mod_pow(a, p - 1, p).unwrap(), 1);
            }

            #[test]
            fn inverse_roundtrip(p in small_prime(), a in 1u64..u64::MAX) {
                let a = a % (p - 1) + 1;
                let b = mod_inv(a, p).unwrap();
                prop_assert_eq!((a as u128 * b as u128 % p as u128) as u64, 1);
            }
        }
    }
}
