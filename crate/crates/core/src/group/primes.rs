//! Deterministic primality and primes in arithmetic progressions.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::GroupError;

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Miller–Rabin with the first twelve prime bases, exact for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn small_primes(limit: u64) -> Vec<u64> {
    let mut sieve = vec![true; limit as usize + 1];
    let mut out = Vec::new();
    for i in 2..=limit as usize {
        if sieve[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit as usize {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

fn strong_probable_prime(n: &BigUint, a: u64) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = BigUint::from(a).modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

fn jacobi(a: &BigInt, n: &BigInt) -> i32 {
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Strong Lucas probable-prime test with Selfridge's parameters.
fn strong_lucas(n: &BigUint) -> bool {
    let nn = BigInt::from(n.clone());
    if n.sqrt().pow(2) == *n {
        return false;
    }
    let mut d = BigInt::from(5);
    loop {
        let j = jacobi(&d, &nn);
        if j == -1 {
            break;
        }
        if j == 0 && d.magnitude() != n {
            return false;
        }
        d = if d > BigInt::zero() { -(d + 2u32) } else { -d + 2u32 };
    }
    let p = BigInt::one();
    let q: BigInt = (BigInt::one() - &d) / 4u32;
    let half = |x: BigInt| -> BigInt {
        let x = if x.is_odd() { x + &nn } else { x };
        (x / 2u32).mod_floor(&nn)
    };
    let np1 = n + 1u32;
    let s = np1.trailing_zeros().unwrap_or(0);
    let dd = &np1 >> s;
    let bits = dd.bits();
    let mut u = BigInt::one();
    let mut v = p.clone();
    let mut qk = q.mod_floor(&nn);
    for i in (0..bits - 1).rev() {
        u = (&u * &v).mod_floor(&nn);
        v = (&v * &v - &qk * 2u32).mod_floor(&nn);
        qk = (&qk * &qk).mod_floor(&nn);
        if dd.bit(i) {
            let nu = half(&p * &u + &v);
            let nv = half(&d * &u + &p * &v);
            u = nu;
            v = nv;
            qk = (&qk * &q).mod_floor(&nn);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - &qk * 2u32).mod_floor(&nn);
        if v.is_zero() {
            return true;
        }
        qk = (&qk * &qk).mod_floor(&nn);
    }
    false
}

/// Baillie–PSW: no known counterexample, used as a filter before a proof.
pub fn baillie_psw(n: &BigUint) -> bool {
    if let Some(x) = n.to_u64() {
        return is_prime_u64(x);
    }
    for p in small_primes(1000) {
        if (n % p).is_zero() {
            return false;
        }
    }
    strong_probable_prime(n, 2) && strong_lucas(n)
}

/// Deterministic primality. Above 64 bits a Pocklington certificate is
/// built from the factored part of n − 1; failure to build one is an error,
/// never a guess.
pub fn is_prime(n: &BigUint) -> Result<bool, GroupError> {
    if let Some(x) = n.to_u64() {
        return Ok(is_prime_u64(x));
    }
    if !baillie_psw(n) {
        return Ok(false);
    }
    if pocklington(n, 0) {
        Ok(true)
    } else {
        Err(GroupError::Unproven(BigInt::from(n.clone())))
    }
}

fn pocklington(n: &BigUint, depth: usize) -> bool {
    if let Some(x) = n.to_u64() {
        return is_prime_u64(x);
    }
    if depth > 8 {
        return false;
    }
    let nm1 = n - 1u32;
    let mut rest = nm1.clone();
    let mut factors: Vec<BigUint> = Vec::new();
    let mut f = BigUint::one();
    for p in small_primes(100_000) {
        if (&rest % p).is_zero() {
            factors.push(BigUint::from(p));
            while (&rest % p).is_zero() {
                rest /= p;
                f *= p;
            }
        }
    }
    if rest > BigUint::one() && baillie_psw(&rest) && pocklington(&rest, depth + 1) {
        f *= &rest;
        factors.push(rest);
    }
    if &f * &f <= *n {
        return false;
    }
    factors.iter().all(|q| {
        let e = &nm1 / q;
        (2u64..200).any(|a| {
            let a = BigUint::from(a);
            if a.modpow(&nm1, n) != BigUint::one() {
                return false;
            }
            let t = a.modpow(&e, n);
            let g = if t.is_zero() { n.clone() } else { (t + n - 1u32) % n };
            g.gcd(n).is_one()
        })
    })
}

/// Prime factorization by trial division, primes ascending.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// (p, e) with n = p^e, e ≥ 1; None for 1 or composite non-powers.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    match factor_u64(n).as_slice() {
        [(p, e)] => Some((*p, *e)),
        _ => None,
    }
}

/// The `count` smallest primes p ≡ 1 mod K with p ≥ lower.
pub fn dirichlet_primes(
    k: &BigUint,
    lower: &BigUint,
    count: usize,
    candidate_cap: u64,
) -> Result<Vec<BigUint>, GroupError> {
    if k.is_zero() || count == 0 {
        return Err(GroupError::InvalidDescriptor("K and count must be positive".into()));
    }
    let two = BigUint::from(2u32);
    let start = if *lower > two { lower.clone() } else { two };
    // first j with 1 + jK ≥ start
    let mut j = (&start - 1u32).div_ceil(k);
    let mut out = Vec::new();
    let mut tried = 0u64;
    while out.len() < count {
        if tried >= candidate_cap {
            return Err(GroupError::SearchBudgetExceeded(tried));
        }
        let p = &j * k + 1u32;
        if is_prime(&p)? {
            out.push(p);
        }
        j += 1u32;
        tried += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn u64_agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime_u64(n), trial(n), "{n}");
        }
        // strong pseudoprimes to several bases
        for n in [3215031751u64, 2152302898747, 3474749660383, 341550071728321, 3825123056546413051] {
            assert!(!is_prime_u64(n));
        }
        assert!(is_prime_u64(18446744073709551557));
    }

    #[test]
    fn big_primes_get_proofs() {
        // 2^89 − 1 and 2^127 − 1 are Mersenne primes
        let m89 = (BigUint::one() << 89) - 1u32;
        let m127 = (BigUint::one() << 127) - 1u32;
        assert_eq!(is_prime(&m89), Ok(true));
        assert_eq!(is_prime(&m127), Ok(true));
        assert_eq!(is_prime(&(&m89 * &m127)), Ok(false));
        let comp = (BigUint::one() << 100) + 1u32;
        assert_eq!(is_prime(&comp), Ok(false));
        // p = 2^64 + 13 is prime
        let p = (BigUint::one() << 64) + 13u32;
        assert_eq!(is_prime(&p), Ok(true));
    }

    #[test]
    fn lucas_rejects_pseudoprimes() {
        // Fermat base-2 pseudoprimes and a Carmichael number
        for n in [341u64, 561, 1105, 2047, 3277, 4033, 4681] {
            let b = BigUint::from(n);
            assert!(!(strong_probable_prime(&b, 2) && strong_lucas(&b)), "{n}");
        }
        for p in [101u64, 1009, 7919, 1_000_003] {
            assert!(strong_lucas(&BigUint::from(p)));
        }
    }

    #[test]
    fn dirichlet_examples() {
        let b = |x: u64| BigUint::from(x);
        assert_eq!(dirichlet_primes(&b(1), &b(2), 2, 1000).unwrap(), vec![b(2), b(3)]);
        assert_eq!(dirichlet_primes(&b(5), &b(5), 2, 1000).unwrap(), vec![b(11), b(31)]);
        assert_eq!(dirichlet_primes(&b(12), &b(2), 2, 1000).unwrap(), vec![b(13), b(37)]);
        assert!(matches!(
            dirichlet_primes(&b(1000), &b(2), 50, 3),
            Err(GroupError::SearchBudgetExceeded(3))
        ));
    }

    proptest! {
        #[test]
        fn dirichlet_against_trial_division(k in 1u64..60, lower in 0u64..200, count in 1usize..4) {
            let got = dirichlet_primes(&BigUint::from(k), &BigUint::from(lower), count, 100_000).unwrap();
            let want: Vec<BigUint> = (lower.max(2)..)
                .filter(|&p| p % k == 1 % k && trial(p))
                .take(count)
                .map(BigUint::from)
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}
