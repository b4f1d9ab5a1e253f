//! Segmented sieve of Eratosthenes.

use crate::error::{Error, Result};

/// Largest bound accepted by the sieve.
pub const SIEVE_MAX: u64 = 1_000_000_000;

const SEGMENT: usize = 1 << 18;

fn small_primes(limit: usize) -> Vec<u64> {
    let mut is = vec![true; limit + 1];
    is[0] = false;
    if limit >= 1 {
        is[1] = false;
    }
    let mut i = 2;
    while i * i <= limit {
        if is[i] {
            let mut j = i * i;
            while j <= limit {
                is[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is.iter()
        .enumerate()
        .filter_map(|(k, &p)| p.then_some(k as u64))
        .collect()
}

/// Calls `visit` with every prime `p ≤ n`, in increasing order.
pub fn for_each_prime(n: u64, mut visit: impl FnMut(u64)) -> Result<()> {
    if n > SIEVE_MAX {
        return Err(Error::Capacity {
            what: format!("sieve bound {SIEVE_MAX} exceeded by {n}"),
            reached: SIEVE_MAX as f64,
        });
    }
    if n < 2 {
        return Ok(());
    }
    let root = (n as f64).sqrt() as usize + 1;
    let base = small_primes(root);
    let mut seg = vec![true; SEGMENT];
    let mut lo = 2u64;
    while lo <= n {
        let hi = (lo + SEGMENT as u64 - 1).min(n);
        let len = (hi - lo + 1) as usize;
        seg[..len].fill(true);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let start = (p * p).max(lo.div_ceil(p) * p);
            let mut m = start;
            while m <= hi {
                seg[(m - lo) as usize] = false;
                m += p;
            }
        }
        for (k, &flag) in seg[..len].iter().enumerate() {
            if flag {
                visit(lo + k as u64);
            }
        }
        lo = hi + 1;
    }
    Ok(())
}

/// All primes `≤ n`.
pub fn primes_up_to(n: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for_each_prime(n, |p| out.push(p))?;
    Ok(out)
}

/// π(n).
pub fn prime_pi(n: u64) -> Result<u64> {
    let mut c = 0;
    for_each_prime(n, |_| c += 1)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn primes_to_ten() {
        assert_eq!(primes_up_to(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(2).unwrap(), vec![2]);
        assert!(primes_up_to(1).unwrap().is_empty());
    }

    #[test]
    fn matches_trial_division_across_segments() {
        let n = 600_000;
        let ps = primes_up_to(n).unwrap();
        let brute: Vec<u64> = (0..=n).filter(|&k| trial_division(k)).collect();
        assert_eq!(ps, brute);
    }

    #[test]
    fn known_counts() {
        assert_eq!(prime_pi(100).unwrap(), 25);
        assert_eq!(prime_pi(1_000_000).unwrap(), 78_498);
    }

    #[test]
    fn bound_is_enforced() {
        assert!(matches!(prime_pi(SIEVE_MAX + 1), Err(Error::Capacity { .. })));
    }
}
