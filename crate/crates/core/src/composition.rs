//! Enumeration of source types (compositions) with multinomial weights.
//!
//! A length-k sequence's probability depends only on its letter counts, so
//! exact block computations walk compositions instead of |V|^k sequences.

use crate::error::{Error, Result};

/// Largest number of compositions an exact enumeration may walk.
pub const COMPOSITION_CAP: u128 = 10_000_000;

/// Number of compositions of `k` into `m` ordered nonnegative parts,
/// i.e. C(k+m-1, m-1), saturating at `u128::MAX`.
pub fn composition_count(k: usize, m: usize) -> u128 {
    assert!(m >= 1);
    binomial(k as u128 + m as u128 - 1, m as u128 - 1)
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 1..=r {
        // acc * (n - r + i) stays exact unless it overflows, then saturate.
        match acc.checked_mul(n - r + i) {
            Some(v) => acc = v / i,
            None => return u128::MAX,
        }
    }
    acc
}

/// Errors out when enumerating compositions of `k` into `m` parts would
/// exceed the cap.
pub fn check_cap(k: usize, m: usize) -> Result<u128> {
    let count = composition_count(k, m);
    if count > COMPOSITION_CAP {
        Err(Error::EnumerationCapExceeded {
            size: count,
            cap: COMPOSITION_CAP,
        })
    } else {
        Ok(count)
    }
}

/// Visits every composition of `k` into `m` parts. The visitor borrows a
/// shared buffer; copy it if the counts must outlive the call.
pub fn for_each_composition<F: FnMut(&[usize])>(k: usize, m: usize, mut visit: F) {
    assert!(m >= 1);
    let mut buf = vec![0usize; m];
    descend(k, 0, &mut buf, &mut visit);
}

fn descend<F: FnMut(&[usize])>(remaining: usize, idx: usize, buf: &mut Vec<usize>, visit: &mut F) {
    if idx == buf.len() - 1 {
        buf[idx] = remaining;
        visit(buf);
        return;
    }
    for c in 0..=remaining {
        buf[idx] = c;
        descend(remaining - c, idx + 1, buf, visit);
    }
}

/// Cumulative table of ln(i!) for i in 0..=n.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// ln of the multinomial coefficient k! / prod(counts!).
pub fn ln_multinomial(ln_fact: &[f64], k: usize, counts: &[usize]) -> f64 {
    debug_assert_eq!(counts.iter().sum::<usize>(), k);
    ln_fact[k] - counts.iter().map(|&c| ln_fact[c]).sum::<f64>()
}
