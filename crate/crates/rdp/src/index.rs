//! Ranking of fixed-length symbol sequences.
//!
//! Exact small-blocklength evaluations enumerate `alphabet^n` by treating a
//! sequence as an `n`-digit base-`k` number, most significant symbol first.

/// `k^n` with an overflow check; sequence spaces must fit in a `usize`.
pub fn pow(k: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(k)?;
    }
    Some(acc)
}

/// Rank of a sequence of symbol indices over an alphabet of size `k`.
pub fn rank(seq: &[usize], k: usize) -> usize {
    seq.iter().fold(0, |acc, &s| {
        debug_assert!(s < k);
        acc * k + s
    })
}

/// Inverse of [`rank`]: the `idx`-th sequence of length `n` over `k` symbols.
pub fn unrank(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut seq = vec![0; n];
    for slot in seq.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    seq
}

/// Writes the `idx`-th sequence into a scratch buffer, avoiding allocation in
/// enumeration loops.
pub fn unrank_into(mut idx: usize, k: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
}
