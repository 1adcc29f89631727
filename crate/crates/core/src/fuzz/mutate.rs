use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

/// Bytes favoured by the insert operator.
pub const INTERESTING: [u8; 5] = [0x00, 0xFF, 0x7F, 0x80, b'*'];

/// Upper bound on the edit distance of [`mutate_slight`].
pub const SLIGHT_EDIT_BUDGET: usize = 4;

/// Small edit: 1 to 4 of bit flip, byte replace, interesting-byte insert and
/// two-byte overwrite, touching at most four positions and inserting at most
/// one byte.
pub fn mutate_slight<R: Rng + ?Sized>(seed: &[u8], rng: &mut R) -> Vec<u8> {
    if seed.is_empty() {
        return vec![rng.gen()];
    }
    let mut out = seed.to_vec();
    let ops = rng.gen_range(1..=4);
    let mut budget = SLIGHT_EDIT_BUDGET;
    let mut inserted = false;
    for _ in 0..ops {
        if budget == 0 {
            break;
        }
        match rng.gen_range(0..4) {
            0 => {
                let i = rng.gen_range(0..out.len());
                out[i] ^= 1 << rng.gen_range(0..8);
                budget -= 1;
            }
            2 if !inserted => {
                let i = rng.gen_range(0..=out.len());
                out.insert(i, INTERESTING[rng.gen_range(0..INTERESTING.len())]);
                inserted = true;
                budget -= 1;
            }
            3 if budget >= 2 && out.len() >= 2 => {
                let i = rng.gen_range(0..out.len() - 1);
                out[i] = rng.gen();
                out[i + 1] = rng.gen();
                budget -= 2;
            }
            _ => {
                let i = rng.gen_range(0..out.len());
                out[i] = rng.gen();
                budget -= 1;
            }
        }
    }
    out
}

/// `a[..cut_a]` followed by `b[cut_b..]`.
pub fn splice(a: &[u8], b: &[u8], cut_a: usize, cut_b: usize) -> Vec<u8> {
    let mut out = a[..cut_a.min(a.len())].to_vec();
    out.extend_from_slice(&b[cut_b.min(b.len())..]);
    out
}

/// Structural edit: splice with another pool seed, overwrite a region, or
/// insert/delete a region. Regions cover up to a quarter of the seed. The
/// output length stays within `[1, 4 * seed.len()]`.
pub fn mutate_heavy<R: Rng + ?Sized>(seed: &[u8], pool: &[&[u8]], rng: &mut R) -> Vec<u8> {
    if seed.is_empty() {
        return vec![rng.gen()];
    }
    let len = seed.len();
    let partners: Vec<&[u8]> = pool.iter().copied().filter(|p| !p.is_empty() && *p != seed).collect();
    let choices = if partners.is_empty() { 2 } else { 3 };
    let lo = (len / 5).max(1);
    let region = rng.gen_range(lo..=(len / 4).max(lo));
    match rng.gen_range(0..choices) {
        0 => {
            let start = rng.gen_range(0..=len - region.min(len));
            let mut out = seed.to_vec();
            for b in &mut out[start..start + region.min(len)] {
                *b = rng.gen();
            }
            out
        }
        1 => {
            let mut out = seed.to_vec();
            if len > region && rng.gen() {
                let start = rng.gen_range(0..=len - region);
                out.drain(start..start + region);
            } else {
                let at = rng.gen_range(0..=len);
                let fresh: Vec<u8> = (0..region).map(|_| rng.gen()).collect();
                out.splice(at..at, fresh);
            }
            out
        }
        _ => {
            let other = partners[rng.gen_range(0..partners.len())];
            let cut_a = rng.gen_range(1..=len);
            let cut_b = rng.gen_range(0..other.len());
            let mut out = splice(seed, other, cut_a, cut_b);
            out.truncate(4 * len);
            out
        }
    }
}

/// Levenshtein distance.
pub fn edit_distance(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
