//! Fuzzy partial string similarity.
//!
//! `partial_ratio(a, b)` compares the shorter string `s` against every
//! alignment window of the longer string `l` and keeps the best
//! indel-normalized score `100 * (1 - indel(s, w) / (|s| + |w|))`. Windows are
//! every length-`|s|` substring of `l` plus the partial windows that hang off
//! either end: the prefixes `l[..k]` and suffixes `l[|l|-k..]` for
//! `1 <= k < |s|`. When both strings have the same length both directions are
//! scored. Inputs are lowercased first and compared per Unicode scalar.

/// Indel-normalized similarity of two strings in `[0, 100]`.
pub fn ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    if a.is_empty() && b.is_empty() {
        return 100.0;
    }
    score(a.len(), b.len(), lcs(&a, &b))
}

fn score(ls: usize, lw: usize, lcs: usize) -> f64 {
    let total = ls + lw;
    let indel = total - 2 * lcs;
    100.0 * (1.0 - indel as f64 / total as f64)
}

/// Longest common subsequence length by dynamic programming.
fn lcs(a: &[char], b: &[char]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for &ca in a {
        let mut diag = 0;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ca == cb { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Bit-parallel LCS against a fixed pattern of at most 64 chars.
struct PatternBits {
    len: usize,
    masks: Vec<(char, u64)>,
}

impl PatternBits {
    fn new(pattern: &[char]) -> Option<Self> {
        if pattern.len() > 64 {
            return None;
        }
        let mut masks: Vec<(char, u64)> = Vec::new();
        for (i, &c) in pattern.iter().enumerate() {
            match masks.iter_mut().find(|(m, _)| *m == c) {
                Some((_, bits)) => *bits |= 1 << i,
                None => masks.push((c, 1 << i)),
            }
        }
        Some(PatternBits { len: pattern.len(), masks })
    }

    fn lcs(&self, text: &[char]) -> usize {
        let full = if self.len == 64 { u64::MAX } else { (1u64 << self.len) - 1 };
        let mut v = full;
        for c in text {
            let m = self.masks.iter().find(|(p, _)| p == c).map_or(0, |(_, b)| *b);
            let u = v & m;
            v = (v.wrapping_add(u) | (v - u)) & full;
        }
        self.len - v.count_ones() as usize
    }
}

fn best_window_score(s: &[char], l: &[char]) -> f64 {
    let bits = PatternBits::new(s);
    let lcs_with = |w: &[char]| match &bits {
        Some(b) => b.lcs(w),
        None => lcs(s, w),
    };
    let n = s.len();
    let mut best = 0.0f64;
    let mut consider = |w: &[char]| {
        let sc = score(n, w.len(), lcs_with(w));
        if sc > best {
            best = sc;
        }
        best >= 100.0
    };
    for start in 0..=(l.len() - n) {
        if consider(&l[start..start + n]) {
            return 100.0;
        }
    }
    for k in 1..n {
        if consider(&l[..k]) || consider(&l[l.len() - k..]) {
            return 100.0;
        }
    }
    best
}

/// Best alignment score of the shorter string inside the longer, in `[0, 100]`.
pub fn partial_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    if a.len() == b.len() {
        return best_window_score(&a, &b).max(best_window_score(&b, &a));
    }
    let (s, l) = if a.len() < b.len() { (&a, &b) } else { (&b, &a) };
    best_window_score(s, l)
}
