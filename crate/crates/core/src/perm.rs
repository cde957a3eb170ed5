//! Permutations of {0..n-1} in one-line form and as words in adjacent
//! transpositions.
//!
//! Composition: (π·σ)(j) = π(σ(j)). A word [k1, k2, ..] denotes
//! τ_{k1}τ_{k2}⋯ with τ_k swapping k and k+1 (0-based).

pub type Perm = Vec<usize>;

pub fn identity(n: usize) -> Perm {
    (0..n).collect()
}

pub fn compose(p: &[usize], q: &[usize]) -> Perm {
    q.iter().map(|&j| p[j]).collect()
}

pub fn inverse(p: &[usize]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &j in p {
        if j >= p.len() || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

/// One-line form of τ_{k1}⋯τ_{km}.
pub fn from_word(n: usize, word: &[usize]) -> Perm {
    let mut p = identity(n);
    // right multiplication by τ_k swaps one-line positions k, k+1
    for &k in word {
        p.swap(k, k + 1);
    }
    p
}

/// A reduced word for `p` (length = inversion count).
pub fn reduced_word(p: &[usize]) -> Vec<usize> {
    let mut a = p.to_vec();
    let mut swaps = Vec::new();
    // bubble sort: p·τ_{s1}⋯τ_{sm} = id, hence p = τ_{sm}⋯τ_{s1}
    loop {
        let mut done = true;
        for k in 0..a.len().saturating_sub(1) {
            if a[k] > a[k + 1] {
                a.swap(k, k + 1);
                swaps.push(k);
                done = false;
            }
        }
        if done {
            break;
        }
    }
    swaps.reverse();
    swaps
}

pub fn inversions(p: &[usize]) -> usize {
    let mut c = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                c += 1;
            }
        }
    }
    c
}

/// (−1)^{sign π}
pub fn sign(p: &[usize]) -> f64 {
    if inversions(p) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// All permutations of {0..n-1} in lexicographic order.
pub fn lexicographic(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut p = identity(n);
    loop {
        out.push(p.clone());
        // next permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    out
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// θ^π with (θ^π)_j = θ_{π(j)}.
pub fn permute_args<T: Copy>(theta: &[T], p: &[usize]) -> Vec<T> {
    p.iter().map(|&j| theta[j]).collect()
}
