//! Contractions C ∈ 𝒞_{n,k}, their permutations π_ρ, π_λ, π_C and π_a^b,
//! and the composition lemmas between them.
//!
//! Indices inside [`Contraction`] are 1-based as in the text; permutations
//! are 0-based one-line arrays from [`crate::perm`].

mod elements;

pub use elements::*;

use crate::error::{input, Error, Result};
use crate::perm::{self, Perm};
use serde::{Deserialize, Serialize};

/// Enumeration guard.
pub const MAX_ENUM_N: usize = 12;

/// Pairs (l_i, r_i); `rs` strictly increasing in 1..=k, `ls` distinct in k+1..=n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Contraction {
    pub n: usize,
    pub k: usize,
    pub rs: Vec<usize>,
    pub ls: Vec<usize>,
}

impl Contraction {
    pub fn new(n: usize, k: usize, rs: Vec<usize>, ls: Vec<usize>) -> Result<Self> {
        let c = Self { n, k, rs, ls };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(n: usize, k: usize) -> Self {
        Self { n, k, rs: vec![], ls: vec![] }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if k > n {
            return input(format!("sector k = {k} exceeds n = {n}"));
        }
        if self.rs.len() != self.ls.len() {
            return input("contraction: rs and ls differ in length");
        }
        if self.rs.iter().any(|&r| r < 1 || r > k) || self.rs.windows(2).any(|w| w[0] >= w[1]) {
            return input("contraction: rs must be strictly increasing in 1..=k");
        }
        if self.ls.iter().any(|&l| l <= k || l > n) {
            return input("contraction: ls must lie in k+1..=n");
        }
        let mut sorted = self.ls.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return input("contraction: ls must be pairwise distinct");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rs.is_empty()
    }

    /// u_i = card{l_j > l_i : j < i}, 0-based i.
    pub fn u(&self, i: usize) -> usize {
        self.ls[..i].iter().filter(|&&l| l > self.ls[i]).count()
    }

    /// Largest contracted left index, or k when C is empty.
    pub fn l_max(&self) -> usize {
        self.ls.iter().copied().max().unwrap_or(self.k)
    }

    /// Uncontracted right indices in increasing order.
    pub fn free_right(&self) -> Vec<usize> {
        (1..=self.k).filter(|r| !self.rs.contains(r)).collect()
    }

    /// Uncontracted left indices in increasing order.
    pub fn free_left(&self) -> Vec<usize> {
        (self.k + 1..=self.n).filter(|l| !self.ls.contains(l)).collect()
    }
}

/// A permutation carried in both forms; equality is one-line equality.
#[derive(Clone, Debug, Serialize)]
pub struct Permutation {
    /// 0-based transposition indices, τ_{w0}τ_{w1}⋯.
    pub word: Vec<usize>,
    pub one_line: Perm,
}

impl PartialEq for Permutation {
    fn eq(&self, other: &Self) -> bool {
        self.one_line == other.one_line
    }
}

impl Eq for Permutation {}

impl Permutation {
    pub fn from_word(n: usize, word: Vec<usize>) -> Self {
        let one_line = perm::from_word(n, &word);
        Self { word, one_line }
    }

    pub fn identity(n: usize) -> Self {
        Self { word: vec![], one_line: perm::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.one_line.len()
    }

    /// Product self·other; words concatenate.
    pub fn then(&self, other: &Self) -> Self {
        let mut word = self.word.clone();
        word.extend_from_slice(&other.word);
        Self { word, one_line: perm::compose(&self.one_line, &other.one_line) }
    }

    pub fn one_line_1based(&self) -> Vec<usize> {
        self.one_line.iter().map(|j| j + 1).collect()
    }
}

/// Builds from a 1-based τ word and checks against a 1-based two-line bottom row.
fn checked(n: usize, word_1: Vec<usize>, bottom_1: Vec<usize>, what: &str) -> Result<Permutation> {
    let p = Permutation::from_word(n, word_1.into_iter().map(|t| t - 1).collect());
    let two_line: Perm = bottom_1.into_iter().map(|j| j - 1).collect();
    if p.one_line != two_line {
        return Err(Error::Inconsistent(format!(
            "{what}: transposition form {:?} differs from two-line form {:?}",
            p.one_line_1based(),
            two_line.iter().map(|j| j + 1).collect::<Vec<_>>()
        )));
    }
    Ok(p)
}

/// π_a^b, moving a to b (1-based).
pub fn pi_a_b(n: usize, a: usize, b: usize) -> Result<Permutation> {
    if a < 1 || b < 1 || a > n || b > n {
        return input(format!("pi_a_b: a = {a}, b = {b} outside 1..={n}"));
    }
    let word: Vec<usize> = if a < b { (a..b).collect() } else { (b..a).rev().collect() };
    let bottom: Vec<usize> = (1..=n)
        .map(|j| {
            if a < b {
                match j {
                    j if j < a || j > b => j,
                    j if j == b => a,
                    j => j + 1,
                }
            } else {
                match j {
                    j if j < b || j > a => j,
                    j if j == b => a,
                    j => j - 1,
                }
            }
        })
        .collect();
    checked(n, word, bottom, "pi_a_b")
}

pub fn pi_rho(c: &Contraction) -> Result<Permutation> {
    c.validate()?;
    let k = c.k;
    let mut word = Vec::new();
    for (i0, &r) in c.rs.iter().enumerate() {
        let i = i0 + 1;
        word.extend(r + 1 - i..=k - i);
    }
    let mut bottom = c.free_right();
    bottom.extend(c.rs.iter().rev());
    bottom.extend(k + 1..=c.n);
    checked(c.n, word, bottom, "pi_rho")
}

pub fn pi_lambda(c: &Contraction) -> Result<Permutation> {
    c.validate()?;
    let k = c.k;
    let mut word = Vec::new();
    for (i0, &l) in c.ls.iter().enumerate() {
        let i = i0 + 1;
        word.extend((k + i..l + c.u(i0)).rev());
    }
    let mut bottom: Vec<usize> = (1..=k).collect();
    bottom.extend(&c.ls);
    bottom.extend(c.free_left());
    checked(c.n, word, bottom, "pi_lambda")
}

/// π_C = π_ρ·π_λ.
pub fn pi_c(c: &Contraction) -> Result<Permutation> {
    Ok(pi_rho(c)?.then(&pi_lambda(c)?))
}

/// Also usable as an alternative π_ρ from Eq. (permuShort).
pub fn pi_rho_short(c: &Contraction) -> Result<Permutation> {
    let mut p = Permutation::identity(c.n);
    for (i0, &r) in c.rs.iter().enumerate() {
        p = p.then(&pi_a_b(c.n, r - i0, c.k - i0)?);
    }
    Ok(p)
}

pub fn pi_lambda_short(c: &Contraction) -> Result<Permutation> {
    let mut p = Permutation::identity(c.n);
    for (i0, &l) in c.ls.iter().enumerate() {
        p = p.then(&pi_a_b(c.n, l + c.u(i0), c.k + i0 + 1)?);
    }
    Ok(p)
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// |C|!·C(k,|C|)·C(n−k,|C|).
pub fn contraction_count(n: usize, k: usize, len: usize) -> u128 {
    if k > n {
        return 0;
    }
    perm::factorial(len) * binom(k, len) * binom(n - k, len)
}

fn subsets(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for i in start..items.len() {
        cur.push(items[i]);
        subsets(items, size, i + 1, cur, out);
        cur.pop();
    }
}

fn arrangements(items: &[usize], size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for &x in items {
        if !cur.contains(&x) {
            cur.push(x);
            arrangements(items, size, cur, out);
            cur.pop();
        }
    }
}

/// All of 𝒞_{n,k}, the empty contraction included; ordered by length, then rs, then ls.
pub fn enumerate_contractions(n: usize, k: usize) -> Result<Vec<Contraction>> {
    if n > MAX_ENUM_N {
        return Err(Error::TooLarge { what: "n for contraction enumeration".into(), value: n, limit: MAX_ENUM_N });
    }
    if k > n {
        return input(format!("sector k = {k} exceeds n = {n}"));
    }
    let right: Vec<usize> = (1..=k).collect();
    let left: Vec<usize> = (k + 1..=n).collect();
    let mut out = Vec::new();
    for len in 0..=k.min(n - k) {
        let mut rss = Vec::new();
        subsets(&right, len, 0, &mut vec![], &mut rss);
        let mut lss = Vec::new();
        arrangements(&left, len, &mut vec![], &mut lss);
        for rs in &rss {
            for ls in &lss {
                out.push(Contraction { n, k, rs: rs.clone(), ls: ls.clone() });
            }
        }
    }
    Ok(out)
}

/// π_ρ·π_λ = π_λ·π_ρ.
pub fn verify_commutation(c: &Contraction) -> Result<bool> {
    let (r, l) = (pi_rho(c)?, pi_lambda(c)?);
    Ok(r.then(&l) == l.then(&r))
}

/// C′ = C ∪ {(k+1, r)} with the new pair at its sorted slot v_r.
pub fn extend_right(c: &Contraction, r: usize) -> Result<(Contraction, usize)> {
    c.validate()?;
    let k = c.k;
    if k + 1 > c.n || c.ls.contains(&(k + 1)) {
        return input("extension lemma (right): k+1 must exist and be uncontracted");
    }
    if r < 1 || r > k || c.rs.contains(&r) {
        return input(format!("extension lemma (right): r = {r} must be a free right index"));
    }
    let v = c.rs.iter().filter(|&&x| x < r).count();
    let mut rs = c.rs.clone();
    let mut ls = c.ls.clone();
    rs.insert(v, r);
    ls.insert(v, k + 1);
    Ok((Contraction::new(c.n, k, rs, ls)?, v))
}

/// π_{C′} = π_C·π_{r−v_r}^{k−v_r}·π_{k+1+|C|}^{k+1+v_r}, with both factor identities.
pub fn verify_extension_lemma_right(c: &Contraction, r: usize) -> Result<bool> {
    verify_extension_right_shifted(c, r, 0)
}

/// The right extension identity with v_r replaced by v_r + shift; a nonzero
/// shift is a mutation control and a factor that stops existing counts as
/// a failure.
fn verify_extension_right_shifted(c: &Contraction, r: usize, shift: usize) -> Result<bool> {
    let (cp, v) = extend_right(c, r)?;
    let v = v + shift;
    let (n, k, len) = (c.n, c.k, c.len());
    if v >= r || v > k {
        return Ok(false);
    }
    let (Ok(a), Ok(b)) = (pi_a_b(n, r - v, k - v), pi_a_b(n, k + 1 + len, k + 1 + v)) else {
        return Ok(false);
    };
    let rho_ok = pi_rho(&cp)? == pi_rho(c)?.then(&a);
    let lambda_ok = pi_lambda(&cp)? == pi_lambda(c)?.then(&b);
    let c_ok = pi_c(&cp)? == pi_c(c)?.then(&a).then(&b);
    Ok(rho_ok && lambda_ok && c_ok)
}

/// C″ = {(l, k+1)} ∪ C̃, where C̃ lives in sector k+1 = `c.k`.
pub fn extend_left(c: &Contraction, l: usize) -> Result<(Contraction, usize)> {
    c.validate()?;
    let k1 = c.k;
    if k1 == 0 || c.rs.contains(&k1) {
        return input("extension lemma (left): k+1 must exist and be uncontracted as a right index");
    }
    if l <= k1 || l > c.n || c.ls.contains(&l) {
        return input(format!("extension lemma (left): l = {l} must be a free left index"));
    }
    let u = c.ls.iter().filter(|&&x| x > l).count();
    let mut rs = c.rs.clone();
    let mut ls = c.ls.clone();
    // k+1 is the largest right index, so the pair goes last
    rs.push(k1);
    ls.push(l);
    Ok((Contraction::new(c.n, k1, rs, ls)?, u))
}

/// π_{C″} = π_{C̃}·π_{l+u_l}^{k+2+|C̃|}, together with π_{ρ″} = π_ρ̃.
pub fn verify_extension_lemma_left(c: &Contraction, l: usize) -> Result<bool> {
    let (cpp, u) = extend_left(c, l)?;
    let a = pi_a_b(c.n, l + u, c.k + 1 + c.len())?;
    let rho_ok = pi_rho(&cpp)? == pi_rho(c)?;
    let c_ok = pi_c(&cpp)? == pi_c(c)?.then(&a);
    Ok(rho_ok && c_ok)
}

/// (Σ_C √((n−k−|C|)!(k−|C|)!), 2ⁿ√(n!)).
pub fn contraction_sum_bound(n: usize, k: usize) -> Result<(f64, f64)> {
    let fact = |m: usize| perm::factorial(m) as f64;
    let lhs = enumerate_contractions(n, k)?.iter().map(|c| (fact(n - k - c.len()) * fact(k - c.len())).sqrt()).sum();
    Ok((lhs, 2f64.powi(n as i32) * fact(n).sqrt()))
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub n_max: usize,
    pub checked: usize,
    /// First failing case, null on success.
    pub counterexample: Option<serde_json::Value>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn run(lemma: &str, n_max: usize, mut each: impl FnMut(&Contraction) -> Result<(usize, Option<serde_json::Value>)>) -> Result<LemmaReport> {
    let mut checked = 0;
    for n in 0..=n_max {
        for k in 0..=n {
            for c in enumerate_contractions(n, k)? {
                let (m, bad) = each(&c)?;
                checked += m;
                if bad.is_some() {
                    return Ok(LemmaReport { lemma: lemma.into(), n_max, checked, counterexample: bad });
                }
            }
        }
    }
    Ok(LemmaReport { lemma: lemma.into(), n_max, checked, counterexample: None })
}

/// Exhaustive checks over every admissible contraction with n ≤ `n_max`.
/// A two-line mismatch surfaces as [`Error::Inconsistent`].
pub fn verify_all_lemmas(n_max: usize) -> Result<Vec<LemmaReport>> {
    verify_all_lemmas_with(n_max, &LemmaHooks::default())
}

/// Mutation controls for the lemma runner.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaHooks {
    /// Added to v_r in the right extension identity; nonzero must fail.
    #[serde(default)]
    pub v_r_shift: usize,
}

pub fn verify_all_lemmas_with(n_max: usize, hooks: &LemmaHooks) -> Result<Vec<LemmaReport>> {
    let as_json = |c: &Contraction| serde_json::to_value(c).expect("plain data serializes");
    let mut out = vec![run("two-line", n_max, |c| {
        let ok = pi_rho(c)? == pi_rho_short(c)? && pi_lambda(c)? == pi_lambda_short(c)?;
        Ok((1, (!ok).then(|| as_json(c))))
    })?];
    out.push(run("commutation", n_max, |c| Ok((1, (!verify_commutation(c)?).then(|| as_json(c)))))?);
    out.push(run("extension-right", n_max, |c| {
        if c.k + 1 > c.n || c.ls.contains(&(c.k + 1)) {
            return Ok((0, None));
        }
        let mut m = 0;
        for r in c.free_right() {
            m += 1;
            if !verify_extension_right_shifted(c, r, hooks.v_r_shift)? {
                return Ok((m, Some(serde_json::json!({ "contraction": as_json(c), "r": r }))));
            }
        }
        Ok((m, None))
    })?);
    out.push(run("extension-left", n_max, |c| {
        if c.k == 0 || c.rs.contains(&c.k) {
            return Ok((0, None));
        }
        let mut m = 0;
        for l in c.free_left() {
            m += 1;
            if !verify_extension_lemma_left(c, l)? {
                return Ok((m, Some(serde_json::json!({ "contraction": as_json(c), "l": l }))));
            }
        }
        Ok((m, None))
    })?);
    out.push(count_report(n_max.max(9).min(MAX_ENUM_N)));
    out.push(bound_report(n_max.max(10).min(MAX_ENUM_N))?);
    Ok(out)
}

fn count_report(n_max: usize) -> LemmaReport {
    let mut checked = 0;
    for n in 0..=n_max {
        for k in 0..=n {
            let all = enumerate_contractions(n, k).expect("guarded n");
            for len in 0..=k.min(n - k) {
                checked += 1;
                let got = all.iter().filter(|c| c.len() == len).count() as u128;
                let want = contraction_count(n, k, len);
                if got != want {
                    let bad = serde_json::json!({ "n": n, "k": k, "len": len, "enumerated": got as u64, "closed_form": want as u64 });
                    return LemmaReport { lemma: "count".into(), n_max, checked, counterexample: Some(bad) };
                }
            }
        }
    }
    LemmaReport { lemma: "count".into(), n_max, checked, counterexample: None }
}

fn bound_report(n_max: usize) -> Result<LemmaReport> {
    let mut checked = 0;
    for n in 0..=n_max {
        for k in 0..=n {
            checked += 1;
            let (lhs, rhs) = contraction_sum_bound(n, k)?;
            if lhs > rhs {
                let bad = serde_json::json!({ "n": n, "k": k, "lhs": lhs, "rhs": rhs });
                return Ok(LemmaReport { lemma: "sum-bound".into(), n_max, checked, counterexample: Some(bad) });
            }
        }
    }
    Ok(LemmaReport { lemma: "sum-bound".into(), n_max, checked, counterexample: None })
}
