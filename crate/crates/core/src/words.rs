//! Reduced words in a free group, their evaluation into `SL₂`, freeness
//! certificates and the exact return probability of the simple random walk.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Mat2, Rational, Result, Scalar};

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub index: u16,
    pub inverse: bool,
}

impl Letter {
    pub const fn gen(index: u16) -> Self {
        Letter { index, inverse: false }
    }

    pub const fn inv(index: u16) -> Self {
        Letter { index, inverse: true }
    }

    pub fn inverted(self) -> Self {
        Letter { index: self.index, inverse: !self.inverse }
    }

    /// Position in the alphabet order `g₀, g₀⁻¹, g₁, g₁⁻¹, …`.
    pub fn code(self) -> usize {
        2 * self.index as usize + self.inverse as usize
    }

    pub fn from_code(code: usize) -> Self {
        Letter { index: (code / 2) as u16, inverse: code % 2 == 1 }
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code().cmp(&other.code())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Fails if two adjacent letters cancel.
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if let Some(w) = letters.windows(2).find(|w| w[1] == w[0].inverted()) {
            return Err(Error::Invalid(format!(
                "word is not reduced at {}{}",
                fmt_letter(w[0]),
                fmt_letter(w[1])
            )));
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverted()).collect())
    }

    /// `self^k` (reduced).
    pub fn pow(&self, k: usize) -> Word {
        (0..k).fold(Word::empty(), |acc, _| acc.concat_reduce(self))
    }

    /// Free-group product: concatenation with cancellation at the seam.
    pub fn concat_reduce(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        let mut rest = other.0.iter().peekable();
        while let (Some(&last), Some(&&next)) = (out.last(), rest.peek()) {
            if next == last.inverted() {
                out.pop();
                rest.next();
            } else {
                break;
            }
        }
        out.extend(rest);
        Word(out)
    }

    /// Highest generator index used plus one.
    pub fn rank_needed(&self) -> usize {
        self.0.iter().map(|l| l.index as usize + 1).max().unwrap_or(0)
    }
}

fn fmt_letter(l: Letter) -> String {
    format!("{}{}", if l.inverse { '-' } else { '+' }, l.index)
}

impl fmt::Display for Word {
    /// Comma separated signed indices, e.g. `+0,-1,+0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|&l| fmt_letter(l)).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let letters = s
            .split(',')
            .map(|t| {
                let t = t.trim().replace('\u{2212}', "-");
                let (inverse, digits) = match t.as_bytes().first() {
                    Some(b'-') => (true, &t[1..]),
                    Some(b'+') => (false, &t[1..]),
                    _ => (false, &t[..]),
                };
                let index = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad letter {t:?}")))?;
                Ok(Letter { index, inverse })
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(letters)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of reduced words of length exactly `m` over `rank` generators.
pub fn count_exact(rank: usize, m: usize) -> u128 {
    if m == 0 {
        return 1;
    }
    let base = 2 * rank as u128 - 1;
    (2 * rank as u128).saturating_mul(base.saturating_pow(m as u32 - 1))
}

/// Number of reduced words of length at most `len`.
pub fn count_up_to(rank: usize, len: usize) -> u128 {
    (0..=len).fold(0u128, |s, m| s.saturating_add(count_exact(rank, m)))
}

fn check_budget(needed: u128, budget: u64) -> Result<()> {
    if needed > budget as u128 {
        Err(Error::BudgetExceeded { needed: needed.min(u64::MAX as u128) as u64, budget })
    } else {
        Ok(())
    }
}

/// Shortlex stream of all reduced words of length `≤ max_len`.
pub struct ReducedWords {
    alphabet: usize,
    max_len: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for ReducedWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let cur = self.current.take()?;
        let word = Word(cur.iter().map(|&c| Letter::from_code(c)).collect());
        self.current = advance(cur, self.alphabet, self.max_len);
        Some(word)
    }
}

fn cancels(prev: usize, next: usize) -> bool {
    prev / 2 == next / 2 && prev != next
}

/// Smallest letter code `≥ from` that does not cancel against `prev`.
fn next_code(prev: Option<usize>, from: usize, alphabet: usize) -> Option<usize> {
    (from..alphabet).find(|&c| prev.is_none_or(|p| !cancels(p, c)))
}

fn fill_min(word: &mut [usize], start: usize, alphabet: usize) {
    for i in start..word.len() {
        let prev = if i == 0 { None } else { Some(word[i - 1]) };
        word[i] = next_code(prev, 0, alphabet).expect("alphabet has at least two letters");
    }
}

fn advance(mut word: Vec<usize>, alphabet: usize, max_len: usize) -> Option<Vec<usize>> {
    for i in (0..word.len()).rev() {
        let prev = if i == 0 { None } else { Some(word[i - 1]) };
        if let Some(c) = next_code(prev, word[i] + 1, alphabet) {
            word[i] = c;
            fill_min(&mut word, i + 1, alphabet);
            return Some(word);
        }
    }
    let len = word.len() + 1;
    if len > max_len {
        return None;
    }
    let mut word = vec![0; len];
    fill_min(&mut word, 0, alphabet);
    Some(word)
}

/// All reduced words of length `≤ length` over `rank` generators, shortest
/// first and lexicographic within a length.
pub fn enumerate_reduced(rank: usize, length: usize, budget: u64) -> Result<ReducedWords> {
    if rank == 0 {
        return Err(Error::Invalid("rank must be at least 1".into()));
    }
    check_budget(count_up_to(rank, length), budget)?;
    Ok(ReducedWords { alphabet: 2 * rank, max_len: length, current: Some(Vec::new()) })
}

/// The square words `w²` where `w = s₁⋯s_ℓ` is reduced over two generators
/// with `s₁ = g₀` and `s_ℓ = g₁`. Returned in lexicographic order of `w`.
pub fn build_w(ell: usize, budget: u64) -> Result<Vec<Word>> {
    if ell < 2 {
        return Err(Error::Invalid("ell must be at least 2".into()));
    }
    check_budget(3u128.saturating_pow(ell as u32 - 1), budget)?;
    let first = Letter::gen(0).code();
    let last = Letter::gen(1).code();
    let mut out = Vec::new();
    let mut path = vec![first];
    build_w_rec(&mut path, ell, last, &mut out);
    Ok(out
        .into_iter()
        .map(|codes| {
            let w = Word(codes.into_iter().map(Letter::from_code).collect());
            w.concat_reduce(&w)
        })
        .collect())
}

fn build_w_rec(path: &mut Vec<usize>, ell: usize, last: usize, out: &mut Vec<Vec<usize>>) {
    let prev = *path.last().unwrap();
    if path.len() == ell - 1 {
        if !cancels(prev, last) {
            let mut w = path.clone();
            w.push(last);
            out.push(w);
        }
        return;
    }
    for c in 0..4 {
        if !cancels(prev, c) {
            path.push(c);
            build_w_rec(path, ell, last, out);
            path.pop();
        }
    }
}

/// Ordered product of the letter images; the empty word maps to the identity.
pub fn word_eval<T: Scalar>(w: &Word, gens: &[Mat2<T>]) -> Mat2<T> {
    let inverses: Vec<Mat2<T>> = gens.iter().map(Mat2::inv).collect();
    word_eval_with(w, gens, &inverses)
}

/// As [`word_eval`] with precomputed inverses.
pub fn word_eval_with<T: Scalar>(w: &Word, gens: &[Mat2<T>], inverses: &[Mat2<T>]) -> Mat2<T> {
    w.letters().iter().fold(Mat2::identity(), |acc, l| {
        let m = if l.inverse { &inverses[l.index as usize] } else { &gens[l.index as usize] };
        &acc * m
    })
}

/// Outcome of a bounded freeness search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Certificate {
    Pass { depth: usize },
    Fail { witness: Word },
}

impl Certificate {
    pub fn passed(&self) -> bool {
        matches!(self, Certificate::Pass { .. })
    }
}

/// Checks that no nonempty reduced word of length `≤ depth` over `gens`
/// evaluates to the identity. On failure the witness is a shortest such
/// word, lexicographically least among the shortest.
pub fn freeness_certificate<T: Scalar>(
    gens: &[Mat2<T>],
    depth: usize,
    budget: u64,
) -> Result<Certificate> {
    if gens.is_empty() || depth == 0 {
        return Err(Error::Invalid("need at least one generator and depth >= 1".into()));
    }
    check_budget(count_up_to(gens.len(), depth), budget)?;
    let letters: Vec<Mat2<T>> = (0..2 * gens.len())
        .map(|code| {
            let l = Letter::from_code(code);
            let g = &gens[l.index as usize];
            if l.inverse { g.inv() } else { g.clone() }
        })
        .collect();
    let best = (0..letters.len())
        .into_par_iter()
        .filter_map(|first| {
            let mut search = Search { letters: &letters, limit: depth, path: vec![first], best: None };
            search.descend(letters[first].clone());
            search.best
        })
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(match best {
        Some(codes) => Certificate::Fail {
            witness: Word(codes.into_iter().map(Letter::from_code).collect()),
        },
        None => Certificate::Pass { depth },
    })
}

struct Search<'a, T> {
    letters: &'a [Mat2<T>],
    limit: usize,
    path: Vec<usize>,
    best: Option<Vec<usize>>,
}

impl<T: Scalar> Search<'_, T> {
    fn descend(&mut self, product: Mat2<T>) {
        if product.is_identity() {
            self.limit = self.path.len() - 1;
            self.best = Some(self.path.clone());
            return;
        }
        if self.path.len() >= self.limit {
            return;
        }
        let prev = *self.path.last().unwrap();
        for c in 0..self.letters.len() {
            if cancels(prev, c) {
                continue;
            }
            if self.path.len() >= self.limit {
                break;
            }
            self.path.push(c);
            let next = &product * &self.letters[c];
            self.descend(next);
            self.path.pop();
        }
    }
}

const M61: u64 = (1 << 61) - 1;

fn mulmod61(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let r = (x as u64 & M61) + (x >> 61) as u64;
    if r >= M61 { r - M61 } else { r }
}

fn addmod61(a: u64, b: u64) -> u64 {
    let r = a + b;
    if r >= M61 { r - M61 } else { r }
}

fn to_m61(x: &crate::Rational) -> Option<u64> {
    let p = BigInt::from(M61);
    let reduce = |v: &BigInt| -> u64 { v.mod_floor(&p).to_u64().expect("reduced") };
    let den = reduce(x.denom());
    if den == 0 {
        return None;
    }
    // Fermat inverse
    let (mut base, mut e, mut inv) = (den, M61 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            inv = mulmod61(inv, base);
        }
        base = mulmod61(base, base);
        e >>= 1;
    }
    Some(mulmod61(reduce(x.numer()), inv))
}

type ModMat = [u64; 4];

fn mod_mul(x: &ModMat, y: &ModMat) -> ModMat {
    [
        addmod61(mulmod61(x[0], y[0]), mulmod61(x[1], y[2])),
        addmod61(mulmod61(x[0], y[1]), mulmod61(x[1], y[3])),
        addmod61(mulmod61(x[2], y[0]), mulmod61(x[3], y[2])),
        addmod61(mulmod61(x[2], y[1]), mulmod61(x[3], y[3])),
    ]
}

/// [`freeness_certificate`] for exact matrices. Products are first reduced
/// modulo the prime `2⁶¹ − 1`; a word whose image is not the identity there
/// is not the identity, and the rare survivors are evaluated exactly.
pub fn freeness_certificate_exact(
    gens: &[crate::Mat2Q],
    depth: usize,
    budget: u64,
) -> Result<Certificate> {
    if gens.is_empty() || depth == 0 {
        return Err(Error::Invalid("need at least one generator and depth >= 1".into()));
    }
    check_budget(count_up_to(gens.len(), depth), budget)?;
    let exact: Vec<crate::Mat2Q> = (0..2 * gens.len())
        .map(|code| {
            let l = Letter::from_code(code);
            let g = &gens[l.index as usize];
            if l.inverse { g.inv() } else { g.clone() }
        })
        .collect();
    let reduced: Option<Vec<ModMat>> = exact
        .iter()
        .map(|m| {
            let e = m.entries();
            Some([to_m61(e[0])?, to_m61(e[1])?, to_m61(e[2])?, to_m61(e[3])?])
        })
        .collect();
    let Some(letters) = reduced else {
        return freeness_certificate(gens, depth, budget);
    };
    let best = (0..letters.len())
        .into_par_iter()
        .filter_map(|first| {
            let mut search =
                ModSearch { letters: &letters, exact: &exact, limit: depth, path: vec![first], best: None };
            search.descend(letters[first]);
            search.best
        })
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(match best {
        Some(codes) => Certificate::Fail {
            witness: Word(codes.into_iter().map(Letter::from_code).collect()),
        },
        None => Certificate::Pass { depth },
    })
}

struct ModSearch<'a> {
    letters: &'a [ModMat],
    exact: &'a [crate::Mat2Q],
    limit: usize,
    path: Vec<usize>,
    best: Option<Vec<usize>>,
}

impl ModSearch<'_> {
    fn is_identity(&self, product: &ModMat) -> bool {
        *product == [1, 0, 0, 1]
            && self
                .path
                .iter()
                .fold(crate::Mat2Q::identity(), |acc, &c| &acc * &self.exact[c])
                .is_identity()
    }

    fn descend(&mut self, product: ModMat) {
        if self.is_identity(&product) {
            self.limit = self.path.len() - 1;
            self.best = Some(self.path.clone());
            return;
        }
        if self.path.len() >= self.limit {
            return;
        }
        let prev = *self.path.last().unwrap();
        for c in 0..self.letters.len() {
            if cancels(prev, c) {
                continue;
            }
            if self.path.len() >= self.limit {
                break;
            }
            self.path.push(c);
            let next = mod_mul(&product, &self.letters[c]);
            self.descend(next);
            self.path.pop();
        }
    }
}

/// Distribution of the distance from the origin after `t` steps of the
/// simple random walk on the free group of rank `k`, as path counts out of
/// `(2k)^t`.
pub fn kesten_distance_counts(rank_k: usize, t: usize) -> Vec<BigUint> {
    let forward = BigUint::from(2 * rank_k as u64 - 1);
    let mut counts = vec![BigUint::one()];
    for _ in 0..t {
        let mut next = vec![BigUint::zero(); counts.len() + 1];
        for (m, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if m == 0 {
                next[1] += c * BigUint::from(2 * rank_k as u64);
            } else {
                next[m - 1] += c;
                next[m + 1] += c * &forward;
            }
        }
        counts = next;
    }
    counts
}

/// Exact probability `p⁽ᵗ⁾(e, e)` that the simple random walk on the free
/// group of rank `k` is back at the origin after `t` steps.
pub fn kesten_return_prob(rank_k: usize, t: usize) -> Result<Rational> {
    if rank_k < 2 {
        return Err(Error::Invalid("rank must be at least 2".into()));
    }
    let counts = kesten_distance_counts(rank_k, t);
    let total = BigUint::from(2 * rank_k as u64).pow(t as u32);
    Ok(Rational::new(BigInt::from(counts[0].clone()), BigInt::from(total)))
}

/// The limit `√(2k−1)/k` of `p⁽ᵗ⁾(e,e)^{1/t}`.
pub fn kesten_limit(rank_k: usize) -> f64 {
    let k = rank_k as f64;
    (2.0 * k - 1.0).sqrt() / k
}

/// `p⁽ᵗ⁾(e,e)^{1/t}` evaluated through logarithms.
pub fn kesten_root(rank_k: usize, t: usize) -> Result<f64> {
    let p = kesten_return_prob(rank_k, t)?;
    if p.is_zero() {
        return Ok(0.0);
    }
    Ok((crate::rational::ln(&p) / t as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::Mat2Q;

    const B: u64 = crate::DEFAULT_WORD_BUDGET;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn reduction() {
        assert!(Word::new(vec![Letter::gen(0), Letter::inv(0)]).is_err());
        let u = w("+0,+1,-0");
        assert!(u.concat_reduce(&u.inverse()).is_empty());
        assert_eq!(w("+0").concat_reduce(&w("+1")), w("+0,+1"));
        assert_eq!(w("+0,+1").concat_reduce(&w("-1,+0")), w("+0,+0"));
        assert_eq!(w("+0,-1,+0").to_string(), "+0,-1,+0");
        assert_eq!(w("+0,\u{2212}1").to_string(), "+0,-1");
    }

    #[test]
    fn enumeration_counts() {
        let words: Vec<Word> = enumerate_reduced(2, 1, B).unwrap().collect();
        assert_eq!(words.iter().filter(|w| w.len() == 1).count(), 4);
        let len3 = enumerate_reduced(2, 3, B).unwrap().filter(|w| w.len() == 3).count();
        assert_eq!(len3, 36);
        let r1: Vec<String> = enumerate_reduced(1, 2, B).unwrap().map(|w| w.to_string()).collect();
        assert_eq!(r1, ["", "+0", "-0", "+0,+0", "-0,-0"]);
        assert!(matches!(enumerate_reduced(3, 30, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn enumeration_is_shortlex_and_distinct() {
        let words: Vec<Word> = enumerate_reduced(2, 4, B).unwrap().collect();
        assert_eq!(words.len() as u128, count_up_to(2, 4));
        for pair in words.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!((a.len(), a) < (b.len(), b));
        }
    }

    #[test]
    fn w_set_sizes() {
        assert_eq!(build_w(2, B).unwrap(), vec![w("+0,+1,+0,+1")]);
        let w3 = build_w(3, B).unwrap();
        assert_eq!(w3, vec![w("+0,+0,+1,+0,+0,+1"), w("+0,+1,+1,+0,+1,+1")]);
        for x in build_w(6, B).unwrap() {
            assert_eq!(x.len(), 12);
        }
    }

    #[test]
    fn sanov_product() {
        let gens = [Mat2Q::from_ints(1, 2, 0, 1).unwrap(), Mat2Q::from_ints(1, 0, 2, 1).unwrap()];
        assert!(word_eval(&Word::empty(), &gens).is_identity());
        assert_eq!(word_eval(&w("+0,+1"), &gens), Mat2Q::from_ints(5, 2, 2, 1).unwrap());
    }

    #[test]
    fn parabolic_is_free() {
        let g = Mat2::new(rat(1, 1), rat(1, 3), rat(0, 1), rat(1, 1)).unwrap();
        assert_eq!(freeness_certificate(&[g], 8, B).unwrap(), Certificate::Pass { depth: 8 });
    }

    #[test]
    fn torsion_fails_fast() {
        // order 4 rotation
        let s = Mat2Q::from_ints(0, 1, -1, 0).unwrap();
        assert_eq!(
            freeness_certificate(&[s], 6, B).unwrap(),
            Certificate::Fail { witness: w("+0,+0,+0,+0") }
        );
    }

    #[test]
    fn modular_search_agrees() {
        let a = Mat2Q::from_ints(1, 1, 0, 1).unwrap();
        let b = Mat2Q::from_ints(1, 0, 1, 1).unwrap();
        let s = Mat2Q::from_ints(0, 1, -1, 0).unwrap();
        let h = Mat2::new(rat(1, 1), rat(1, 3), rat(0, 1), rat(1, 1)).unwrap();
        let sanov = [Mat2Q::from_ints(1, 2, 0, 1).unwrap(), Mat2Q::from_ints(1, 0, 2, 1).unwrap()];
        for gens in [vec![a, b], vec![s], vec![h.clone(), h.inv()], sanov.to_vec()] {
            assert_eq!(
                freeness_certificate_exact(&gens, 7, B).unwrap(),
                freeness_certificate(&gens, 7, B).unwrap()
            );
        }
    }

    #[test]
    fn kesten_small() {
        assert!(kesten_return_prob(2, 7).unwrap().is_zero());
        assert_eq!(kesten_return_prob(2, 2).unwrap(), rat(1, 4));
        assert_eq!(kesten_return_prob(2, 0).unwrap(), rat(1, 1));
        assert!(kesten_return_prob(1, 4).is_err());
    }
}
