//! Forging a generator set `𝒢`: a seed free pair, the square-word set `W`,
//! a densest small ball in `W`, and `𝒢 = w₀⁻¹(ball ∩ W) \ {1}`.
//!
//! All steps are exact. The ball search buckets the evaluated words into a
//! grid of cubes of side `ε/(2N)`; any cube has diameter at most `ε/N`, so
//! the words of the densest cube all lie in the ball `B_{ε/N}(w₀)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rational::{self, int, rat};
use crate::words::{self, word_eval, Certificate, Word};
use crate::{Error, Mat2, Mat2Q, Rational, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// `(h₁^{2q}, h₂^{2q})`, free by ping-pong.
    SanovPower,
    /// Shortest low-norm pair of words in `h₁^{±1}, h₂^{±1}` passing a
    /// bounded freeness check.
    Search,
}

impl std::str::FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sanov" | "sanov_power" => Ok(SeedMode::SanovPower),
            "search" => Ok(SeedMode::Search),
            _ => Err(Error::Parse(format!("unknown seed mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgeConfig {
    pub q: u64,
    pub ell: usize,
    #[serde(with = "rational::serde_text")]
    pub epsilon: Rational,
    pub seed_mode: SeedMode,
    /// Depth of the freeness certificates (seed search and P3).
    pub freeness_depth: usize,
    pub word_budget: u64,
    /// Longest seed word tried by [`SeedMode::Search`].
    pub search_len: usize,
}

impl ForgeConfig {
    pub fn new(seed_mode: SeedMode, q: u64, ell: usize, epsilon: Rational) -> Self {
        ForgeConfig {
            q,
            ell,
            epsilon,
            seed_mode,
            freeness_depth: 8,
            word_budget: crate::DEFAULT_WORD_BUDGET,
            search_len: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Invalid("q must be >= 1".into()));
        }
        if self.ell < 2 {
            return Err(Error::Invalid("ell must be >= 2".into()));
        }
        if !self.epsilon.is_positive() {
            return Err(Error::Invalid("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// `h₁ = [[1, 1/q], [0, 1]]`.
pub fn h1(q: u64) -> Mat2Q {
    Mat2::new(int(1), rat(1, q as i64), int(0), int(1)).expect("unimodular")
}

/// `h₂ = [[1, 0], [1/q, 1]]`.
pub fn h2(q: u64) -> Mat2Q {
    Mat2::new(int(1), int(0), rat(1, q as i64), int(1)).expect("unimodular")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPair {
    pub mode: SeedMode,
    pub g1: Mat2Q,
    pub g2: Mat2Q,
    /// The two seed elements as words in `h₁, h₂`.
    pub words: [Word; 2],
    /// Longest of the two seed words, in letters `h₁^{±1}, h₂^{±1}`.
    pub letter_len: usize,
    pub certificate: Certificate,
    /// `‖g₁ − 1‖²`, `‖g₂ − 1‖²`.
    #[serde(with = "pair_text")]
    pub norms_sq: [Rational; 2],
}

mod pair_text {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(x: &[Rational; 2], s: S) -> Result<S::Ok, S::Error> {
        [crate::rational::to_text(&x[0]), crate::rational::to_text(&x[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Rational; 2], D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let p = |s: &str| crate::rational::parse(s).map_err(serde::de::Error::custom);
        Ok([p(&a)?, p(&b)?])
    }
}

/// Picks the seed free pair.
pub fn seed_pair(
    mode: SeedMode,
    q: u64,
    search_len: usize,
    depth: usize,
    budget: u64,
) -> Result<SeedPair> {
    let id = Mat2Q::identity();
    let hs = [h1(q), h2(q)];
    match mode {
        SeedMode::SanovPower => {
            let words = [Letter2::power(0, 2 * q as usize), Letter2::power(1, 2 * q as usize)];
            let g1 = word_eval(&words[0], &hs);
            let g2 = word_eval(&words[1], &hs);
            let certificate = words::freeness_certificate_exact(&[g1.clone(), g2.clone()], depth, budget)?;
            let norms_sq = [g1.dist_sq(&id), g2.dist_sq(&id)];
            Ok(SeedPair { mode, g1, g2, words, letter_len: 2 * q as usize, certificate, norms_sq })
        }
        SeedMode::Search => search_seed(q, search_len, depth, budget),
    }
}

struct Letter2;

impl Letter2 {
    fn power(index: u16, k: usize) -> Word {
        Word::new(vec![words::Letter::gen(index); k]).expect("positive power is reduced")
    }
}

const MAX_SEED_PAIRS: usize = 20_000;

/// Seed words by increasing length `r`; among the pairs first available at
/// length `r`, the one with the smallest larger norm that passes the
/// freeness check wins.
fn search_seed(q: u64, search_len: usize, depth: usize, budget: u64) -> Result<SeedPair> {
    let id = Mat2Q::identity();
    let hs = [h1(q), h2(q)];
    // Distinct non-identity elements, each with its shortlex-first word.
    let mut seen: HashMap<Mat2Q, ()> = HashMap::new();
    let mut cands: Vec<(Rational, Word, Mat2Q)> = Vec::new();
    let mut tried = 0;
    for w in words::enumerate_reduced(2, search_len, budget)? {
        if w.is_empty() {
            continue;
        }
        let m = word_eval(&w, &hs);
        if m.is_identity() || seen.insert(m.clone(), ()).is_some() {
            continue;
        }
        cands.push((m.dist_sq(&id), w, m));
    }
    for r in 1..=search_len {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for j in 0..cands.len() {
            for i in 0..j {
                let len = cands[i].1.len().max(cands[j].1.len());
                if len == r {
                    pairs.push((i, j));
                }
            }
        }
        let key = |&(i, j): &(usize, usize)| {
            let (a, b) = (&cands[i].0, &cands[j].0);
            (a.max(b).clone(), a.min(b).clone(), i, j)
        };
        pairs.sort_by_cached_key(key);
        for (i, j) in pairs {
            let (g1, g2) = (&cands[i].2, &cands[j].2);
            if *g1 == g2.inv() || g1 * g2 == g2 * g1 {
                continue;
            }
            tried += 1;
            if tried > MAX_SEED_PAIRS {
                return Err(Error::NoPairFound);
            }
            let cert = words::freeness_certificate_exact(&[g1.clone(), g2.clone()], depth, budget)?;
            if cert.passed() {
                return Ok(SeedPair {
                    mode: SeedMode::Search,
                    g1: g1.clone(),
                    g2: g2.clone(),
                    words: [cands[i].1.clone(), cands[j].1.clone()],
                    letter_len: r,
                    certificate: cert,
                    norms_sq: [cands[i].0.clone(), cands[j].0.clone()],
                });
            }
        }
    }
    Err(Error::NoPairFound)
}

/// Upper bounds on the norms of the words in `W ∪ W⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    /// Integer `≥ max ‖w‖₂` (entrywise).
    #[serde(with = "rational::serde_text")]
    pub entrywise: Rational,
    /// `(1 + 1/q)^{2rℓ}`, a bound on the operator norm.
    #[serde(with = "rational::serde_text")]
    pub operator: Rational,
    /// The smaller of the two; the ball radius is `ε / used`.
    #[serde(with = "rational::serde_text")]
    pub used: Rational,
}

/// The set `W` of square words evaluated at the seed pair.
pub struct WordSet {
    pub words: Vec<Word>,
    pub mats: Vec<Mat2Q>,
    pub norms: NormBounds,
}

impl WordSet {
    pub fn build(seed: &SeedPair, q: u64, ell: usize, budget: u64) -> Result<Self> {
        let words = words::build_w(ell, budget)?;
        let gens = [seed.g1.clone(), seed.g2.clone()];
        let inverses = [seed.g1.inv(), seed.g2.inv()];
        let mats: Vec<Mat2Q> = words
            .par_iter()
            .map(|w| words::word_eval_with(w, &gens, &inverses))
            .collect();
        // ‖w⁻¹‖₂ = ‖w‖₂ in SL₂, so W covers W⁻¹ too.
        let max_sq = mats.iter().map(Mat2::norm_sq).max().unwrap_or_else(Rational::zero);
        let entrywise = Rational::from_integer(rational::ceil_sqrt(&max_sq));
        let operator = rational::powi(
            &(int(1) + rat(1, q as i64)),
            2 * seed.letter_len as u64 * ell as u64,
        );
        let used = (&entrywise).min(&operator).clone();
        Ok(WordSet { words, mats, norms: NormBounds { entrywise, operator, used } })
    }

    /// Indices of the words in the densest grid cell of side `ε/(2N)`,
    /// ties broken by the least word.
    pub fn densest_cell(&self, epsilon: &Rational) -> Vec<usize> {
        let scale = int(2) * &self.norms.used / epsilon;
        let mut cells: HashMap<[BigInt; 4], Vec<usize>> = HashMap::new();
        for (i, m) in self.mats.iter().enumerate() {
            let key = m.entries().map(|x| rational::floor(&(x * &scale)));
            cells.entry(key).or_default().push(i);
        }
        cells
            .into_values()
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b[0].cmp(&a[0])))
            .unwrap_or_default()
    }

    /// Smallest squared `L^∞` distance between two distinct words.
    fn min_sup_gap(&self) -> Option<Rational> {
        let mut best: Option<Rational> = None;
        for i in 0..self.mats.len() {
            for j in 0..i {
                let gap = self.mats[i]
                    .entries()
                    .into_iter()
                    .zip(self.mats[j].entries())
                    .map(|(x, y)| (x - y).abs())
                    .max()
                    .unwrap();
                if best.as_ref().is_none_or(|b| gap < *b) {
                    best = Some(gap);
                }
            }
        }
        best
    }
}

/// The smallest dyadic `ε = 2^j` whose densest cell holds at least
/// `min_cell` words. The ladder starts where a cell can first hold two words.
pub fn smallest_epsilon(config: &ForgeConfig, min_cell: usize) -> Result<Rational> {
    let seed = seed_pair(
        config.seed_mode,
        config.q,
        config.search_len,
        config.freeness_depth,
        config.word_budget,
    )?;
    let ws = WordSet::build(&seed, config.q, config.ell, config.word_budget)?;
    if ws.words.len() < min_cell {
        return Err(Error::NoCollision);
    }
    let gap = ws.min_sup_gap().ok_or(Error::NoCollision)?;
    let mut j = rational::floor_log2(&(int(2) * &ws.norms.used * gap));
    loop {
        let eps = rational::pow2(j);
        if ws.densest_cell(&eps).len() >= min_cell {
            return Ok(eps);
        }
        j += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub q: u64,
    pub ell: usize,
    #[serde(with = "rational::serde_text")]
    pub epsilon: Rational,
    pub seed: SeedPair,
    pub w0: Mat2Q,
    pub w0_word: Word,
    pub gens: Vec<Mat2Q>,
    /// `gens[i] = w0⁻¹ · eval(gen_words[i])`.
    pub gen_words: Vec<Word>,
    /// Least common denominator of all entries of `gens`.
    #[serde(rename = "Q", with = "rational::serde_bigint")]
    pub big_q: BigInt,
    /// `q^{4rℓ}`.
    #[serde(with = "rational::serde_bigint")]
    pub q_bound: BigInt,
    /// `max ‖g − 1‖₂²` over `gens`, i.e. the achieved `ε²`.
    #[serde(with = "rational::serde_text")]
    pub epsilon_achieved: Rational,
    pub norms: NormBounds,
    pub w_size: usize,
    pub cell_size: usize,
    pub ball_size: usize,
    /// `‖1 − g‖₂ ≤ N‖w₀ − w₀g‖₂ ≤ ε` re-checked exactly for every element.
    pub ball_bound_verified: bool,
    #[serde(default)]
    pub certificates: Option<PropertyReport>,
}

/// Runs the pipeline for one configuration.
pub fn forge(config: &ForgeConfig) -> Result<GeneratorSet> {
    config.validate()?;
    let seed = seed_pair(
        config.seed_mode,
        config.q,
        config.search_len,
        config.freeness_depth,
        config.word_budget,
    )?;
    forge_with_seed(config, seed)
}

pub fn forge_with_seed(config: &ForgeConfig, seed: SeedPair) -> Result<GeneratorSet> {
    config.validate()?;
    let ws = WordSet::build(&seed, config.q, config.ell, config.word_budget)?;
    let eps = &config.epsilon;
    let n = &ws.norms.used;
    let cell = ws.densest_cell(eps);
    if cell.len() < 2 {
        return Err(Error::NoCollision);
    }
    let w0_idx = cell[0];
    let w0 = ws.mats[w0_idx].clone();
    let w0_inv = w0.inv();
    let eps_sq = eps * eps;
    let n_sq = n * n;
    let ball: Vec<usize> = (0..ws.mats.len())
        .filter(|&i| &n_sq * ws.mats[i].dist_sq(&w0) <= eps_sq)
        .collect();
    let id = Mat2Q::identity();
    let mut gens = Vec::new();
    let mut gen_words = Vec::new();
    let mut verified = true;
    for &i in &ball {
        let g = &w0_inv * &ws.mats[i];
        if g.is_identity() {
            continue;
        }
        let lhs = g.dist_sq(&id);
        let mid = &n_sq * w0.dist_sq(&(&w0 * &g));
        verified &= lhs <= mid && mid <= eps_sq;
        gens.push(g);
        gen_words.push(ws.words[i].clone());
    }
    if gens.is_empty() {
        return Err(Error::NoCollision);
    }
    let big_q = rational::lcm_denominators(gens.iter().flat_map(|g| g.entries()));
    let q_bound = num_traits::pow::pow(
        BigInt::from(config.q),
        4 * seed.letter_len * config.ell,
    );
    let epsilon_achieved = gens.iter().map(|g| g.dist_sq(&id)).max().unwrap();
    Ok(GeneratorSet {
        q: config.q,
        ell: config.ell,
        epsilon: eps.clone(),
        seed,
        w0,
        w0_word: ws.words[w0_idx].clone(),
        gens,
        gen_words,
        big_q,
        q_bound,
        epsilon_achieved,
        norms: ws.norms.clone(),
        w_size: ws.words.len(),
        cell_size: cell.len(),
        ball_size: ball.len(),
        ball_bound_verified: verified,
        certificates: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub pass: bool,
    /// Index into `gens` of the first offending element.
    pub offending: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub k: usize,
    pub words: usize,
    #[serde(with = "rational::serde_text")]
    pub min_dist_sq: Rational,
    /// `min_dist ≥ Q^{−2k}`.
    pub pass: bool,
    /// `min_dist ≥ Q^{−k}`.
    pub strong_form_pass: bool,
    /// `−log(min_dist) / (k log Q)`; `None` when `Q = 1`.
    pub measured_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    #[serde(rename = "Q", with = "rational::serde_bigint")]
    pub big_q: BigInt,
    pub gens: usize,
    /// `log Q / log(1/ε)` (P1), when defined.
    pub exponent_q_eps: Option<f64>,
    /// `log Q / log |𝒢|` (P2), when defined.
    pub exponent_q_gens: Option<f64>,
    pub p3_freeness: Certificate,
    pub p4_grid: PropertyCheck,
    pub p4_q_divides_bound: bool,
    pub p5_near_identity: PropertyCheck,
    pub separation: Vec<SeparationRow>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.p3_freeness.passed()
            && self.p4_grid.pass
            && self.p5_near_identity.pass
            && self.separation.iter().all(|r| r.pass)
    }

    /// Names of failing properties.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.p3_freeness.passed() {
            out.push("P3".to_string());
        }
        if !self.p4_grid.pass {
            out.push("P4".to_string());
        }
        if !self.p5_near_identity.pass {
            out.push("P5".to_string());
        }
        for r in self.separation.iter().filter(|r| !r.pass) {
            out.push(format!("D{}", r.k));
        }
        out
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Exact checks of the generator set: freeness up to `freeness_depth` (P3),
/// entries on the `ℤ/Q` grid (P4), `‖g − 1‖₂ ≤ ε` (P5) and separation of
/// words of length `≤ k` for every `k ≤ k_max`.
pub fn verify_properties(
    gs: &GeneratorSet,
    k_max: usize,
    freeness_depth: usize,
    budget: u64,
) -> Result<PropertyReport> {
    if k_max == 0 {
        return Err(Error::Invalid("k_max must be >= 1".into()));
    }
    let id = Mat2Q::identity();
    let q = Rational::from_integer(gs.big_q.clone());
    let ln_q = rational::ln(&q);
    let exponent_q_eps = finite(ln_q / -rational::ln(&gs.epsilon));
    let exponent_q_gens = finite(ln_q / (gs.gens.len() as f64).ln());
    let p3_freeness = words::freeness_certificate_exact(&gs.gens, freeness_depth, budget)?;
    let off_grid = gs.gens.iter().position(|g| {
        g.entries().into_iter().any(|x| !(x * &q).is_integer())
    });
    let eps_sq = &gs.epsilon * &gs.epsilon;
    let far = gs.gens.iter().position(|g| g.dist_sq(&id) > eps_sq);
    let p4_q_divides_bound = gs.q_bound.is_multiple_of(&gs.big_q);
    let separation = separation_rows(&gs.gens, &gs.big_q, k_max, budget)?;
    Ok(PropertyReport {
        big_q: gs.big_q.clone(),
        gens: gs.gens.len(),
        exponent_q_eps,
        exponent_q_gens,
        p3_freeness,
        p4_grid: PropertyCheck { pass: off_grid.is_none(), offending: off_grid },
        p4_q_divides_bound,
        p5_near_identity: PropertyCheck { pass: far.is_none(), offending: far },
        separation,
    })
}

/// Matrices of all reduced words of length `≤ k_max`, with their lengths.
pub fn evaluate_ball(gens: &[Mat2Q], k_max: usize, budget: u64) -> Result<Vec<(usize, Mat2Q)>> {
    let needed = words::count_up_to(gens.len(), k_max);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed: needed as u64, budget });
    }
    let letters: Vec<Mat2Q> = (0..2 * gens.len())
        .map(|c| {
            let l = words::Letter::from_code(c);
            let g = &gens[l.index as usize];
            if l.inverse { g.inv() } else { g.clone() }
        })
        .collect();
    let mut out = vec![(0usize, Mat2Q::identity())];
    let mut level: Vec<(usize, Mat2Q)> = Vec::new();
    for k in 1..=k_max {
        level = if k == 1 {
            letters.iter().cloned().enumerate().collect()
        } else {
            level
                .par_iter()
                .flat_map_iter(|(last, m)| {
                    let last = *last;
                    letters
                        .iter()
                        .enumerate()
                        .filter(move |(c, _)| !(c / 2 == last / 2 && *c != last))
                        .map(move |(c, l)| (c, m * l))
                })
                .collect()
        };
        out.extend(level.iter().map(|(_, m)| (k, m.clone())));
    }
    Ok(out)
}

/// Exact closest pair (squared distance) by a sweep over the first entry.
pub fn min_pairwise_dist_sq(mats: &[&Mat2Q]) -> Option<Rational> {
    let mut pts: Vec<&Mat2Q> = mats.to_vec();
    pts.sort_by(|x, y| x.a().cmp(y.a()));
    let mut best: Option<Rational> = None;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let da = pts[j].a() - pts[i].a();
            if let Some(b) = &best {
                if &(&da * &da) >= b {
                    break;
                }
            }
            let d = pts[i].dist_sq(pts[j]);
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
    }
    best
}

fn separation_rows(
    gens: &[Mat2Q],
    big_q: &BigInt,
    k_max: usize,
    budget: u64,
) -> Result<Vec<SeparationRow>> {
    let ball = evaluate_ball(gens, k_max, budget)?;
    let q = Rational::from_integer(big_q.clone());
    let ln_q = rational::ln(&q);
    (1..=k_max)
        .map(|k| {
            let pts: Vec<&Mat2Q> = ball.iter().filter(|(l, _)| *l <= k).map(|(_, m)| m).collect();
            let min = min_pairwise_dist_sq(&pts).ok_or_else(|| Error::EmptyInput("word ball".into()))?;
            // dist ≥ Q^{-2k}  ⇔  dist² ≥ Q^{-4k}
            let strict = rational::powi(&q, 4 * k as u64).recip();
            let strong = rational::powi(&q, 2 * k as u64).recip();
            let measured_exponent = if min.is_zero() || ln_q == 0.0 {
                None
            } else {
                finite(-0.5 * rational::ln(&min) / (k as f64 * ln_q))
            };
            Ok(SeparationRow {
                k,
                words: pts.len(),
                pass: min >= strict,
                strong_form_pass: min >= strong,
                min_dist_sq: min,
                measured_exponent,
            })
        })
        .collect()
}

impl GeneratorSet {
    /// Whether every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.big_q.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: u64 = crate::DEFAULT_WORD_BUDGET;

    #[test]
    fn sanov_seed() {
        let s = seed_pair(SeedMode::SanovPower, 3, 6, 10, B).unwrap();
        assert_eq!(s.g1, Mat2Q::from_ints(1, 2, 0, 1).unwrap());
        assert_eq!(s.g2, Mat2Q::from_ints(1, 0, 2, 1).unwrap());
        assert_eq!(s.letter_len, 6);
        assert!(s.certificate.passed());
    }

    #[test]
    fn search_seed_is_the_parabolic_pair() {
        let s = seed_pair(SeedMode::Search, 50, 3, 8, B).unwrap();
        assert_eq!((s.g1, s.g2, s.letter_len), (h1(50), h2(50), 1));
    }

    #[test]
    fn ell_two_has_no_collision() {
        let cfg = ForgeConfig::new(SeedMode::SanovPower, 1, 2, int(1_000_000));
        assert_eq!(forge(&cfg).unwrap_err(), Error::NoCollision);
    }

    #[test]
    fn closest_pair() {
        let a = Mat2Q::from_ints(1, 2, 0, 1).unwrap();
        let b = Mat2Q::from_ints(1, 3, 0, 1).unwrap();
        let c = Mat2Q::from_ints(5, 2, 2, 1).unwrap();
        assert_eq!(min_pairwise_dist_sq(&[&a, &c, &b]), Some(int(1)));
        assert_eq!(min_pairwise_dist_sq(&[&a]), None);
    }
}
