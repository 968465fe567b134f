//! Expansion measurements: exhaustive vertex expansion, the second singular
//! value of the normalized biadjacency operator, exact continuous expansion
//! over test corpora, and subspace growth over small prime fields.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{LayeredBipartiteGraph, ZeroOneMatrix};
use crate::family::{
    self, expansion_ratio, Balance, MapFamily, MapKind, PiecewiseMap,
};
use crate::interval::{Interval, IntervalSet};
use crate::rational::{self, rat};
use crate::{Error, Rational, Result};

/// Largest `n` accepted by [`vertex_expansion_exact`].
pub const EXHAUSTIVE_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub method: Method,
    /// Exact `min |N(A)| / |A|` (exhaustive mode).
    #[serde(with = "opt_rational", default)]
    pub min_ratio: Option<Rational>,
    pub min_ratio_f64: Option<f64>,
    /// Zero-based left vertices of a minimizing set.
    pub argmin_set: Option<Vec<usize>>,
    pub sigma2: Option<f64>,
    pub tolerance: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    /// Lower bound on `min |N(A)|/|A|` implied by `σ₂`; a bound, not a measurement.
    pub spectral_bound: Option<f64>,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        x.as_ref().map(crate::rational::to_text).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::rational::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// `min |N(A)|/|A|` over nonempty `A ⊆ L` with `|A| ≤ n/2`, by enumeration.
pub fn vertex_expansion_exact(g: &LayeredBipartiteGraph) -> Result<ExpansionReport> {
    vertex_expansion_exact_capped(g, EXHAUSTIVE_CAP)
}

pub fn vertex_expansion_exact_capped(g: &LayeredBipartiteGraph, cap: usize) -> Result<ExpansionReport> {
    let n = g.n;
    if n > cap.min(63) {
        return Err(Error::TooLarge(format!("exhaustive expansion needs n <= {}, got {n}", cap.min(63))));
    }
    if n < 2 {
        return Err(Error::InvalidN(n));
    }
    let masks: Vec<u64> = g
        .neighbours()
        .iter()
        .map(|nb| nb.iter().fold(0u64, |m, &j| m | (1 << j)))
        .collect();
    let half = n / 2;
    let best = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut best = Best { num: u32::MAX, den: 1, set: Vec::new() };
            let mut stack = vec![first];
            search(&masks, half, masks[first], &mut stack, &mut best);
            best
        })
        .reduce_with(Best::better)
        .expect("n >= 2");
    let ratio = Rational::new((best.num as i64).into(), (best.den as i64).into());
    Ok(ExpansionReport {
        n,
        method: Method::Exhaustive,
        min_ratio_f64: ratio.to_f64(),
        min_ratio: Some(ratio),
        argmin_set: Some(best.set),
        sigma2: None,
        tolerance: None,
        residual: None,
        iterations: None,
        seed: None,
        spectral_bound: None,
    })
}

struct Best {
    num: u32,
    den: u32,
    set: Vec<usize>,
}

impl Best {
    fn better(a: Best, b: Best) -> Best {
        let (x, y) = (a.num as u64 * b.den as u64, b.num as u64 * a.den as u64);
        if y < x || (y == x && b.set < a.set) {
            b
        } else {
            a
        }
    }

    fn offer(&mut self, num: u32, den: u32, set: &[usize]) {
        if (num as u64) * (self.den as u64) < (self.num as u64) * (den as u64) {
            *self = Best { num, den, set: set.to_vec() };
        }
    }
}

fn search(masks: &[u64], half: usize, union: u64, stack: &mut Vec<usize>, best: &mut Best) {
    best.offer(union.count_ones(), stack.len() as u32, stack);
    if stack.len() == half {
        return;
    }
    let last = *stack.last().unwrap();
    for v in last + 1..masks.len() {
        stack.push(v);
        search(masks, half, union | masks[v], stack, best);
        stack.pop();
    }
}

/// Normalized biadjacency `M = D_R^{−1/2} B D_L^{−1/2}` in sparse form, with
/// isolated vertices removed.
pub struct NormalizedOperator {
    pub left: usize,
    pub right: usize,
    /// `(left, right, weight)`.
    entries: Vec<(usize, usize, f64)>,
    /// Top right singular vector, `∝ √d_L`.
    top: Vec<f64>,
    pub edges: f64,
    pub min_left_degree: f64,
    pub max_right_degree: f64,
}

impl NormalizedOperator {
    pub fn new(g: &LayeredBipartiteGraph) -> Result<Self> {
        let mut dl = vec![0f64; g.n];
        let mut dr = vec![0f64; g.n];
        let mut mult = std::collections::BTreeMap::new();
        for l in &g.layers {
            for (i, j) in l.edges() {
                dl[i] += 1.0;
                dr[j] += 1.0;
                *mult.entry((i, j)).or_insert(0f64) += 1.0;
            }
        }
        let relabel = |d: &[f64]| {
            let mut next = 0;
            d.iter()
                .map(|&x| {
                    (x > 0.0).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect::<Vec<Option<usize>>>()
        };
        let (li, ri) = (relabel(&dl), relabel(&dr));
        let left = li.iter().flatten().count();
        let right = ri.iter().flatten().count();
        if left == 0 || right == 0 {
            return Err(Error::EmptyInput("graph has no edges".into()));
        }
        let entries = mult
            .iter()
            .map(|(&(i, j), &m)| (li[i].unwrap(), ri[j].unwrap(), m / (dl[i] * dr[j]).sqrt()))
            .collect();
        let mut top: Vec<f64> = dl.iter().filter(|&&x| x > 0.0).map(|x| x.sqrt()).collect();
        normalize(&mut top);
        let edges = dl.iter().sum();
        let min_left_degree = dl.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
        let max_right_degree = dr.iter().copied().fold(0.0, f64::max);
        Ok(NormalizedOperator { left, right, entries, top, edges, min_left_degree, max_right_degree })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.right];
        for &(i, j, w) in &self.entries {
            y[j] += w * x[i];
        }
        y
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.left];
        for &(i, j, w) in &self.entries {
            x[i] += w * y[j];
        }
        x
    }

    /// `MᵀM x` with the top singular direction projected out.
    fn deflated_gram(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.apply_t(&self.apply(x));
        project_out(&mut z, &self.top);
        z
    }

    /// Dense `M` (rows: right vertices).
    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.right, self.left);
        for &(i, j, w) in &self.entries {
            m[(j, i)] += w;
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn project_out(x: &mut [f64], u: &[f64]) {
    let c = dot(x, u);
    x.iter_mut().zip(u).for_each(|(v, w)| *v -= c * w);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub sigma2: f64,
    /// `‖MᵀM x − θx‖` for the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Lower bound on `min |N(A)|/|A|` over `|A| ≤ n/2`.
    pub spectral_bound: f64,
}

/// Settings for [`spectral_gap_with`].
#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub tol: f64,
    pub seed: u64,
    /// Krylov dimension before an explicit restart.
    pub krylov: usize,
    pub restarts: usize,
}

impl SpectralOptions {
    pub fn new(tol: f64) -> Self {
        SpectralOptions { tol, seed: 0x5eed, krylov: 400, restarts: 20 }
    }
}

/// Second singular value of the normalized biadjacency operator.
pub fn spectral_gap(g: &LayeredBipartiteGraph, tol: f64) -> Result<SpectralResult> {
    spectral_gap_with(g, SpectralOptions::new(tol))
}

/// Krylov-accelerated power iteration on `MᵀM` restricted to the complement
/// of the top singular vector (Lanczos with full reorthogonalization and
/// explicit restarts from the current Ritz vector).
pub fn spectral_gap_with(g: &LayeredBipartiteGraph, opts: SpectralOptions) -> Result<SpectralResult> {
    let op = NormalizedOperator::new(g)?;
    let dim = op.left;
    let bound = |s2: f64| tanner_bound(s2, &op, g.n / 2);
    if dim == 1 {
        return Ok(SpectralResult {
            sigma2: 0.0,
            residual: 0.0,
            iterations: 0,
            tolerance: opts.tol,
            seed: opts.seed,
            spectral_bound: bound(0.0),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project_out(&mut start, &op.top);
    normalize(&mut start);
    let mut iterations = 0;
    let mut last_resid = f64::INFINITY;
    let m_max = opts.krylov.min(dim - 1).max(1);
    for _ in 0..=opts.restarts {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let check = |alpha: &[f64], beta: &[f64], basis: &[Vec<f64>], tail: f64| {
            let m = alpha.len();
            let mut t = DMatrix::zeros(m, m);
            for k in 0..m {
                t[(k, k)] = alpha[k];
                if k + 1 < m {
                    t[(k, k + 1)] = beta[k];
                    t[(k + 1, k)] = beta[k];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (idx, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let s = eig.eigenvectors.column(idx);
            let resid = (tail * s[m - 1]).abs();
            let mut ritz = vec![0.0; basis[0].len()];
            for (k, v) in basis.iter().take(m).enumerate() {
                ritz.iter_mut().zip(v).for_each(|(r, x)| *r += s[k] * x);
            }
            normalize(&mut ritz);
            (theta, resid, ritz)
        };
        let mut ritz = start.clone();
        for k in 0..m_max {
            iterations += 1;
            let mut w = op.deflated_gram(&basis[k]);
            let a = dot(&w, &basis[k]);
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
                project_out(&mut w, &op.top);
            }
            let b = dot(&w, &w).sqrt();
            let done_space = b < 1e-13 || k + 1 == m_max;
            if done_space || (k + 1) % 10 == 0 {
                let (theta, resid, r) = check(&alpha, &beta, &basis, b);
                last_resid = resid;
                ritz = r;
                if resid <= opts.tol * 1e-2 || b < 1e-13 {
                    let sigma2 = theta.max(0.0).sqrt();
                    return Ok(SpectralResult {
                        sigma2,
                        residual: resid,
                        iterations,
                        tolerance: opts.tol,
                        seed: opts.seed,
                        spectral_bound: bound(sigma2),
                    });
                }
            }
            if done_space {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        start = ritz;
    }
    Err(Error::NoConvergence { residual: last_resid })
}

/// Expander mixing lower bound: every `A ⊆ L` of volume `a` has a
/// neighbourhood of volume at least `a / (σ₂² + (1 − σ₂²) a/|E|)`.
fn tanner_bound(sigma2: f64, op: &NormalizedOperator, max_size: usize) -> f64 {
    if max_size == 0 {
        return 0.0;
    }
    let s2 = sigma2 * sigma2;
    let a = op.min_left_degree * max_size as f64;
    let vol = a / (s2 + (1.0 - s2) * a / op.edges);
    vol / (op.max_right_degree * max_size as f64)
}

/// Spectral report in the common shape.
pub fn spectral_report(g: &LayeredBipartiteGraph, opts: SpectralOptions) -> Result<ExpansionReport> {
    let r = spectral_gap_with(g, opts)?;
    Ok(ExpansionReport {
        n: g.n,
        method: Method::Spectral,
        min_ratio: None,
        min_ratio_f64: None,
        argmin_set: None,
        sigma2: Some(r.sigma2),
        tolerance: Some(r.tolerance),
        residual: Some(r.residual),
        iterations: Some(r.iterations),
        seed: Some(r.seed),
        spectral_bound: Some(r.spectral_bound),
    })
}

/// Singular values of the normalized operator by dense SVD, descending.
pub fn dense_singular_values(g: &LayeredBipartiteGraph) -> Result<Vec<f64>> {
    let op = NormalizedOperator::new(g)?;
    let mut sv: Vec<f64> = op.dense().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    RandomUnion,
    Cantor,
    Cell,
    Preimage,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSet {
    pub kind: CorpusKind,
    pub set: IntervalSet,
}

const GRID_BITS: u32 = 16;

fn dyadic(x: u64) -> Rational {
    rat(x as i64, 1 << GRID_BITS)
}

/// Union of up to `max_parts` random intervals with dyadic endpoints,
/// scaled into `[0, 1/2]` when its measure exceeds `1/2`.
pub fn random_union(rng: &mut impl Rng, max_parts: usize) -> IntervalSet {
    loop {
        let parts = rng.gen_range(1..=max_parts);
        let mut pts: Vec<u64> = (0..2 * parts).map(|_| rng.gen_range(0..=1u64 << GRID_BITS)).collect();
        pts.sort_unstable();
        let set = IntervalSet::from_intervals(
            pts.chunks(2).map(|c| Interval { lo: dyadic(c[0]), hi: dyadic(c[1]) }).collect(),
        );
        if set.is_empty() {
            continue;
        }
        if set.measure() <= rat(1, 2) {
            return set;
        }
        let half = rat(1, 2);
        return IntervalSet::from_intervals(
            set.parts().iter().map(|p| Interval { lo: &p.lo * &half, hi: &p.hi * &half }).collect(),
        );
    }
}

/// Level-`m` iterate of the four-adic Cantor construction keeping the first
/// and third quarter of every piece, scaled by `scale` and shifted by `offset`.
pub fn cantor(level: u32, scale: &Rational, offset: &Rational) -> IntervalSet {
    let mut parts = vec![Interval::unit()];
    for _ in 0..level {
        parts = parts
            .iter()
            .flat_map(|p| {
                let q = p.len() / rational::int(4);
                [
                    Interval { lo: p.lo.clone(), hi: &p.lo + &q },
                    Interval { lo: &p.lo + &q * rational::int(2), hi: &p.lo + &q * rational::int(3) },
                ]
            })
            .collect();
    }
    IntervalSet::from_intervals(
        parts
            .into_iter()
            .map(|p| Interval { lo: &p.lo * scale + offset, hi: &p.hi * scale + offset })
            .collect(),
    )
}

/// `ψ⁻¹(J)` for a random subinterval `J` of the image of `ψ`.
pub fn preimage_set(map: &PiecewiseMap, rng: &mut impl Rng) -> Option<IntervalSet> {
    let img = map.image(&map.domain)?;
    let u = |rng: &mut _| dyadic(Rng::gen_range(rng, 0..=1u64 << GRID_BITS));
    let (s, t) = (u(rng), u(rng));
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    let span = img.len();
    let j = Interval { lo: &img.lo + &span * s, hi: &img.lo + &span * t };
    let inv = |y: &Rational| match &map.kind {
        MapKind::Mobius { g } => g.inv().mobius_at(y).expect("inside the image"),
        MapKind::ShiftPlus { k } => y - rat(1, *k as i64),
        MapKind::ShiftMinus { k } => y + rat(1, *k as i64),
        MapKind::Identity => y.clone(),
    };
    let pre = IntervalSet::single(Interval { lo: inv(&j.lo), hi: inv(&j.hi) });
    let m = pre.measure();
    if m.is_zero() {
        return None;
    }
    if m <= rat(1, 2) {
        return Some(pre);
    }
    let p = &pre.parts()[0];
    Some(IntervalSet::single(Interval { lo: p.lo.clone(), hi: &p.lo + rat(1, 2) }))
}

/// The built-in corpus: single cells `I(k)`, Cantor iterates, preimages of
/// random intervals under individual maps and random interval unions.
pub fn builtin_corpus(fam: &MapFamily, size: usize, seed: u64) -> Vec<CorpusSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    let quarter = size / 4;
    for k in 1..=fam.k.min(quarter as u64) {
        out.push(CorpusSet { kind: CorpusKind::Cell, set: IntervalSet::single(Interval::cell(k, fam.k)) });
    }
    let half = rat(1, 2);
    for i in 0..quarter {
        let level = 1 + (i % 6) as u32;
        let scale = if i % 2 == 0 { Rational::one() } else { half.clone() };
        let room = Rational::one() - &scale;
        let offset = &room * dyadic(rng.gen_range(0..=1u64 << GRID_BITS));
        out.push(CorpusSet { kind: CorpusKind::Cantor, set: cantor(level, &scale, &offset) });
    }
    let non_id: Vec<&PiecewiseMap> = fam.maps.iter().filter(|m| !m.is_identity()).collect();
    if !non_id.is_empty() {
        let mut tries = 0;
        let target = out.len() + quarter;
        while out.len() < target && tries < 10 * quarter {
            tries += 1;
            let m = non_id[rng.gen_range(0..non_id.len())];
            if let Some(set) = preimage_set(m, &mut rng) {
                out.push(CorpusSet { kind: CorpusKind::Preimage, set });
            }
        }
    }
    while out.len() < size {
        out.push(CorpusSet { kind: CorpusKind::RandomUnion, set: random_union(&mut rng, 20) });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub sets: usize,
    #[serde(with = "rational::serde_text")]
    pub min_ratio: Rational,
    pub min_ratio_f64: f64,
    pub argmin: usize,
    pub argmin_kind: CorpusKind,
    /// Sets with `|A| > 1/2`; still measured.
    pub too_large: usize,
    /// Sets of measure zero; skipped.
    pub skipped: usize,
    #[serde(with = "rational::serde_text")]
    pub sigma: Rational,
    pub witnesses: usize,
    pub balanced: usize,
    /// Every witness set expands by `≥ 1 + σ` under `{ψ₊, ψ₋, id}` alone.
    pub witnesses_sound: bool,
    /// Every balanced set satisfies the derived cell bound.
    pub balanced_bound_holds: bool,
}

impl CorpusReport {
    pub fn dichotomy_holds(&self) -> bool {
        self.witnesses_sound && self.balanced_bound_holds
    }
}

/// Exact minimum of `|Ψ(A)|/|A|` over the corpus, with the balance test
/// run on every set.
pub fn continuous_corpus_test(fam: &MapFamily, corpus: &[CorpusSet], sigma: &Rational) -> Result<CorpusReport> {
    let shifts = MapFamily::from_maps(
        vec![PiecewiseMap::identity(), PiecewiseMap::shift_plus(fam.k), PiecewiseMap::shift_minus(fam.k)],
        fam.epsilon.clone(),
        fam.k,
    );
    let threshold = Rational::one() + sigma;
    let rows: Vec<Option<(Rational, bool, Balance, bool)>> = corpus
        .par_iter()
        .map(|c| {
            if c.set.measure().is_zero() {
                return Ok(None);
            }
            let r = expansion_ratio(fam, &c.set)?;
            let b = family::balance_test(&c.set, fam.k, sigma)?;
            let sound = match b {
                Balance::Witness { .. } => expansion_ratio(&shifts, &c.set)?.ratio >= threshold,
                Balance::Balanced { bound_verified } => bound_verified,
            };
            Ok(Some((r.ratio, r.too_large, b, sound)))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, Rational)> = None;
    let mut report = CorpusReport {
        sets: corpus.len(),
        min_ratio: Rational::zero(),
        min_ratio_f64: 0.0,
        argmin: 0,
        argmin_kind: CorpusKind::Custom,
        too_large: 0,
        skipped: 0,
        sigma: sigma.clone(),
        witnesses: 0,
        balanced: 0,
        witnesses_sound: true,
        balanced_bound_holds: true,
    };
    for (idx, row) in rows.into_iter().enumerate() {
        let Some((ratio, too_large, b, sound)) = row else {
            report.skipped += 1;
            continue;
        };
        report.too_large += too_large as usize;
        match b {
            Balance::Witness { .. } => {
                report.witnesses += 1;
                report.witnesses_sound &= sound;
            }
            Balance::Balanced { .. } => {
                report.balanced += 1;
                report.balanced_bound_holds &= sound;
            }
        }
        if best.as_ref().is_none_or(|(_, r)| ratio < *r) {
            best = Some((idx, ratio));
        }
    }
    let (argmin, min_ratio) = best.ok_or_else(|| Error::EmptyInput("corpus".into()))?;
    report.min_ratio_f64 = min_ratio.to_f64().unwrap_or(f64::NAN);
    report.min_ratio = min_ratio;
    report.argmin = argmin;
    report.argmin_kind = corpus[argmin].kind;
    Ok(report)
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat
    let (mut base, mut e, mut acc) = (a, p - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

/// Echelon basis over `𝔽_p` grown one vector at a time. Stored row `j` is
/// zero on the pivot columns of rows `0..j`, so a single sequential sweep
/// reduces a new vector. Over `𝔽₂` rows are packed into words.
enum Echelon {
    Binary { cols: usize, rows: Vec<(usize, Vec<u64>)> },
    Prime { cols: usize, p: u64, rows: Vec<(usize, Vec<u32>)> },
}

impl Echelon {
    fn new(cols: usize, p: u32) -> Self {
        if p == 2 {
            Echelon::Binary { cols, rows: Vec::new() }
        } else {
            Echelon::Prime { cols, p: p as u64, rows: Vec::new() }
        }
    }

    fn rank(&self) -> usize {
        match self {
            Echelon::Binary { rows, .. } => rows.len(),
            Echelon::Prime { rows, .. } => rows.len(),
        }
    }

    fn full(&self) -> bool {
        match self {
            Echelon::Binary { cols, rows } => rows.len() == *cols,
            Echelon::Prime { cols, rows, .. } => rows.len() == *cols,
        }
    }

    /// Adds `v` (entries already reduced mod `p`); returns whether the rank grew.
    fn insert(&mut self, v: &[u32]) -> bool {
        match self {
            Echelon::Binary { cols, rows } => {
                let mut w = vec![0u64; cols.div_ceil(64)];
                for (i, &x) in v.iter().enumerate() {
                    w[i / 64] |= ((x & 1) as u64) << (i % 64);
                }
                for (c, r) in rows.iter() {
                    if w[c / 64] >> (c % 64) & 1 == 1 {
                        w.iter_mut().zip(r).for_each(|(a, b)| *a ^= b);
                    }
                }
                let Some(k) = w.iter().position(|&x| x != 0) else { return false };
                rows.push((64 * k + w[k].trailing_zeros() as usize, w));
                true
            }
            Echelon::Prime { p, rows, .. } => {
                let p = *p;
                let mut w: Vec<u32> = v.to_vec();
                for (c, r) in rows.iter() {
                    let f = w[*c] as u64;
                    if f != 0 {
                        for (a, &b) in w.iter_mut().zip(r) {
                            *a = ((*a as u64 + p - f * b as u64 % p) % p) as u32;
                        }
                    }
                }
                let Some(c) = w.iter().position(|&x| x != 0) else { return false };
                let s = inv_mod(w[c] as u64, p);
                w.iter_mut().for_each(|x| *x = (*x as u64 * s % p) as u32);
                rows.push((c, w));
                true
            }
        }
    }
}

/// Rank of a list of vectors over `𝔽_p`.
pub fn rank_mod_p(rows: &[Vec<u32>], p: u32) -> usize {
    let mut e = Echelon::new(rows.first().map_or(0, Vec::len), p);
    for r in rows {
        if e.full() {
            break;
        }
        e.insert(r);
    }
    e.rank()
}

/// `dim span ⋃ᵢ Mᵢ(V)` for `V` spanned by `basis`.
pub fn image_span_dim(mats: &[ZeroOneMatrix], basis: &[Vec<u32>], p: u32) -> usize {
    let n = mats.first().map_or(0, |m| m.n);
    let mut e = Echelon::new(n, p);
    for m in mats {
        let ones: Vec<(usize, usize)> = m
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().filter(|(_, &x)| x == 1).map(move |(c, _)| (r, c)))
            .collect();
        for v in basis {
            if e.full() {
                return e.rank();
            }
            let mut w = vec![0u32; n];
            for &(r, c) in &ones {
                w[r] = ((w[r] as u64 + v[c] as u64) % p as u64) as u32;
            }
            e.insert(&w);
        }
    }
    e.rank()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub n: usize,
    pub p: u32,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub matrices: usize,
    pub min_growth: f64,
    pub mean_growth: f64,
    /// `dim span ⋃ Mᵢ(V)` per trial.
    pub image_dims: Vec<usize>,
}

/// Random `D`-dimensional subspaces of `𝔽_p^n` and the growth factor
/// `dim span ⋃ Mᵢ(V) / D`. Trial `t` draws from stream `t` of a seeded
/// ChaCha generator, so results do not depend on scheduling.
pub fn subspace_dimension_test(
    mats: &[ZeroOneMatrix],
    p: u64,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<DimensionReport> {
    if !is_prime(p) || p > 1 << 16 {
        return Err(Error::BadPrime(p));
    }
    let n = mats.first().map_or(0, |m| m.n);
    if mats.is_empty() || dim == 0 || 2 * dim > n {
        return Err(Error::BadDimension(format!("need 1 <= D <= n/2 with n = {n}, got D = {dim}")));
    }
    let p = p as u32;
    let image_dims: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let basis = loop {
                let b: Vec<Vec<u32>> = (0..dim).map(|_| (0..n).map(|_| rng.gen_range(0..p)).collect()).collect();
                if rank_mod_p(&b, p) == dim {
                    break b;
                }
            };
            image_span_dim(mats, &basis, p)
        })
        .collect();
    let growth: Vec<f64> = image_dims.iter().map(|&d| d as f64 / dim as f64).collect();
    let min_growth = growth.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_growth = growth.iter().sum::<f64>() / growth.len().max(1) as f64;
    Ok(DimensionReport { n, p, dim, trials, seed, matrices: mats.len(), min_growth, mean_growth, image_dims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::PartialMonotoneMap;

    fn cyclic_pair(n: usize) -> LayeredBipartiteGraph {
        // identity and i ↦ i+1 (mod n), the wrap edge as its own layer
        let mut shift = vec![None; n];
        (0..n - 1).for_each(|i| shift[i] = Some(i + 1));
        let mut wrap = vec![None; n];
        wrap[n - 1] = Some(0);
        LayeredBipartiteGraph::from_layers(
            n,
            vec![
                PartialMonotoneMap::identity(n),
                PartialMonotoneMap::new(n, shift).unwrap(),
                PartialMonotoneMap::new(n, wrap).unwrap(),
            ],
        )
        .unwrap()
    }

    fn complete(n: usize) -> LayeredBipartiteGraph {
        let layers = (0..n)
            .map(|s| {
                let mut t = vec![None; n];
                // i ↦ i+s restricted to where it does not wrap, and the wrapped part
                (0..n - s).for_each(|i| t[i] = Some(i + s));
                PartialMonotoneMap::new(n, t).unwrap()
            })
            .chain((1..n).map(|s| {
                let mut t = vec![None; n];
                (n - s..n).for_each(|i| t[i] = Some(i + s - n));
                PartialMonotoneMap::new(n, t).unwrap()
            }))
            .collect();
        LayeredBipartiteGraph::from_layers(n, layers).unwrap()
    }

    #[test]
    fn exhaustive_examples() {
        let m = LayeredBipartiteGraph::from_layers(6, vec![PartialMonotoneMap::identity(6)]).unwrap();
        let r = vertex_expansion_exact(&m).unwrap();
        assert_eq!(r.min_ratio, Some(Rational::one()));
        assert_eq!(r.argmin_set.unwrap().len(), 1);
        let k4 = vertex_expansion_exact(&complete(4)).unwrap();
        assert_eq!(k4.min_ratio, Some(rational::int(2)));
        let big = LayeredBipartiteGraph::from_layers(25, vec![]).unwrap();
        assert!(matches!(vertex_expansion_exact(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn spectral_examples() {
        let m = LayeredBipartiteGraph::from_layers(8, vec![PartialMonotoneMap::identity(8)]).unwrap();
        assert!((spectral_gap(&m, 1e-9).unwrap().sigma2 - 1.0).abs() < 1e-6);
        assert!(spectral_gap(&complete(6), 1e-9).unwrap().sigma2.abs() < 1e-6);
        let c = spectral_gap(&cyclic_pair(64), 1e-9).unwrap();
        assert!((c.sigma2 - (std::f64::consts::PI / 64.0).cos()).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn rank_over_fp() {
        assert_eq!(rank_mod_p(&[vec![1, 1], vec![1, 1]], 2), 1);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 1]], 3), 1);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 1]], 5), 2);
    }

    #[test]
    fn dimension_examples() {
        let n = 16;
        let id = vec![ZeroOneMatrix::identity(n)];
        let r = subspace_dimension_test(&id, 2, 4, 10, 1).unwrap();
        assert_eq!((r.min_growth, r.mean_growth), (1.0, 1.0));
        let g = cyclic_pair(n);
        let mats = crate::discretize::dimension_matrices(&g);
        let d = 5;
        let basis: Vec<Vec<u32>> = (0..d).map(|k| (0..n).map(|i| (i == k) as u32).collect()).collect();
        assert_eq!(image_span_dim(&mats, &basis, 3), d + 1);
        assert_eq!(subspace_dimension_test(&id, 4, 4, 1, 1).unwrap_err(), Error::BadPrime(4));
        assert!(matches!(subspace_dimension_test(&id, 2, 9, 1, 1), Err(Error::BadDimension(_))));
    }

    #[test]
    fn corpus_examples() {
        let id = MapFamily::from_maps(vec![PiecewiseMap::identity()], rat(1, 8), 8);
        let c = vec![CorpusSet { kind: CorpusKind::Custom, set: IntervalSet::single(Interval::cell(1, 2)) }];
        assert_eq!(continuous_corpus_test(&id, &c, &rat(1, 100)).unwrap().min_ratio, Rational::one());
        let sh = family::build_family_from(&[], rat(1, 8), 8).unwrap();
        let c = vec![CorpusSet { kind: CorpusKind::Cell, set: IntervalSet::single(Interval::cell(1, 8)) }];
        assert_eq!(continuous_corpus_test(&sh, &c, &rat(1, 100)).unwrap().min_ratio, rational::int(2));
        let corpus = builtin_corpus(&sh, 200, 7);
        assert_eq!(corpus.len(), 200);
        assert!(corpus.iter().all(|c| c.set.within_unit() && c.set.measure() <= rat(1, 2)));
    }
}
