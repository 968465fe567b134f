//! Float measurements at scale `δ`: covering numbers, product and trace-set
//! growth, flattening of random walks, scalar amplification and discretized
//! sum-product.
//!
//! Sampling uses ChaCha streams indexed by shard, so every result is a pure
//! function of `(seed, budget)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sl2::det4;
use crate::{Error, FloatMat, Mat2Q, Rational, Result};

const SHARD: usize = 4096;

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// Where a float set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Rounded from exact matrices.
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloatSet {
    pub mats: Vec<FloatMat>,
    pub source: Source,
}

impl FloatSet {
    pub fn from_exact(mats: &[Mat2Q]) -> Result<Self> {
        Ok(FloatSet { mats: mats.iter().map(Mat2Q::to_float).collect::<Result<_>>()?, source: Source::Exact })
    }

    /// `A ∪ A⁻¹`.
    pub fn symmetrized(&self) -> FloatSet {
        let mut mats = self.mats.clone();
        mats.extend(self.mats.iter().map(FloatMat::inv));
        FloatSet { mats, source: self.source }
    }
}

fn coords(m: &FloatMat) -> [f64; 4] {
    let e = m.entries();
    [*e[0], *e[1], *e[2], *e[3]]
}

fn dist(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Grid of cubes of side `delta` in `ℝ⁴`; two points of one cell are at
/// most `2δ` apart.
#[derive(Clone, Debug)]
pub struct DeltaGrid {
    pub delta: f64,
    cells: HashMap<[i64; 4], Vec<usize>>,
}

impl DeltaGrid {
    pub fn new(delta: f64) -> Self {
        DeltaGrid { delta, cells: HashMap::new() }
    }

    pub fn key(&self, x: &[f64; 4]) -> [i64; 4] {
        x.map(|v| (v / self.delta).floor() as i64)
    }

    pub fn insert(&mut self, x: &[f64; 4], id: usize) {
        self.cells.entry(self.key(x)).or_default().push(id);
    }

    /// Ids in the cell of `x` and its 80 neighbours.
    pub fn near(&self, x: &[f64; 4]) -> impl Iterator<Item = usize> + '_ {
        let k = self.key(x);
        (0..81).flat_map(move |m| {
            let mut c = k;
            let mut r = m;
            for v in c.iter_mut() {
                *v += (r % 3) as i64 - 1;
                r /= 3;
            }
            self.cells.get(&c).into_iter().flatten().copied()
        })
    }

    pub fn occupancy(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.values().map(Vec::len)
    }
}

/// Greedy maximal subset whose points are pairwise more than `r` apart;
/// every input point is within `r` of a chosen one.
pub fn greedy_separated(points: &[[f64; 4]], r: f64) -> Vec<usize> {
    let mut grid = DeltaGrid::new(r);
    let mut chosen = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if grid.near(p).all(|c| dist(&points[c], p) > r) {
            grid.insert(p, i);
            chosen.push(i);
        }
    }
    chosen
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covering {
    /// Size of a greedy `2δ`-separated subset.
    pub lower: usize,
    /// Size of a greedy `δ`-net.
    pub upper: usize,
}

/// Two-sided estimate of `𝒩_δ(S)`: `lower ≤ 𝒩_δ(S) ≤ upper ≤ 𝒩_{δ/2}(S)`.
pub fn covering_number(s: &[FloatMat], delta: f64) -> Covering {
    let pts: Vec<[f64; 4]> = s.iter().map(coords).collect();
    covering_points(&pts, delta)
}

fn covering_points(pts: &[[f64; 4]], delta: f64) -> Covering {
    Covering { lower: greedy_separated(pts, 2.0 * delta).len(), upper: greedy_separated(pts, delta).len() }
}

/// Exact `𝒩_δ` of a finite subset of `ℝ`: fewest intervals of length `2δ`.
pub fn covering_1d(values: &[f64], delta: f64) -> usize {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut reach = f64::NEG_INFINITY;
    for x in v {
        if x > reach {
            count += 1;
            reach = x + 2.0 * delta;
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationLevel {
    pub rho: f64,
    pub separated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGrowth {
    pub delta: f64,
    pub set_size: usize,
    pub cover_a: Covering,
    /// Covering of the triple products (or of the sample).
    pub cover_aaa: Covering,
    /// `cover_aaa.upper`, scaled by the unseen-cell estimate when sampled.
    pub aaa_estimate: f64,
    pub exact: bool,
    pub samples: usize,
    pub seed: u64,
    /// `log(𝒩_δ(AAA)/𝒩_δ(A)) / log(1/δ)` from the net sizes.
    pub exponent: f64,
    /// Greedy `ρ`-separated subsets of `A` on a dyadic ladder down to `δ`.
    pub separation: Vec<SeparationLevel>,
}

/// Growth of `A = A⁻¹` under triple products.
pub fn product_growth(a: &FloatSet, delta: f64, sample_budget: usize, seed: u64) -> Result<ProductGrowth> {
    if a.mats.is_empty() {
        return Err(Error::EmptyInput("A".into()));
    }
    if sample_budget == 0 {
        return Err(Error::BudgetExceeded { needed: 1, budget: 0 });
    }
    let sym = a.symmetrized();
    // symmetrizing may repeat points; distinct points only
    let mut pts: Vec<[f64; 4]> = sym.mats.iter().map(coords).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mats: Vec<FloatMat> = pts
        .iter()
        .map(|p| FloatMat::new(p[0], p[1], p[2], p[3]))
        .collect::<Result<_>>()?;
    let m = mats.len();
    let cover_a = covering_points(&pts, delta);
    let triples = (m as u128).pow(3);
    let exact = triples <= sample_budget as u128;
    let aaa: Vec<[f64; 4]> = if exact {
        (0..m * m * m)
            .into_par_iter()
            .map(|t| coords(&(&(&mats[t / (m * m)] * &mats[(t / m) % m]) * &mats[t % m])))
            .collect()
    } else {
        (0..sample_budget.div_ceil(SHARD))
            .into_par_iter()
            .flat_map_iter(|s| {
                let mut rng = shard_rng(seed, s);
                let count = SHARD.min(sample_budget - s * SHARD);
                let mats = &mats;
                (0..count)
                    .map(move |_| {
                        let (i, j, k) = (rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m));
                        coords(&(&(&mats[i] * &mats[j]) * &mats[k]))
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let cover_aaa = covering_points(&aaa, delta);
    let aaa_estimate = if exact { cover_aaa.upper as f64 } else { cover_aaa.upper as f64 * chao1_factor(&aaa, delta) };
    let exponent = (aaa_estimate / cover_a.upper as f64).ln() / (1.0 / delta).ln();
    let mut separation = Vec::new();
    let mut rho = 0.5;
    while rho >= delta {
        separation.push(SeparationLevel { rho, separated: greedy_separated(&pts, rho).len() });
        rho /= 2.0;
    }
    Ok(ProductGrowth {
        delta,
        set_size: m,
        cover_a,
        cover_aaa,
        aaa_estimate,
        exact,
        samples: aaa.len(),
        seed,
        exponent,
        separation,
    })
}

/// Ratio of the Chao1 estimate of occupied `δ`-cells to the observed count.
fn chao1_factor(pts: &[[f64; 4]], delta: f64) -> f64 {
    let mut grid = DeltaGrid::new(delta);
    for (i, p) in pts.iter().enumerate() {
        grid.insert(p, i);
    }
    let (mut seen, mut f1, mut f2) = (0f64, 0f64, 0f64);
    for c in grid.occupancy() {
        seen += 1.0;
        match c {
            1 => f1 += 1.0,
            2 => f2 += 1.0,
            _ => {}
        }
    }
    let unseen = if f2 > 0.0 { f1 * f1 / (2.0 * f2) } else { f1 * (f1 - 1.0) / 2.0 };
    (seen + unseen) / seen
}

/// `δ`-net of the full rotation group `SO(2)`, a closed one-parameter
/// subgroup (diagonalizable over `ℂ`).
pub fn rotation_net(delta: f64) -> FloatSet {
    // chord between neighbours is √2·2·sin(h/2) ≈ √2·h in the entry norm
    let steps = (2.0 * std::f64::consts::PI * std::f64::consts::SQRT_2 / delta).ceil() as usize;
    let mats = (0..steps)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            FloatMat::new(t.cos(), -t.sin(), t.sin(), t.cos()).expect("rotation")
        })
        .collect();
    FloatSet { mats, source: Source::Sampled }
}

/// `δ`-net of a segment `{diag(eᵗ, e⁻ᵗ) : |t| ≤ t_max}` of the real
/// diagonal subgroup.
pub fn diagonal_segment(t_max: f64, delta: f64) -> FloatSet {
    let steps = (2.0 * t_max / delta).ceil().max(1.0) as usize;
    let mats = (0..=steps)
        .map(|k| {
            let t = -t_max + 2.0 * t_max * k as f64 / steps as f64;
            FloatMat::new(t.exp(), 0.0, 0.0, (-t).exp()).expect("diagonal")
        })
        .collect();
    FloatSet { mats, source: Source::Sampled }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub ell: usize,
    pub samples: usize,
    pub delta: f64,
    pub seed: u64,
    /// Largest fraction of samples in one `δ`-cell.
    pub max_cell_fraction: f64,
    /// `max_cell_fraction / δ³`.
    pub value: f64,
    /// Binomial standard error of `value`.
    pub std_err: f64,
}

/// Cell-max estimate of `‖ν^{(ℓ)} ∗ P_δ‖_∞` for the uniform measure on
/// `gens ∪ gens⁻¹`.
pub fn flatness(gens: &[FloatMat], ell: usize, delta: f64, samples: usize, seed: u64) -> Result<Flatness> {
    if gens.is_empty() || ell == 0 || samples == 0 {
        return Err(Error::Invalid("need generators, ell >= 1 and samples >= 1".into()));
    }
    let letters: Vec<FloatMat> = gens.iter().cloned().chain(gens.iter().map(FloatMat::inv)).collect();
    let keys: Vec<[i64; 4]> = (0..samples.div_ceil(SHARD))
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut rng = shard_rng(seed, s);
            let count = SHARD.min(samples - s * SHARD);
            let letters = &letters;
            (0..count)
                .map(move |_| {
                    let m = (0..ell).fold(FloatMat::identity(), |acc, _| {
                        &acc * &letters[rng.gen_range(0..letters.len())]
                    });
                    coords(&m).map(|v| (v / delta).floor() as i64)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut counts: HashMap<[i64; 4], usize> = HashMap::new();
    for k in keys {
        *counts.entry(k).or_insert(0) += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let p = max as f64 / samples as f64;
    let vol = delta.powi(3);
    Ok(Flatness {
        ell,
        samples,
        delta,
        seed,
        max_cell_fraction: p,
        value: p / vol,
        std_err: (p * (1.0 - p) / samples as f64).sqrt() / vol,
    })
}

/// Whether each value is at most the previous one plus `sigmas` combined
/// standard errors.
pub fn non_increasing(series: &[Flatness], sigmas: f64) -> bool {
    series.windows(2).all(|w| {
        let tol = sigmas * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        w[1].value <= w[0].value + tol
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceGrowth {
    pub delta: f64,
    pub cover_a: Covering,
    /// `𝒩_δ(Tr gᵢ⁻¹A)` for the four probes.
    pub trace_covers: [usize; 4],
    /// Indices of the three probes with the largest product.
    pub best_triple: [usize; 3],
    pub best_product: f64,
    /// `best_product / cover_a.upper`.
    pub ratio: f64,
    #[serde(with = "crate::rational::serde_text")]
    pub det4: Rational,
}

/// Covering numbers of the trace sets `Tr gᵢ⁻¹A = ⟨a, flip(gᵢ)⟩`.
pub fn trace_set_growth(a: &[FloatMat], probes: &[Mat2Q; 4], delta: f64) -> Result<TraceGrowth> {
    let d = det4(&probes[0], &probes[1], &probes[2], &probes[3]);
    if num_traits::Zero::is_zero(&d) {
        return Err(Error::DegenerateProbes);
    }
    let flips: Vec<FloatMat> = probes.iter().map(|g| g.flip().to_float()).collect::<Result<_>>()?;
    let trace_covers: [usize; 4] = std::array::from_fn(|i| {
        let vals: Vec<f64> = a.iter().map(|m| m.inner4(&flips[i])).collect();
        covering_1d(&vals, delta)
    });
    let (best_triple, best_product) = (0..4)
        .map(|skip| {
            let t: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
            let p = t.iter().map(|&i| trace_covers[i] as f64).product::<f64>();
            ([t[0], t[1], t[2]], p)
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let cover_a = covering_number(a, delta);
    Ok(TraceGrowth {
        delta,
        cover_a,
        trace_covers,
        best_triple,
        best_product,
        ratio: best_product / cover_a.upper as f64,
        det4: d,
    })
}

/// Exact check of `Tr(D_x g D_y g) = a²xy + d²/(xy) + bc(x/y + y/x)` with
/// `D_t = diag(t, 1/t)`.
pub fn trace_identity_check(x: &Rational, y: &Rational, g: &Mat2Q) -> Result<bool> {
    use num_traits::{One, Zero};
    if x.is_zero() || y.is_zero() {
        return Err(Error::Invalid("x and y must be nonzero".into()));
    }
    let z = Rational::zero();
    let dx = Mat2Q::new(x.clone(), z.clone(), z.clone(), Rational::one() / x)?;
    let dy = Mat2Q::new(y.clone(), z.clone(), z, Rational::one() / y)?;
    let lhs = (&(&(&dx * g) * &dy) * g).trace();
    let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
    let xy = x * y;
    let rhs = a * a * &xy + d * d / &xy + b * c * (x / y + y / x);
    Ok(lhs == rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub set_size: usize,
    pub cover_s: usize,
    pub cover_d: usize,
    /// `cover_d / |S|`.
    pub ratio: f64,
    pub exact: bool,
    pub samples: usize,
    pub seed: u64,
}

/// `𝒩_δ(D)` for `D = {xy + γ/(xy) + λ(x/y + y/x) : x, y ∈ S₍₄₎}` with
/// `S` symmetrized. `S₍₄₎` and `D` are enumerated when `|S|⁸ ≤ budget`,
/// otherwise `budget` pairs are sampled.
pub fn amplification_set(
    s: &[f64],
    gamma: f64,
    lambda: f64,
    delta: f64,
    budget: usize,
    seed: u64,
) -> Result<Amplification> {
    if s.is_empty() {
        return Err(Error::EmptyInput("S".into()));
    }
    if s.iter().any(|&x| !(0.5..=2.0).contains(&x)) || gamma <= 0.0 {
        return Err(Error::Invalid("need S within [1/2, 2] and gamma > 0".into()));
    }
    if budget == 0 {
        return Err(Error::BudgetExceeded { needed: 1, budget: 0 });
    }
    let mut sym: Vec<f64> = s.iter().flat_map(|&x| [x, 1.0 / x]).collect();
    sym.sort_by(f64::total_cmp);
    sym.dedup();
    let f = |x: f64, y: f64| x * y + gamma / (x * y) + lambda * (x / y + y / x);
    let m = sym.len();
    let exact = (m as f64).powi(8) <= budget as f64;
    let values: Vec<f64> = if exact {
        let mut s4: Vec<f64> = Vec::with_capacity(m.pow(4));
        for a in &sym {
            for b in &sym {
                for c in &sym {
                    for d in &sym {
                        s4.push(a * b * c * d);
                    }
                }
            }
        }
        s4.iter().flat_map(|&x| s4.iter().map(move |&y| f(x, y))).collect()
    } else {
        (0..budget.div_ceil(SHARD))
            .into_par_iter()
            .flat_map_iter(|k| {
                let mut rng = shard_rng(seed, k);
                let count = SHARD.min(budget - k * SHARD);
                let sym = &sym;
                (0..count)
                    .map(move |_| {
                        let mut pick = || (0..4).map(|_| sym[rng.gen_range(0..m)]).product::<f64>();
                        let (x, y) = (pick(), pick());
                        f(x, y)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let cover_d = covering_1d(&values, delta);
    Ok(Amplification {
        set_size: s.len(),
        cover_s: covering_1d(s, delta),
        cover_d,
        ratio: cover_d as f64 / s.len() as f64,
        exact,
        samples: values.len(),
        seed,
    })
}

/// `(𝒩_δ(A + A), 𝒩_δ(A·A))`, computed on the full sum and product sets.
pub fn sum_product(a: &[f64], delta: f64) -> (usize, usize) {
    let sums: Vec<f64> = a.iter().flat_map(|x| a.iter().map(move |y| x + y)).collect();
    let prods: Vec<f64> = a.iter().flat_map(|x| a.iter().map(move |y| x * y)).collect();
    (covering_1d(&sums, delta), covering_1d(&prods, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn fm(a: f64, b: f64, c: f64, d: f64) -> FloatMat {
        FloatMat::new(a, b, c, d).unwrap()
    }

    #[test]
    fn covering_basics() {
        let g = fm(1.0, 2.0, 0.0, 1.0);
        assert_eq!(covering_number(&[g], 0.1), Covering { lower: 1, upper: 1 });
        let far: Vec<FloatMat> = (0..5).map(|k| fm(1.0, k as f64, 0.0, 1.0)).collect();
        assert_eq!(covering_number(&far, 0.1), Covering { lower: 5, upper: 5 });
        assert_eq!(covering_1d(&[0.0, 0.1, 0.2, 0.5], 0.1), 2);
        assert_eq!(covering_1d(&[], 0.1), 0);
    }

    #[test]
    fn identity_does_not_grow() {
        let a = FloatSet { mats: vec![FloatMat::identity()], source: Source::Exact };
        let r = product_growth(&a, 0.01, 1000, 0).unwrap();
        assert_eq!((r.cover_aaa.upper, r.exponent), (1, 0.0));
    }

    #[test]
    fn trace_identity() {
        let g = Mat2Q::from_ints(1, 1, 1, 2).unwrap();
        assert!(trace_identity_check(&int(2), &int(3), &g).unwrap());
        assert!(trace_identity_check(&int(1), &int(1), &g).unwrap());
        assert!(trace_identity_check(&rat(-3, 7), &rat(5, 2), &g).unwrap());
        assert!(trace_identity_check(&int(0), &int(1), &g).is_err());
    }

    #[test]
    fn degenerate_probes() {
        let id = Mat2Q::identity();
        let a = [FloatMat::identity()];
        assert_eq!(trace_set_growth(&a, &[id.clone(), id.clone(), id.clone(), id], 0.01).unwrap_err(), Error::DegenerateProbes);
    }

    #[test]
    fn trivial_trace_sets() {
        let g1 = Mat2Q::new(int(1), rat(1, 2), int(0), int(1)).unwrap();
        let g2 = Mat2Q::new(int(1), int(0), rat(1, 2), int(1)).unwrap();
        let g3 = &g1 * &g2;
        let r = trace_set_growth(&[FloatMat::identity()], &[Mat2Q::identity(), g1, g2, g3], 0.01).unwrap();
        assert_eq!(r.trace_covers, [1, 1, 1, 1]);
        assert!(r.best_product >= 1.0);
    }

    #[test]
    fn amplification_singleton() {
        let r = amplification_set(&[1.0], 1.0, 0.5, 1e-3, 1000, 0).unwrap();
        assert_eq!(r.cover_d, 1);
    }

    #[test]
    fn sum_product_singleton() {
        assert_eq!(sum_product(&[0.0], 0.01), (1, 1));
    }

    #[test]
    fn sampling_is_reproducible() {
        let gens = [fm(1.0, 0.1, 0.0, 1.0), fm(1.0, 0.0, 0.1, 1.0)];
        let a = flatness(&gens, 4, 0.01, 10_000, 9).unwrap();
        let b = flatness(&gens, 4, 0.01, 10_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
