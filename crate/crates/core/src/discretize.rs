//! Discretization of a map family into a bipartite graph on `n + n`
//! vertices whose edges split into partial monotone maps (layers).
//!
//! Vertices are numbered from zero in memory and from one in every export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::family::MapFamily;
use crate::interval::Interval;
use crate::rational::{self, rat};
use crate::{Error, Rational, Result};

/// Strictly increasing partial map on `{0, …, n−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialMonotoneMap {
    n: usize,
    targets: Vec<Option<usize>>,
}

impl PartialMonotoneMap {
    pub fn new(n: usize, targets: Vec<Option<usize>>) -> Result<Self> {
        if targets.len() != n {
            return Err(Error::Invalid(format!("expected {n} targets, got {}", targets.len())));
        }
        let mut last: Option<usize> = None;
        for (i, t) in targets.iter().enumerate() {
            if let Some(t) = *t {
                if t >= n || last.is_some_and(|l| l >= t) {
                    return Err(Error::Invalid(format!("layer is not strictly increasing at {i}")));
                }
                last = Some(t);
            }
        }
        Ok(PartialMonotoneMap { n, targets })
    }

    pub fn identity(n: usize) -> Self {
        PartialMonotoneMap { n, targets: (0..n).map(Some).collect() }
    }

    /// Map built from edges known to form a strictly increasing chain.
    fn from_chain(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut targets = vec![None; n];
        for &(i, j) in edges {
            targets[i] = Some(j);
        }
        PartialMonotoneMap { n, targets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn targets(&self) -> &[Option<usize>] {
        &self.targets
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.targets[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.targets.iter().enumerate().filter_map(|(i, t)| t.map(|t| (i, t)))
    }

    pub fn len(&self) -> usize {
        self.targets.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Defined `a < a′` implies `f(a) < f(a′)`.
    pub fn is_strictly_monotone(&self) -> bool {
        let ts: Vec<usize> = self.targets.iter().flatten().copied().collect();
        ts.windows(2).all(|w| w[0] < w[1])
    }
}

/// Layer origin: index of the map in the family and rank among its layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub map: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredBipartiteGraph {
    pub n: usize,
    pub layers: Vec<PartialMonotoneMap>,
    pub provenance: Vec<Provenance>,
}

impl LayeredBipartiteGraph {
    pub fn new(n: usize, layers: Vec<PartialMonotoneMap>, provenance: Vec<Provenance>) -> Result<Self> {
        if layers.len() != provenance.len() {
            return Err(Error::Invalid("one provenance entry per layer".into()));
        }
        if let Some(l) = layers.iter().find(|l| l.n != n) {
            return Err(Error::Invalid(format!("layer of size {} in a graph of size {n}", l.n)));
        }
        Ok(LayeredBipartiteGraph { n, layers, provenance })
    }

    /// Graph whose layers are given without provenance; each is its own map.
    pub fn from_layers(n: usize, layers: Vec<PartialMonotoneMap>) -> Result<Self> {
        let provenance = (0..layers.len()).map(|map| Provenance { map, rank: 0 }).collect();
        Self::new(n, layers, provenance)
    }

    /// All edges `(layer, i, j)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<_> = self
            .layers
            .iter()
            .enumerate()
            .flat_map(|(k, l)| l.edges().map(move |(i, j)| (k, i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.layers.iter().map(PartialMonotoneMap::len).sum()
    }

    /// Right neighbours of each left vertex, without repetition.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for l in &self.layers {
            for (i, j) in l.edges() {
                nb[i].push(j);
            }
        }
        for v in &mut nb {
            v.sort_unstable();
            v.dedup();
        }
        nb
    }

    /// Number of layers per map index.
    pub fn layers_per_map(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for p in &self.provenance {
            *out.entry(p.map).or_insert(0) += 1;
        }
        out
    }

    /// Largest left or right degree, counting multiplicity.
    pub fn max_degree(&self) -> usize {
        let mut dl = vec![0usize; self.n];
        let mut dr = vec![0usize; self.n];
        for l in &self.layers {
            for (i, j) in l.edges() {
                dl[i] += 1;
                dr[j] += 1;
            }
        }
        dl.into_iter().chain(dr).max().unwrap_or(0)
    }
}

/// Cells `j` whose interval `[j/n, (j+1)/n]` meets `y` in positive measure.
fn overlapped_cells(y: &Interval, n: usize) -> std::ops::Range<usize> {
    if y.lo >= y.hi {
        return 0..0;
    }
    let nn = Rational::from_integer(BigInt::from(n));
    let lo = rational::floor(&(&y.lo * &nn));
    let hi = -rational::floor(&(-(&y.hi * &nn)));
    let clip = |x: BigInt| x.max(BigInt::zero()).min(BigInt::from(n)).to_usize().unwrap();
    clip(lo)..clip(hi)
}

/// Raw overlap relation of one map: `(i, j)` whenever `ψ(Iᵢ ∩ dom ψ)` meets
/// `I_j` in positive measure.
pub fn overlap_relation(map: &crate::family::PiecewiseMap, n: usize) -> Vec<(usize, usize)> {
    let mut rel = Vec::new();
    for i in 0..n {
        let cell = Interval { lo: rat(i as i64, n as i64), hi: rat(i as i64 + 1, n as i64) };
        if let Some(img) = map.image(&cell) {
            rel.extend(overlapped_cells(&img, n).map(|j| (i, j)));
        }
    }
    rel
}

pub fn discretize(fam: &MapFamily, n: usize) -> Result<LayeredBipartiteGraph> {
    if n < 2 {
        return Err(Error::InvalidN(n));
    }
    let per_map: Vec<Vec<PartialMonotoneMap>> = fam
        .maps
        .par_iter()
        .map(|m| monotone_decompose(&overlap_relation(m, n), n))
        .collect::<Result<_>>()?;
    let mut layers = Vec::new();
    let mut provenance = Vec::new();
    for (map, ls) in per_map.into_iter().enumerate() {
        for (rank, l) in ls.into_iter().enumerate() {
            layers.push(l);
            provenance.push(Provenance { map, rank });
        }
    }
    LayeredBipartiteGraph::new(n, layers, provenance)
}

/// Splits a non-crossing relation into the fewest strictly increasing
/// partial maps. Layers are ordered by their first edge.
pub fn monotone_decompose(relation: &[(usize, usize)], n: usize) -> Result<Vec<PartialMonotoneMap>> {
    let mut rel: Vec<(usize, usize)> = relation.to_vec();
    rel.sort_unstable();
    rel.dedup();
    if let Some(&(i, j)) = rel.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::Invalid(format!("edge ({i}, {j}) outside a graph of size {n}")));
    }
    // Crossing check: all targets of earlier sources ≤ all targets of later ones.
    let mut prev_max: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < rel.len() {
        let i = rel[k].0;
        let end = k + rel[k..].iter().take_while(|e| e.0 == i).count();
        let (min_t, max_t) = (rel[k].1, rel[end - 1].1);
        if let Some((pi, pj)) = prev_max {
            if pj > min_t {
                return Err(Error::NotMonotoneRelation(pi, pj, i, min_t));
            }
        }
        if prev_max.is_none_or(|(_, pj)| max_t >= pj) {
            prev_max = Some((i, max_t));
        }
        k = end;
    }
    // Best fit: each edge extends the chain with the largest last target
    // below it; edges of one source are placed from the largest target down.
    let mut chains: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut k = 0;
    while k < rel.len() {
        let i = rel[k].0;
        let end = k + rel[k..].iter().take_while(|e| e.0 == i).count();
        let mut used = vec![false; chains.len()];
        for &(_, j) in rel[k..end].iter().rev() {
            let best = chains
                .iter()
                .enumerate()
                .filter(|(c, ch)| c < &used.len() && !used[*c] && ch.last().unwrap().1 < j)
                .max_by_key(|(c, ch)| (ch.last().unwrap().1, std::cmp::Reverse(*c)))
                .map(|(c, _)| c);
            match best {
                Some(c) => {
                    used[c] = true;
                    chains[c].push((i, j));
                }
                None => chains.push(vec![(i, j)]),
            }
        }
        k = end;
    }
    chains.sort_by_key(|c| c[0]);
    Ok(chains.iter().map(|c| PartialMonotoneMap::from_chain(n, c)).collect())
}

/// Dense `n × n` 0-1 matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroOneMatrix {
    pub n: usize,
    pub rows: Vec<Vec<u8>>,
}

impl ZeroOneMatrix {
    pub fn identity(n: usize) -> Self {
        Self::from_layer(&PartialMonotoneMap::identity(n))
    }

    /// `M[j][i] = 1` iff the layer maps `i ↦ j`.
    pub fn from_layer(l: &PartialMonotoneMap) -> Self {
        let mut rows = vec![vec![0u8; l.n]; l.n];
        for (i, j) in l.edges() {
            rows[j][i] = 1;
        }
        ZeroOneMatrix { n: l.n, rows }
    }

    pub fn ones(&self) -> usize {
        self.rows.iter().flatten().map(|&x| x as usize).sum()
    }

    pub fn is_partial_permutation(&self) -> bool {
        let rows_ok = self.rows.iter().all(|r| r.iter().map(|&x| x as usize).sum::<usize>() <= 1);
        let cols_ok = (0..self.n).all(|c| self.rows.iter().map(|r| r[c] as usize).sum::<usize>() <= 1);
        rows_ok && cols_ok
    }
}

pub fn dimension_matrices(g: &LayeredBipartiteGraph) -> Vec<ZeroOneMatrix> {
    g.layers.iter().map(ZeroOneMatrix::from_layer).collect()
}

/// Biadjacency with multiplicity: `B[j][i]` = number of layers mapping `i ↦ j`.
pub fn biadjacency(g: &LayeredBipartiteGraph) -> Vec<Vec<u32>> {
    let mut b = vec![vec![0u32; g.n]; g.n];
    for l in &g.layers {
        for (i, j) in l.edges() {
            b[j][i] += 1;
        }
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    EdgeCsv,
    LayeredJson,
    Dot,
    MatrixCsv,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 4] =
        [ExportFormat::EdgeCsv, ExportFormat::LayeredJson, ExportFormat::Dot, ExportFormat::MatrixCsv];

    pub fn name(self) -> &'static str {
        match self {
            ExportFormat::EdgeCsv => "edge-csv",
            ExportFormat::LayeredJson => "layered-json",
            ExportFormat::Dot => "dot",
            ExportFormat::MatrixCsv => "matrix-csv",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::EdgeCsv => "edges.csv",
            ExportFormat::LayeredJson => "graph.json",
            ExportFormat::Dot => "dot",
            ExportFormat::MatrixCsv => "matrices.csv",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFormat(s.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    map: usize,
    rank: usize,
    /// One-based targets, `null` where undefined.
    targets: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    layers: Vec<LayerJson>,
}

fn to_json_value(g: &LayeredBipartiteGraph) -> serde_json::Value {
    let doc = GraphJson {
        n: g.n,
        layers: g
            .layers
            .iter()
            .zip(&g.provenance)
            .map(|(l, p)| LayerJson {
                map: p.map,
                rank: p.rank,
                targets: l.targets.iter().map(|t| t.map(|t| t + 1)).collect(),
            })
            .collect(),
    };
    // Round trip through `Value` so object keys come out sorted.
    serde_json::to_value(doc).expect("serializable")
}


pub fn export(g: &LayeredBipartiteGraph, format: ExportFormat) -> Vec<u8> {
    let mut s = String::new();
    match format {
        ExportFormat::EdgeCsv => {
            s.push_str("layer,i,j\n");
            for (k, i, j) in g.edges() {
                writeln!(s, "{k},{},{}", i + 1, j + 1).unwrap();
            }
        }
        ExportFormat::LayeredJson => {
            s = serde_json::to_string(&to_json_value(g)).expect("serializable");
            s.push('\n');
        }
        ExportFormat::Dot => {
            s.push_str("graph G {\n  rankdir=LR;\n");
            for side in ["L", "R"] {
                write!(s, "  subgraph cluster_{side} {{ label=\"{side}\";").unwrap();
                for v in 1..=g.n {
                    write!(s, " {side}{v};").unwrap();
                }
                s.push_str(" }\n");
            }
            for (k, i, j) in g.edges() {
                writeln!(s, "  L{} -- R{} [label=\"{k}\"];", i + 1, j + 1).unwrap();
            }
            s.push_str("}\n");
        }
        ExportFormat::MatrixCsv => {
            s.push_str("layer,row");
            for c in 1..=g.n {
                write!(s, ",c{c}").unwrap();
            }
            s.push('\n');
            for (k, m) in dimension_matrices(g).iter().enumerate() {
                for (r, row) in m.rows.iter().enumerate() {
                    write!(s, "{k},{}", r + 1).unwrap();
                    for x in row {
                        write!(s, ",{x}").unwrap();
                    }
                    s.push('\n');
                }
            }
        }
    }
    s.into_bytes()
}

/// Reads a graph written as `layered-json` or `edge-csv`. Edge lists carry no
/// map information, so every layer is its own map.
pub fn import(bytes: &[u8], format: ExportFormat) -> Result<LayeredBipartiteGraph> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    match format {
        ExportFormat::LayeredJson => {
            let doc: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            let mut layers = Vec::new();
            let mut provenance = Vec::new();
            for l in doc.layers {
                let targets = l
                    .targets
                    .into_iter()
                    .map(|t| match t {
                        Some(0) => Err(Error::Parse("vertex labels start at 1".into())),
                        t => Ok(t.map(|t| t - 1)),
                    })
                    .collect::<Result<_>>()?;
                layers.push(PartialMonotoneMap::new(doc.n, targets)?);
                provenance.push(Provenance { map: l.map, rank: l.rank });
            }
            LayeredBipartiteGraph::new(doc.n, layers, provenance)
        }
        ExportFormat::EdgeCsv => {
            let mut lines = text.lines();
            if lines.next() != Some("layer,i,j") {
                return Err(Error::Parse("missing edge-csv header".into()));
            }
            let mut edges = Vec::new();
            for line in lines.filter(|l| !l.is_empty()) {
                let f: Vec<usize> = line
                    .split(',')
                    .map(|x| x.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{line:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if f.len() != 3 || f[1] == 0 || f[2] == 0 {
                    return Err(Error::Parse(format!("bad edge row {line:?}")));
                }
                edges.push((f[0], f[1] - 1, f[2] - 1));
            }
            let n = edges.iter().map(|e| e.1.max(e.2) + 1).max().unwrap_or(0);
            let n_layers = edges.iter().map(|e| e.0 + 1).max().unwrap_or(0);
            let mut targets = vec![vec![None; n]; n_layers];
            for (k, i, j) in edges {
                if targets[k][i].replace(j).is_some() {
                    return Err(Error::Parse(format!("layer {k} maps {} twice", i + 1)));
                }
            }
            let layers = targets
                .into_iter()
                .map(|t| PartialMonotoneMap::new(n, t))
                .collect::<Result<_>>()?;
            LayeredBipartiteGraph::from_layers(n, layers)
        }
        f => Err(Error::UnknownFormat(format!("{} cannot be imported", f.name()))),
    }
}
