//! Forge, family and discretization checked against each other.

use std::collections::BTreeSet;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use monex::discretize::{self, ExportFormat};
use monex::family::{self, MapFamily};
use monex::forge::{self, ForgeConfig, SeedMode};
use monex::interval::{Interval, IntervalSet};
use monex::rational::rat;

fn forged_family() -> MapFamily {
    let gs = forge::forge(&ForgeConfig::new(SeedMode::Search, 50, 4, rat(1, 4))).unwrap();
    family::build_family(&gs, family::default_k(&gs.epsilon)).unwrap()
}

fn cell(i: usize, n: usize) -> Interval {
    Interval { lo: rat(i as i64, n as i64), hi: rat(i as i64 + 1, n as i64) }
}

#[test]
fn layers_partition_the_overlap_relation() {
    let fam = forged_family();
    let n = 64;
    let g = discretize::discretize(&fam, n).unwrap();
    let mut from_layers = BTreeSet::new();
    for (layer, prov) in g.layers.iter().zip(&g.provenance) {
        assert!(layer.is_strictly_monotone());
        for (i, j) in layer.edges() {
            assert!(from_layers.insert((prov.map, i, j)), "edge repeated");
        }
    }
    let raw: BTreeSet<(usize, usize, usize)> = fam
        .maps
        .iter()
        .enumerate()
        .flat_map(|(k, m)| discretize::overlap_relation(m, n).into_iter().map(move |(i, j)| (k, i, j)))
        .collect();
    assert_eq!(from_layers, raw);
}

#[test]
fn degree_bound_from_derivatives() {
    let fam = forged_family();
    let dev = family::sup_deviation(&fam);
    // every map has ψ′ ≤ derivative_max (shifts and the identity have ψ′ = 1)
    let per_map = 1 + dev.derivative_max.ceil().to_integer().to_string().parse::<usize>().unwrap();
    for n in [32, 128] {
        let g = discretize::discretize(&fam, n).unwrap();
        assert!(g.max_degree() <= fam.maps.len() * per_map, "n = {n}");
    }
}

/// For `A` a union of cells indexed by `S`, every cell that `Ψ(A)` meets in
/// positive measure is a neighbour of `S`.
#[test]
fn continuous_and_discrete_neighbourhoods_agree() {
    let fam = forged_family();
    let n = 64;
    let g = discretize::discretize(&fam, n).unwrap();
    let nb = g.neighbours();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let s: BTreeSet<usize> = (0..rng.gen_range(1..=16)).map(|_| rng.gen_range(0..n)).collect();
        let a = IntervalSet::from_intervals(s.iter().map(|&i| cell(i, n)).collect());
        let image = family::apply_family(&fam, &a);
        let discrete: BTreeSet<usize> = s.iter().flat_map(|&i| nb[i].iter().copied()).collect();
        for j in 0..n {
            if !image.measure_in(&cell(j, n)).is_zero() {
                assert!(discrete.contains(&j), "cell {j} missing from N(S)");
            }
        }
    }
}

#[test]
fn layered_json_is_byte_stable() {
    let fam = forged_family();
    let g = discretize::discretize(&fam, 48).unwrap();
    let bytes = discretize::export(&g, ExportFormat::LayeredJson);
    let back = discretize::import(&bytes, ExportFormat::LayeredJson).unwrap();
    assert_eq!(discretize::export(&back, ExportFormat::LayeredJson), bytes);
    assert_eq!(back.provenance, g.provenance);
}
