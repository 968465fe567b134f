//! Subcommand flags, resolved configs and drivers.

use std::path::{Path, PathBuf};

use clap::Args;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use monex::discretize::{self, ExportFormat, LayeredBipartiteGraph};
use monex::family::{self, MapFamily};
use monex::forge::{self, ForgeConfig, GeneratorSet, SeedMode};
use monex::growth::{self, FloatSet};
use monex::interval::{IntervalSet, IntervalSetJson};
use monex::measure::{self, SpectralOptions};
use monex::rational::{self, int};
use monex::{words, FloatMat, Mat2Q, Rational};

use crate::config::*;

pub struct Ctx {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

impl Ctx {
    fn section(&self, name: &str) -> CliResult<Value> {
        load_section(self.config.as_deref(), name)
    }
}

fn required<'a>(x: &'a Option<String>, what: &str) -> CliResult<&'a Path> {
    x.as_deref().map(Path::new).ok_or_else(|| usage(format!("missing --{what}")))
}

fn load_gens(path: &Option<String>) -> CliResult<GeneratorSet> {
    read_payload(required(path, "gens")?)
}

fn load_family(gens: &Option<String>, k: Option<u64>) -> CliResult<MapFamily> {
    let gs = load_gens(gens)?;
    let k = k.unwrap_or_else(|| family::default_k(&gs.epsilon));
    let fam = family::build_family(&gs, k)?;
    for w in &fam.warnings {
        eprintln!("monex: warning: {w}");
    }
    Ok(fam)
}

fn load_graph(path: &Option<String>) -> CliResult<LayeredBipartiteGraph> {
    let p = required(path, "graph")?;
    let bytes = std::fs::read(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    let format = if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        ExportFormat::LayeredJson
    } else {
        ExportFormat::EdgeCsv
    };
    Ok(discretize::import(&bytes, format)?)
}

fn float(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------- forge

#[derive(Args, Serialize)]
pub struct ForgeArgs {
    /// Seed pair: `sanov` or `search`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    ell: Option<usize>,
    /// Ball radius as a fraction, or `auto` for the smallest dyadic value
    /// whose densest cell holds `min_cell` words.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    min_cell: Option<usize>,
    /// Freeness depth for the seed pair.
    #[arg(long)]
    seed_depth: Option<usize>,
    /// Longest seed word tried by `search`.
    #[arg(long)]
    search_len: Option<usize>,
    /// Freeness depth for the forged set (P3).
    #[arg(long)]
    verify_depth: Option<usize>,
    /// Separation rows up to this word length; 0 skips the property checks.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeCfg {
    seed: String,
    q: u64,
    ell: usize,
    epsilon: String,
    min_cell: usize,
    seed_depth: usize,
    search_len: usize,
    verify_depth: usize,
    k_max: usize,
    budget: u64,
}

impl Default for ForgeCfg {
    fn default() -> Self {
        ForgeCfg {
            seed: "sanov".into(),
            q: 1,
            ell: 8,
            epsilon: "auto".into(),
            min_cell: 3,
            seed_depth: 10,
            search_len: 6,
            verify_depth: 4,
            k_max: 2,
            budget: word_budget_default(),
        }
    }
}

fn check_report(gs: &GeneratorSet, report: &forge::PropertyReport) -> Vec<String> {
    let mut failed = report.failures();
    if !gs.ball_bound_verified {
        failed.push("ball bound".into());
    }
    failed
}

pub fn forge(ctx: &Ctx, a: ForgeArgs) -> CliResult<()> {
    let c: ForgeCfg = resolve(&a, ctx.section("forge")?)?;
    let mode: SeedMode = c.seed.parse()?;
    let mut fc = ForgeConfig::new(mode, c.q, c.ell, int(1));
    fc.freeness_depth = c.seed_depth;
    fc.search_len = c.search_len;
    fc.word_budget = c.budget;
    fc.epsilon = if c.epsilon == "auto" {
        forge::smallest_epsilon(&fc, c.min_cell)?
    } else {
        rational::parse(&c.epsilon)?
    };
    let mut gs = forge::forge(&fc)?;
    let mut failed = Vec::new();
    if !gs.ball_bound_verified {
        failed.push("ball bound".to_string());
    }
    if c.k_max > 0 {
        let r = forge::verify_properties(&gs, c.k_max, c.verify_depth, c.budget)?;
        failed = check_report(&gs, &r);
        gs.certificates = Some(r);
    }
    let path = Report::new("forge", &c)?.write(&ctx.out, to_value(&gs))?;
    println!("{}", path.display());
    eprintln!(
        "monex: epsilon = {}, |G| = {}, Q = {}, |W| = {}",
        rational::to_text(&gs.epsilon),
        gs.gens.len(),
        gs.big_q,
        gs.w_size
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("property checks failed: {}", failed.join(", "))))
    }
}

// ---------------------------------------------------------------- verify

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    /// Generator set or forge report.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Freeness depth (P3).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCfg {
    input: Option<String>,
    k_max: usize,
    depth: usize,
    budget: u64,
}

impl Default for VerifyCfg {
    fn default() -> Self {
        VerifyCfg { input: None, k_max: 2, depth: 4, budget: word_budget_default() }
    }
}

pub fn verify(ctx: &Ctx, a: VerifyArgs) -> CliResult<()> {
    let c: VerifyCfg = resolve(&a, ctx.section("verify")?)?;
    let gs: GeneratorSet = read_payload(required(&c.input, "input")?)?;
    let r = forge::verify_properties(&gs, c.k_max, c.depth, c.budget)?;
    let failed = check_report(&gs, &r);
    let result = json!({ "properties": r, "failures": failed, "passed": failed.is_empty() });
    let path = Report::new("verify", &c)?.write(&ctx.out, result)?;
    println!("{}", path.display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("property checks failed: {}", failed.join(", "))))
    }
}

// ---------------------------------------------------------------- expand

#[derive(Args, Serialize)]
pub struct ExpandArgs {
    /// Generator set or forge report.
    #[arg(long)]
    gens: Option<String>,
    /// Cell count `K`; defaults to the smallest power of two `>= 4/epsilon`.
    #[arg(long)]
    k: Option<u64>,
    /// JSON list of interval sets, each a list of `[lo, hi]` fractions.
    /// Without it the built-in corpus is used.
    #[arg(long)]
    sets: Option<String>,
    #[arg(long)]
    corpus: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpandCfg {
    gens: Option<String>,
    k: Option<u64>,
    sets: Option<String>,
    corpus: usize,
    seed: u64,
    sigma: String,
}

impl Default for ExpandCfg {
    fn default() -> Self {
        ExpandCfg { gens: None, k: None, sets: None, corpus: 200, seed: 1, sigma: "1/100".into() }
    }
}

fn family_summary(fam: &MapFamily) -> Value {
    json!({
        "k": fam.k,
        "epsilon": rational::to_text(&fam.epsilon),
        "maps": fam.maps.len(),
        "mobius_maps": fam.mobius_count(),
        "warnings": fam.warnings,
        "sup_deviation": family::sup_deviation(fam),
    })
}

pub fn expand(ctx: &Ctx, a: ExpandArgs) -> CliResult<()> {
    let c: ExpandCfg = resolve(&a, ctx.section("expand")?)?;
    let fam = load_family(&c.gens, c.k)?;
    let sigma = rational::parse(&c.sigma)?;
    let result = match &c.sets {
        Some(path) => {
            let sets: Vec<IntervalSetJson> = read_payload(Path::new(path))?;
            let rows = sets
                .iter()
                .map(|j| {
                    let set = IntervalSet::from_json(j)?;
                    if !set.within_unit() {
                        return Err(usage("interval sets must lie in [0, 1]"));
                    }
                    let image = family::apply_family(&fam, &set);
                    let mut row = json!({
                        "set": set.to_json(),
                        "measure": rational::to_text(&set.measure()),
                        "image": image.to_json(),
                        "image_measure": rational::to_text(&image.measure()),
                    });
                    if let Ok(r) = family::expansion_ratio(&fam, &set) {
                        row["ratio"] = json!(rational::to_text(&r.ratio));
                        row["ratio_f64"] = json!(float(&r.ratio));
                        row["too_large"] = json!(r.too_large);
                        row["balance"] = to_value(&family::balance_test(&set, fam.k, &sigma)?);
                    }
                    Ok(row)
                })
                .collect::<CliResult<Vec<_>>>()?;
            json!({ "family": family_summary(&fam), "sets": rows })
        }
        None => {
            let corpus = measure::builtin_corpus(&fam, c.corpus, c.seed);
            let r = measure::continuous_corpus_test(&fam, &corpus, &sigma)?;
            eprintln!("monex: min ratio over {} sets = {:.6}", r.sets, r.min_ratio_f64);
            json!({ "family": family_summary(&fam), "corpus": r })
        }
    };
    let path = Report::new("expand", &c)?.write(&ctx.out, result)?;
    println!("{}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- build-graph

#[derive(Args, Serialize)]
pub struct BuildGraphArgs {
    /// Generator set or forge report.
    #[arg(long)]
    gens: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<u64>,
    /// Export formats: edge-csv, layered-json, dot, matrix-csv.
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildGraphCfg {
    gens: Option<String>,
    n: usize,
    k: Option<u64>,
    formats: Vec<String>,
}

impl Default for BuildGraphCfg {
    fn default() -> Self {
        BuildGraphCfg { gens: None, n: 256, k: None, formats: vec!["layered-json".into()] }
    }
}

fn write_exports(
    ctx: &Ctx,
    stem: &str,
    g: &LayeredBipartiteGraph,
    formats: &[String],
) -> CliResult<serde_json::Map<String, Value>> {
    let mut files = serde_json::Map::new();
    for f in formats {
        let format: ExportFormat = f.parse()?;
        let path = write_fresh(&ctx.out, stem, format.extension(), &discretize::export(g, format))?;
        files.insert(format.name().into(), json!(path.display().to_string()));
    }
    Ok(files)
}

pub fn build_graph(ctx: &Ctx, a: BuildGraphArgs) -> CliResult<()> {
    let c: BuildGraphCfg = resolve(&a, ctx.section("build-graph")?)?;
    let fam = load_family(&c.gens, c.k)?;
    let g = discretize::discretize(&fam, c.n)?;
    let report = Report::new("build-graph", &c)?;
    let files = write_exports(ctx, &report.stem(), &g, &c.formats)?;
    let per_map = g.layers_per_map();
    let result = json!({
        "n": g.n,
        "k": fam.k,
        "maps": fam.maps.len(),
        "layers": g.layers.len(),
        "edges": g.edge_count(),
        "max_degree": g.max_degree(),
        "max_layers_per_map": per_map.values().max(),
        "strictly_monotone": g.layers.iter().all(|l| l.is_strictly_monotone()),
        "files": files,
    });
    let path = report.write(&ctx.out, result)?;
    println!("{}", path.display());
    for f in files.values() {
        println!("{}", f.as_str().unwrap());
    }
    Ok(())
}

// ---------------------------------------------------------------- measure

#[derive(Args, Serialize)]
pub struct MeasureArgs {
    /// Graph as layered-json or edge-csv.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    spectral: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    exhaustive: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dimension: Option<bool>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Prime field for the dimension test.
    #[arg(long)]
    p: Option<u64>,
    /// Subspace dimension; defaults to n/4.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureCfg {
    graph: Option<String>,
    spectral: bool,
    exhaustive: bool,
    dimension: bool,
    tol: f64,
    seed: u64,
    p: u64,
    dim: Option<usize>,
    trials: usize,
}

impl Default for MeasureCfg {
    fn default() -> Self {
        MeasureCfg {
            graph: None,
            spectral: false,
            exhaustive: false,
            dimension: false,
            tol: 1e-9,
            seed: 0x5eed,
            p: 2,
            dim: None,
            trials: 100,
        }
    }
}

pub fn measure(ctx: &Ctx, a: MeasureArgs) -> CliResult<()> {
    let mut c: MeasureCfg = resolve(&a, ctx.section("measure")?)?;
    if !(c.spectral || c.exhaustive || c.dimension) {
        c.spectral = true;
    }
    let g = load_graph(&c.graph)?;
    let mut result = json!({ "n": g.n, "layers": g.layers.len() });
    if c.spectral {
        let mut opts = SpectralOptions::new(c.tol);
        opts.seed = c.seed;
        let r = measure::spectral_report(&g, opts)?;
        eprintln!("monex: sigma2 = {:.9}", r.sigma2.unwrap_or(f64::NAN));
        result["spectral"] = to_value(&r);
    }
    if c.exhaustive {
        result["exhaustive"] = to_value(&measure::vertex_expansion_exact(&g)?);
    }
    if c.dimension {
        let mats = discretize::dimension_matrices(&g);
        let dim = c.dim.unwrap_or((g.n / 4).max(1));
        result["dimension"] = to_value(&measure::subspace_dimension_test(&mats, c.p, dim, c.trials, c.seed)?);
    }
    let path = Report::new("measure", &c)?.write(&ctx.out, result)?;
    println!("{}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- walk

#[derive(Args, Serialize)]
pub struct WalkArgs {
    /// Rank of the free group.
    #[arg(long)]
    rank: Option<usize>,
    /// Walk lengths for the return probability.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<usize>>,
    /// Generator set for the flattening series.
    #[arg(long)]
    gens: Option<String>,
    #[arg(long, value_delimiter = ',')]
    ells: Option<Vec<usize>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkCfg {
    rank: usize,
    t: Vec<usize>,
    gens: Option<String>,
    ells: Vec<usize>,
    delta: f64,
    samples: usize,
    seed: u64,
}

impl Default for WalkCfg {
    fn default() -> Self {
        WalkCfg {
            rank: 2,
            t: vec![50, 100, 200, 500],
            gens: None,
            ells: vec![1, 2, 4, 8],
            delta: 1e-3,
            samples: 100_000,
            seed: 1,
        }
    }
}

pub fn walk(ctx: &Ctx, a: WalkArgs) -> CliResult<()> {
    let c: WalkCfg = resolve(&a, ctx.section("walk")?)?;
    let limit = words::kesten_limit(c.rank);
    let rows = c
        .t
        .iter()
        .map(|&t| {
            let p = words::kesten_return_prob(c.rank, t)?;
            let root = words::kesten_root(c.rank, t)?;
            Ok(json!({
                "t": t,
                "p": rational::to_text(&p),
                "root": root,
                "relative_error": (root - limit).abs() / limit,
            }))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut result = json!({ "rank": c.rank, "limit": limit, "return": rows });
    if c.gens.is_some() {
        let gs = load_gens(&c.gens)?;
        let gens: Vec<FloatMat> = gs.gens.iter().map(Mat2Q::to_float).collect::<monex::Result<_>>()?;
        let series = c
            .ells
            .iter()
            .map(|&l| growth::flatness(&gens, l, c.delta, c.samples, c.seed))
            .collect::<monex::Result<Vec<_>>>()?;
        result["flatness"] = to_value(&series);
        result["flatness_non_increasing"] = json!(growth::non_increasing(&series, 3.0));
    }
    let path = Report::new("walk", &c)?.write(&ctx.out, result)?;
    println!("{}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- growth

#[derive(Args, Serialize)]
pub struct GrowthArgs {
    /// product, covering, flatness, trace, trace-identity, amplification, sum-product.
    #[arg(long)]
    experiment: Option<String>,
    /// Input set: words, rotation, diagonal (product); random, geometric
    /// (amplification); interval, progression (sum-product).
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    gens: Option<String>,
    /// Word length for word sets.
    #[arg(long)]
    word_len: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Sample budget.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    ells: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// Matrix as four fractions `"a b c d"`.
    #[arg(long)]
    g: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthCfg {
    experiment: String,
    set: Option<String>,
    gens: Option<String>,
    word_len: usize,
    delta: f64,
    budget: usize,
    seed: u64,
    ells: Vec<usize>,
    samples: usize,
    gamma: f64,
    lambda: f64,
    points: usize,
    x: String,
    y: String,
    g: String,
}

impl Default for GrowthCfg {
    fn default() -> Self {
        GrowthCfg {
            experiment: "product".into(),
            set: None,
            gens: None,
            word_len: 2,
            delta: 1e-3,
            budget: 200_000,
            seed: 1,
            ells: vec![1, 2, 4, 8],
            samples: 100_000,
            gamma: 1.0,
            lambda: 0.5,
            points: 200,
            x: "2".into(),
            y: "3".into(),
            g: "1 1 1 2".into(),
        }
    }
}

fn word_set(c: &GrowthCfg) -> CliResult<(GeneratorSet, FloatSet)> {
    let gs = load_gens(&c.gens)?;
    let ball = forge::evaluate_ball(&gs.gens, c.word_len, word_budget_default())?;
    let mats: Vec<Mat2Q> = ball.into_iter().map(|(_, m)| m).collect();
    let set = FloatSet::from_exact(&mats)?;
    Ok((gs, set))
}

/// `count` points of `[1/2, 2]` at mutual distance `> 2δ`, from a seeded stream.
fn separated_points(count: usize, delta: f64, seed: u64) -> Vec<f64> {
    use rand_like::Stream;
    let mut s = Stream::new(seed);
    let mut pts: Vec<f64> = Vec::new();
    let mut tries = 0;
    while pts.len() < count && tries < 1000 * count {
        tries += 1;
        let x = 0.5 + 1.5 * s.next_f64();
        if pts.iter().all(|p| (p - x).abs() > 2.0 * delta) {
            pts.push(x);
        }
    }
    pts
}

/// Small deterministic uniform stream for point sets (splitmix64).
mod rand_like {
    pub struct Stream(u64);

    impl Stream {
        pub fn new(seed: u64) -> Self {
            Stream(seed)
        }

        pub fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        }
    }
}

pub fn growth(ctx: &Ctx, a: GrowthArgs) -> CliResult<()> {
    let c: GrowthCfg = resolve(&a, ctx.section("growth")?)?;
    let set = c.set.as_deref();
    let result = match c.experiment.as_str() {
        "product" => {
            let a = match set.unwrap_or("words") {
                "words" => word_set(&c)?.1,
                "rotation" => growth::rotation_net(c.delta),
                "diagonal" => growth::diagonal_segment(1.0, c.delta),
                s => return Err(usage(format!("unknown set {s:?}"))),
            };
            to_value(&growth::product_growth(&a, c.delta, c.budget, c.seed)?)
        }
        "covering" => {
            let (_, a) = word_set(&c)?;
            json!({ "size": a.mats.len(), "delta": c.delta, "covering": growth::covering_number(&a.mats, c.delta) })
        }
        "flatness" => {
            let gs = load_gens(&c.gens)?;
            let gens: Vec<FloatMat> = gs.gens.iter().map(Mat2Q::to_float).collect::<monex::Result<_>>()?;
            let series = c
                .ells
                .iter()
                .map(|&l| growth::flatness(&gens, l, c.delta, c.samples, c.seed))
                .collect::<monex::Result<Vec<_>>>()?;
            json!({ "series": series, "non_increasing": growth::non_increasing(&series, 3.0) })
        }
        "trace" => {
            let (gs, a) = word_set(&c)?;
            if gs.gens.len() < 2 {
                return Err(usage("trace probes need two generators"));
            }
            let probes = [Mat2Q::identity(), gs.gens[0].clone(), gs.gens[1].clone(), &gs.gens[0] * &gs.gens[1]];
            to_value(&growth::trace_set_growth(&a.mats, &probes, c.delta)?)
        }
        "trace-identity" => {
            let g: Mat2Q = c.g.parse()?;
            let (x, y) = (rational::parse(&c.x)?, rational::parse(&c.y)?);
            let pass = growth::trace_identity_check(&x, &y, &g)?;
            if !pass {
                return Err(Failure::Verification("trace identity failed".into()));
            }
            json!({ "pass": pass })
        }
        "amplification" => {
            let s: Vec<f64> = match set.unwrap_or("random") {
                "random" => separated_points(c.points, c.delta, c.seed),
                "geometric" => {
                    let r = (2f64.ln() / c.points as f64).exp();
                    (0..c.points).map(|k| r.powi(k as i32)).collect()
                }
                s => return Err(usage(format!("unknown set {s:?}"))),
            };
            to_value(&growth::amplification_set(&s, c.gamma, c.lambda, c.delta, c.budget, c.seed)?)
        }
        "sum-product" => {
            let a: Vec<f64> = match set.unwrap_or("interval") {
                "interval" => {
                    let n = (1.0 / c.delta).round() as usize;
                    (0..=n).map(|k| k as f64 * c.delta).collect()
                }
                "progression" => (1..=c.points).map(|k| k as f64 / c.points as f64).collect(),
                s => return Err(usage(format!("unknown set {s:?}"))),
            };
            let (sums, prods) = growth::sum_product(&a, c.delta);
            json!({ "size": a.len(), "cover_a": growth::covering_1d(&a, c.delta), "cover_sums": sums, "cover_products": prods })
        }
        e => return Err(usage(format!("unknown experiment {e:?}"))),
    };
    let path = Report::new("growth", &c)?.write(&ctx.out, result)?;
    println!("{}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- export

#[derive(Args, Serialize)]
pub struct ExportArgs {
    /// Graph as layered-json or edge-csv.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    format: Option<String>,
    /// Write to standard output instead of a file.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    stdout: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportCfg {
    graph: Option<String>,
    format: String,
    stdout: bool,
}

impl Default for ExportCfg {
    fn default() -> Self {
        ExportCfg { graph: None, format: "edge-csv".into(), stdout: false }
    }
}

pub fn export(ctx: &Ctx, a: ExportArgs) -> CliResult<()> {
    use std::io::Write;
    let c: ExportCfg = resolve(&a, ctx.section("export")?)?;
    let format: ExportFormat = c.format.parse()?;
    let g = load_graph(&c.graph)?;
    let bytes = discretize::export(&g, format);
    if c.stdout {
        match std::io::stdout().write_all(&bytes) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(usage(e.to_string())),
            _ => {}
        }
    } else {
        let stem = Report::new("export", &c)?.stem();
        println!("{}", write_fresh(&ctx.out, &stem, format.extension(), &bytes)?.display());
    }
    Ok(())
}
