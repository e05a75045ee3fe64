//! Random-context benchmark harness.
//!
//! Contexts have a fixed number of objects and a growing number of
//! attributes per density ("fill ratio"); each cell of the ladder is timed
//! for every requested builder and written as one CSV row.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::FormalContext;
use crate::lattice::{build_addintent_with, BuildLimits, LatticeError};
use crate::reduce::{run_reduction, ReductionParams};
use crate::taxonomy::{Synset, SynsetGraph};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    AddintentDirect,
    ReduceThenAddintent,
}

impl Builder {
    pub fn name(self) -> &'static str {
        match self {
            Builder::AddintentDirect => "addintent_direct",
            Builder::ReduceThenAddintent => "reduce_then_addintent",
        }
    }
}

impl std::str::FromStr for Builder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "addintent_direct" => Ok(Builder::AddintentDirect),
            "reduce_then_addintent" => Ok(Builder::ReduceThenAddintent),
            other => Err(format!("unknown builder `{other}`")),
        }
    }
}

/// Synthetic taxonomy used to label random contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomySpec {
    pub branching: usize,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub densities: Vec<f64>,
    pub object_count: usize,
    /// One attribute-count ladder per density.
    pub ladders: Vec<Vec<usize>>,
    pub repetitions: usize,
    pub seed: u64,
    pub timeout: Duration,
    pub workers: usize,
    /// Concept ceiling per build; a cell above it is reported as `limit`.
    pub max_concepts: Option<usize>,
    pub taxonomy: Option<TaxonomySpec>,
    pub reduction: ReductionParams,
}

pub const DEFAULT_DENSITIES: [f64; 3] = [0.10, 0.25, 0.50];

/// Desk-scale ladders for 10%, 25% and 50% fill.
pub fn desk_ladders() -> Vec<Vec<usize>> {
    vec![
        vec![10, 50, 100, 250, 500, 1000, 2000],
        vec![10, 50, 100, 200, 400, 600],
        vec![10, 50, 100, 200, 400],
    ]
}

/// Full-range ladders: up to 20000, 6000 and 400 attributes.
pub fn full_ladders() -> Vec<Vec<usize>> {
    vec![
        vec![10, 50, 100, 500, 1000, 2000, 5000, 10000, 20000],
        vec![10, 50, 100, 500, 1000, 1225, 2000, 4000, 6000],
        vec![10, 50, 100, 200, 400],
    ]
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            densities: DEFAULT_DENSITIES.to_vec(),
            object_count: 100,
            ladders: desk_ladders(),
            repetitions: 5,
            seed: 0,
            timeout: Duration::from_secs(120),
            workers: 1,
            max_concepts: Some(5_000_000),
            taxonomy: None,
            reduction: ReductionParams::default(),
        }
    }
}

impl BenchSpec {
    pub fn validate(&self, builders: &[Builder]) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.densities.len() != self.ladders.len() {
            return bad(format!(
                "{} densities but {} ladders",
                self.densities.len(),
                self.ladders.len()
            ));
        }
        if let Some(d) = self.densities.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return bad(format!("density {d} outside (0, 1)"));
        }
        for ladder in &self.ladders {
            if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!(
                    "ladder {ladder:?} must be non-empty, positive and strictly increasing"
                ));
            }
        }
        if self.object_count == 0 || self.repetitions == 0 || self.workers == 0 {
            return bad("object_count, repetitions and workers must be positive".into());
        }
        if builders.contains(&Builder::ReduceThenAddintent) && self.taxonomy.is_none() {
            return bad("reduce_then_addintent needs a taxonomy".into());
        }
        if let Some(t) = self.taxonomy {
            if t.branching < 2 || t.depth < 1 {
                return bad("taxonomy needs branching >= 2 and depth >= 1".into());
            }
        }
        self.reduction
            .validate()
            .map_err(|e| BenchError::InvalidSpec(e.to_string()))
    }
}

/// Random context where each cell is set independently with probability
/// `fill_ratio`. Labels are `g<i>` / `m<j>`, or sampled without replacement
/// from `label_pool` while it lasts.
pub fn gen_random_context(
    n_objects: usize,
    n_attributes: usize,
    fill_ratio: f64,
    seed: u64,
    label_pool: Option<&[String]>,
) -> Result<FormalContext, BenchError> {
    if !(fill_ratio > 0.0 && fill_ratio < 1.0) {
        return Err(BenchError::InvalidSpec(format!(
            "fill ratio {fill_ratio} outside (0, 1)"
        )));
    }
    if n_objects == 0 || n_attributes == 0 {
        return Err(BenchError::InvalidSpec(
            "dimensions must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<FixedBitSet> = (0..n_objects)
        .map(|_| {
            let mut r = FixedBitSet::with_capacity(n_attributes);
            for j in 0..n_attributes {
                if rng.gen_bool(fill_ratio) {
                    r.insert(j);
                }
            }
            r
        })
        .collect();
    let mut labels = |prefix: &str, k: usize| -> Vec<String> {
        let mut out: Vec<String> = match label_pool {
            Some(pool) => pool
                .choose_multiple(&mut rng, k.min(pool.len()))
                .cloned()
                .collect(),
            None => Vec::new(),
        };
        let mut i = out.len();
        while out.len() < k {
            let candidate = format!("{prefix}{i}");
            if !out.contains(&candidate) {
                out.push(candidate);
            }
            i += 1;
        }
        out
    };
    let objects = labels("g", n_objects);
    let attributes = labels("m", n_attributes);
    Ok(
        FormalContext::from_bitsets(objects, attributes, rows)
            .expect("generated labels are unique"),
    )
}

/// Complete `branching`-ary tree of the given depth. Node names are
/// `t<k>` with `k` a seeded permutation of the node numbers.
pub fn gen_random_taxonomy(branching: usize, depth: u32, seed: u64) -> SynsetGraph {
    let total: usize = (0..=depth).map(|d| branching.pow(d)).sum();
    let mut names: Vec<usize> = (0..total).collect();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Breadth-first numbering: node k > 0 has parent (k - 1) / branching.
    let synsets: Vec<Synset> = (0..total)
        .map(|k| {
            let name = format!("t{}", names[k]);
            Synset {
                id: name.clone(),
                lemmas: vec![name],
                hypernyms: if k == 0 {
                    vec![]
                } else {
                    vec![(k - 1) / branching]
                },
            }
        })
        .collect();
    let lemma_index: HashMap<String, Vec<usize>> = synsets
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), vec![i]))
        .collect();
    SynsetGraph::from_parts(synsets, lemma_index).expect("a tree is acyclic")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Timeout,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub density: f64,
    pub attributes: usize,
    pub builder: Builder,
    pub seed: u64,
    pub rep: usize,
    /// Wall time; the timeout budget for cells that did not finish.
    pub millis: f64,
    pub status: CellStatus,
}

pub const CSV_HEADER: &str = "density,attributes,builder,seed,rep,millis,status";

/// Seed of one ladder cell; shared by every builder of that cell.
pub fn cell_seed(base: u64, density_index: usize, attributes: usize, rep: usize) -> u64 {
    let mut x = base
        ^ (density_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (attributes as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (rep as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

struct Cell {
    density_index: usize,
    attributes: usize,
    rep: usize,
}

fn run_cell(
    spec: &BenchSpec,
    builders: &[Builder],
    taxonomy: Option<&(SynsetGraph, Vec<String>)>,
    cell: &Cell,
) -> Vec<BenchRow> {
    let density = spec.densities[cell.density_index];
    let seed = cell_seed(spec.seed, cell.density_index, cell.attributes, cell.rep);
    let context = gen_random_context(
        spec.object_count,
        cell.attributes,
        density,
        seed,
        taxonomy.map(|(_, leaves)| leaves.as_slice()),
    )
    .expect("spec validated");
    builders
        .iter()
        .map(|&builder| {
            let start = Instant::now();
            let limits = BuildLimits {
                deadline: Some(start + spec.timeout),
                max_concepts: spec.max_concepts,
            };
            let result = match builder {
                Builder::AddintentDirect => build_addintent_with(&context, &limits).map(|_| ()),
                Builder::ReduceThenAddintent => {
                    let (graph, _) = taxonomy.expect("spec validated");
                    let (reduced, _) =
                        run_reduction(&context, graph, &spec.reduction).expect("params validated");
                    build_addintent_with(&reduced, &limits).map(|_| ())
                }
            };
            let status = match result {
                Ok(()) => CellStatus::Ok,
                Err(LatticeError::ConceptLimit(_)) => CellStatus::Limit,
                Err(_) => CellStatus::Timeout,
            };
            // Unfinished cells are censored at the budget.
            let millis = match status {
                CellStatus::Ok => start.elapsed().as_secs_f64() * 1000.0,
                _ => spec.timeout.as_secs_f64() * 1000.0,
            };
            BenchRow {
                density,
                attributes: cell.attributes,
                builder,
                seed,
                rep: cell.rep,
                millis: (millis * 1000.0).round() / 1000.0,
                status,
            }
        })
        .collect()
}

/// Runs every (density, attributes, repetition) cell for each builder,
/// writing CSV rows to `out` as they complete. With one worker rows come out
/// in ladder order.
pub fn run_benchmark<W: Write>(
    spec: &BenchSpec,
    builders: &[Builder],
    out: W,
) -> Result<Vec<BenchRow>, BenchError> {
    spec.validate(builders)?;
    let taxonomy = spec.taxonomy.map(|t| {
        let g = gen_random_taxonomy(t.branching, t.depth, spec.seed);
        let leaves = g.leaf_terms();
        (g, leaves)
    });
    let mut cells = Vec::new();
    for (d, ladder) in spec.ladders.iter().enumerate() {
        for &m in ladder {
            for rep in 0..spec.repetitions {
                cells.push(Cell {
                    density_index: d,
                    attributes: m,
                    rep,
                });
            }
        }
    }

    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    writer.flush()?;
    let mut rows = Vec::new();
    let mut emit = |row: BenchRow, writer: &mut csv::Writer<W>| -> Result<(), BenchError> {
        writer.serialize(&row)?;
        writer.flush()?;
        rows.push(row);
        Ok(())
    };

    if spec.workers == 1 {
        for cell in &cells {
            for row in run_cell(spec, builders, taxonomy.as_ref(), cell) {
                emit(row, &mut writer)?;
            }
        }
    } else {
        let queue = Mutex::new(cells.iter());
        let (tx, rx) = mpsc::channel::<Vec<BenchRow>>();
        std::thread::scope(|scope| -> Result<(), BenchError> {
            for _ in 0..spec.workers {
                let tx = tx.clone();
                let queue = &queue;
                let taxonomy = taxonomy.as_ref();
                scope.spawn(move || loop {
                    let next = queue.lock().expect("queue lock").next();
                    let Some(cell) = next else { break };
                    if tx.send(run_cell(spec, builders, taxonomy, cell)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for batch in rx {
                for row in batch {
                    emit(row, &mut writer)?;
                }
            }
            Ok(())
        })?;
    }
    Ok(rows)
}

/// Parses CSV written by [`run_benchmark`].
pub fn parse_rows(text: &str) -> Result<Vec<BenchRow>, BenchError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(BenchError::InvalidSpec(format!(
            "unexpected header `{header}`"
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}

/// Mean milliseconds per (builder, density, attributes), over all rows of the
/// cell regardless of status.
pub fn mean_millis(rows: &[BenchRow]) -> BTreeMap<(Builder, u64, usize), f64> {
    let mut acc: BTreeMap<(Builder, u64, usize), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc
            .entry((r.builder, r.density.to_bits(), r.attributes))
            .or_default();
        e.0 += r.millis;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

/// Gnuplot data: one indexed block per (builder, density) with lines
/// `attributes mean_millis`.
pub fn gnuplot_series(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let mut current: Option<(Builder, u64)> = None;
    for ((builder, density, m), mean) in mean_millis(rows) {
        if current != Some((builder, density)) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            out.push_str(&format!(
                "# builder={} density={}\n",
                builder.name(),
                f64::from_bits(density)
            ));
            current = Some((builder, density));
        }
        out.push_str(&format!("{m} {mean:.3}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::lcs;

    #[test]
    fn generator_is_deterministic() {
        let a = gen_random_context(4, 4, 0.999_999, 7, None).unwrap();
        let b = gen_random_context(4, 4, 0.999_999, 7, None).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.density()));
        assert_eq!(a.objects()[0], "g0");
        assert_eq!(a.attributes()[3], "m3");
        assert_ne!(
            gen_random_context(10, 10, 0.5, 1, None).unwrap(),
            gen_random_context(10, 10, 0.5, 2, None).unwrap()
        );
        assert!(gen_random_context(4, 4, 1.0, 7, None).is_err());
        assert!(gen_random_context(0, 4, 0.5, 7, None).is_err());
    }

    #[test]
    fn generator_density_binomial_bound() {
        // 100 000 Bernoulli(0.1) cells: sd = sqrt(n p (1-p)) / n ~ 0.00095, so
        // [0.08, 0.12] is more than 21 standard deviations wide on each side.
        let c = gen_random_context(100, 1000, 0.10, 42, None).unwrap();
        let d = c.density();
        assert!((0.08..=0.12).contains(&d), "density {d}");
    }

    #[test]
    fn pooled_labels() {
        let pool: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let c = gen_random_context(2, 5, 0.5, 3, Some(&pool)).unwrap();
        assert!(c.objects().iter().all(|o| pool.contains(o)));
        assert_eq!(
            c.attributes().iter().filter(|a| pool.contains(a)).count(),
            3
        );
    }

    #[test]
    fn taxonomy_tree() {
        let g = gen_random_taxonomy(2, 3, 5);
        assert_eq!(g.len(), 15);
        assert_eq!(g.leaf_terms().len(), 8);
        let h = gen_random_taxonomy(2, 3, 5);
        assert_eq!(g.synsets(), h.synsets());
        // siblings: breadth-first nodes 7 and 8 share parent 3
        let (a, b) = (&g.synset(7).lemmas[0], &g.synset(8).lemmas[0]);
        let c = lcs(&g, a, b, 4).unwrap();
        assert_eq!(c.synset, 3);
        assert_eq!((c.depth_a, c.depth_b), (1, 1));
    }

    #[test]
    fn row_count_and_schema() {
        let spec = BenchSpec {
            densities: vec![0.25],
            ladders: vec![vec![10, 20]],
            repetitions: 1,
            object_count: 20,
            ..BenchSpec::default()
        };
        let mut buf = Vec::new();
        let rows = run_benchmark(&spec, &[Builder::AddintentDirect], &mut buf).unwrap();
        assert_eq!(rows.len(), 2);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = parse_rows(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].seed, rows[0].seed);
        assert!(back.iter().all(|r| r.status == CellStatus::Ok));
        assert!(gnuplot_series(&rows).contains("# builder=addintent_direct density=0.25"));
    }

    #[test]
    fn timeout_rows() {
        let spec = BenchSpec {
            densities: vec![0.5],
            ladders: vec![vec![200]],
            repetitions: 1,
            timeout: Duration::from_millis(0),
            ..BenchSpec::default()
        };
        let rows = run_benchmark(&spec, &[Builder::AddintentDirect], std::io::sink()).unwrap();
        assert_eq!(rows[0].status, CellStatus::Timeout);
        assert_eq!(rows[0].millis, 0.0);
    }

    #[test]
    fn invalid_specs() {
        let spec = BenchSpec::default();
        assert!(spec.validate(&[Builder::ReduceThenAddintent]).is_err());
        let spec = BenchSpec {
            ladders: vec![vec![10, 10]],
            densities: vec![0.1],
            ..BenchSpec::default()
        };
        assert!(spec.validate(&[Builder::AddintentDirect]).is_err());
        let spec = BenchSpec {
            densities: vec![0.0],
            ladders: vec![vec![1]],
            ..BenchSpec::default()
        };
        assert!(spec.validate(&[Builder::AddintentDirect]).is_err());
    }

    #[test]
    fn workers_produce_same_rows() {
        let spec = BenchSpec {
            densities: vec![0.3],
            ladders: vec![vec![5, 10, 15]],
            repetitions: 2,
            object_count: 10,
            taxonomy: Some(TaxonomySpec {
                branching: 3,
                depth: 3,
            }),
            ..BenchSpec::default()
        };
        let builders = [Builder::AddintentDirect, Builder::ReduceThenAddintent];
        let serial = run_benchmark(&spec, &builders, std::io::sink()).unwrap();
        let parallel = run_benchmark(
            &BenchSpec { workers: 3, ..spec },
            &builders,
            std::io::sink(),
        )
        .unwrap();
        let key = |r: &BenchRow| (r.attributes, r.rep, r.builder, r.seed);
        let mut a: Vec<_> = serial.iter().map(key).collect();
        let mut b: Vec<_> = parallel.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
