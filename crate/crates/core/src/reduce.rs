//! Taxonomy-driven formal context reduction.
//!
//! Each iteration compares every pair of attribute labels, then every pair of
//! object labels, against a [`SynsetGraph`]. Pairs that are similar or
//! related are grouped and every group collapses into a single row or column
//! labelled by the group's common hypernym; the merged incidence is the
//! element-wise OR of the members. Iterations repeat until nothing merges or
//! the iteration budget runs out.

use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compare::quality_score;
use crate::context::FormalContext;
use crate::lattice::{build_addintent, invariants, InvariantReport};
use crate::taxonomy::{
    relation_of, search_depth, Ancestry, RelationKind, RelationVerdict, SynsetGraph,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("similar_depth ({similar}) must not exceed hypernym_depth ({hypernym})")]
    SimilarDepth { similar: u32, hypernym: u32 },
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("quality_floor {0} is outside [0, 1]")]
    QualityFloor(f64),
    #[error("max_senses must be at least 1")]
    NoSenses,
    #[error("context has no objects or no attributes")]
    EmptyContext,
    #[error("trace line {line}: {reason}")]
    BadTrace { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub hypernym_depth: u32,
    pub hyponym_depth: u32,
    pub similar_depth: u32,
    pub iterations: usize,
    /// Minimum quality score a step must keep; 0 disables the guard.
    pub quality_floor: f64,
    /// Senses considered per term; `None` means all.
    pub max_senses: Option<usize>,
}

impl Default for ReductionParams {
    fn default() -> Self {
        ReductionParams {
            hypernym_depth: 4,
            hyponym_depth: 4,
            similar_depth: 2,
            iterations: 30,
            quality_floor: 0.0,
            max_senses: None,
        }
    }
}

impl ReductionParams {
    pub fn validate(&self) -> Result<(), ReduceError> {
        if self.similar_depth > self.hypernym_depth {
            return Err(ReduceError::SimilarDepth {
                similar: self.similar_depth,
                hypernym: self.hypernym_depth,
            });
        }
        if self.iterations == 0 {
            return Err(ReduceError::NoIterations);
        }
        if !(0.0..=1.0).contains(&self.quality_floor) {
            return Err(ReduceError::QualityFloor(self.quality_floor));
        }
        if self.max_senses == Some(0) {
            return Err(ReduceError::NoSenses);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Object,
    Attribute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeKind {
    /// Founded on a similar pair.
    Crossover,
    /// Founded on a related pair.
    Mutation,
}

/// One collapse of several labels on an axis into a replacement label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub axis: Axis,
    /// Source labels in axis order; at least two, all distinct.
    pub labels: Vec<String>,
    pub replacement: String,
    pub kind: MergeKind,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objects: usize,
    pub attributes: usize,
    pub events: usize,
    pub rolled_back: bool,
    pub report: Option<InvariantReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub events: Vec<MergeEvent>,
    pub per_iteration: Vec<IterationRecord>,
}

impl ReductionTrace {
    /// One JSON object per line, one line per event.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(e).expect("event serializes")
            );
        }
        out
    }

    /// Reads events written by [`ReductionTrace::to_jsonl`].
    pub fn from_jsonl(text: &str) -> Result<Self, ReduceError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: MergeEvent =
                serde_json::from_str(line).map_err(|err| ReduceError::BadTrace {
                    line: i + 1,
                    reason: err.to_string(),
                })?;
            events.push(e);
        }
        Ok(ReductionTrace {
            events,
            per_iteration: Vec::new(),
        })
    }

    /// For every label on `axis` after replaying the events over
    /// `original`, the original labels it stands for.
    pub fn label_origins(
        &self,
        original: &[String],
        axis: Axis,
    ) -> Result<HashMap<String, Vec<String>>, String> {
        let mut map: HashMap<String, Vec<String>> = original
            .iter()
            .map(|l| (l.clone(), vec![l.clone()]))
            .collect();
        for e in self.events.iter().filter(|e| e.axis == axis) {
            let mut merged = Vec::new();
            for l in &e.labels {
                let src = map
                    .remove(l)
                    .ok_or_else(|| format!("event merges unknown label `{l}`"))?;
                merged.extend(src);
            }
            if map.contains_key(&e.replacement) {
                return Err(format!(
                    "replacement `{}` collides with a live label",
                    e.replacement
                ));
            }
            merged.sort();
            map.insert(e.replacement.clone(), merged);
        }
        Ok(map)
    }

    /// Applies the events to `original`, reproducing the reduced context.
    pub fn replay(&self, original: &FormalContext) -> Result<FormalContext, ReduceError> {
        let mut objects = original.objects().to_vec();
        let mut attributes = original.attributes().to_vec();
        let mut rows = original.rows().to_vec();
        for (n, e) in self.events.iter().enumerate() {
            let bad = |reason: String| ReduceError::BadTrace {
                line: n + 1,
                reason,
            };
            let labels = match e.axis {
                Axis::Object => &objects,
                Axis::Attribute => &attributes,
            };
            let mut members = Vec::with_capacity(e.labels.len());
            for l in &e.labels {
                let i = labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| bad(format!("unknown label `{l}`")))?;
                members.push(i);
            }
            members.sort_unstable();
            members.dedup();
            if members.len() < 2 {
                return Err(bad("fewer than two distinct labels".into()));
            }
            if labels
                .iter()
                .enumerate()
                .any(|(i, x)| *x == e.replacement && !members.contains(&i))
            {
                return Err(bad(format!(
                    "replacement `{}` collides with a live label",
                    e.replacement
                )));
            }
            let keep = members[0];
            let drop = &members[1..];
            match e.axis {
                Axis::Object => {
                    for &i in drop {
                        let r = rows[i].clone();
                        rows[keep].union_with(&r);
                    }
                    objects[keep] = e.replacement.clone();
                    for &i in drop.iter().rev() {
                        objects.remove(i);
                        rows.remove(i);
                    }
                }
                Axis::Attribute => {
                    let position: Vec<usize> = (0..attributes.len())
                        .map(|j| {
                            let k = if drop.contains(&j) { keep } else { j };
                            k - drop.iter().filter(|&&d| d < k).count()
                        })
                        .collect();
                    attributes[keep] = e.replacement.clone();
                    for &i in drop.iter().rev() {
                        attributes.remove(i);
                    }
                    for r in rows.iter_mut() {
                        let mut out = FixedBitSet::with_capacity(attributes.len());
                        for j in r.ones() {
                            out.insert(position[j]);
                        }
                        *r = out;
                    }
                }
            }
        }
        FormalContext::from_bitsets(objects, attributes, rows).map_err(|err| {
            ReduceError::BadTrace {
                line: 0,
                reason: err.to_string(),
            }
        })
    }
}

/// All index pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn enumerate_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

struct Group {
    members: Vec<usize>,
    replacement: String,
    kind: MergeKind,
}

fn kind_of(v: &RelationVerdict) -> MergeKind {
    if v.kind == RelationKind::Similar {
        MergeKind::Crossover
    } else {
        MergeKind::Mutation
    }
}

fn label_of(graph: &SynsetGraph, v: &RelationVerdict, fallback: &str) -> String {
    v.lcs
        .and_then(|s| graph.synset(s).lemmas.first().cloned())
        .unwrap_or_else(|| fallback.to_string())
}

/// Decides the merge groups on one axis.
fn plan_axis(labels: &[String], graph: &SynsetGraph, params: &ReductionParams) -> Vec<Group> {
    let depth = search_depth(params);
    let ancestry: Vec<Ancestry> = labels
        .iter()
        .map(|l| graph.ancestry(l, depth, params.max_senses))
        .collect();
    let mut verdicts: Vec<((usize, usize), RelationVerdict)> = Vec::new();
    let mut uf = UnionFind::new(labels.len());
    for (i, j) in enumerate_pairs(labels.len()) {
        let v = relation_of(graph, &ancestry[i], &ancestry[j], params);
        if v.is_mergeable() {
            uf.union(i, j);
            verdicts.push(((i, j), v));
        }
    }

    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..labels.len() {
        components.entry(uf.find(i)).or_default().push(i);
    }
    let mut roots: Vec<usize> = components
        .iter()
        .filter(|(_, m)| m.len() >= 2)
        .map(|(&r, _)| r)
        .collect();
    roots.sort_unstable();

    let bound = params.hypernym_depth.max(params.hyponym_depth);
    let mut groups = Vec::new();
    for root in roots {
        let members = components.remove(&root).unwrap();
        let pairs: Vec<&((usize, usize), RelationVerdict)> = verdicts
            .iter()
            .filter(|((i, _), _)| uf.find(*i) == root)
            .collect();
        let (_, founding) = pairs[0];
        let kind = kind_of(founding);
        if members.len() == 2 {
            groups.push(Group {
                replacement: label_of(graph, founding, &labels[members[0]]),
                members,
                kind,
            });
            continue;
        }
        if let Some(synset) = group_ancestor(graph, &members, &ancestry, bound) {
            if let Some(label) = graph.synset(synset).lemmas.first() {
                groups.push(Group {
                    replacement: label.clone(),
                    members,
                    kind,
                });
                continue;
            }
        }
        // No subsumer for the whole group: fall back to disjoint pairs in
        // enumeration order.
        let mut taken = vec![false; labels.len()];
        for &&((i, j), ref v) in &pairs {
            if !taken[i] && !taken[j] {
                taken[i] = true;
                taken[j] = true;
                groups.push(Group {
                    members: vec![i, j],
                    replacement: label_of(graph, v, &labels[i]),
                    kind: kind_of(v),
                });
            }
        }
    }
    groups
}

/// Common ancestor of every member within `bound` hops, minimizing the total
/// hop count, then the largest hop count, then the synset id.
fn group_ancestor(
    graph: &SynsetGraph,
    members: &[usize],
    ancestry: &[Ancestry],
    bound: u32,
) -> Option<usize> {
    let first = &ancestry[members[0]];
    let mut best: Option<((u32, u32, &str), usize)> = None;
    for (&s, &d0) in &first.depth {
        if d0 > bound {
            continue;
        }
        let mut total = d0;
        let mut worst = d0;
        let mut ok = true;
        for &m in &members[1..] {
            match ancestry[m].depth.get(&s) {
                Some(&d) if d <= bound => {
                    total += d;
                    worst = worst.max(d);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let key = (total, worst, graph.synset(s).id.as_str());
            if best.as_ref().map_or(true, |(k, _)| key < *k) {
                best = Some((key, s));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Applies groups to one axis. Returns the new labels, the position map from
/// old to new index, and the events in new-position order.
fn apply_groups(
    labels: &[String],
    groups: Vec<Group>,
    axis: Axis,
    iteration: usize,
) -> (Vec<String>, Vec<usize>, Vec<MergeEvent>) {
    // Every old position maps to a unit key; units sharing a key collapse,
    // which also absorbs existing labels equal to a replacement.
    let mut key: Vec<String> = labels.to_vec();
    let mut kind_at: Vec<Option<MergeKind>> = vec![None; labels.len()];
    for g in &groups {
        for &m in &g.members {
            key[m] = g.replacement.clone();
            kind_at[m] = Some(g.kind);
        }
    }
    let mut unit_of_key: HashMap<&str, usize> = HashMap::new();
    let mut units: Vec<Vec<usize>> = Vec::new();
    let mut position = vec![0; labels.len()];
    for (i, k) in key.iter().enumerate() {
        let u = *unit_of_key.entry(k.as_str()).or_insert_with(|| {
            units.push(Vec::new());
            units.len() - 1
        });
        units[u].push(i);
        position[i] = u;
    }
    let new_labels: Vec<String> = units.iter().map(|u| key[u[0]].clone()).collect();
    let events = units
        .iter()
        .zip(&new_labels)
        .filter(|(u, _)| u.len() >= 2)
        .map(|(u, replacement)| MergeEvent {
            axis,
            labels: u.iter().map(|&i| labels[i].clone()).collect(),
            replacement: replacement.clone(),
            kind: u
                .iter()
                .find_map(|&i| kind_at[i])
                .expect("a unit of size >= 2 contains a group"),
            iteration,
        })
        .collect();
    (new_labels, position, events)
}

/// One mut-over pass: attributes first, then objects.
pub fn mutover_step(
    context: &FormalContext,
    graph: &SynsetGraph,
    params: &ReductionParams,
    iteration: usize,
) -> (FormalContext, Vec<MergeEvent>) {
    let mut events = Vec::new();

    let groups = plan_axis(context.attributes(), graph, params);
    let (attributes, attr_pos, mut ev) =
        apply_groups(context.attributes(), groups, Axis::Attribute, iteration);
    events.append(&mut ev);
    let rows: Vec<FixedBitSet> = context
        .rows()
        .iter()
        .map(|r| {
            let mut out = FixedBitSet::with_capacity(attributes.len());
            for j in r.ones() {
                out.insert(attr_pos[j]);
            }
            out
        })
        .collect();

    let groups = plan_axis(context.objects(), graph, params);
    let (objects, obj_pos, mut ev) =
        apply_groups(context.objects(), groups, Axis::Object, iteration);
    events.append(&mut ev);
    let mut merged = vec![FixedBitSet::with_capacity(attributes.len()); objects.len()];
    for (i, r) in rows.iter().enumerate() {
        merged[obj_pos[i]].union_with(r);
    }

    let reduced = FormalContext::from_bitsets(objects, attributes, merged)
        .expect("merging preserves label uniqueness");
    (reduced, events)
}

/// Runs up to `params.iterations` mut-over passes, stopping at a fixpoint.
///
/// With `quality_floor > 0` the lattice of each candidate is compared with
/// the lattice of the input; a step scoring below the floor is discarded and
/// the run stops.
pub fn run_reduction(
    context: &FormalContext,
    graph: &SynsetGraph,
    params: &ReductionParams,
) -> Result<(FormalContext, ReductionTrace), ReduceError> {
    params.validate()?;
    let guard = params.quality_floor > 0.0;
    if guard && context.is_empty() {
        return Err(ReduceError::EmptyContext);
    }
    let baseline = guard.then(|| invariants(&build_addintent(context)));
    let mut current = context.clone();
    let mut trace = ReductionTrace::default();
    for iteration in 1..=params.iterations {
        let (next, events) = mutover_step(&current, graph, params, iteration);
        let mut record = IterationRecord {
            iteration,
            objects: next.n_objects(),
            attributes: next.n_attributes(),
            events: events.len(),
            rolled_back: false,
            report: None,
        };
        if let Some(base) = &baseline {
            let report = invariants(&build_addintent(&next));
            record.report = Some(report);
            if !events.is_empty() && quality_score(base, &report).score < params.quality_floor {
                record.rolled_back = true;
                record.objects = current.n_objects();
                record.attributes = current.n_attributes();
                trace.per_iteration.push(record);
                break;
            }
        }
        trace.per_iteration.push(record);
        let done = events.is_empty();
        trace.events.extend(events);
        current = next;
        if done {
            break;
        }
    }
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::tests::ctx;
    use crate::taxonomy::load_taxonomy_tsv;

    fn named(objects: &[&str], attributes: &[&str], rows: &[&str]) -> FormalContext {
        let inc: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.chars().map(|c| c == 'X').collect())
            .collect();
        FormalContext::new(
            objects.iter().map(|s| s.to_string()).collect(),
            attributes.iter().map(|s| s.to_string()).collect(),
            &inc,
        )
        .unwrap()
    }

    #[test]
    fn pairs() {
        assert_eq!(enumerate_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(enumerate_pairs(1).is_empty());
        assert!(enumerate_pairs(0).is_empty());
        assert_eq!(enumerate_pairs(5).len(), 10);
    }

    #[test]
    fn params_validation() {
        assert!(ReductionParams::default().validate().is_ok());
        let p = ReductionParams {
            similar_depth: 5,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(ReduceError::SimilarDepth { .. })
        ));
        let p = ReductionParams {
            iterations: 0,
            ..Default::default()
        };
        assert_eq!(p.validate(), Err(ReduceError::NoIterations));
    }

    #[test]
    fn unrelated_labels_untouched() {
        let g = load_taxonomy_tsv("cat\tfeline\n").unwrap();
        let c = ctx(&["X.", ".X"]);
        let (out, events) = mutover_step(&c, &g, &ReductionParams::default(), 1);
        assert_eq!(out, c);
        assert!(events.is_empty());
    }

    #[test]
    fn synonyms_in_one_synset() {
        let data = "00000010 03 n 01 thing 0 000 | root\n\
00000020 03 n 02 car 0 automobile 0 001 @ 00000010 n 0000 | vehicle\n";
        let g = crate::taxonomy::load_wordnet("", data).unwrap();
        let c = named(&["o1", "o2"], &["car", "automobile", "x"], &["X.X", ".X."]);
        let (out, events) = mutover_step(&c, &g, &ReductionParams::default(), 1);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, MergeKind::Crossover);
        assert_eq!(events[0].replacement, "car");
        assert_eq!(out.attributes(), ["car", "x"]);
        assert!(out.has(0, 0) && out.has(1, 0) && out.has(0, 1) && !out.has(1, 1));
    }

    #[test]
    fn group_of_three_uses_common_subsumer() {
        let g = load_taxonomy_tsv("a\tp\nb\tp\nc\tp\n").unwrap();
        let c = named(&["o"], &["a", "b", "c"], &["X.X"]);
        let (out, events) = mutover_step(&c, &g, &ReductionParams::default(), 1);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].labels, ["a", "b", "c"]);
        assert_eq!(out.attributes(), ["p"]);
    }

    #[test]
    fn group_without_subsumer_splits_into_pairs() {
        // a~b share p, b~c share q, but no node covers a, b and c.
        let g = load_taxonomy_tsv("a\tp\nb\tp\nb\tq\nc\tq\n").unwrap();
        let c = named(&["o"], &["a", "b", "c"], &["XXX"]);
        let (out, events) = mutover_step(&c, &g, &ReductionParams::default(), 1);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].labels, ["a", "b"]);
        assert_eq!(out.attributes(), ["p", "c"]);
        let (_, trace) = run_reduction(&c, &g, &ReductionParams::default()).unwrap();
        // next iteration relates p and c? p has no ancestors and c only q: unrelated.
        assert_eq!(trace.events.len(), 1);
    }

    #[test]
    fn replacement_absorbs_existing_label() {
        // cat and dog merge into carnivore, which is already a column.
        let g = load_taxonomy_tsv(crate::taxonomy::tests::ANIMALS).unwrap();
        let p = ReductionParams {
            hypernym_depth: 2,
            hyponym_depth: 0,
            similar_depth: 2,
            ..Default::default()
        };
        let c = named(
            &["o1", "o2"],
            &["cat", "x", "dog", "carnivore"],
            &["X...", "..XX"],
        );
        let (out, events) = mutover_step(&c, &g, &p, 1);
        // carnivore is within 2 hops of both so all three form one group
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].labels, ["cat", "dog", "carnivore"]);
        assert_eq!(out.attributes(), ["carnivore", "x"]);
        assert!(out.has(0, 0) && out.has(1, 0));
    }

    #[test]
    fn jsonl_round_trip_and_origins() {
        let g = load_taxonomy_tsv(crate::taxonomy::tests::ANIMALS).unwrap();
        let c = named(&["o1", "o2"], &["cat", "dog", "z"], &["X.X", ".XX"]);
        let (out, trace) = run_reduction(&c, &g, &ReductionParams::default()).unwrap();
        assert_eq!(out.attributes(), ["carnivore", "z"]);
        let back = ReductionTrace::from_jsonl(&trace.to_jsonl()).unwrap();
        assert_eq!(back.events, trace.events);
        let origins = back.label_origins(c.attributes(), Axis::Attribute).unwrap();
        assert_eq!(origins["carnivore"], ["cat", "dog"]);
        assert_eq!(origins["z"], ["z"]);
        assert_eq!(back.replay(&c).unwrap(), out);
        assert!(ReductionTrace::from_jsonl("{oops").is_err());
    }

    #[test]
    fn guard_rolls_back() {
        let g = load_taxonomy_tsv(crate::taxonomy::tests::ANIMALS).unwrap();
        // contranominal on {cat, dog}: merging collapses 4 concepts to 1.
        let c = named(&["o1", "o2"], &["cat", "dog"], &[".X", "X."]);
        let p = ReductionParams {
            quality_floor: 0.99,
            ..Default::default()
        };
        let (out, trace) = run_reduction(&c, &g, &p).unwrap();
        assert_eq!(out, c);
        assert!(trace.events.is_empty());
        assert!(trace.per_iteration[0].rolled_back);
        assert!(trace.per_iteration[0].report.is_some());
    }
}
