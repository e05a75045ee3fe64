//! Hypernym taxonomies and the similarity/relatedness tests that drive
//! merging.
//!
//! A [`SynsetGraph`] is loaded either from the WordNet noun database files
//! (`index.noun`, `data.noun`) or from a `child<TAB>parent` TSV. Terms are
//! looked up after lowercasing and replacing spaces with underscores.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::ReductionParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("malformed data.noun record at offset {offset}: {reason}")]
    MalformedData { offset: String, reason: String },
    #[error("malformed index.noun line {line}: {reason}")]
    MalformedIndex { line: usize, reason: String },
    #[error("malformed taxonomy line {line}: {reason}")]
    MalformedTsv { line: usize, reason: String },
    #[error("synset {from} points to missing synset {to}")]
    DanglingPointer { from: String, to: String },
    #[error("self-edge on `{0}`")]
    SelfEdge(String),
    #[error("hypernym cycle through {0}")]
    Cycle(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub id: String,
    pub lemmas: Vec<String>,
    /// Indices into [`SynsetGraph::synsets`].
    pub hypernyms: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SynsetGraph {
    synsets: Vec<Synset>,
    hyponyms: Vec<Vec<usize>>,
    lemma_index: HashMap<String, Vec<usize>>,
}

/// Lowercases and replaces spaces with underscores.
pub fn normalize_term(term: &str) -> String {
    term.trim().to_lowercase().replace(' ', "_")
}

impl SynsetGraph {
    /// Assembles a graph from synsets and a lemma index, validating that
    /// edges are in range and acyclic.
    pub fn from_parts(
        synsets: Vec<Synset>,
        lemma_index: HashMap<String, Vec<usize>>,
    ) -> Result<Self, TaxonomyError> {
        let n = synsets.len();
        let mut hyponyms = vec![Vec::new(); n];
        for (i, s) in synsets.iter().enumerate() {
            for &h in &s.hypernyms {
                if h >= n {
                    return Err(TaxonomyError::DanglingPointer {
                        from: s.id.clone(),
                        to: h.to_string(),
                    });
                }
                if h == i {
                    return Err(TaxonomyError::SelfEdge(s.id.clone()));
                }
                hyponyms[h].push(i);
            }
        }
        let graph = SynsetGraph {
            synsets,
            hyponyms,
            lemma_index,
        };
        graph.check_acyclic()?;
        Ok(graph)
    }

    fn check_acyclic(&self) -> Result<(), TaxonomyError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.synsets.len()];
        for root in 0..self.synsets.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&h) = self.synsets[node].hypernyms.get(*next) {
                    *next += 1;
                    match state[h] {
                        0 => {
                            state[h] = 1;
                            stack.push((h, 0));
                        }
                        1 => return Err(TaxonomyError::Cycle(self.synsets[h].id.clone())),
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.synsets.iter().map(|s| s.hypernyms.len()).sum()
    }

    pub fn synset(&self, index: usize) -> &Synset {
        &self.synsets[index]
    }

    pub fn hyponyms(&self, index: usize) -> &[usize] {
        &self.hyponyms[index]
    }

    pub fn find_id(&self, id: &str) -> Option<usize> {
        self.synsets.iter().position(|s| s.id == id)
    }

    /// Senses of a term in source order; empty when unknown.
    pub fn senses(&self, term: &str) -> &[usize] {
        self.lemma_index
            .get(&normalize_term(term))
            .map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, term: &str) -> bool {
        !self.senses(term).is_empty()
    }

    /// Terms of synsets that have no hyponyms, sorted.
    pub fn leaf_terms(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .synsets
            .iter()
            .enumerate()
            .filter(|(i, _)| self.hyponyms[*i].is_empty())
            .filter_map(|(_, s)| s.lemmas.first().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Ancestors (including the senses themselves at depth 0) reachable within
    /// `max_depth` hypernym hops, with the minimum hop count.
    pub fn ancestry(&self, term: &str, max_depth: u32, max_senses: Option<usize>) -> Ancestry {
        let senses = self.senses(term);
        let senses = &senses[..max_senses.map_or(senses.len(), |k| k.min(senses.len()))];
        let mut depth: HashMap<usize, u32> = HashMap::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in senses {
            if depth.insert(s, 0).is_none() {
                queue.push_back(s);
            }
        }
        while let Some(node) = queue.pop_front() {
            let d = depth[&node];
            if d == max_depth {
                continue;
            }
            for &h in &self.synsets[node].hypernyms {
                if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(h) {
                    e.insert(d + 1);
                    queue.push_back(h);
                }
            }
        }
        Ancestry {
            term: normalize_term(term),
            senses: senses.to_vec(),
            depth,
        }
    }
}

/// Hypernym closure of one term up to a hop bound.
#[derive(Debug, Clone)]
pub struct Ancestry {
    pub term: String,
    pub senses: Vec<usize>,
    pub depth: HashMap<usize, u32>,
}

impl Ancestry {
    pub fn is_known(&self) -> bool {
        !self.senses.is_empty()
    }
}

/// A common ancestor with the hop count from each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommonAncestor {
    pub synset: usize,
    pub depth_a: u32,
    pub depth_b: u32,
}

/// Best common ancestor of two ancestries with both hop counts `<= bound`.
///
/// Ordering: smallest `depth_a + depth_b`, then smallest `max(depth_a,
/// depth_b)`, then smallest synset id.
pub fn common_ancestor(
    graph: &SynsetGraph,
    a: &Ancestry,
    b: &Ancestry,
    bound: u32,
) -> Option<CommonAncestor> {
    let (small, large, swapped) = if a.depth.len() <= b.depth.len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    small
        .depth
        .iter()
        .filter(|(_, &ds)| ds <= bound)
        .filter_map(|(&s, &ds)| {
            let dl = *large.depth.get(&s)?;
            (dl <= bound).then_some((s, ds, dl))
        })
        .min_by(|x, y| {
            let kx = (x.1 + x.2, x.1.max(x.2), &graph.synsets[x.0].id);
            let ky = (y.1 + y.2, y.1.max(y.2), &graph.synsets[y.0].id);
            kx.cmp(&ky)
        })
        .map(|(s, ds, dl)| {
            let (depth_a, depth_b) = if swapped { (dl, ds) } else { (ds, dl) };
            CommonAncestor {
                synset: s,
                depth_a,
                depth_b,
            }
        })
}

/// Least common subsumer of two terms over all their senses, within
/// `max_depth` hops from each. A term is its own ancestor at depth 0.
pub fn lcs(graph: &SynsetGraph, a: &str, b: &str, max_depth: u32) -> Option<CommonAncestor> {
    let aa = graph.ancestry(a, max_depth, None);
    let bb = graph.ancestry(b, max_depth, None);
    common_ancestor(graph, &aa, &bb, max_depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Similar,
    Related,
    Unrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationVerdict {
    pub kind: RelationKind,
    /// Synset index of the subsumer. Absent for `Unrelated`, and for the
    /// degenerate case of two identical terms unknown to the taxonomy.
    pub lcs: Option<usize>,
    pub depth_a: u32,
    pub depth_b: u32,
}

impl RelationVerdict {
    fn unrelated() -> Self {
        RelationVerdict {
            kind: RelationKind::Unrelated,
            lcs: None,
            depth_a: 0,
            depth_b: 0,
        }
    }

    fn from_ancestor(kind: RelationKind, c: CommonAncestor) -> Self {
        RelationVerdict {
            kind,
            lcs: Some(c.synset),
            depth_a: c.depth_a,
            depth_b: c.depth_b,
        }
    }

    pub fn is_mergeable(&self) -> bool {
        self.kind != RelationKind::Unrelated
    }
}

/// Hop bound an [`Ancestry`] must be computed with to answer
/// [`relation_of`] under `params`.
pub fn search_depth(params: &ReductionParams) -> u32 {
    params
        .similar_depth
        .max(params.hypernym_depth)
        .max(params.hyponym_depth)
}

/// Verdict for two precomputed ancestries (computed to at least
/// [`search_depth`] hops).
pub fn relation_of(
    graph: &SynsetGraph,
    a: &Ancestry,
    b: &Ancestry,
    params: &ReductionParams,
) -> RelationVerdict {
    if a.term == b.term {
        let lcs = common_ancestor(graph, a, b, 0).map(|c| c.synset);
        return RelationVerdict {
            kind: RelationKind::Similar,
            lcs,
            depth_a: 0,
            depth_b: 0,
        };
    }
    if !a.is_known() || !b.is_known() {
        return RelationVerdict::unrelated();
    }
    if let Some(c) = common_ancestor(graph, a, b, params.similar_depth) {
        return RelationVerdict::from_ancestor(RelationKind::Similar, c);
    }
    if let Some(c) = common_ancestor(graph, a, b, params.hypernym_depth) {
        return RelationVerdict::from_ancestor(RelationKind::Related, c);
    }
    // One term on the other's hyponym chain: some sense of the general term
    // is an ancestor of the specific one within hyponym_depth hops.
    let chain = |low: &Ancestry, high: &Ancestry| {
        high.senses
            .iter()
            .filter_map(|s| low.depth.get(s).map(|&d| (d, *s)))
            .filter(|&(d, _)| d <= params.hyponym_depth)
            .min_by(|x, y| (x.0, &graph.synsets[x.1].id).cmp(&(y.0, &graph.synsets[y.1].id)))
    };
    let down = chain(a, b).map(|(d, s)| {
        (
            d,
            s,
            CommonAncestor {
                synset: s,
                depth_a: d,
                depth_b: 0,
            },
        )
    });
    let up = chain(b, a).map(|(d, s)| {
        (
            d,
            s,
            CommonAncestor {
                synset: s,
                depth_a: 0,
                depth_b: d,
            },
        )
    });
    let best = match (down, up) {
        (Some(x), Some(y)) => {
            if (x.0, &graph.synsets[x.1].id) <= (y.0, &graph.synsets[y.1].id) {
                Some(x.2)
            } else {
                Some(y.2)
            }
        }
        (x, y) => x.or(y).map(|t| t.2),
    };
    best.map_or_else(RelationVerdict::unrelated, |c| {
        RelationVerdict::from_ancestor(RelationKind::Related, c)
    })
}

/// Classifies two terms as similar, related, or unrelated.
pub fn relation(
    graph: &SynsetGraph,
    a: &str,
    b: &str,
    params: &ReductionParams,
) -> RelationVerdict {
    let depth = search_depth(params);
    let aa = graph.ancestry(a, depth, params.max_senses);
    let bb = graph.ancestry(b, depth, params.max_senses);
    relation_of(graph, &aa, &bb, params)
}

/// First lemma of the subsumer chosen by [`relation`]; for two identical terms
/// the term itself.
pub fn common_hypernym_label(
    graph: &SynsetGraph,
    a: &str,
    b: &str,
    params: &ReductionParams,
) -> Option<String> {
    let v = relation(graph, a, b, params);
    match (v.kind, v.lcs) {
        (RelationKind::Unrelated, _) => None,
        (_, Some(s)) => graph.synsets[s].lemmas.first().cloned(),
        (_, None) => Some(normalize_term(a)),
    }
}

/// Loads a `child<TAB>parent` taxonomy. Each distinct term becomes a
/// single-lemma synset whose id is the normalized term.
pub fn load_taxonomy_tsv(text: &str) -> Result<SynsetGraph, TaxonomyError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut synsets: Vec<Synset> = Vec::new();
    let mut intern = |t: String, synsets: &mut Vec<Synset>| -> usize {
        *ids.entry(t.clone()).or_insert_with(|| {
            synsets.push(Synset {
                id: t.clone(),
                lemmas: vec![t],
                hypernyms: Vec::new(),
            });
            synsets.len() - 1
        })
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != 2 {
            return Err(TaxonomyError::MalformedTsv {
                line,
                reason: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let child = normalize_term(fields[0]);
        let parent = normalize_term(fields[1]);
        if child.is_empty() || parent.is_empty() {
            return Err(TaxonomyError::MalformedTsv {
                line,
                reason: "empty term".into(),
            });
        }
        if child == parent {
            return Err(TaxonomyError::SelfEdge(child));
        }
        let c = intern(child, &mut synsets);
        let p = intern(parent, &mut synsets);
        if !synsets[c].hypernyms.contains(&p) {
            synsets[c].hypernyms.push(p);
        }
    }
    let lemma_index = synsets
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), vec![i]))
        .collect();
    SynsetGraph::from_parts(synsets, lemma_index)
}

/// Loads the WordNet noun database from the contents of `index.noun` and
/// `data.noun`. Hypernym (`@`) and instance hypernym (`@i`) pointers become
/// hypernym edges; other pointer types are ignored.
pub fn load_wordnet(index_noun: &str, data_noun: &str) -> Result<SynsetGraph, TaxonomyError> {
    let mut synsets: Vec<Synset> = Vec::new();
    let mut offsets: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<Vec<String>> = Vec::new();

    for raw in data_noun.lines() {
        if raw.starts_with("  ") || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw
            .split(" | ")
            .next()
            .unwrap_or(raw)
            .split_whitespace()
            .collect();
        let offset = fields[0].to_string();
        let bad = |reason: &str| TaxonomyError::MalformedData {
            offset: offset.clone(),
            reason: reason.to_string(),
        };
        if fields.len() < 4 || offset.parse::<u64>().is_err() {
            return Err(bad("missing synset header"));
        }
        let w_cnt = usize::from_str_radix(fields[3], 16).map_err(|_| bad("bad word count"))?;
        let mut pos = 4;
        let mut lemmas = Vec::with_capacity(w_cnt);
        for _ in 0..w_cnt {
            let word = fields.get(pos).ok_or_else(|| bad("truncated word list"))?;
            lemmas.push(word.to_lowercase());
            pos += 2;
        }
        if pos > fields.len() {
            return Err(bad("truncated word list"));
        }
        let p_cnt: usize = fields
            .get(pos)
            .ok_or_else(|| bad("missing pointer count"))?
            .parse()
            .map_err(|_| bad("bad pointer count"))?;
        pos += 1;
        let mut hypernyms = Vec::new();
        for _ in 0..p_cnt {
            if pos + 4 > fields.len() {
                return Err(bad("truncated pointer list"));
            }
            let (symbol, target, target_pos) = (fields[pos], fields[pos + 1], fields[pos + 2]);
            if (symbol == "@" || symbol == "@i") && target_pos == "n" {
                hypernyms.push(target.to_string());
            }
            pos += 4;
        }
        if offsets.insert(offset.clone(), synsets.len()).is_some() {
            return Err(bad("duplicate synset offset"));
        }
        synsets.push(Synset {
            id: offset,
            lemmas,
            hypernyms: Vec::new(),
        });
        pending.push(hypernyms);
    }

    for (i, targets) in pending.into_iter().enumerate() {
        for t in targets {
            let &h = offsets
                .get(&t)
                .ok_or_else(|| TaxonomyError::DanglingPointer {
                    from: synsets[i].id.clone(),
                    to: t.clone(),
                })?;
            if !synsets[i].hypernyms.contains(&h) {
                synsets[i].hypernyms.push(h);
            }
        }
    }

    let mut lemma_index: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, raw) in index_noun.lines().enumerate() {
        let line = i + 1;
        if raw.starts_with("  ") || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let bad = |reason: &str| TaxonomyError::MalformedIndex {
            line,
            reason: reason.to_string(),
        };
        if fields.len() < 4 {
            return Err(bad("too few fields"));
        }
        let synset_cnt: usize = fields[2].parse().map_err(|_| bad("bad synset count"))?;
        let p_cnt: usize = fields[3].parse().map_err(|_| bad("bad pointer count"))?;
        // lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt offsets...
        let start = 4 + p_cnt + 2;
        if fields.len() != start + synset_cnt {
            return Err(bad("synset count does not match offsets"));
        }
        let mut senses = Vec::with_capacity(synset_cnt);
        for off in &fields[start..] {
            let &s = offsets
                .get(*off)
                .ok_or_else(|| TaxonomyError::DanglingPointer {
                    from: fields[0].to_string(),
                    to: off.to_string(),
                })?;
            senses.push(s);
        }
        lemma_index.insert(fields[0].to_lowercase(), senses);
    }
    // Lemmas present in data.noun but absent from the index are appended in
    // offset order.
    for (i, s) in synsets.iter().enumerate() {
        for l in &s.lemmas {
            let senses = lemma_index.entry(l.clone()).or_default();
            if !senses.contains(&i) {
                senses.push(i);
            }
        }
    }
    SynsetGraph::from_parts(synsets, lemma_index)
}
