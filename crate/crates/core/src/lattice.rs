//! Concept lattices: construction, Hasse-diagram invariants, and export.
//!
//! [`build_addintent`] is the production builder: objects are inserted one at
//! a time and the cover relation is maintained incrementally.
//! [`build_bruteforce`] enumerates closures of every subset of the smaller
//! axis and is kept as an independent oracle.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::FormalContext;

/// Largest `min(|objects|, |attributes|)` the brute-force builder accepts.
pub const ORACLE_BOUND: usize = 20;

/// Default concept count up to which the exact width is computed.
pub const EXACT_WIDTH_LIMIT: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("brute-force enumeration needs min(|O|, |A|) <= {ORACLE_BOUND}, got {0}")]
    OracleBound(usize),
    #[error("lattice construction exceeded the time budget")]
    Timeout,
    #[error("lattice construction exceeded {0} concepts")]
    ConceptLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormalConcept {
    /// Bitset over objects.
    pub extent: FixedBitSet,
    /// Bitset over attributes.
    pub intent: FixedBitSet,
}

impl FormalConcept {
    pub fn extent_indices(&self) -> Vec<usize> {
        self.extent.ones().collect()
    }

    pub fn intent_indices(&self) -> Vec<usize> {
        self.intent.ones().collect()
    }
}

/// Concepts in canonical order (extent size descending, then extent bits
/// ascending) with the Hasse cover edges `(lower, upper)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptLattice {
    concepts: Vec<FormalConcept>,
    covers: Vec<(usize, usize)>,
    upper: Vec<Vec<usize>>,
    lower: Vec<Vec<usize>>,
    top: usize,
    bottom: usize,
}

impl ConceptLattice {
    /// Canonicalizes concept order and builds adjacency. `concepts` must be
    /// the concepts of one context and `covers` its cover pairs.
    pub fn from_parts(concepts: Vec<FormalConcept>, covers: Vec<(usize, usize)>) -> Self {
        let mut order: Vec<usize> = (0..concepts.len()).collect();
        order.sort_by(|&a, &b| {
            let (ea, eb) = (&concepts[a].extent, &concepts[b].extent);
            eb.count_ones(..)
                .cmp(&ea.count_ones(..))
                .then_with(|| ea.ones().cmp(eb.ones()))
        });
        let mut rank = vec![0; concepts.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let mut slots: Vec<Option<FormalConcept>> = concepts.into_iter().map(Some).collect();
        let concepts: Vec<FormalConcept> =
            order.iter().map(|&o| slots[o].take().unwrap()).collect();
        let mut covers: Vec<(usize, usize)> = covers
            .into_iter()
            .map(|(l, u)| (rank[l], rank[u]))
            .collect();
        covers.sort_unstable();
        covers.dedup();
        let n = concepts.len();
        let mut upper = vec![Vec::new(); n];
        let mut lower = vec![Vec::new(); n];
        for &(l, u) in &covers {
            upper[l].push(u);
            lower[u].push(l);
        }
        ConceptLattice {
            top: 0,
            bottom: n.saturating_sub(1),
            concepts,
            covers,
            upper,
            lower,
        }
    }

    pub fn concepts(&self) -> &[FormalConcept] {
        &self.concepts
    }

    pub fn concept(&self, index: usize) -> &FormalConcept {
        &self.concepts[index]
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    /// Immediate successors (more general concepts).
    pub fn upper_covers(&self, index: usize) -> &[usize] {
        &self.upper[index]
    }

    /// Immediate predecessors (more specific concepts).
    pub fn lower_covers(&self, index: usize) -> &[usize] {
        &self.lower[index]
    }

    /// `a <= b` in the concept order.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.concepts[a].extent.is_subset(&self.concepts[b].extent)
    }

    pub fn find_by_extent(&self, extent: &FixedBitSet) -> Option<usize> {
        self.concepts.iter().position(|c| &c.extent == extent)
    }

    pub fn find_by_intent(&self, intent: &FixedBitSet) -> Option<usize> {
        self.concepts.iter().position(|c| &c.intent == intent)
    }

    /// Infimum: the concept whose extent is the intersection.
    pub fn meet(&self, a: usize, b: usize) -> usize {
        let mut e = self.concepts[a].extent.clone();
        e.intersect_with(&self.concepts[b].extent);
        self.find_by_extent(&e)
            .expect("extents of a lattice are closed under intersection")
    }

    /// Supremum: the concept whose intent is the intersection.
    pub fn join(&self, a: usize, b: usize) -> usize {
        let mut i = self.concepts[a].intent.clone();
        i.intersect_with(&self.concepts[b].intent);
        self.find_by_intent(&i)
            .expect("intents of a lattice are closed under intersection")
    }
}

/// Immediate strict-inclusion pairs of a concept family, by exhaustive test.
pub fn covers_by_inclusion(concepts: &[FormalConcept]) -> Vec<(usize, usize)> {
    let n = concepts.len();
    let below = |a: usize, b: usize| {
        a != b
            && concepts[a].extent.is_subset(&concepts[b].extent)
            && concepts[a].extent != concepts[b].extent
    };
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if below(a, b) && !(0..n).any(|c| below(a, c) && below(c, b)) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Oracle builder: closes every subset of the smaller axis.
pub fn build_bruteforce(context: &FormalContext) -> Result<ConceptLattice, LatticeError> {
    let (n, m) = (context.n_objects(), context.n_attributes());
    let k = n.min(m);
    if k > ORACLE_BOUND {
        return Err(LatticeError::OracleBound(k));
    }
    let mut seen: HashSet<FixedBitSet> = HashSet::new();
    let mut concepts = Vec::new();
    let by_objects = n <= m;
    for mask in 0u64..(1u64 << k) {
        let mut subset = FixedBitSet::with_capacity(if by_objects { n } else { m });
        for i in 0..k {
            if mask >> i & 1 == 1 {
                subset.insert(i);
            }
        }
        let (extent, intent) = if by_objects {
            let intent = context.intent_of(&subset);
            (context.extent_of(&intent), intent)
        } else {
            let extent = context.extent_of(&subset);
            let intent = context.intent_of(&extent);
            (extent, intent)
        };
        if seen.insert(extent.clone()) {
            concepts.push(FormalConcept { extent, intent });
        }
    }
    let covers = covers_by_inclusion(&concepts);
    Ok(ConceptLattice::from_parts(concepts, covers))
}

/// Resource limits for [`build_addintent_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildLimits {
    pub deadline: Option<Instant>,
    pub max_concepts: Option<usize>,
}

struct Node {
    extent: FixedBitSet,
    intent: FixedBitSet,
    parents: Vec<usize>,
    children: Vec<usize>,
}

struct AddIntentBuilder<'a> {
    nodes: Vec<Node>,
    limits: &'a BuildLimits,
    calls: u64,
}

impl AddIntentBuilder<'_> {
    fn check(&mut self) -> Result<(), LatticeError> {
        self.calls += 1;
        if let Some(max) = self.limits.max_concepts {
            if self.nodes.len() > max {
                return Err(LatticeError::ConceptLimit(max));
            }
        }
        if self.calls % 256 == 0 {
            if let Some(deadline) = self.limits.deadline {
                if Instant::now() >= deadline {
                    return Err(LatticeError::Timeout);
                }
            }
        }
        Ok(())
    }

    fn maximal_concept(&self, intent: &FixedBitSet, mut generator: usize) -> usize {
        'climb: loop {
            for &p in &self.nodes[generator].parents {
                if intent.is_subset(&self.nodes[p].intent) {
                    generator = p;
                    continue 'climb;
                }
            }
            return generator;
        }
    }

    fn unlink(&mut self, parent: usize, child: usize) {
        self.nodes[parent].children.retain(|&c| c != child);
        self.nodes[child].parents.retain(|&p| p != parent);
    }

    fn link(&mut self, parent: usize, child: usize) {
        self.nodes[parent].children.push(child);
        self.nodes[child].parents.push(parent);
    }

    /// Returns the concept with exactly `intent`, creating it (and any
    /// intersections it needs) below the maximal concept reached from
    /// `generator`.
    fn add_intent(&mut self, intent: FixedBitSet, generator: usize) -> Result<usize, LatticeError> {
        self.check()?;
        let generator = self.maximal_concept(&intent, generator);
        if self.nodes[generator].intent == intent {
            return Ok(generator);
        }
        let mut new_parents: Vec<usize> = Vec::new();
        for candidate in self.nodes[generator].parents.clone() {
            let candidate = if self.nodes[candidate].intent.is_subset(&intent) {
                candidate
            } else {
                let mut meet = self.nodes[candidate].intent.clone();
                meet.intersect_with(&intent);
                self.add_intent(meet, candidate)?
            };
            let mut add = true;
            let mut k = 0;
            while k < new_parents.len() {
                let parent = new_parents[k];
                if self.nodes[candidate]
                    .intent
                    .is_subset(&self.nodes[parent].intent)
                {
                    add = false;
                    break;
                } else if self.nodes[parent]
                    .intent
                    .is_subset(&self.nodes[candidate].intent)
                {
                    new_parents.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            if add {
                new_parents.push(candidate);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            extent: self.nodes[generator].extent.clone(),
            intent,
            parents: Vec::new(),
            children: Vec::new(),
        });
        for parent in new_parents {
            self.unlink(parent, generator);
            self.link(parent, id);
        }
        self.link(id, generator);
        Ok(id)
    }
}

/// Incremental AddIntent construction.
pub fn build_addintent(context: &FormalContext) -> ConceptLattice {
    build_addintent_with(context, &BuildLimits::default()).expect("no limits configured")
}

/// [`build_addintent`] with a deadline and/or a concept-count ceiling.
pub fn build_addintent_with(
    context: &FormalContext,
    limits: &BuildLimits,
) -> Result<ConceptLattice, LatticeError> {
    let (n, m) = (context.n_objects(), context.n_attributes());
    let mut all = FixedBitSet::with_capacity(m);
    all.insert_range(..);
    let mut b = AddIntentBuilder {
        nodes: vec![Node {
            extent: FixedBitSet::with_capacity(n),
            intent: all,
            parents: Vec::new(),
            children: Vec::new(),
        }],
        limits,
        calls: 0,
    };
    let bottom = 0;
    let mut mark = vec![usize::MAX; 0];
    for g in 0..n {
        let object_concept = b.add_intent(context.row(g).clone(), bottom)?;
        mark.resize(b.nodes.len(), usize::MAX);
        let mut queue = VecDeque::from([object_concept]);
        mark[object_concept] = g;
        while let Some(c) = queue.pop_front() {
            b.nodes[c].extent.insert(g);
            for &p in &b.nodes[c].parents {
                if mark[p] != g {
                    mark[p] = g;
                    queue.push_back(p);
                }
            }
        }
    }
    let mut covers = Vec::new();
    for (i, node) in b.nodes.iter().enumerate() {
        for &p in &node.parents {
            covers.push((i, p));
        }
    }
    let concepts = b
        .nodes
        .into_iter()
        .map(|node| FormalConcept {
            extent: node.extent,
            intent: node.intent,
        })
        .collect();
    Ok(ConceptLattice::from_parts(concepts, covers))
}

/// Size and shape statistics of a lattice's Hasse diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub concept_count: usize,
    pub edge_count: usize,
    /// Cover edges on the longest bottom-to-top chain.
    pub height: usize,
    pub width_lower: usize,
    pub width_upper: usize,
    pub width_exact: Option<usize>,
}

impl InvariantReport {
    pub const CSV_HEADER: &'static str =
        "concept_count,edge_count,height,width_lower,width_upper,width_exact";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.concept_count,
            self.edge_count,
            self.height,
            self.width_lower,
            self.width_upper,
            self.width_exact.map(|w| w.to_string()).unwrap_or_default()
        )
    }
}

/// Longest path (in cover edges) from the bottom to each concept.
pub fn levels(lattice: &ConceptLattice) -> Vec<usize> {
    let n = lattice.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| lattice.concept(i).extent.count_ones(..));
    let mut level = vec![0; n];
    for &c in &order {
        level[c] = lattice
            .lower_covers(c)
            .iter()
            .map(|&l| level[l] + 1)
            .max()
            .unwrap_or(0);
    }
    level
}

pub fn invariants(lattice: &ConceptLattice) -> InvariantReport {
    invariants_with_limit(lattice, EXACT_WIDTH_LIMIT)
}

pub fn invariants_with_limit(
    lattice: &ConceptLattice,
    exact_width_limit: usize,
) -> InvariantReport {
    let n = lattice.len();
    let level = levels(lattice);
    let height = level.get(lattice.top()).copied().unwrap_or(0);
    let mut per_level = vec![0usize; height + 1];
    for &l in &level {
        per_level[l] += 1;
    }
    let width_lower = per_level.iter().copied().max().unwrap_or(0);
    let width_upper = cover_chain_count(lattice);
    let width_exact = (n <= exact_width_limit).then(|| dilworth_width(lattice));
    InvariantReport {
        concept_count: n,
        edge_count: lattice.covers().len(),
        height,
        width_lower,
        width_upper,
        width_exact,
    }
}

/// Fewest chains whose consecutive members are covers: concept count minus
/// a maximum matching on the cover edges. Never below the Dilworth width.
fn cover_chain_count(lattice: &ConceptLattice) -> usize {
    let n = lattice.len();
    let adj: Vec<Vec<usize>> = (0..n).map(|c| lattice.upper_covers(c).to_vec()).collect();
    n - hopcroft_karp(n, n, &adj)
}

/// Size of a maximum antichain: concept count minus a maximum matching in
/// the strict-order bipartite graph (minimum chain cover).
pub fn dilworth_width(lattice: &ConceptLattice) -> usize {
    let n = lattice.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| {
                    a != b
                        && lattice
                            .concept(a)
                            .extent
                            .is_subset(&lattice.concept(b).extent)
                })
                .collect()
        })
        .collect();
    n - hopcroft_karp(n, n, &adj)
}

/// Maximum bipartite matching size; `adj[u]` lists right vertices of left `u`.
pub fn hopcroft_karp(left: usize, right: usize, adj: &[Vec<usize>]) -> usize {
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; left];
    let mut match_r = vec![NIL; right];
    let mut dist = vec![0usize; left];
    let mut matched = 0;
    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        // Iterative DFS along layered edges.
        let mut it = vec![0usize; left];
        for root in 0..left {
            if match_l[root] != NIL {
                continue;
            }
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if it[u] == adj[u].len() {
                    dist[u] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let v = adj[u][it[u]];
                it[u] += 1;
                let w = match_r[v];
                if w == NIL {
                    // Augment along the stack.
                    let mut v = v;
                    while let Some(u) = stack.pop() {
                        let prev = match_l[u];
                        match_l[u] = v;
                        match_r[v] = u;
                        v = prev;
                    }
                    matched += 1;
                    break;
                } else if dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
        }
    }
}

/// Reduced labelling: attribute `a` names the concept whose extent is `a'`,
/// object `g` names the concept whose intent is `g'`.
pub struct ReducedLabels {
    pub attributes: Vec<Vec<String>>,
    pub objects: Vec<Vec<String>>,
}

pub fn reduced_labels(lattice: &ConceptLattice, context: &FormalContext) -> ReducedLabels {
    let n = lattice.len();
    let by_extent: HashMap<&FixedBitSet, usize> = lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.extent, i))
        .collect();
    let by_intent: HashMap<&FixedBitSet, usize> = lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.intent, i))
        .collect();
    let mut attributes = vec![Vec::new(); n];
    let mut objects = vec![Vec::new(); n];
    for (j, label) in context.attributes().iter().enumerate() {
        if let Some(&c) = by_extent.get(context.column(j)) {
            attributes[c].push(label.clone());
        }
    }
    for (i, label) in context.objects().iter().enumerate() {
        if let Some(&c) = by_intent.get(context.row(i)) {
            objects[c].push(label.clone());
        }
    }
    ReducedLabels {
        attributes,
        objects,
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz document: one node per concept, one edge per cover, drawn with
/// the top concept uppermost.
pub fn export_dot(lattice: &ConceptLattice, context: &FormalContext) -> String {
    let labels = reduced_labels(lattice, context);
    let mut out = String::from("digraph lattice {\n  rankdir=BT;\n  node [shape=box];\n");
    for i in 0..lattice.len() {
        let attrs = dot_escape(&labels.attributes[i].join(", "));
        let objs = dot_escape(&labels.objects[i].join(", "));
        let _ = writeln!(out, "  c{i} [label=\"{attrs}\\n{objs}\"];");
    }
    for &(l, u) in lattice.covers() {
        let _ = writeln!(out, "  c{l} -> c{u};");
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub id: usize,
    pub attributes: Vec<String>,
    pub objects: Vec<String>,
    pub children: Vec<usize>,
}

/// Concept hierarchy read off the lattice, rooted at the top concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptHierarchy {
    pub root: usize,
    pub nodes: Vec<HierarchyNode>,
}

/// Line budget for [`ConceptHierarchy::to_text`].
pub const HIERARCHY_TEXT_LINES: usize = 100_000;

impl ConceptHierarchy {
    /// Indented rendering; nodes with several parents repeat under each one.
    /// Stops after [`HIERARCHY_TEXT_LINES`] lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut lines = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            if lines == HIERARCHY_TEXT_LINES {
                out.push_str("... (truncated)\n");
                break;
            }
            let node = &self.nodes[id];
            let mut label = if node.attributes.is_empty() {
                format!("#{id}")
            } else {
                node.attributes.join(", ")
            };
            if !node.objects.is_empty() {
                let _ = write!(label, " [{}]", node.objects.join(", "));
            }
            let _ = writeln!(out, "{}{}", "  ".repeat(depth), label);
            lines += 1;
            for &c in node.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

pub fn export_hierarchy(lattice: &ConceptLattice, context: &FormalContext) -> ConceptHierarchy {
    let labels = reduced_labels(lattice, context);
    let nodes = labels
        .attributes
        .into_iter()
        .zip(labels.objects)
        .enumerate()
        .map(|(id, (attributes, objects))| HierarchyNode {
            id,
            attributes,
            objects,
            children: lattice.lower_covers(id).to_vec(),
        })
        .collect();
    ConceptHierarchy {
        root: lattice.top(),
        nodes,
    }
}
