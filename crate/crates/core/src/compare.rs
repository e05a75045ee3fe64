//! Comparing lattices: isomorphism, redundancy, an invariant-ratio quality
//! score, and structural checks on the map from a reduced lattice back to the
//! original one.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::FormalContext;
use crate::lattice::{build_addintent, levels, ConceptLattice, InvariantReport, ORACLE_BOUND};
use crate::reduce::{Axis, ReductionTrace};

/// Default concept-count cap for [`is_isomorphic`].
pub const ISO_LIMIT: usize = 500;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("lattice has {size} concepts, isomorphism search is capped at {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("removing the element leaves an empty context")]
    EmptyAfterRemoval,
    #[error("{axis} index {index} out of range")]
    IndexOutOfRange { axis: &'static str, index: usize },
    #[error("original context exceeds the oracle bound (min dimension {0})")]
    OracleBound(usize),
    #[error("trace does not match the reduced context: {0}")]
    TraceMismatch(String),
}

/// Order isomorphism of Hasse diagrams, capped at [`ISO_LIMIT`] concepts.
pub fn is_isomorphic(l1: &ConceptLattice, l2: &ConceptLattice) -> Result<bool, CompareError> {
    is_isomorphic_with_limit(l1, l2, ISO_LIMIT)
}

pub fn is_isomorphic_with_limit(
    l1: &ConceptLattice,
    l2: &ConceptLattice,
    limit: usize,
) -> Result<bool, CompareError> {
    for l in [l1, l2] {
        if l.len() > limit {
            return Err(CompareError::TooLarge {
                size: l.len(),
                limit,
            });
        }
    }
    if l1.len() != l2.len() || l1.covers().len() != l2.covers().len() {
        return Ok(false);
    }
    let (c1, c2) = refine_colors(l1, l2);
    let histogram = |c: &[usize]| {
        let mut h: HashMap<usize, usize> = HashMap::new();
        for &x in c {
            *h.entry(x).or_default() += 1;
        }
        h
    };
    if histogram(&c1) != histogram(&c2) {
        return Ok(false);
    }
    Ok(Matcher::new(l1, l2, &c1, &c2).search())
}

fn depths_from_top(l: &ConceptLattice) -> Vec<usize> {
    let n = l.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(l.concept(i).extent.count_ones(..)));
    let mut depth = vec![0; n];
    for &c in &order {
        depth[c] = l
            .upper_covers(c)
            .iter()
            .map(|&u| depth[u] + 1)
            .max()
            .unwrap_or(0);
    }
    depth
}

/// Joint colour refinement over both diagrams so colours are comparable.
fn refine_colors(l1: &ConceptLattice, l2: &ConceptLattice) -> (Vec<usize>, Vec<usize>) {
    let initial = |l: &ConceptLattice| -> Vec<(usize, usize, usize, usize)> {
        let lv = levels(l);
        let dt = depths_from_top(l);
        (0..l.len())
            .map(|i| {
                (
                    lv[i],
                    dt[i],
                    l.upper_covers(i).len(),
                    l.lower_covers(i).len(),
                )
            })
            .collect()
    };
    let mut ids: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();
    let mut intern = |k| {
        let next = ids.len();
        *ids.entry(k).or_insert(next)
    };
    let mut c1: Vec<usize> = initial(l1).into_iter().map(&mut intern).collect();
    let mut c2: Vec<usize> = initial(l2).into_iter().map(&mut intern).collect();
    let mut classes = ids.len();
    loop {
        let mut ids: HashMap<(usize, Vec<usize>, Vec<usize>), usize> = HashMap::new();
        let mut step = |l: &ConceptLattice, c: &[usize]| -> Vec<usize> {
            (0..l.len())
                .map(|i| {
                    let mut up: Vec<usize> = l.upper_covers(i).iter().map(|&u| c[u]).collect();
                    let mut down: Vec<usize> = l.lower_covers(i).iter().map(|&d| c[d]).collect();
                    up.sort_unstable();
                    down.sort_unstable();
                    let next = ids.len();
                    *ids.entry((c[i], up, down)).or_insert(next)
                })
                .collect()
        };
        let n1 = step(l1, &c1);
        let n2 = step(l2, &c2);
        let count = ids.len();
        c1 = n1;
        c2 = n2;
        if count == classes {
            return (c1, c2);
        }
        classes = count;
    }
}

struct Matcher<'a> {
    l1: &'a ConceptLattice,
    l2: &'a ConceptLattice,
    c1: &'a [usize],
    c2: &'a [usize],
    order: Vec<usize>,
    fwd: Vec<usize>,
    rev: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl<'a> Matcher<'a> {
    fn new(
        l1: &'a ConceptLattice,
        l2: &'a ConceptLattice,
        c1: &'a [usize],
        c2: &'a [usize],
    ) -> Self {
        // Breadth-first from the bottom so each new vertex has mapped neighbours.
        let n = l1.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for start in std::iter::once(l1.bottom()).chain(0..n) {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &w in l1.upper_covers(v).iter().chain(l1.lower_covers(v)) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        Matcher {
            l1,
            l2,
            c1,
            c2,
            order,
            fwd: vec![UNSET; n],
            rev: vec![UNSET; n],
        }
    }

    fn feasible(&self, v: usize, w: usize) -> bool {
        if self.c1[v] != self.c2[w] {
            return false;
        }
        let check = |n1: &[usize], n2: &[usize]| {
            let mut mapped = 0;
            for &x in n1 {
                if self.fwd[x] != UNSET {
                    if !n2.contains(&self.fwd[x]) {
                        return false;
                    }
                    mapped += 1;
                }
            }
            mapped == n2.iter().filter(|&&y| self.rev[y] != UNSET).count()
        };
        check(self.l1.upper_covers(v), self.l2.upper_covers(w))
            && check(self.l1.lower_covers(v), self.l2.lower_covers(w))
    }

    fn search(&mut self) -> bool {
        self.extend(0)
    }

    fn extend(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let v = self.order[depth];
        // Candidates: neighbours of an already-mapped neighbour's image when
        // one exists, otherwise every vertex of the same colour.
        let anchor = self
            .l1
            .upper_covers(v)
            .iter()
            .map(|&u| (u, true))
            .chain(self.l1.lower_covers(v).iter().map(|&d| (d, false)))
            .find(|&(x, _)| self.fwd[x] != UNSET);
        let candidates: Vec<usize> = match anchor {
            Some((x, x_is_upper)) => {
                let img = self.fwd[x];
                if x_is_upper {
                    self.l2.lower_covers(img).to_vec()
                } else {
                    self.l2.upper_covers(img).to_vec()
                }
            }
            None => (0..self.l2.len()).collect(),
        };
        for w in candidates {
            if self.rev[w] == UNSET && self.feasible(v, w) {
                self.fwd[v] = w;
                self.rev[w] = v;
                if self.extend(depth + 1) {
                    return true;
                }
                self.fwd[v] = UNSET;
                self.rev[w] = UNSET;
            }
        }
        false
    }
}

/// An element whose removal is tested for redundancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Object(usize),
    Attribute(usize),
    Incidence(usize, usize),
}

/// True when removing `element` leaves a lattice isomorphic to the original.
pub fn redundancy_check(context: &FormalContext, element: Element) -> Result<bool, CompareError> {
    let (n, m) = (context.n_objects(), context.n_attributes());
    let oob = |axis, index| CompareError::IndexOutOfRange { axis, index };
    let reduced = match element {
        Element::Object(i) => {
            if i >= n {
                return Err(oob("object", i));
            }
            if n == 1 {
                return Err(CompareError::EmptyAfterRemoval);
            }
            context.without_object(i)
        }
        Element::Attribute(j) => {
            if j >= m {
                return Err(oob("attribute", j));
            }
            if m == 1 {
                return Err(CompareError::EmptyAfterRemoval);
            }
            context.without_attribute(j)
        }
        Element::Incidence(i, j) => {
            if i >= n {
                return Err(oob("object", i));
            }
            if j >= m {
                return Err(oob("attribute", j));
            }
            context.without_incidence(i, j)
        }
    };
    is_isomorphic(&build_addintent(context), &build_addintent(&reduced))
}

/// Mean of per-invariant min/max ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub score: f64,
    pub per_invariant: BTreeMap<String, f64>,
}

fn ratio(a: usize, b: usize) -> f64 {
    let (lo, hi) = (a.min(b), a.max(b));
    if hi == 0 {
        1.0
    } else {
        lo as f64 / hi as f64
    }
}

/// Symmetric similarity of two invariant reports over concept count, edge
/// count, height + 1 and the lower width bound.
pub fn quality_score(a: &InvariantReport, b: &InvariantReport) -> QualityScore {
    let per_invariant: BTreeMap<String, f64> = [
        ("concept_count", ratio(a.concept_count, b.concept_count)),
        ("edge_count", ratio(a.edge_count, b.edge_count)),
        ("height", ratio(a.height + 1, b.height + 1)),
        ("width_lower", ratio(a.width_lower, b.width_lower)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let score = per_invariant.values().sum::<f64>() / per_invariant.len() as f64;
    QualityScore {
        score,
        per_invariant,
    }
}

pub fn quality_score_lattices(l1: &ConceptLattice, l2: &ConceptLattice) -> QualityScore {
    use crate::lattice::invariants;
    quality_score(&invariants(l1), &invariants(l2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Order,
    Meet,
    Join,
}

/// A pair of reduced concepts on which the map back to the original lattice
/// fails a law. `expected` and `found` are original concept indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub x: usize,
    pub y: usize,
    pub expected: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionMapReport {
    pub order_preserved: bool,
    pub meet_join_preserved: bool,
    /// For each reduced concept, the original concept it maps to.
    pub mapping: Vec<usize>,
    pub violations: Vec<Violation>,
}

/// Maps each reduced concept to the original concept generated by the
/// original attributes its intent stands for, then checks monotonicity and
/// preservation of meets and joins.
pub fn check_reduction_map(
    original: &FormalContext,
    reduced: &FormalContext,
    reduced_lattice: &ConceptLattice,
    trace: &ReductionTrace,
) -> Result<ReductionMapReport, CompareError> {
    let bound = original.n_objects().min(original.n_attributes());
    if bound > ORACLE_BOUND {
        return Err(CompareError::OracleBound(bound));
    }
    let attr_origins = origins(
        trace,
        original.attributes(),
        reduced.attributes(),
        Axis::Attribute,
    )?;
    origins(trace, original.objects(), reduced.objects(), Axis::Object)?;

    let lattice = build_addintent(original);
    let by_intent: HashMap<&FixedBitSet, usize> = lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.intent, i))
        .collect();
    let expanded: Vec<Vec<usize>> = (0..reduced.n_attributes())
        .map(|j| attr_origins[&reduced.attributes()[j]].clone())
        .collect();

    let phi: Vec<usize> = reduced_lattice
        .concepts()
        .iter()
        .map(|c| {
            let mut attrs = FixedBitSet::with_capacity(original.n_attributes());
            for j in c.intent.ones() {
                attrs.extend(expanded[j].iter().copied());
            }
            let closed = original.closure_of_attributes(&attrs);
            by_intent[&closed]
        })
        .collect();

    let mut violations = Vec::new();
    for &(lo, hi) in reduced_lattice.covers() {
        if !lattice.leq(phi[lo], phi[hi]) {
            violations.push(Violation {
                kind: ViolationKind::Order,
                x: lo,
                y: hi,
                expected: phi[hi],
                found: phi[lo],
            });
        }
    }
    let order_preserved = violations.is_empty();

    let red_by_extent: HashMap<&FixedBitSet, usize> = reduced_lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.extent, i))
        .collect();
    let red_by_intent: HashMap<&FixedBitSet, usize> = reduced_lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.intent, i))
        .collect();
    let orig_by_extent: HashMap<&FixedBitSet, usize> = lattice
        .concepts()
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.extent, i))
        .collect();
    let meet = |by: &HashMap<&FixedBitSet, usize>, l: &ConceptLattice, a: usize, b: usize| {
        let mut e = l.concept(a).extent.clone();
        e.intersect_with(&l.concept(b).extent);
        by[&e]
    };
    let join = |by: &HashMap<&FixedBitSet, usize>, l: &ConceptLattice, a: usize, b: usize| {
        let mut i = l.concept(a).intent.clone();
        i.intersect_with(&l.concept(b).intent);
        by[&i]
    };
    let k = reduced_lattice.len();
    let mut meet_join_preserved = true;
    for x in 0..k {
        for y in x + 1..k {
            let m_red = meet(&red_by_extent, reduced_lattice, x, y);
            let m_orig = meet(&orig_by_extent, &lattice, phi[x], phi[y]);
            if phi[m_red] != m_orig {
                meet_join_preserved = false;
                violations.push(Violation {
                    kind: ViolationKind::Meet,
                    x,
                    y,
                    expected: m_orig,
                    found: phi[m_red],
                });
            }
            let j_red = join(&red_by_intent, reduced_lattice, x, y);
            let j_orig = join(&by_intent, &lattice, phi[x], phi[y]);
            if phi[j_red] != j_orig {
                meet_join_preserved = false;
                violations.push(Violation {
                    kind: ViolationKind::Join,
                    x,
                    y,
                    expected: j_orig,
                    found: phi[j_red],
                });
            }
        }
    }
    Ok(ReductionMapReport {
        order_preserved,
        meet_join_preserved,
        mapping: phi,
        violations,
    })
}

fn origins(
    trace: &ReductionTrace,
    original: &[String],
    reduced: &[String],
    axis: Axis,
) -> Result<HashMap<String, Vec<usize>>, CompareError> {
    let map = trace
        .label_origins(original, axis)
        .map_err(CompareError::TraceMismatch)?;
    if map.len() != reduced.len() || reduced.iter().any(|l| !map.contains_key(l)) {
        return Err(CompareError::TraceMismatch(format!(
            "{axis:?} labels after replay differ from the reduced context"
        )));
    }
    let index: HashMap<&str, usize> = original
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    Ok(map
        .into_iter()
        .map(|(k, v)| (k, v.iter().map(|l| index[l.as_str()]).collect()))
        .collect())
}
