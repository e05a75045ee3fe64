//! Formal contexts: the object/attribute incidence table, its Burmeister CXT
//! encoding, the word-pair TSV encoding, and the two derivation operators.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("line {line}: expected header `B`")]
    BadHeader { line: usize },
    #[error("line {line}: expected an empty line")]
    ExpectedBlank { line: usize },
    #[error("line {line}: invalid count `{text}`")]
    BadCount { line: usize, text: String },
    #[error("line {line}: row has {found} cells but {expected} attributes are declared")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: empty label")]
    EmptyLabel { line: usize },
    #[error("line {line}: illegal character {ch:?} in incidence row")]
    IllegalCharacter { line: usize, ch: char },
    #[error("line {line}: document ends early, expected {expected}")]
    Truncated { line: usize, expected: &'static str },
    #[error("line {line}: unexpected trailing content")]
    TrailingContent { line: usize },
    #[error("line {line}: malformed pair record: {reason}")]
    BadPairRecord { line: usize, reason: String },
    #[error("invalid label `{0}`: labels must be non-empty and contain no line breaks")]
    InvalidLabel(String),
    #[error("duplicate {axis} label `{label}`")]
    Duplicate { axis: &'static str, label: String },
    #[error("incidence has {rows}x{cols} cells, expected {objects}x{attributes}")]
    Shape {
        rows: usize,
        cols: usize,
        objects: usize,
        attributes: usize,
    },
    #[error("{axis} index {index} out of range (size {size})")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        size: usize,
    },
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("no pair has a positive count")]
    NoPositiveCounts,
    #[error("no pair survives the threshold; the context would be empty")]
    EmptyResult,
}

/// The triplet (objects, attributes, incidence).
///
/// Rows are stored per object as bitsets over attributes, and the transposed
/// columns are kept alongside so both derivation operators are word-parallel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    rows: Vec<FixedBitSet>,
    cols: Vec<FixedBitSet>,
}

fn check_labels(axis: &'static str, labels: &[String]) -> Result<(), ContextError> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if label.is_empty() || label.contains(['\n', '\r']) {
            return Err(ContextError::InvalidLabel(label.clone()));
        }
        if !seen.insert(label.as_str()) {
            return Err(ContextError::Duplicate {
                axis,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

impl FormalContext {
    /// Builds a context from labels and a row-major boolean matrix.
    pub fn new(
        objects: Vec<String>,
        attributes: Vec<String>,
        incidence: &[Vec<bool>],
    ) -> Result<Self, ContextError> {
        let m = attributes.len();
        if incidence.len() != objects.len() || incidence.iter().any(|r| r.len() != m) {
            return Err(ContextError::Shape {
                rows: incidence.len(),
                cols: incidence
                    .iter()
                    .map(Vec::len)
                    .find(|&l| l != m)
                    .unwrap_or(m),
                objects: objects.len(),
                attributes: m,
            });
        }
        let rows = incidence
            .iter()
            .map(|r| {
                let mut bits = FixedBitSet::with_capacity(m);
                for (j, &v) in r.iter().enumerate() {
                    bits.set(j, v);
                }
                bits
            })
            .collect();
        Self::from_bitsets(objects, attributes, rows)
    }

    /// Builds a context from one attribute bitset per object.
    pub fn from_bitsets(
        objects: Vec<String>,
        attributes: Vec<String>,
        mut rows: Vec<FixedBitSet>,
    ) -> Result<Self, ContextError> {
        check_labels("object", &objects)?;
        check_labels("attribute", &attributes)?;
        let m = attributes.len();
        if rows.len() != objects.len()
            || rows.iter().any(|r| r.len() > m && r.ones().any(|j| j >= m))
        {
            return Err(ContextError::Shape {
                rows: rows.len(),
                cols: rows.iter().map(FixedBitSet::len).max().unwrap_or(m),
                objects: objects.len(),
                attributes: m,
            });
        }
        for r in &mut rows {
            if r.len() != m {
                let mut fixed = FixedBitSet::with_capacity(m);
                fixed.extend(r.ones());
                *r = fixed;
            }
        }
        let mut cols = vec![FixedBitSet::with_capacity(objects.len()); m];
        for (i, r) in rows.iter().enumerate() {
            for j in r.ones() {
                cols[j].insert(i);
            }
        }
        Ok(FormalContext {
            objects,
            attributes,
            rows,
            cols,
        })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty() || self.attributes.is_empty()
    }

    pub fn has(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    /// Attribute set of one object.
    pub fn row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    /// Object set of one attribute.
    pub fn column(&self, attribute: usize) -> &FixedBitSet {
        &self.cols[attribute]
    }

    pub fn rows(&self) -> &[FixedBitSet] {
        &self.rows
    }

    pub fn incidence_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    /// Fraction of true cells; zero for a degenerate context.
    pub fn density(&self) -> f64 {
        let cells = self.n_objects() * self.n_attributes();
        if cells == 0 {
            0.0
        } else {
            self.incidence_count() as f64 / cells as f64
        }
    }

    pub fn object_index(&self, label: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == label)
    }

    pub fn attribute_index(&self, label: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == label)
    }

    /// Common attributes of an object set given as a bitset over objects.
    pub fn intent_of(&self, objects: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n_attributes());
        out.insert_range(..);
        for i in objects.ones() {
            out.intersect_with(&self.rows[i]);
        }
        out
    }

    /// Common objects of an attribute set given as a bitset over attributes.
    pub fn extent_of(&self, attributes: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n_objects());
        out.insert_range(..);
        for j in attributes.ones() {
            out.intersect_with(&self.cols[j]);
        }
        out
    }

    /// Objects whose row contains every attribute of `attributes`.
    pub fn closure_of_attributes(&self, attributes: &FixedBitSet) -> FixedBitSet {
        self.intent_of(&self.extent_of(attributes))
    }

    /// Index-based prime operator on object sets.
    pub fn derive_intent(
        &self,
        objects: &BTreeSet<usize>,
    ) -> Result<BTreeSet<usize>, ContextError> {
        let bits = to_bits("object", objects, self.n_objects())?;
        Ok(self.intent_of(&bits).ones().collect())
    }

    /// Index-based prime operator on attribute sets.
    pub fn derive_extent(
        &self,
        attributes: &BTreeSet<usize>,
    ) -> Result<BTreeSet<usize>, ContextError> {
        let bits = to_bits("attribute", attributes, self.n_attributes())?;
        Ok(self.extent_of(&bits).ones().collect())
    }

    /// Copy of the context with rows and columns reordered. `object_perm[k]`
    /// is the source row placed at position `k`, likewise for attributes.
    pub fn permuted(&self, object_perm: &[usize], attribute_perm: &[usize]) -> FormalContext {
        let objects = object_perm
            .iter()
            .map(|&i| self.objects[i].clone())
            .collect();
        let attributes = attribute_perm
            .iter()
            .map(|&j| self.attributes[j].clone())
            .collect();
        let rows = object_perm
            .iter()
            .map(|&i| {
                let mut r = FixedBitSet::with_capacity(attribute_perm.len());
                for (k, &j) in attribute_perm.iter().enumerate() {
                    r.set(k, self.rows[i].contains(j));
                }
                r
            })
            .collect();
        FormalContext::from_bitsets(objects, attributes, rows)
            .expect("permutation of a valid context")
    }

    /// Copy without one object.
    pub fn without_object(&self, object: usize) -> FormalContext {
        let keep: Vec<usize> = (0..self.n_objects()).filter(|&i| i != object).collect();
        let all: Vec<usize> = (0..self.n_attributes()).collect();
        self.permuted(&keep, &all)
    }

    /// Copy without one attribute.
    pub fn without_attribute(&self, attribute: usize) -> FormalContext {
        let all: Vec<usize> = (0..self.n_objects()).collect();
        let keep: Vec<usize> = (0..self.n_attributes())
            .filter(|&j| j != attribute)
            .collect();
        self.permuted(&all, &keep)
    }

    /// Copy with one incidence cell cleared.
    pub fn without_incidence(&self, object: usize, attribute: usize) -> FormalContext {
        let mut c = self.clone();
        c.rows[object].set(attribute, false);
        c.cols[attribute].set(object, false);
        c
    }
}

fn to_bits(
    axis: &'static str,
    set: &BTreeSet<usize>,
    size: usize,
) -> Result<FixedBitSet, ContextError> {
    let mut bits = FixedBitSet::with_capacity(size);
    for &i in set {
        if i >= size {
            return Err(ContextError::IndexOutOfRange {
                axis,
                index: i,
                size,
            });
        }
        bits.insert(i);
    }
    Ok(bits)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Split<'a, char>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let text = text.strip_suffix('\n').unwrap_or(text);
        Lines {
            inner: text.split('\n').enumerate(),
            last: 0,
        }
    }

    fn next(&mut self, expected: &'static str) -> Result<(usize, &'a str), ContextError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.strip_suffix('\r').unwrap_or(l)))
            }
            None => Err(ContextError::Truncated {
                line: self.last + 1,
                expected,
            }),
        }
    }
}

/// Parses a Burmeister CXT document.
pub fn parse_cxt(text: &str) -> Result<FormalContext, ContextError> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.next("header `B`")?;
    if header.trim() != "B" {
        return Err(ContextError::BadHeader { line });
    }
    let (line, blank) = lines.next("empty line")?;
    if !blank.trim().is_empty() {
        return Err(ContextError::ExpectedBlank { line });
    }
    let mut count = |what| -> Result<usize, ContextError> {
        let (line, t) = lines.next(what)?;
        t.trim().parse().map_err(|_| ContextError::BadCount {
            line,
            text: t.to_string(),
        })
    };
    let n = count("object count")?;
    let m = count("attribute count")?;
    let (line, blank) = lines.next("empty line")?;
    if !blank.trim().is_empty() {
        return Err(ContextError::ExpectedBlank { line });
    }

    let mut read_labels = |k: usize, what| -> Result<Vec<String>, ContextError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let (line, label) = lines.next(what)?;
            if label.is_empty() {
                return Err(ContextError::EmptyLabel { line });
            }
            if !seen.insert(label) {
                return Err(ContextError::DuplicateLabel {
                    line,
                    label: label.to_string(),
                });
            }
            out.push(label.to_string());
        }
        Ok(out)
    };
    let objects = read_labels(n, "object name")?;
    let attributes = read_labels(m, "attribute name")?;

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, row) = lines.next("incidence row")?;
        let found = row.chars().count();
        if found != m {
            return Err(ContextError::DimensionMismatch {
                line,
                expected: m,
                found,
            });
        }
        let mut bits = FixedBitSet::with_capacity(m);
        for (j, ch) in row.chars().enumerate() {
            match ch {
                'X' => bits.insert(j),
                '.' => {}
                other => return Err(ContextError::IllegalCharacter { line, ch: other }),
            }
        }
        rows.push(bits);
    }
    while let Ok((line, rest)) = lines.next("") {
        if !rest.trim().is_empty() {
            return Err(ContextError::TrailingContent { line });
        }
    }
    FormalContext::from_bitsets(objects, attributes, rows)
}

/// Writes a Burmeister CXT document with LF line endings.
pub fn write_cxt(context: &FormalContext) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "B\n\n{}\n{}\n\n",
        context.n_objects(),
        context.n_attributes()
    );
    for o in &context.objects {
        out.push_str(o);
        out.push('\n');
    }
    for a in &context.attributes {
        out.push_str(a);
        out.push('\n');
    }
    for r in &context.rows {
        for j in 0..context.n_attributes() {
            out.push(if r.contains(j) { 'X' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// Raw co-occurrence count of an (object, attribute) word pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub object: String,
    pub attribute: String,
    pub count: u64,
}

impl PairRecord {
    pub fn new(object: impl Into<String>, attribute: impl Into<String>, count: u64) -> Self {
        PairRecord {
            object: object.into(),
            attribute: attribute.into(),
            count,
        }
    }
}

/// A pair after conditional-probability weighting; `weight` lies in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPair {
    pub object: String,
    pub attribute: String,
    pub weight: f64,
}

impl WeightedPair {
    pub fn new(object: impl Into<String>, attribute: impl Into<String>, weight: f64) -> Self {
        WeightedPair {
            object: object.into(),
            attribute: attribute.into(),
            weight,
        }
    }
}

/// Which side of the pair is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// P(object | attribute): counts normalized within each attribute.
    #[default]
    ObjectGivenAttribute,
    /// P(attribute | object): counts normalized within each object.
    AttributeGivenObject,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object_given_attribute" | "o|a" => Ok(Direction::ObjectGivenAttribute),
            "attribute_given_object" | "a|o" => Ok(Direction::AttributeGivenObject),
            other => Err(format!("unknown weighting direction `{other}`")),
        }
    }
}

/// Parses the pair TSV format: `object<TAB>attribute<TAB>count`, `#` comments.
/// Repeated (object, attribute) records are summed into the first occurrence.
pub fn parse_pairs_tsv(text: &str) -> Result<Vec<PairRecord>, ContextError> {
    let mut out: Vec<PairRecord> = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != 3 {
            return Err(ContextError::BadPairRecord {
                line,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let (object, attribute) = (fields[0].trim(), fields[1].trim());
        if object.is_empty() || attribute.is_empty() {
            return Err(ContextError::BadPairRecord {
                line,
                reason: "empty term".into(),
            });
        }
        let count: u64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| ContextError::BadPairRecord {
                line,
                reason: format!("invalid count `{}`", fields[2]),
            })?;
        let key = (object.to_string(), attribute.to_string());
        match seen.get(&key) {
            Some(&k) => out[k].count += count,
            None => {
                seen.insert(key, out.len());
                out.push(PairRecord::new(object, attribute, count));
            }
        }
    }
    Ok(out)
}

pub fn write_pairs_tsv(pairs: &[PairRecord]) -> String {
    let mut out = String::from("# object\tattribute\tcount\n");
    for p in pairs {
        let _ = writeln!(out, "{}\t{}\t{}", p.object, p.attribute, p.count);
    }
    out
}

/// Conditional-probability weighting of raw counts.
///
/// A conditioning group whose counts are all zero yields zero weights.
pub fn weight_pairs(
    raw: &[PairRecord],
    direction: Direction,
) -> Result<Vec<WeightedPair>, ContextError> {
    if !raw.iter().any(|p| p.count > 0) {
        return Err(ContextError::NoPositiveCounts);
    }
    let group = |p: &PairRecord| -> String {
        match direction {
            Direction::ObjectGivenAttribute => p.attribute.clone(),
            Direction::AttributeGivenObject => p.object.clone(),
        }
    };
    let mut totals: HashMap<String, u64> = HashMap::new();
    for p in raw {
        *totals.entry(group(p)).or_default() += p.count;
    }
    Ok(raw
        .iter()
        .map(|p| {
            let total = totals[&group(p)];
            let weight = if total == 0 {
                0.0
            } else {
                p.count as f64 / total as f64
            };
            WeightedPair::new(p.object.clone(), p.attribute.clone(), weight)
        })
        .collect())
}

/// Keeps pairs with `weight >= threshold` and lays them out as a context.
/// Axis order is first appearance among the surviving pairs.
pub fn from_pairs(
    weighted: &[WeightedPair],
    threshold: f64,
) -> Result<FormalContext, ContextError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ContextError::BadThreshold(threshold));
    }
    let mut objects: Vec<String> = Vec::new();
    let mut attributes: Vec<String> = Vec::new();
    let mut obj_idx: HashMap<&str, usize> = HashMap::new();
    let mut attr_idx: HashMap<&str, usize> = HashMap::new();
    let mut cells = Vec::new();
    for p in weighted.iter().filter(|p| p.weight >= threshold) {
        let i = *obj_idx.entry(&p.object).or_insert_with(|| {
            objects.push(p.object.clone());
            objects.len() - 1
        });
        let j = *attr_idx.entry(&p.attribute).or_insert_with(|| {
            attributes.push(p.attribute.clone());
            attributes.len() - 1
        });
        cells.push((i, j));
    }
    if objects.is_empty() {
        return Err(ContextError::EmptyResult);
    }
    let mut rows = vec![FixedBitSet::with_capacity(attributes.len()); objects.len()];
    for (i, j) in cells {
        rows[i].insert(j);
    }
    FormalContext::from_bitsets(objects, attributes, rows)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    pub fn ctx(rows: &[&str]) -> FormalContext {
        let m = rows.first().map_or(0, |r| r.len());
        let inc: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.chars().map(|c| c == 'X').collect())
            .collect();
        FormalContext::new(labels("o", rows.len()), labels("a", m), &inc).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn parse_minimal() {
        let c = parse_cxt("B\n\n1\n1\n\no1\na1\nX\n").unwrap();
        assert_eq!(c.objects(), ["o1"]);
        assert_eq!(c.attributes(), ["a1"]);
        assert!(c.has(0, 0));
    }

    #[test]
    fn parse_diagonal_with_crlf() {
        let c = parse_cxt("B\r\n\r\n2\r\n2\r\n\r\nx\r\ny\r\np\r\nq\r\nX.\r\n.X\r\n").unwrap();
        assert!(c.has(0, 0) && c.has(1, 1));
        assert!(!c.has(0, 1) && !c.has(1, 0));
    }

    #[test]
    fn parse_dimension_mismatch_reports_line() {
        let err = parse_cxt("B\n\n2\n2\n\nx\ny\np\nq\nX..\n.X\n").unwrap_err();
        assert_eq!(
            err,
            ContextError::DimensionMismatch {
                line: 10,
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_cxt("B\n\n2\n1\n\nx\nx\np\nX\nX\n"),
            Err(ContextError::DuplicateLabel { line: 7, .. })
        ));
        assert!(matches!(
            parse_cxt("B\n\n1\n1\n\nx\np\nx\n"),
            Err(ContextError::IllegalCharacter { line: 8, ch: 'x' })
        ));
        assert!(matches!(
            parse_cxt("B\n\n2\n1\n\nx\ny\np\nX\n"),
            Err(ContextError::Truncated { line: 10, .. })
        ));
        assert!(matches!(
            parse_cxt("A\n"),
            Err(ContextError::BadHeader { line: 1 })
        ));
        assert!(matches!(
            parse_cxt("B\n\nfoo\n1\n"),
            Err(ContextError::BadCount { line: 3, .. })
        ));
        assert!(matches!(
            parse_cxt("B\n\n1\n1\n\nx\np\nX\nX\n"),
            Err(ContextError::TrailingContent { line: 9 })
        ));
    }

    #[test]
    fn write_diagonal_and_empty() {
        let d = ctx(&["X.", ".X"]);
        assert_eq!(write_cxt(&d), "B\n\n2\n2\n\no0\no1\na0\na1\nX.\n.X\n");
        let e = ctx(&["..", ".."]);
        assert!(write_cxt(&e).ends_with("\n..\n..\n"));
        assert_eq!(parse_cxt(&write_cxt(&d)).unwrap(), d);
    }

    #[test]
    fn weighting() {
        let w = weight_pairs(
            &[PairRecord::new("x", "v", 2), PairRecord::new("y", "v", 2)],
            Direction::ObjectGivenAttribute,
        )
        .unwrap();
        assert_eq!(w[0].weight, 0.5);
        assert_eq!(w[1].weight, 0.5);

        let w = weight_pairs(&[PairRecord::new("x", "v", 7)], Direction::default()).unwrap();
        assert_eq!(w[0].weight, 1.0);

        let w = weight_pairs(
            &[PairRecord::new("x", "v", 1), PairRecord::new("y", "v", 3)],
            Direction::ObjectGivenAttribute,
        )
        .unwrap();
        assert_eq!((w[0].weight, w[1].weight), (0.25, 0.75));
    }

    #[test]
    fn weighting_directions_and_zero_groups() {
        let raw = [
            PairRecord::new("x", "v", 1),
            PairRecord::new("x", "w", 3),
            PairRecord::new("y", "u", 0),
            PairRecord::new("z", "w", 1),
        ];
        let w = weight_pairs(&raw, Direction::AttributeGivenObject).unwrap();
        assert_eq!(w[0].weight, 0.25);
        assert_eq!(w[1].weight, 0.75);
        assert_eq!(w[2].weight, 0.0);
        assert_eq!(w[3].weight, 1.0);
        assert_eq!(
            weight_pairs(&[PairRecord::new("x", "v", 0)], Direction::default()),
            Err(ContextError::NoPositiveCounts)
        );
    }

    #[test]
    fn thresholding() {
        let c = from_pairs(
            &[
                WeightedPair::new("x", "v", 0.9),
                WeightedPair::new("y", "v", 0.1),
            ],
            0.5,
        )
        .unwrap();
        assert_eq!(c.objects(), ["x"]);
        assert_eq!(c.attributes(), ["v"]);
        assert!(c.has(0, 0));

        let sym = [
            WeightedPair::new("x", "v", 0.5),
            WeightedPair::new("y", "v", 0.5),
        ];
        assert_eq!(from_pairs(&sym, 0.0).unwrap().incidence_count(), 2);
        assert_eq!(from_pairs(&sym, 1.0), Err(ContextError::EmptyResult));
        assert_eq!(from_pairs(&sym, 1.5), Err(ContextError::BadThreshold(1.5)));
    }

    #[test]
    fn pair_tsv() {
        let text = "# comment\nx\tv\t2\r\ny\tv\t3\nx\tv\t1\n\n";
        let pairs = parse_pairs_tsv(text).unwrap();
        assert_eq!(
            pairs,
            vec![PairRecord::new("x", "v", 3), PairRecord::new("y", "v", 3)]
        );
        assert_eq!(parse_pairs_tsv(&write_pairs_tsv(&pairs)).unwrap(), pairs);
        assert!(matches!(
            parse_pairs_tsv("x\tv\n"),
            Err(ContextError::BadPairRecord { line: 1, .. })
        ));
        assert!(matches!(
            parse_pairs_tsv("x\tv\t-1\n"),
            Err(ContextError::BadPairRecord { line: 1, .. })
        ));
    }

    #[test]
    fn derivation_operators() {
        let d = ctx(&["X.", ".X"]);
        assert_eq!(d.derive_intent(&set(&[])).unwrap(), set(&[0, 1]));
        assert_eq!(d.derive_intent(&set(&[0])).unwrap(), set(&[0]));
        assert_eq!(d.derive_intent(&set(&[0, 1])).unwrap(), set(&[]));
        assert_eq!(d.derive_extent(&set(&[])).unwrap(), set(&[0, 1]));
        assert_eq!(d.derive_extent(&set(&[1])).unwrap(), set(&[1]));
        assert!(matches!(
            d.derive_intent(&set(&[2])),
            Err(ContextError::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn constructor_rejects_bad_labels() {
        assert!(
            FormalContext::new(vec!["a".into(), "a".into()], vec![], &[vec![], vec![]]).is_err()
        );
        assert!(FormalContext::new(vec!["".into()], vec![], &[vec![]]).is_err());
        assert!(FormalContext::new(vec!["a".into()], vec!["p".into()], &[vec![]]).is_err());
    }
}
