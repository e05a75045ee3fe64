#![allow(dead_code)]

use std::path::PathBuf;

use lattice_reduce::context::FormalContext;
use proptest::prelude::*;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn from_rows(rows: &[Vec<bool>], m: usize) -> FormalContext {
    FormalContext::new(labels("o", rows.len()), labels("a", m), rows).unwrap()
}

/// Contexts with `lo..=max_o` objects and `lo..=max_a` attributes at a
/// random density.
pub fn context(lo: usize, max_o: usize, max_a: usize) -> impl Strategy<Value = FormalContext> {
    (lo..=max_o, lo..=max_a, 0.0f64..=1.0).prop_flat_map(|(n, m, p)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(p), m), n)
            .prop_map(move |rows| from_rows(&rows, m))
    })
}

/// Contexts at one of the given densities.
pub fn context_at(
    max_o: usize,
    max_a: usize,
    densities: &'static [f64],
) -> impl Strategy<Value = FormalContext> {
    (1..=max_o, 1..=max_a, prop::sample::select(densities)).prop_flat_map(|(n, m, p)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(p), m), n)
            .prop_map(move |rows| from_rows(&rows, m))
    })
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}
