pub mod bench;
pub mod cli;
pub mod compare;
pub mod context;
pub mod lattice;
pub mod reduce;
pub mod taxonomy;
