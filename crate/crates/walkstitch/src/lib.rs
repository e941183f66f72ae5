//! Round-accurate CONGEST simulation and sublinear-round distributed
//! random-walk sampling by stitching pre-computed short walks, with two
//! applications built on top: uniform random spanning tree generation and
//! decentralized mixing-time estimation. An exact oracle module provides
//! the centralized reference computations the protocols are verified
//! against.
//!
//! Start with the runnable examples (`cargo run --example single_walk`,
//! `spanning_tree`, `mixing_time`, ...) or the `walkstitch` binary for
//! batch experiments.

pub mod apps;
pub mod cli;
pub mod congest;
pub mod graph;
pub mod oracle;
pub mod util;
pub mod walk;
