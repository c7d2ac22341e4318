//! Exact state-space reduction for pedigree hidden Markov models.
//!
//! The inheritance process of a pedigree with `n` meioses is a Markov chain
//! on the hypercube `H_n` whose transitions depend only on Hamming distance.
//! This crate builds the coarsest partition of `H_n` that is both a Markov
//! lumping of that chain and a refinement of the genotype-emission classes,
//! then runs the forward algorithm on the lumped chain.

pub mod bootstrap;
pub mod emission;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod hmm;
pub mod inheritance;
pub mod partition;
pub mod pedigree;
mod refine;
pub mod sim;
pub mod state;
pub mod symmetry;

pub use error::{Error, Result};
pub use partition::Partition;
pub use pedigree::{Individual, Meiosis, Pedigree, Role, Sex};
pub use state::{InheritanceState, State};
