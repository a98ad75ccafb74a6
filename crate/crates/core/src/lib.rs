//! Intersectional invariant random subgroups and their Furstenberg entropy.
//!
//! The crate is organised bottom-up:
//!
//! - [`freegroup`]: reduced words, finitely supported step measures, exact
//!   convolution powers and Shannon entropy.
//! - [`schreier`]: the rooted, edge-labelled graph interface shared by every
//!   concrete graph (action of words, balls, shadows, prefixes, tree-likeness,
//!   canonical ball fingerprints, edge-list I/O).
//! - [`models`]: the free-group Cayley tree, line graphs, nilpotent quotients
//!   (Heisenberg, abelianisation) and escape-probability estimates.
//! - [`gluing`]: the surgery that attaches quotient copies and half-lines to
//!   the leaves of a finite tree.
//! - [`irs`]: norms of elements, percolation samples of conjugate indices and
//!   the induced partition of a finite support into core cosets.
//! - [`wreath`]: lamplighter groups and finitary permutation groups.
//! - [`entropy`]: bundle entropy along the percolation path, random-walk
//!   entropy, fixing probabilities and the associated closed-form bounds.
//! - [`cli`]: the batch experiment runner behind the `irs` binary.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod freegroup;
pub mod gluing;
pub mod group;
pub mod irs;
pub mod models;
pub mod rng;
pub mod schreier;
pub mod wreath;

pub use error::{Error, Result};
pub use freegroup::{FiniteDistribution, Generator, ReducedWord, StepDistribution};
pub use group::Group;
pub use schreier::SchreierGraph;
