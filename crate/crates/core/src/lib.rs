//! Tight probability bounds for conditional constraint trees.
//!
//! A conditional constraint tree is a knowledge base of interval-valued
//! conditional constraints `(H|G)[l, u]` between basic events whose
//! constraint graph is a tree. [`planner::answer`] computes the tightest
//! interval entailed for a query `(F|E)`; [`oracle`] solves the same question
//! by brute force over all possible worlds.

pub mod error;
pub mod fixtures;
pub mod generate;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod propagation;
pub mod rational;
pub mod tree;

pub use error::{Error, Result};
pub use model::{BasicEvent, ConditionalConstraint, ConjunctiveEvent, KnowledgeBase, TightAnswer};
pub use rational::{Probability, Rational};
pub use tree::{validate_tree, ConstraintTree, Query};
