//! Finite permutation quotients of free products `A ∗ B` of finite groups with
//! prescribed image orders, built by action-graph surgery and verified by
//! explicit permutation computation.

pub mod arith;
pub mod group;
pub mod word;
pub mod graph;
pub mod base;
pub mod surgery;
pub mod omnipotence;

pub use group::{FiniteGroup, GroupError, Permutation};
pub use word::{Factor, FreeProduct, Syllable, Word};
