//! A laboratory for semantic-linking data augmentation on compositional
//! sequence tasks: grammar-based dataset generation, inductive and
//! deductive link construction, entity-style derivation from annotated
//! query corpora, and a compact attention encoder-decoder with
//! hand-derived gradients for measuring generalization.

pub mod error;
pub mod eval;
pub mod linking;
pub mod manifest;
pub mod model;
pub mod scan;
pub mod sqlgen;
pub mod token;
