//! Local symbols: Hilbert symbols, cyclic invariants, and local norm tests.

pub mod norm;
pub mod symbols;

pub use norm::{local_norm_test, local_norm_test_element, LocalElement, NormVerdict, Precision, UndeterminedReason};
pub use symbols::{
    cyclic_invariant, hilbert_symbol, reciprocity_defect, relevant_places, DirichletCharacter, PlaceOfQ, QmodZ,
};
