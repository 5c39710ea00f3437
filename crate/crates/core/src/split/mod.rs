//! Instances of the fibration splitting problem: hypotheses, the two
//! conditions on a candidate t0, search, coordinate changes and S-extension.

pub mod check;
pub mod extend;
pub mod instance;
pub mod mobius;
pub mod search;

pub use check::{
    check_condition1, check_condition1prime, check_condition2, check_t0, overall_status, verify_hypotheses,
    verify_hypotheses_asserting, Assertions, Condition2, ConditionReport, HypothesisEntry, Overall,
};
pub use extend::extend_places;
pub use instance::{ConjectureInstance, Entry, LocalTarget};
pub use mobius::{change_variables, ChangeOfVariables, ConclusionReport, Mobius};
pub use search::{search_t0, DenominatorPolicy, SearchParams, SearchResult, SearchStats};
