//! Searches for binary-form values that are S-units times a single prime,
//! and the cubic-form construction with its forbidden-residue scan.

pub mod cubic;
pub mod form;
pub mod hh1;

pub use cubic::{
    cubic_form_build, eval_binary, forbidden_class_check, forbidden_class_scan, verify_scan_hit, CubicForm, ScanBounds,
    ScanFactor, ScanHit, ScanReport, ScanStats,
};
pub use form::HomogeneousForm;
pub use hh1::{
    hh1_search, verify_hh1_solution, FormCertificate, Hh1Bounds, Hh1Problem, Hh1Rejection, Hh1Report, Hh1Solution,
    Hh1Stats, Hh1Target,
};
