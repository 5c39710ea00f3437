//! Number fields k = ℚ[t]/(P) and relative extensions L/k.

pub mod absolute;
pub mod relative;

pub use absolute::{NumberFieldAbs, PlaceAbove};
pub use relative::{k_resultant, real_root_count_at, DegreeOneVerdict, KPoly, RelativeExtension};
