//! Local points on the fiber of the norm-form variety over a value t0.

use serde::Serialize;

use crate::arith::Rational;
use crate::error::Result;
use crate::local::{local_norm_test, LocalElement, NormVerdict, PlaceOfQ};
use crate::split::ConjectureInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberVerdict {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberPlaceVerdict {
    pub place: PlaceOfQ,
    pub verdict: FiberVerdict,
    /// `b_i(t0 − a_i)` tested at this place, per entry.
    pub entries: Vec<NormVerdict>,
}

/// The fiber over `t0` has a point over ℚ_v exactly when every `b_i(t0 − a_i)`
/// is a norm from `L_i ⊗ ℚ_v`.
pub fn w_fiber_verify(inst: &ConjectureInstance, t0: &Rational, places: &[PlaceOfQ]) -> Result<Vec<FiberPlaceVerdict>> {
    let mut out = Vec::new();
    for &v in places {
        let mut entries = Vec::new();
        for e in inst.entries() {
            let x = LocalElement::exact(e.b.clone(), t0.clone());
            entries.push(local_norm_test(&x, &e.ext, v, None)?);
        }
        let verdict = match NormVerdict::all(entries.iter().copied()) {
            NormVerdict::IsNorm => FiberVerdict::Yes,
            NormVerdict::NotNorm => FiberVerdict::No,
            NormVerdict::Undetermined(_) => FiberVerdict::Undetermined,
        };
        out.push(FiberPlaceVerdict { place: v, verdict, entries });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat_int;
    use crate::poly::PolyQ;
    use crate::split::{Entry, LocalTarget};

    fn gaussian() -> ConjectureInstance {
        let e = Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap();
        ConjectureInstance::new(vec![e], [], [LocalTarget::finite(2, rat_int(1), 3).unwrap()]).unwrap()
    }

    #[test]
    fn gaussian_fibers() {
        let inst = gaussian();
        let v = |t0: i64, p: u64| w_fiber_verify(&inst, &rat_int(t0), &[PlaceOfQ::Finite(p)]).unwrap()[0].verdict;
        assert_eq!(v(25, 5), FiberVerdict::Yes);
        assert_eq!(v(25, 3), FiberVerdict::Yes);
        assert_eq!(v(45, 3), FiberVerdict::Yes);
        assert_eq!(v(3, 3), FiberVerdict::No);
        let real = w_fiber_verify(&inst, &rat_int(-4), &[PlaceOfQ::Real]).unwrap();
        assert_eq!(real[0].verdict, FiberVerdict::No);
    }
}
