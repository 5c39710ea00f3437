//! Process-wide factorization cache.
//!
//! Only integers above [`CACHE_MIN_BITS`] go through the cache. Entries are
//! checked on insertion (product reassembles the key) so a corrupt persistent
//! store cannot inject a wrong factorization.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::One;

pub const CACHE_MIN_BITS: u64 = 40;

#[derive(Default)]
struct Store {
    enabled: bool,
    map: HashMap<BigUint, Vec<(BigUint, u32)>>,
    fresh: Vec<BigUint>,
}

fn store() -> &'static Mutex<Store> {
    static CELL: OnceLock<Mutex<Store>> = OnceLock::new();
    CELL.get_or_init(|| Mutex::new(Store::default()))
}

pub fn enable() {
    store().lock().unwrap().enabled = true;
}

pub fn is_enabled() -> bool {
    store().lock().unwrap().enabled
}

/// True when `factors` multiplies out to `n` and every factor is prime.
pub fn validate(n: &BigUint, factors: &[(BigUint, u32)]) -> bool {
    let mut prod = BigUint::one();
    for (p, e) in factors {
        prod *= p.pow(*e);
    }
    prod == *n
        && factors
            .iter()
            .all(|(p, _)| matches!(super::factor::is_prime(p), Ok(true)))
}

/// Inserts a pre-existing entry (from disk). Returns false and drops the entry
/// when it fails validation.
pub fn preload(n: BigUint, factors: Vec<(BigUint, u32)>) -> bool {
    if !validate(&n, &factors) {
        return false;
    }
    let mut s = store().lock().unwrap();
    s.enabled = true;
    s.map.insert(n, factors);
    true
}

pub(crate) fn lookup(n: &BigUint) -> Option<Vec<(BigUint, u32)>> {
    let s = store().lock().unwrap();
    if !s.enabled {
        return None;
    }
    s.map.get(n).cloned()
}

pub(crate) fn record(n: &BigUint, factors: &[(BigUint, u32)]) {
    let mut s = store().lock().unwrap();
    if !s.enabled {
        return;
    }
    if s.map.insert(n.clone(), factors.to_vec()).is_none() {
        s.fresh.push(n.clone());
    }
}

/// Entries added since the last drain, in insertion order.
pub fn drain_fresh() -> Vec<(BigUint, Vec<(BigUint, u32)>)> {
    let mut s = store().lock().unwrap();
    let fresh = std::mem::take(&mut s.fresh);
    fresh
        .into_iter()
        .filter_map(|n| s.map.get(&n).cloned().map(|f| (n, f)))
        .collect()
}
