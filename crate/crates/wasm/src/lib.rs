//! Browser bindings. Each operation takes plain strings and numbers and
//! returns a JSON document; the `*_json` functions are the same operations
//! callable from native code.

use serde_json::{json, Value};
use splitval_core::galois::cycle_type_scan;
use splitval_core::local::symbols::{hilbert_symbol, PlaceOfQ};
use splitval_core::split::search::{search_t0, SearchParams};
use splitval_core::text::{parse_instance, parse_poly};
use splitval_core::Rational;
use wasm_bindgen::prelude::*;

const MAX_PRIME_BOUND: u64 = 100_000;
const MAX_GRID: i64 = 12;
const MAX_HEIGHT: u64 = 5_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Factor-degree patterns of `f mod p` for primes up to `bound`.
pub fn cycle_types_json(poly: &str, bound: u64) -> Result<Value, String> {
    if bound > MAX_PRIME_BOUND {
        return Err(format!("prime bound is capped at {MAX_PRIME_BOUND} in the demo"));
    }
    let f = parse_poly(poly, "x").map_err(err)?;
    let profile = cycle_type_scan(&f, bound).map_err(err)?;
    let mut v = serde_json::to_value(&profile).map_err(err)?;
    v["all_homogeneous"] = json!(profile.all_homogeneous());
    Ok(v)
}

/// `(a, b)_v` for all nonzero integers `a, b` with `|a|, |b| ≤ n`.
pub fn hilbert_grid_json(place: &str, n: i64) -> Result<Value, String> {
    if !(1..=MAX_GRID).contains(&n) {
        return Err(format!("grid radius must be between 1 and {MAX_GRID}"));
    }
    let v = match place.trim() {
        "real" | "inf" | "∞" => PlaceOfQ::Real,
        p => PlaceOfQ::finite(p.parse().map_err(|_| format!("not a place: {p}"))?).map_err(err)?,
    };
    let axis: Vec<i64> = (-n..=n).filter(|&x| x != 0).collect();
    let rows = axis
        .iter()
        .map(|&a| {
            axis.iter()
                .map(|&b| hilbert_symbol(&Rational::from_integer(a.into()), &Rational::from_integer(b.into()), v))
                .collect::<Result<Vec<i8>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(json!({ "place": v, "axis": axis, "rows": rows }))
}

/// Witnesses of the instance up to the given height.
pub fn search_json(instance: &str, height: u64, max_hits: usize) -> Result<Value, String> {
    if height > MAX_HEIGHT {
        return Err(format!("height bound is capped at {MAX_HEIGHT} in the demo"));
    }
    let inst = parse_instance(instance).map_err(err)?;
    let mut params = SearchParams::new(height);
    params.max_hits = Some(max_hits.max(1));
    let res = search_t0(&inst, &params).map_err(err)?;
    Ok(json!({ "hits": res.hits, "stats": res.stats }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cycle_types(poly: &str, bound: u32) -> Result<String, JsError> {
    to_js(cycle_types_json(poly, bound.into()))
}

#[wasm_bindgen]
pub fn hilbert_grid(place: &str, n: i32) -> Result<String, JsError> {
    to_js(hilbert_grid_json(place, n.into()))
}

#[wasm_bindgen]
pub fn search(instance: &str, height: u32, max_hits: u32) -> Result<String, JsError> {
    to_js(search_json(instance, height.into(), max_hits as usize))
}
