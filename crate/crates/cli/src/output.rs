//! Result stream, run manifest and the on-disk factorization cache.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use splitval_core::arith::cache;

/// Everything that determines the result stream. Timing, the worker count
/// and the cache path are deliberately absent: they never change a value.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// SHA-256 of the instance file, when the subcommand reads one.
    pub input_digest: Option<String>,
    pub seed: u64,
    pub parameters: Value,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Single writer for stdout; one JSON object per line.
pub struct Stream {
    out: BufWriter<std::io::Stdout>,
    pub lines: usize,
}

impl Stream {
    pub fn new() -> Self {
        Stream { out: BufWriter::new(std::io::stdout()), lines: 0 }
    }

    pub fn emit<T: Serialize>(&mut self, v: &T) {
        let s = serde_json::to_string(v).expect("results serialize");
        // A closed pipe is not worth a panic.
        let _ = writeln!(self.out, "{s}");
        let _ = self.out.flush();
        self.lines += 1;
    }

    pub fn manifest(&mut self, m: &RunManifest) {
        self.emit(&json!({ "manifest": m }));
    }
}

#[derive(Default, Debug)]
pub struct CacheLoad {
    pub loaded: usize,
    pub dropped: usize,
}

#[derive(Serialize, serde::Deserialize)]
struct CacheLine {
    n: String,
    factors: Vec<(String, u32)>,
}

fn parse_line(line: &str) -> Option<(BigUint, Vec<(BigUint, u32)>)> {
    let l: CacheLine = serde_json::from_str(line).ok()?;
    let n = l.n.parse().ok()?;
    let f = l
        .factors
        .into_iter()
        .map(|(p, e)| Some((p.parse().ok()?, e)))
        .collect::<Option<Vec<_>>>()?;
    Some((n, f))
}

/// Loads a JSON-lines cache; entries that fail to parse or to reassemble
/// into their key with prime factors are dropped.
pub fn load_cache(path: &Path) -> std::io::Result<CacheLoad> {
    cache::enable();
    let mut st = CacheLoad::default();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(st),
        Err(e) => return Err(e),
    };
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ok = parse_line(&line).is_some_and(|(n, f)| cache::preload(n, f));
        if ok {
            st.loaded += 1;
        } else {
            st.dropped += 1;
        }
    }
    Ok(st)
}

/// Appends the factorizations computed during this run.
pub fn save_cache(path: &Path) -> std::io::Result<usize> {
    let fresh = cache::drain_fresh();
    if fresh.is_empty() {
        return Ok(0);
    }
    let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
    for (n, f) in &fresh {
        let l = CacheLine { n: n.to_string(), factors: f.iter().map(|(p, e)| (p.to_string(), *e)).collect() };
        writeln!(w, "{}", serde_json::to_string(&l).expect("cache line serializes"))?;
    }
    w.flush()?;
    Ok(fresh.len())
}
