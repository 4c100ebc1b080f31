//! Line-oriented instance file format.
//!
//! UTF-8 text, one record per line, `#` starts a comment. Records:
//!
//! ```text
//! n <int>
//! k <int>
//! edge <u> <v> <tau> <cap>
//! weight <v> <w>
//! ```
//!
//! Missing weights default to 0. The serializer emits the canonical form —
//! `n`, `k`, edges in stored order, then nonzero weights in ascending
//! vertex order — which round-trips byte-identically through the parser.

use ksink::Instance;

/// Parse failure with the 1-based offending line.
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn fail(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

struct Raw {
    n: Option<usize>,
    k: Option<usize>,
    edges: Vec<(usize, usize, u64, u64)>,
    weights: Vec<(usize, u64)>,
}

/// Parses the textual format into a validated [`Instance`]. The second
/// error variant carries instance-level validation failures (not a tree,
/// zero capacity, ids out of range).
pub fn parse(text: &str) -> Result<Result<Instance, ksink::Error>, ParseError> {
    let mut raw = Raw {
        n: None,
        k: None,
        edges: Vec::new(),
        weights: Vec::new(),
    };
    for (idx, full_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = full_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let record = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let ints = |want: usize| -> Result<Vec<u64>, ParseError> {
            if rest.len() != want {
                return Err(fail(
                    lineno,
                    format!("`{record}` takes {want} fields, got {}", rest.len()),
                ));
            }
            rest.iter()
                .map(|f| {
                    f.parse::<u64>()
                        .map_err(|_| fail(lineno, format!("`{f}` is not a non-negative integer")))
                })
                .collect()
        };
        match record {
            "n" => {
                let v = ints(1)?;
                if raw.n.replace(v[0] as usize).is_some() {
                    return Err(fail(lineno, "duplicate `n` record"));
                }
            }
            "k" => {
                let v = ints(1)?;
                if raw.k.replace(v[0] as usize).is_some() {
                    return Err(fail(lineno, "duplicate `k` record"));
                }
            }
            "edge" => {
                let v = ints(4)?;
                raw.edges.push((v[0] as usize, v[1] as usize, v[2], v[3]));
            }
            "weight" => {
                let v = ints(2)?;
                raw.weights.push((v[0] as usize, v[1]));
            }
            other => return Err(fail(lineno, format!("unknown record `{other}`"))),
        }
    }
    let n = raw.n.ok_or_else(|| fail(0, "missing `n` record"))?;
    let k = raw.k.ok_or_else(|| fail(0, "missing `k` record"))?;
    let mut weights = vec![0u64; n];
    for (v, w) in raw.weights {
        if v >= n {
            return Err(fail(0, format!("weight vertex {v} out of range (n = {n})")));
        }
        weights[v] = w;
    }
    Ok(Instance::new(n, k, raw.edges, weights))
}

/// Canonical serialization; see the module docs for the layout guarantee.
pub fn serialize(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("n {}\n", inst.n()));
    out.push_str(&format!("k {}\n", inst.k()));
    for e in inst.edges() {
        out.push_str(&format!("edge {} {} {} {}\n", e.u, e.v, e.tau, e.cap));
    }
    for (v, &w) in inst.weights().iter().enumerate() {
        if w > 0 {
            out.push_str(&format!("weight {v} {w}\n"));
        }
    }
    out
}
