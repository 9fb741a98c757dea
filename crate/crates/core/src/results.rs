//! Text formats of scan output.
//!
//! Results file:
//! ```text
//! #irregular-scan v1 from=5 to=200
//! 37:32
//! 157:62,110
//! #summary primes=44 irregular=8 checksum_fail=0
//! ```
//! Primes whose checksum could not be made to hold appear as
//! `#checksum-fail <p>` lines. The aux file holds `p r residue` lines, the
//! stored residue pairs of every prime.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("read error: {0}")]
    Io(String),
}

fn malformed(line_no: usize, msg: impl std::fmt::Display) -> FormatError {
    FormatError::Malformed(format!("line {}: {msg}", line_no + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Summary {
    pub primes: u64,
    pub irregular: u64,
    pub checksum_fail: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsFile {
    pub from: u64,
    pub to: u64,
    /// Irregular primes with their indices, ascending by `p`.
    pub entries: Vec<(u64, Vec<u64>)>,
    pub checksum_failures: Vec<u64>,
    pub summary: Summary,
}

impl ResultsFile {
    /// Index of irregularity of `p`, as far as this file knows.
    pub fn index_of(&self, p: u64) -> usize {
        self.entries
            .binary_search_by_key(&p, |e| e.0)
            .map(|i| self.entries[i].1.len())
            .unwrap_or(0)
    }
}

pub fn header_line(from: u64, to: u64) -> String {
    format!("#irregular-scan v1 from={from} to={to}\n")
}

pub fn record_line(p: u64, indices: &[u64]) -> String {
    let mut s = format!("{p}:");
    for (i, r) in indices.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{r}").unwrap();
    }
    s.push('\n');
    s
}

pub fn checksum_fail_line(p: u64) -> String {
    format!("#checksum-fail {p}\n")
}

pub fn summary_line(s: &Summary) -> String {
    format!(
        "#summary primes={} irregular={} checksum_fail={}\n",
        s.primes, s.irregular, s.checksum_fail
    )
}

pub fn aux_lines(p: u64, pairs: &[(u64, u64)]) -> String {
    let mut s = String::new();
    for (r, v) in pairs {
        writeln!(s, "{p} {r} {v}").unwrap();
    }
    s
}

fn field(token: Option<&str>, key: &str, line_no: usize) -> Result<u64, FormatError> {
    let token = token.ok_or_else(|| malformed(line_no, format!("missing `{key}=`")))?;
    token
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| malformed(line_no, format!("expected `{key}=<integer>`, found `{token}`")))
}

/// Header, footer and checksum failures of a results file; the per-prime
/// lines go to the callback of [`read_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsMeta {
    pub from: u64,
    pub to: u64,
    pub checksum_failures: Vec<u64>,
    pub summary: Summary,
}

/// Single pass over a results file, calling `on_record(p, indices)` for
/// every irregular prime in file order.
pub fn read_results<R: BufRead>(
    reader: R,
    mut on_record: impl FnMut(u64, &[u64]),
) -> Result<ResultsMeta, FormatError> {
    let mut lines = reader.lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>, FormatError> {
        for (no, line) in lines.by_ref() {
            let line = line.map_err(|e| FormatError::Io(e.to_string()))?;
            if !line.trim().is_empty() {
                return Ok(Some((no, line)));
            }
        }
        Ok(None)
    };
    let (no, header) = next_line()?.ok_or_else(|| FormatError::Malformed("empty file".into()))?;
    let mut tokens = header
        .strip_prefix("#irregular-scan v1")
        .ok_or_else(|| malformed(no, "missing `#irregular-scan v1` header"))?
        .split_whitespace();
    let from = field(tokens.next(), "from", no)?;
    let to = field(tokens.next(), "to", no)?;

    let mut last_p = None;
    let mut records = 0u64;
    let mut checksum_failures = Vec::new();
    let mut summary = None;
    let mut indices = Vec::new();
    while let Some((no, line)) = next_line()? {
        if summary.is_some() {
            return Err(malformed(no, "content after the summary line"));
        }
        if let Some(rest) = line.strip_prefix("#summary") {
            let mut t = rest.split_whitespace();
            summary = Some(Summary {
                primes: field(t.next(), "primes", no)?,
                irregular: field(t.next(), "irregular", no)?,
                checksum_fail: field(t.next(), "checksum_fail", no)?,
            });
        } else if let Some(rest) = line.strip_prefix("#checksum-fail") {
            let p = rest
                .trim()
                .parse()
                .map_err(|_| malformed(no, "bad checksum-fail line"))?;
            checksum_failures.push(p);
        } else if line.starts_with('#') {
            return Err(malformed(no, format!("unknown directive `{line}`")));
        } else {
            let (p, list) = line
                .split_once(':')
                .ok_or_else(|| malformed(no, "expected `p:r1,r2,...`"))?;
            let p: u64 = p.trim().parse().map_err(|_| malformed(no, "bad prime"))?;
            indices.clear();
            for r in list.split(',') {
                indices.push(r.trim().parse::<u64>().map_err(|_| malformed(no, "bad index list"))?);
            }
            if indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(malformed(no, "indices are not ascending"));
            }
            if last_p.is_some_and(|q| q >= p) {
                return Err(malformed(no, "primes are not ascending"));
            }
            if p < from || p > to {
                return Err(malformed(no, format!("{p} is outside [{from}, {to}]")));
            }
            last_p = Some(p);
            records += 1;
            on_record(p, &indices);
        }
    }
    let summary = summary.ok_or_else(|| FormatError::Malformed("missing `#summary` footer".into()))?;
    if summary.irregular != records {
        return Err(FormatError::Malformed(format!(
            "summary says {} irregular primes, file lists {records}",
            summary.irregular
        )));
    }
    if summary.checksum_fail != checksum_failures.len() as u64 {
        return Err(FormatError::Malformed(format!(
            "summary says {} checksum failures, file lists {}",
            summary.checksum_fail,
            checksum_failures.len()
        )));
    }
    Ok(ResultsMeta {
        from,
        to,
        checksum_failures,
        summary,
    })
}

pub fn parse_results(text: &str) -> Result<ResultsFile, FormatError> {
    let mut entries = Vec::new();
    let meta = read_results(text.as_bytes(), |p, idx| entries.push((p, idx.to_vec())))?;
    Ok(ResultsFile {
        from: meta.from,
        to: meta.to,
        entries,
        checksum_failures: meta.checksum_failures,
        summary: meta.summary,
    })
}

/// Stored pairs per prime, in file order.
pub fn parse_aux(text: &str) -> Result<BTreeMap<u64, Vec<(u64, u64)>>, FormatError> {
    let mut out: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(no, "expected `p r residue`"))?;
        let [p, r, v] = nums[..] else {
            return Err(malformed(no, "expected `p r residue`"));
        };
        out.entry(p).or_default().push((r, v));
    }
    Ok(out)
}
