use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CitationStats {
    pub lines: usize,
    pub kept: usize,
    pub self_citations: usize,
    pub dangling: usize,
    pub duplicates: usize,
}

/// Reads `citing<TAB>cited` pairs, keeping edges whose endpoints are both in
/// `known`. Output is deduplicated and sorted.
pub fn load_citations(
    path: &Path,
    known: &HashSet<&str>,
) -> Result<(Vec<(String, String)>, CitationStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut stats = CitationStats::default();
    let mut edges = BTreeSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let mut cols = line.split('\t');
        let (citing, cited) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => (a, b.trim_end()),
            _ => {
                return Err(Error::parse(
                    path,
                    n + 1,
                    "expected `citing_pmid<TAB>cited_pmid`",
                ))
            }
        };
        if citing == cited {
            stats.self_citations += 1;
        } else if !known.contains(citing) || !known.contains(cited) {
            stats.dangling += 1;
        } else if !edges.insert((citing.to_string(), cited.to_string())) {
            stats.duplicates += 1;
        }
    }
    stats.kept = edges.len();
    if stats.dangling > 0 {
        warn!("dropped {} citations with unknown endpoints", stats.dangling);
    }
    Ok((edges.into_iter().collect(), stats))
}

pub fn write_citations(path: &Path, edges: &[(String, String)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (a, b) in edges {
        writeln!(out, "{a}\t{b}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(body: &str, known: &[&str]) -> (Vec<(String, String)>, CitationStats) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("citations.tsv");
        std::fs::write(&path, body).unwrap();
        let known: HashSet<&str> = known.iter().copied().collect();
        load_citations(&path, &known).unwrap()
    }

    #[test]
    fn valid_edge_is_kept() {
        let (edges, stats) = load("A\tB\n", &["A", "B"]);
        assert_eq!(edges, vec![("A".to_string(), "B".to_string())]);
        assert_eq!(stats.kept, 1);
    }

    #[test]
    fn self_citation_dropped() {
        let (edges, stats) = load("A\tA\n", &["A"]);
        assert!(edges.is_empty());
        assert_eq!(stats.self_citations, 1);
    }

    #[test]
    fn dangling_dropped_and_counted() {
        let (edges, stats) = load("A\tX\nA\tB\nA\tB\n", &["A", "B"]);
        assert_eq!(edges.len(), 1);
        assert_eq!(stats.dangling, 1);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn malformed_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        std::fs::write(&path, "A\tB\nA B\n").unwrap();
        let known: HashSet<&str> = ["A", "B"].into_iter().collect();
        assert!(matches!(
            load_citations(&path, &known),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
