//! Normalized paper records and their JSONL ingest.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{Category, MeshVocabulary, TermId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub pmid: String,
    pub year: i32,
    pub journal: String,
    /// Distinct in-vocabulary terms from scoring branches, ascending.
    pub terms: Vec<TermId>,
    /// Length of the original (deduplicated) term list, before any filtering.
    pub n_original: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_phase: Option<u8>,
}

/// A paper can be scored only when strictly more than half of its original
/// terms are available.
pub fn majority_rule(n_available: usize, n_original: usize) -> bool {
    2 * n_available > n_original
}

impl PaperRecord {
    /// Majority rule evaluated against the ingest vocabulary.
    pub fn scoreable_at_ingest(&self) -> bool {
        majority_rule(self.terms.len(), self.n_original)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub accepted: usize,
    pub rejected_malformed: usize,
    pub rejected_missing_field: usize,
    pub rejected_year: usize,
    pub unknown_terms_dropped: usize,
    pub excluded_terms_dropped: usize,
    pub not_scoreable: usize,
}

#[derive(Deserialize)]
struct RawPaper {
    pmid: Option<String>,
    year: Option<serde_json::Value>,
    journal: Option<String>,
    mesh: Option<Vec<String>>,
    trial_phase: Option<serde_json::Value>,
}

enum LineOutcome {
    Blank,
    Malformed,
    Missing,
    BadYear,
    Accepted {
        record: PaperRecord,
        unknown: usize,
        excluded: usize,
    },
}

fn parse_line(line: &str, vocab: &MeshVocabulary, years: &RangeInclusive<i32>) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let raw: RawPaper = match serde_json::from_str(line) {
        Ok(raw) => raw,
        Err(_) => return LineOutcome::Malformed,
    };
    let (Some(pmid), Some(year), Some(journal), Some(mesh)) =
        (raw.pmid, raw.year, raw.journal, raw.mesh)
    else {
        return LineOutcome::Missing;
    };
    let year = match year.as_i64() {
        Some(y) if years.contains(&(y as i32)) && y == y as i32 as i64 => y as i32,
        _ => return LineOutcome::BadYear,
    };
    let trial_phase = match raw.trial_phase {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(p) if p <= 4 => Some(p as u8),
            _ => return LineOutcome::Malformed,
        },
    };

    let original: BTreeSet<&str> = mesh.iter().map(String::as_str).collect();
    let mut terms = BTreeSet::new();
    let (mut unknown, mut excluded) = (0, 0);
    for name in &original {
        match vocab.id(name) {
            None => unknown += 1,
            Some(id) if vocab.is_excluded(id).unwrap_or(true) => excluded += 1,
            Some(id) => {
                terms.insert(id);
            }
        }
    }
    LineOutcome::Accepted {
        record: PaperRecord {
            pmid,
            year,
            journal,
            terms: terms.into_iter().collect(),
            n_original: original.len(),
            trial_phase,
        },
        unknown,
        excluded,
    }
}

/// Parses `papers.jsonl`. Bad records are counted and skipped, never fatal.
pub fn parse_papers(
    path: &Path,
    vocab: &MeshVocabulary,
    years: RangeInclusive<i32>,
) -> Result<(Vec<PaperRecord>, IngestStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    Ok(parse_paper_lines(&lines, vocab, years))
}

pub fn parse_paper_lines<S: AsRef<str> + Sync>(
    lines: &[S],
    vocab: &MeshVocabulary,
    years: RangeInclusive<i32>,
) -> (Vec<PaperRecord>, IngestStats) {
    let outcomes: Vec<LineOutcome> = lines
        .par_iter()
        .map(|l| parse_line(l.as_ref(), vocab, &years))
        .collect();

    let mut stats = IngestStats::default();
    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        match outcome {
            LineOutcome::Blank => continue,
            LineOutcome::Malformed => stats.rejected_malformed += 1,
            LineOutcome::Missing => stats.rejected_missing_field += 1,
            LineOutcome::BadYear => stats.rejected_year += 1,
            LineOutcome::Accepted {
                record,
                unknown,
                excluded,
            } => {
                stats.accepted += 1;
                stats.unknown_terms_dropped += unknown;
                stats.excluded_terms_dropped += excluded;
                if !record.scoreable_at_ingest() {
                    stats.not_scoreable += 1;
                }
                records.push(record);
            }
        }
        stats.lines += 1;
    }
    let rejected = stats.rejected_malformed + stats.rejected_missing_field + stats.rejected_year;
    if rejected > 0 {
        warn!("rejected {rejected} paper records");
    }
    if stats.unknown_terms_dropped > 0 {
        warn!(
            "dropped {} term assignments absent from the vocabulary",
            stats.unknown_terms_dropped
        );
    }
    (records, stats)
}

pub fn write_records(path: &Path, records: &[PaperRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<PaperRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?,
        );
    }
    Ok(records)
}

/// Cell (C), animal (A), human (H) membership pattern of a paper's terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeberCategory {
    pub cell: bool,
    pub animal: bool,
    pub human: bool,
}

impl WeberCategory {
    /// The seven classes in basic-to-applied order, followed by `None`.
    pub const ALL: [&'static str; 8] = ["CA", "C", "CAH", "A", "CH", "AH", "H", "None"];

    pub fn from_categories<I: IntoIterator<Item = Category>>(cats: I) -> Self {
        let mut w = WeberCategory::default();
        for c in cats {
            match c {
                Category::BasicCellMolecular => w.cell = true,
                Category::BasicAnimal => w.animal = true,
                Category::AppliedHuman => w.human = true,
                Category::Neutral => {}
            }
        }
        w
    }

    pub fn is_none(&self) -> bool {
        !(self.cell || self.animal || self.human)
    }
}

impl fmt::Display for WeberCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return f.write_str("None");
        }
        for (flag, letter) in [(self.cell, "C"), (self.animal, "A"), (self.human, "H")] {
            if flag {
                f.write_str(letter)?;
            }
        }
        Ok(())
    }
}

impl FromStr for WeberCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "None" {
            return Ok(WeberCategory::default());
        }
        let mut w = WeberCategory::default();
        for c in s.chars() {
            let slot = match c {
                'C' => &mut w.cell,
                'A' => &mut w.animal,
                'H' => &mut w.human,
                _ => return Err(format!("bad Weber category {s:?}")),
            };
            if *slot {
                return Err(format!("bad Weber category {s:?}"));
            }
            *slot = true;
        }
        if w.to_string() != s {
            return Err(format!("non-canonical Weber category {s:?}"));
        }
        Ok(w)
    }
}

pub fn weber_category(paper: &PaperRecord, vocab: &MeshVocabulary) -> WeberCategory {
    WeberCategory::from_categories(
        paper
            .terms
            .iter()
            .filter_map(|&t| vocab.classify_term(t).ok()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::mesh::SubtreeRoots;
    use proptest::prelude::*;

    fn vocab() -> MeshVocabulary {
        MeshVocabulary::from_pairs(
            [
                ("Cells", "A11"),
                ("Eukaryota", "B01"),
                ("Mice", "B01.050"),
                ("Humans", "B01.050.150"),
                ("Persons", "M01"),
                ("Neoplasms", "C04"),
                ("Geography", "Z01"),
            ],
            &SubtreeRoots::default(),
        )
        .unwrap()
    }

    fn parse(lines: &[&str]) -> (Vec<PaperRecord>, IngestStats) {
        parse_paper_lines(lines, &vocab(), 1975..=2013)
    }

    #[test]
    fn all_terms_known() {
        let (recs, stats) = parse(&[
            r#"{"pmid":"1","year":1990,"journal":"J","mesh":["Cells","Mice","Humans","Persons","Neoplasms"]}"#,
        ]);
        assert_eq!(stats.accepted, 1);
        assert_eq!(recs[0].terms.len(), 5);
        assert_eq!(recs[0].n_original, 5);
        assert!(recs[0].scoreable_at_ingest());
    }

    #[test]
    fn one_of_four_known_is_not_scoreable() {
        let (recs, stats) = parse(&[
            r#"{"pmid":"1","year":1990,"journal":"J","mesh":["Cells","X","Y","Z"]}"#,
        ]);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].terms.len(), 1);
        assert!(!recs[0].scoreable_at_ingest());
        assert_eq!(stats.unknown_terms_dropped, 3);
        assert_eq!(stats.not_scoreable, 1);
    }

    #[test]
    fn exact_half_is_not_scoreable() {
        assert!(!majority_rule(2, 4));
        assert!(majority_rule(3, 4));
        assert!(majority_rule(1, 1));
        assert!(!majority_rule(0, 0));
    }

    #[test]
    fn excluded_branch_counts_only_in_denominator() {
        let (recs, stats) = parse(&[
            r#"{"pmid":"1","year":1990,"journal":"J","mesh":["Cells","Geography"]}"#,
        ]);
        assert_eq!(recs[0].terms.len(), 1);
        assert_eq!(recs[0].n_original, 2);
        assert_eq!(stats.excluded_terms_dropped, 1);
        assert!(!recs[0].scoreable_at_ingest());
    }

    #[test]
    fn rejections_are_counted() {
        let (recs, stats) = parse(&[
            r#"{"pmid":"1","journal":"J","mesh":["Cells"]}"#,
            r#"{"pmid":"2","year":1850,"journal":"J","mesh":["Cells"]}"#,
            r#"{"pmid":"3","year":"x","journal":"J","mesh":["Cells"]}"#,
            r#"not json"#,
            r#"{"pmid":"4","year":1990,"journal":"J","mesh":["Cells"],"trial_phase":7}"#,
            "",
            r#"{"pmid":"5","year":1990,"journal":"J","mesh":["Cells"],"trial_phase":3}"#,
        ]);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].trial_phase, Some(3));
        assert_eq!(stats.rejected_missing_field, 1);
        assert_eq!(stats.rejected_year, 2);
        assert_eq!(stats.rejected_malformed, 2);
        assert_eq!(stats.lines, 6);
    }

    #[test]
    fn weber_examples() {
        let v = vocab();
        let mk = |names: &[&str]| PaperRecord {
            pmid: "p".into(),
            year: 1990,
            journal: "J".into(),
            terms: names.iter().map(|n| v.id(n).unwrap()).collect(),
            n_original: names.len(),
            trial_phase: None,
        };
        assert_eq!(weber_category(&mk(&["Humans", "Persons"]), &v).to_string(), "H");
        assert_eq!(weber_category(&mk(&["Cells", "Mice"]), &v).to_string(), "CA");
        assert_eq!(weber_category(&mk(&["Neoplasms"]), &v).to_string(), "None");
        assert_eq!(
            weber_category(&mk(&["Humans", "Mice", "Cells"]), &v).to_string(),
            "CAH"
        );
    }

    #[test]
    fn weber_labels_parse_back() {
        for label in WeberCategory::ALL {
            assert_eq!(label.parse::<WeberCategory>().unwrap().to_string(), label);
        }
        assert!("AC".parse::<WeberCategory>().is_err());
        assert!("CC".parse::<WeberCategory>().is_err());
    }

    #[test]
    fn records_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("papers.jsonl");
        let (recs, _) = parse(&[
            r#"{"pmid":"1","year":1990,"journal":"J","mesh":["Cells","Mice"],"trial_phase":0}"#,
            r#"{"pmid":"2","year":1991,"journal":"K","mesh":["Humans"]}"#,
        ]);
        write_records(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
    }

    proptest! {
        #[test]
        fn weber_ignores_order_and_multiplicity(
            cats in proptest::collection::vec(0u8..4, 0..12),
            seed in any::<u64>(),
        ) {
            let to_cat = |c: u8| match c {
                0 => Category::BasicCellMolecular,
                1 => Category::BasicAnimal,
                2 => Category::AppliedHuman,
                _ => Category::Neutral,
            };
            let a = WeberCategory::from_categories(cats.iter().map(|&c| to_cat(c)));
            let mut shuffled = cats.clone();
            shuffled.extend(cats.iter().take((seed % 5) as usize));
            let k = if shuffled.is_empty() { 0 } else { (seed as usize) % shuffled.len() };
            shuffled.rotate_left(k);
            let b = WeberCategory::from_categories(shuffled.iter().map(|&c| to_cat(c)));
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.is_none(), !cats.iter().any(|&c| c < 3));
        }
    }
}
