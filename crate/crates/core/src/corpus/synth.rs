//! Planted two-community corpora for exercising the pipeline end to end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::journals::JournalFieldMap;
use super::mesh::{MeshVocabulary, SubtreeRoots, TermId};
use super::papers::PaperRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Community {
    Basic,
    Applied,
}

/// Where a synthetic paper's terms came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermMix {
    BasicOnly,
    Mixed,
    AppliedOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub basic_terms: usize,
    pub applied_terms: usize,
    pub cell_seeds: usize,
    pub animal_seeds: usize,
    pub human_seeds: usize,
    pub papers: usize,
    /// Per-term probability of drawing from the union of both communities.
    pub mixing: f64,
    pub applied_share: f64,
    pub min_terms: usize,
    pub max_terms: usize,
    pub refs_per_paper: usize,
    pub same_community_citation: f64,
    pub trial_share: f64,
    pub journals_per_community: usize,
    pub year_from: i32,
    pub year_to: i32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            basic_terms: 50,
            applied_terms: 50,
            cell_seeds: 8,
            animal_seeds: 7,
            human_seeds: 15,
            papers: 5000,
            mixing: 0.1,
            applied_share: 0.5,
            min_terms: 3,
            max_terms: 8,
            refs_per_paper: 5,
            same_community_citation: 0.9,
            trial_share: 0.2,
            journals_per_community: 3,
            year_from: 1996,
            year_to: 2000,
            seed: 1,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.basic_terms == 0 || self.applied_terms == 0 {
            return bad("community sizes must be positive");
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return bad("mixing rate must lie in [0, 1]");
        }
        for p in [self.applied_share, self.same_community_citation, self.trial_share] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.cell_seeds + self.animal_seeds > self.basic_terms {
            return bad("more basic seeds than basic terms");
        }
        if self.human_seeds > self.applied_terms {
            return bad("more human seeds than applied terms");
        }
        if self.cell_seeds + self.animal_seeds == 0 || self.human_seeds == 0 {
            return bad("each seed category needs at least one term");
        }
        if self.min_terms == 0
            || self.min_terms > self.max_terms
            || self.max_terms > self.basic_terms.min(self.applied_terms)
        {
            return bad("terms per paper must satisfy 1 <= min <= max <= community size");
        }
        if self.year_from > self.year_to {
            return bad("empty year range");
        }
        if self.journals_per_community == 0 {
            return bad("need at least one journal per community");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthPaper {
    pub pmid: String,
    pub year: i32,
    pub journal: String,
    pub mesh: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_phase: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub mesh_pairs: Vec<(String, String)>,
    pub vocab: MeshVocabulary,
    pub raw_papers: Vec<SynthPaper>,
    pub papers: Vec<PaperRecord>,
    pub citations: Vec<(String, String)>,
    pub journal_fields: JournalFieldMap,
    /// Indexed by term id; `None` for hierarchy roots and filler terms.
    pub term_community: Vec<Option<Community>>,
    pub paper_community: Vec<Community>,
    pub paper_mix: Vec<TermMix>,
}

const EXCLUDED_TERM: &str = "Geographic Locale";
const UNLISTED_TERM: &str = "Unlisted Term";

fn root_pairs() -> Vec<(String, String)> {
    [
        ("Cells", "A11"),
        ("Archaea", "B02"),
        ("Bacteria", "B03"),
        ("Viruses", "B04"),
        ("Molecular Structure", "G02.111"),
        ("Chemical Processes", "G02.222"),
        ("Eukaryota", "B01"),
        ("Humans", "B01.050.150"),
        ("Persons", "M01"),
        (EXCLUDED_TERM, "Z01.001"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut mesh_pairs = root_pairs();
    let mut basic_names = Vec::with_capacity(spec.basic_terms);
    for k in 0..spec.basic_terms {
        let name = format!("Basic Term {k:03}");
        let tree = if k < spec.cell_seeds {
            format!("A11.{k:03}")
        } else if k < spec.cell_seeds + spec.animal_seeds {
            format!("B01.100.{k:03}")
        } else {
            format!("D01.{k:03}")
        };
        mesh_pairs.push((name.clone(), tree));
        basic_names.push(name);
    }
    let mut applied_names = Vec::with_capacity(spec.applied_terms);
    for k in 0..spec.applied_terms {
        let name = format!("Applied Term {k:03}");
        let tree = if k < spec.human_seeds {
            if k % 2 == 0 {
                format!("B01.050.150.{k:03}")
            } else {
                format!("M01.{k:03}")
            }
        } else {
            format!("N01.{k:03}")
        };
        mesh_pairs.push((name.clone(), tree));
        applied_names.push(name);
    }
    let vocab = MeshVocabulary::from_pairs(mesh_pairs.clone(), &SubtreeRoots::default())?;
    let mut term_community = vec![None; vocab.len()];
    for n in &basic_names {
        term_community[vocab.id(n).unwrap() as usize] = Some(Community::Basic);
    }
    for n in &applied_names {
        term_community[vocab.id(n).unwrap() as usize] = Some(Community::Applied);
    }

    let basic_journals: Vec<String> = (0..spec.journals_per_community)
        .map(|k| format!("Basic Journal {k}"))
        .collect();
    let applied_journals: Vec<String> = (0..spec.journals_per_community)
        .map(|k| format!("Applied Journal {k}"))
        .collect();
    let mut journal_fields = JournalFieldMap::default();
    for (k, j) in basic_journals.iter().enumerate() {
        journal_fields.insert(j, ["Cell Biology", "Biochemistry", "Molecular Biology"][k % 3]);
    }
    for (k, j) in applied_journals.iter().enumerate() {
        journal_fields.insert(j, ["Nursing", "General Surgery", "Health Services Research"][k % 3]);
    }
    journal_fields.insert(&applied_journals[0], "Medicine");

    // (year, community, term names, mix, journal, trial phase)
    let mut drafts = Vec::with_capacity(spec.papers);
    let all_names: Vec<&String> = basic_names.iter().chain(&applied_names).collect();
    for _ in 0..spec.papers {
        let year = rng.random_range(spec.year_from..=spec.year_to);
        let home = if rng.random_bool(spec.applied_share) {
            Community::Applied
        } else {
            Community::Basic
        };
        let own = match home {
            Community::Basic => &basic_names,
            Community::Applied => &applied_names,
        };
        let k = rng.random_range(spec.min_terms..=spec.max_terms);
        let mut picked: Vec<&String> = Vec::with_capacity(k);
        while picked.len() < k {
            let name = if rng.random_bool(spec.mixing) {
                all_names[rng.random_range(0..all_names.len())]
            } else {
                &own[rng.random_range(0..own.len())]
            };
            if !picked.contains(&name) {
                picked.push(name);
            }
        }
        let has_basic = picked.iter().any(|n| n.starts_with("Basic"));
        let has_applied = picked.iter().any(|n| n.starts_with("Applied"));
        let mix = match (has_basic, has_applied) {
            (true, true) => TermMix::Mixed,
            (false, true) => TermMix::AppliedOnly,
            _ => TermMix::BasicOnly,
        };
        let mut mesh: Vec<String> = picked.into_iter().cloned().collect();
        if rng.random_bool(0.1) {
            mesh.push(EXCLUDED_TERM.to_string());
        }
        if rng.random_bool(0.02) {
            mesh.push(UNLISTED_TERM.to_string());
        }
        let journals = match home {
            Community::Basic => &basic_journals,
            Community::Applied => &applied_journals,
        };
        let journal = journals[rng.random_range(0..journals.len())].clone();
        let trial_phase = (home == Community::Applied && rng.random_bool(spec.trial_share))
            .then(|| rng.random_range(0..=4u8));
        drafts.push((year, home, mesh, mix, journal, trial_phase));
    }
    // Stable sort keeps draw order within a year.
    drafts.sort_by_key(|d| d.0);

    let mut raw_papers = Vec::with_capacity(drafts.len());
    let mut papers = Vec::with_capacity(drafts.len());
    let mut paper_community = Vec::with_capacity(drafts.len());
    let mut paper_mix = Vec::with_capacity(drafts.len());
    for (i, (year, home, mesh, mix, journal, trial_phase)) in drafts.into_iter().enumerate() {
        let pmid = format!("{}", 100_000 + i);
        let mut terms: Vec<TermId> = mesh
            .iter()
            .filter_map(|n| vocab.id(n))
            .filter(|&id| !vocab.is_excluded(id).unwrap_or(true))
            .collect();
        terms.sort_unstable();
        papers.push(PaperRecord {
            pmid: pmid.clone(),
            year,
            journal: journal.clone(),
            terms,
            n_original: mesh.len(),
            trial_phase,
        });
        raw_papers.push(SynthPaper {
            pmid,
            year,
            journal,
            mesh,
            trial_phase,
        });
        paper_community.push(home);
        paper_mix.push(mix);
    }

    // Each paper cites earlier papers only, so the graph is acyclic.
    let mut citations = Vec::new();
    let mut earlier: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let slot = |c: Community| match c {
        Community::Basic => 0,
        Community::Applied => 1,
    };
    for i in 0..papers.len() {
        let home = slot(paper_community[i]);
        let mut refs: Vec<usize> = Vec::with_capacity(spec.refs_per_paper);
        for _ in 0..spec.refs_per_paper {
            let preferred = if rng.random_bool(spec.same_community_citation) {
                home
            } else {
                1 - home
            };
            let pool = if earlier[preferred].is_empty() {
                &earlier[1 - preferred]
            } else {
                &earlier[preferred]
            };
            if pool.is_empty() {
                break;
            }
            let j = pool[rng.random_range(0..pool.len())];
            if !refs.contains(&j) {
                refs.push(j);
            }
        }
        refs.sort_unstable();
        for j in refs {
            citations.push((papers[i].pmid.clone(), papers[j].pmid.clone()));
        }
        earlier[home].push(i);
    }

    Ok(SyntheticCorpus {
        mesh_pairs,
        vocab,
        raw_papers,
        papers,
        citations,
        journal_fields,
        term_community,
        paper_community,
        paper_mix,
    })
}

impl SyntheticCorpus {
    /// Writes `mesh_tree.tsv`, `papers.jsonl`, `citations.tsv` and
    /// `journal_fields.tsv` in the ingest formats.
    pub fn write_inputs(
        &self,
        mesh_tree: &Path,
        papers: &Path,
        citations: &Path,
        journal_fields: &Path,
    ) -> Result<()> {
        let create = |p: &Path| -> Result<BufWriter<File>> {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            Ok(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?))
        };

        let mut out = create(mesh_tree)?;
        for (t, tree) in &self.mesh_pairs {
            writeln!(out, "{t}\t{tree}").map_err(|e| Error::io(mesh_tree, e))?;
        }
        out.flush().map_err(|e| Error::io(mesh_tree, e))?;

        let mut out = create(papers)?;
        for p in &self.raw_papers {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n").map_err(|e| Error::io(papers, e))?;
        }
        out.flush().map_err(|e| Error::io(papers, e))?;

        let mut out = create(citations)?;
        for (a, b) in &self.citations {
            writeln!(out, "{a}\t{b}").map_err(|e| Error::io(citations, e))?;
        }
        out.flush().map_err(|e| Error::io(citations, e))?;

        let mut out = create(journal_fields)?;
        for (j, f) in self.journal_fields.iter() {
            writeln!(out, "{j}\t{f}").map_err(|e| Error::io(journal_fields, e))?;
        }
        out.flush().map_err(|e| Error::io(journal_fields, e))
    }
}
