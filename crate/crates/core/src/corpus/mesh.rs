//! Controlled-vocabulary tree loading and basic/applied term coding.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

pub type TermId = u32;

/// Top-level branches whose terms take part in scoring.
pub const SCORING_BRANCHES: [char; 8] = ['A', 'B', 'C', 'D', 'E', 'G', 'M', 'N'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    BasicCellMolecular,
    BasicAnimal,
    AppliedHuman,
    Neutral,
}

impl Category {
    pub fn is_basic(self) -> bool {
        matches!(self, Category::BasicCellMolecular | Category::BasicAnimal)
    }

    pub fn is_applied(self) -> bool {
        self == Category::AppliedHuman
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::BasicCellMolecular => "cell_molecular",
            Category::BasicAnimal => "animal",
            Category::AppliedHuman => "human",
            Category::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cell_molecular" => Ok(Category::BasicCellMolecular),
            "animal" => Ok(Category::BasicAnimal),
            "human" => Ok(Category::AppliedHuman),
            "neutral" => Ok(Category::Neutral),
            other => Err(format!("unknown category {other:?}")),
        }
    }
}

/// Subtree roots for each coded category.
///
/// An entry is either a tree number (`A11`, `B01.050`) or a term name, in
/// which case every tree number of that term becomes a root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtreeRoots {
    pub cell_molecular: Vec<String>,
    pub animal: Vec<String>,
    pub human: Vec<String>,
}

impl Default for SubtreeRoots {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        SubtreeRoots {
            cell_molecular: owned(&[
                "Cells",
                "Archaea",
                "Bacteria",
                "Viruses",
                "Molecular Structure",
                "Chemical Processes",
            ]),
            animal: owned(&["Eukaryota"]),
            human: owned(&["Humans", "Persons"]),
        }
    }
}

/// True when `s` has the shape of a tree number rather than a term name.
pub fn looks_like_tree_number(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    let rest = chars.as_str();
    !rest.is_empty()
        && rest.chars().all(|c| c.is_ascii_digit() || c == '.')
        && rest.starts_with(|c: char| c.is_ascii_digit())
        && !rest.ends_with('.')
}

/// `tree` lies in the subtree rooted at `root` (inclusive).
pub fn in_subtree(tree: &str, root: &str) -> bool {
    tree == root || (tree.starts_with(root) && tree.as_bytes().get(root.len()) == Some(&b'.'))
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ResolvedRoots {
    cell_molecular: Vec<String>,
    animal: Vec<String>,
    human: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshVocabulary {
    names: Vec<String>,
    index: HashMap<String, TermId>,
    tree_numbers: Vec<Vec<String>>,
    categories: Vec<Category>,
    excluded: Vec<bool>,
    duplicates_ignored: usize,
}

impl MeshVocabulary {
    /// Builds a vocabulary from `(term, tree_number)` pairs in file order.
    /// Term ids follow first appearance.
    pub fn from_pairs<I, S, T>(pairs: I, roots: &SubtreeRoots) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, TermId> = HashMap::new();
        let mut tree_numbers: Vec<Vec<String>> = Vec::new();
        let mut seen: HashSet<(TermId, String)> = HashSet::new();
        let mut duplicates_ignored = 0;

        for (term, tree) in pairs {
            let term = term.into();
            let tree = tree.into();
            let id = match index.get(&term) {
                Some(&id) => id,
                None => {
                    let id = names.len() as TermId;
                    index.insert(term.clone(), id);
                    names.push(term);
                    tree_numbers.push(Vec::new());
                    id
                }
            };
            if !seen.insert((id, tree.clone())) {
                duplicates_ignored += 1;
                continue;
            }
            tree_numbers[id as usize].push(tree);
        }
        if duplicates_ignored > 0 {
            warn!("ignored {duplicates_ignored} duplicate (term, tree number) pairs");
        }

        let mut vocab = MeshVocabulary {
            excluded: tree_numbers
                .iter()
                .map(|trees| !trees.iter().any(|t| in_scoring_branch(t)))
                .collect(),
            categories: vec![Category::Neutral; names.len()],
            names,
            index,
            tree_numbers,
            duplicates_ignored,
        };
        let resolved = vocab.resolve_roots(roots)?;
        vocab.categories = (0..vocab.len())
            .map(|i| vocab.categorize(i, &resolved))
            .collect();
        Ok(vocab)
    }

    fn resolve_roots(&self, roots: &SubtreeRoots) -> Result<ResolvedRoots> {
        let resolve = |label: &str, entries: &[String]| -> Result<Vec<String>> {
            let mut codes = BTreeSet::new();
            for entry in entries {
                if looks_like_tree_number(entry) {
                    codes.insert(entry.clone());
                } else if let Some(&id) = self.index.get(entry) {
                    codes.extend(self.tree_numbers[id as usize].iter().cloned());
                } else {
                    warn!("{label} root {entry:?} not found in vocabulary");
                }
            }
            if codes.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "no {label} subtree root resolved from {entries:?}"
                )));
            }
            Ok(codes.into_iter().collect())
        };
        Ok(ResolvedRoots {
            cell_molecular: resolve("cell_molecular", &roots.cell_molecular)?,
            animal: resolve("animal", &roots.animal)?,
            human: resolve("human", &roots.human)?,
        })
    }

    // Precedence: human > animal > cell/molecular > neutral.
    fn categorize(&self, i: usize, roots: &ResolvedRoots) -> Category {
        if self.excluded[i] {
            return Category::Neutral;
        }
        let trees: Vec<&str> = self.tree_numbers[i]
            .iter()
            .map(String::as_str)
            .filter(|t| in_scoring_branch(t))
            .collect();
        let hit = |codes: &[String]| {
            trees
                .iter()
                .any(|t| codes.iter().any(|root| in_subtree(t, root)))
        };
        if hit(&roots.human) {
            Category::AppliedHuman
        } else if hit(&roots.animal) {
            Category::BasicAnimal
        } else if hit(&roots.cell_molecular) {
            Category::BasicCellMolecular
        } else {
            Category::Neutral
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<TermId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: TermId) -> Result<&str> {
        self.names
            .get(id as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownTerm(id))
    }

    pub fn tree_numbers(&self, id: TermId) -> Result<&[String]> {
        self.tree_numbers
            .get(id as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownTerm(id))
    }

    /// Top-level branch letters of a term.
    pub fn branches(&self, id: TermId) -> Result<BTreeSet<char>> {
        Ok(self
            .tree_numbers(id)?
            .iter()
            .filter_map(|t| t.chars().next())
            .collect())
    }

    pub fn is_excluded(&self, id: TermId) -> Result<bool> {
        self.excluded
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownTerm(id))
    }

    pub fn classify_term(&self, id: TermId) -> Result<Category> {
        self.categories
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownTerm(id))
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn duplicates_ignored(&self) -> usize {
        self.duplicates_ignored
    }

    pub fn ids(&self) -> impl Iterator<Item = TermId> {
        0..self.names.len() as TermId
    }

    /// Writes `term_id, term, category, excluded, tree numbers` rows.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        for i in 0..self.len() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i,
                self.names[i],
                self.categories[i],
                u8::from(self.excluded[i]),
                self.tree_numbers[i].join(";")
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Reads the table produced by [`MeshVocabulary::write_tsv`].
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vocab = MeshVocabulary {
            names: Vec::new(),
            index: HashMap::new(),
            tree_numbers: Vec::new(),
            categories: Vec::new(),
            excluded: Vec::new(),
            duplicates_ignored: 0,
        };
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = n + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::parse(path, lineno, "expected 5 columns"));
            }
            let id: usize = cols[0]
                .parse()
                .map_err(|_| Error::parse(path, lineno, "bad term id"))?;
            if id != vocab.names.len() {
                return Err(Error::parse(path, lineno, "term ids must be dense and ordered"));
            }
            let category = cols[2]
                .parse::<Category>()
                .map_err(|e| Error::parse(path, lineno, e))?;
            let excluded = match cols[3] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::parse(path, lineno, "bad excluded flag")),
            };
            vocab.index.insert(cols[1].to_string(), id as TermId);
            vocab.names.push(cols[1].to_string());
            vocab.categories.push(category);
            vocab.excluded.push(excluded);
            vocab
                .tree_numbers
                .push(cols[4].split(';').map(str::to_string).collect());
        }
        Ok(vocab)
    }
}

fn in_scoring_branch(tree: &str) -> bool {
    tree.chars()
        .next()
        .is_some_and(|c| SCORING_BRANCHES.contains(&c))
}

/// Reads a `term<TAB>tree_number` file and resolves categories.
pub fn load_mesh_tree(path: &Path, roots: &SubtreeRoots) -> Result<MeshVocabulary> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(term), Some(tree), None) if !term.is_empty() && !tree.is_empty() => {
                pairs.push((term.to_string(), tree.trim_end_matches('\r').to_string()));
            }
            _ => {
                return Err(Error::parse(
                    path,
                    n + 1,
                    "expected `term<TAB>tree_number`",
                ))
            }
        }
    }
    MeshVocabulary::from_pairs(pairs, roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_pairs() -> Vec<(&'static str, &'static str)> {
        vec![
            ("Cells", "A11"),
            ("Neurons", "A11.671"),
            ("Eukaryota", "B01"),
            ("Mice", "B01.050.150.900.649.313.992.635.505.500"),
            ("Humans", "B01.050.150.900.649.313.988.400.112.400.400"),
            ("Persons", "M01"),
            ("Patients", "M01.643"),
            ("Dual Term", "B01.050.150.900.649.313.988.400.112.400.400.5"),
            ("Dual Term", "B01.050.150.900.649.313.992"),
            ("Neoplasms", "C04"),
            ("Geography", "Z01"),
            ("Bacteria", "B03"),
        ]
    }

    fn vocab() -> MeshVocabulary {
        MeshVocabulary::from_pairs(toy_pairs(), &SubtreeRoots::default()).unwrap()
    }

    fn cat(v: &MeshVocabulary, name: &str) -> Category {
        v.classify_term(v.id(name).unwrap()).unwrap()
    }

    #[test]
    fn cell_subtree_is_cell_molecular() {
        let v = vocab();
        assert_eq!(cat(&v, "Cells"), Category::BasicCellMolecular);
        assert_eq!(cat(&v, "Neurons"), Category::BasicCellMolecular);
        assert_eq!(cat(&v, "Bacteria"), Category::BasicCellMolecular);
    }

    #[test]
    fn eukaryota_without_humans_is_animal() {
        let v = vocab();
        assert_eq!(cat(&v, "Mice"), Category::BasicAnimal);
        assert_eq!(cat(&v, "Eukaryota"), Category::BasicAnimal);
    }

    #[test]
    fn human_wins_over_animal() {
        let v = vocab();
        assert_eq!(cat(&v, "Humans"), Category::AppliedHuman);
        assert_eq!(cat(&v, "Dual Term"), Category::AppliedHuman);
        assert_eq!(cat(&v, "Patients"), Category::AppliedHuman);
    }

    #[test]
    fn uncoded_is_neutral_and_outside_branch_is_excluded() {
        let v = vocab();
        assert_eq!(cat(&v, "Neoplasms"), Category::Neutral);
        let geo = v.id("Geography").unwrap();
        assert!(v.is_excluded(geo).unwrap());
        assert_eq!(v.classify_term(geo).unwrap(), Category::Neutral);
        assert!(!v.is_excluded(v.id("Neoplasms").unwrap()).unwrap());
    }

    #[test]
    fn unknown_id_is_lookup_error() {
        assert!(matches!(vocab().classify_term(999), Err(Error::UnknownTerm(999))));
    }

    #[test]
    fn dense_ids_and_duplicates() {
        let mut pairs = toy_pairs();
        pairs.push(("Cells", "A11"));
        let v = MeshVocabulary::from_pairs(pairs, &SubtreeRoots::default()).unwrap();
        assert_eq!(v.duplicates_ignored(), 1);
        assert_eq!(v.len(), 11);
        for id in v.ids() {
            assert_eq!(v.id(v.name(id).unwrap()), Some(id));
            assert!(!v.tree_numbers(id).unwrap().is_empty());
        }
        assert_eq!(v.tree_numbers(v.id("Dual Term").unwrap()).unwrap().len(), 2);
    }

    #[test]
    fn roots_may_be_codes() {
        let roots = SubtreeRoots {
            cell_molecular: vec!["C04".into()],
            animal: vec!["B01".into()],
            human: vec!["M01".into()],
        };
        let v = MeshVocabulary::from_pairs(toy_pairs(), &roots).unwrap();
        assert_eq!(cat(&v, "Neoplasms"), Category::BasicCellMolecular);
        // Humans sits under B01 and no human root covers it here.
        assert_eq!(cat(&v, "Humans"), Category::BasicAnimal);
    }

    #[test]
    fn unresolved_category_is_an_error() {
        let roots = SubtreeRoots {
            human: vec!["Martians".into()],
            ..SubtreeRoots::default()
        };
        assert!(MeshVocabulary::from_pairs(toy_pairs(), &roots).is_err());
    }

    #[test]
    fn prefix_match_respects_dot_boundary() {
        assert!(in_subtree("A11", "A11"));
        assert!(in_subtree("A11.671", "A11"));
        assert!(!in_subtree("A111", "A11"));
        assert!(looks_like_tree_number("B01.050"));
        assert!(!looks_like_tree_number("Cells"));
        assert!(!looks_like_tree_number("B"));
    }

    #[test]
    fn classification_is_idempotent() {
        let a = vocab();
        let b = vocab();
        assert_eq!(a.categories(), b.categories());
    }

    #[test]
    fn load_reports_line_of_malformed_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh_tree.tsv");
        std::fs::write(&path, "Cells\tA11\nHumans\tB01.1\nbroken line\n").unwrap();
        let err = load_mesh_tree(&path, &SubtreeRoots::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let v = vocab();
        v.write_tsv(&path).unwrap();
        let back = MeshVocabulary::read_tsv(&path).unwrap();
        assert_eq!(back.names, v.names);
        assert_eq!(back.categories, v.categories);
        assert_eq!(back.excluded, v.excluded);
        assert_eq!(back.tree_numbers, v.tree_numbers);
    }
}
