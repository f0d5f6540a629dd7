use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Journal → research fields. Journals without an entry are simply absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JournalFieldMap {
    entries: BTreeMap<String, Vec<String>>,
}

impl JournalFieldMap {
    pub fn insert(&mut self, journal: impl Into<String>, field: impl Into<String>) {
        let fields = self.entries.entry(journal.into()).or_default();
        let field = field.into();
        if !fields.contains(&field) {
            fields.push(field);
        }
    }

    /// Fields of `journal`; empty when the journal is unknown.
    pub fn fields(&self, journal: &str) -> &[String] {
        self.entries.get(journal).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, journal: &str) -> bool {
        self.entries.contains_key(journal)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .flat_map(|(j, fs)| fs.iter().map(move |f| (j.as_str(), f.as_str())))
    }
}

pub fn load_journal_fields(path: &Path) -> Result<JournalFieldMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = JournalFieldMap::default();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(j), Some(f), None) if !j.is_empty() && !f.trim_end().is_empty() => {
                map.insert(j, f.trim_end())
            }
            _ => return Err(Error::parse(path, n + 1, "expected `journal<TAB>field`")),
        }
    }
    Ok(map)
}
