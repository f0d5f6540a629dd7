//! Vocabulary, paper, citation and journal-field ingestion.

pub mod citations;
pub mod journals;
pub mod mesh;
pub mod papers;
pub mod synth;

pub use citations::{load_citations, CitationStats};
pub use journals::{load_journal_fields, JournalFieldMap};
pub use mesh::{load_mesh_tree, Category, MeshVocabulary, SubtreeRoots, TermId};
pub use papers::{majority_rule, parse_papers, weber_category, IngestStats, PaperRecord, WeberCategory};
pub use synth::{generate_synthetic_corpus, Community, SynthSpec, SyntheticCorpus, TermMix};
