//! Plain-text `key = value` pipeline configuration.

use std::path::{Path, PathBuf};

use crate::bins::BinningSpec;
use crate::corpus::SubtreeRoots;
use crate::embed::EmbeddingParams;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Input paths; `None` means the file `synth` writes under `<out>/input/`.
    pub mesh_tree: Option<PathBuf>,
    pub papers: Option<PathBuf>,
    pub citations: Option<PathBuf>,
    pub journal_fields: Option<PathBuf>,
    pub out: PathBuf,
    pub from: i32,
    pub to: i32,
    pub window: u32,
    pub roots: SubtreeRoots,
    pub dim: usize,
    pub negatives: usize,
    pub samples: Option<u64>,
    pub initial_rate: f64,
    pub noise_exponent: f64,
    pub bin_width: f64,
    pub sample_fraction: f64,
    pub histogram_width: f64,
    pub n_perm: usize,
    pub sample_pairs: usize,
    pub null_replicates: usize,
    /// Term names for `analyze trajectory`; empty means every scored term.
    pub trajectory_terms: Vec<String>,
    pub synth_papers: usize,
    pub synth_mixing: f64,
    pub seed: u64,
    /// 0 uses every available core.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let e = EmbeddingParams::default();
        PipelineConfig {
            mesh_tree: None,
            papers: None,
            citations: None,
            journal_fields: None,
            out: PathBuf::from("out"),
            from: 1980,
            to: 2013,
            window: 5,
            roots: SubtreeRoots::default(),
            dim: e.dim,
            negatives: e.negatives,
            samples: None,
            initial_rate: e.initial_rate,
            noise_exponent: e.noise_exponent,
            bin_width: 0.1,
            sample_fraction: 0.01,
            histogram_width: 0.02,
            n_perm: 10_000,
            sample_pairs: 10_000,
            null_replicates: 100,
            trajectory_terms: Vec::new(),
            synth_papers: 5000,
            synth_mixing: 0.1,
            seed: 1,
            threads: 0,
        }
    }
}

fn join_list(xs: &[String]) -> String {
    xs.join(";")
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.window < 1 {
            return bad("window must be >= 1".into());
        }
        if self.from > self.to {
            return bad(format!("empty year range {}..{}", self.from, self.to));
        }
        for (name, roots) in [
            ("roots.cell_molecular", &self.roots.cell_molecular),
            ("roots.animal", &self.roots.animal),
            ("roots.human", &self.roots.human),
        ] {
            if roots.is_empty() {
                return bad(format!("{name} needs at least one root"));
            }
        }
        self.embedding_params(0).validate()?;
        BinningSpec::new(self.bin_width)?;
        BinningSpec::new(self.histogram_width)?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return bad(format!("sample_fraction {} outside (0, 1]", self.sample_fraction));
        }
        if self.n_perm == 0 || self.sample_pairs == 0 {
            return bad("n_perm and sample_pairs must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.synth_mixing) {
            return bad(format!("synth_mixing {} outside [0, 1]", self.synth_mixing));
        }
        Ok(())
    }

    /// Worker count after resolving 0 to the machine's parallelism.
    pub fn worker_threads(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }

    pub fn embedding_params(&self, seed: u64) -> EmbeddingParams {
        EmbeddingParams {
            dim: self.dim,
            total_samples: self.samples,
            negatives: self.negatives,
            initial_rate: self.initial_rate,
            noise_exponent: self.noise_exponent,
            seed,
            threads: self.worker_threads(),
        }
    }

    pub fn bins(&self) -> Result<BinningSpec> {
        BinningSpec::new(self.bin_width)
    }

    pub fn input_dir(&self) -> PathBuf {
        self.out.join("input")
    }

    pub fn to_text(&self) -> String {
        let pairs: Vec<(&str, String)> = vec![
            ("mesh_tree", opt_path(&self.mesh_tree)),
            ("papers", opt_path(&self.papers)),
            ("citations", opt_path(&self.citations)),
            ("journal_fields", opt_path(&self.journal_fields)),
            ("out", self.out.display().to_string()),
            ("from", self.from.to_string()),
            ("to", self.to.to_string()),
            ("window", self.window.to_string()),
            ("roots.cell_molecular", join_list(&self.roots.cell_molecular)),
            ("roots.animal", join_list(&self.roots.animal)),
            ("roots.human", join_list(&self.roots.human)),
            ("dim", self.dim.to_string()),
            ("negatives", self.negatives.to_string()),
            ("samples", self.samples.map(|s| s.to_string()).unwrap_or_default()),
            ("initial_rate", self.initial_rate.to_string()),
            ("noise_exponent", self.noise_exponent.to_string()),
            ("bin_width", self.bin_width.to_string()),
            ("sample_fraction", self.sample_fraction.to_string()),
            ("histogram_width", self.histogram_width.to_string()),
            ("n_perm", self.n_perm.to_string()),
            ("sample_pairs", self.sample_pairs.to_string()),
            ("null_replicates", self.null_replicates.to_string()),
            ("trajectory_terms", join_list(&self.trajectory_terms)),
            ("synth_papers", self.synth_papers.to_string()),
            ("synth_mixing", self.synth_mixing.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
        ];
        let mut s = String::new();
        for (k, v) in pairs {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// Applies `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored; unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected `key = value`", n + 1)))?;
            c.set(k.trim(), v.trim())
                .map_err(|e| Error::InvalidArgument(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("`{key}`: cannot parse `{v}`")))
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "mesh_tree" => self.mesh_tree = path(v),
            "papers" => self.papers = path(v),
            "citations" => self.citations = path(v),
            "journal_fields" => self.journal_fields = path(v),
            "out" => self.out = PathBuf::from(v),
            "from" => self.from = num(key, v)?,
            "to" => self.to = num(key, v)?,
            "window" => self.window = num(key, v)?,
            "roots.cell_molecular" => self.roots.cell_molecular = split_list(v),
            "roots.animal" => self.roots.animal = split_list(v),
            "roots.human" => self.roots.human = split_list(v),
            "dim" => self.dim = num(key, v)?,
            "negatives" => self.negatives = num(key, v)?,
            "samples" => self.samples = if v.is_empty() { None } else { Some(num(key, v)?) },
            "initial_rate" => self.initial_rate = num(key, v)?,
            "noise_exponent" => self.noise_exponent = num(key, v)?,
            "bin_width" => self.bin_width = num(key, v)?,
            "sample_fraction" => self.sample_fraction = num(key, v)?,
            "histogram_width" => self.histogram_width = num(key, v)?,
            "n_perm" => self.n_perm = num(key, v)?,
            "sample_pairs" => self.sample_pairs = num(key, v)?,
            "null_replicates" => self.null_replicates = num(key, v)?,
            "trajectory_terms" => self.trajectory_terms = split_list(v),
            "synth_papers" => self.synth_papers = num(key, v)?,
            "synth_mixing" => self.synth_mixing = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        let text = c.to_text();
        assert_eq!(PipelineConfig::parse(&text).unwrap(), c);
        assert_eq!(PipelineConfig::parse(&text).unwrap().to_text(), text);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let c = PipelineConfig::parse("# comment\n\nwindow = 3\nroots.human = Humans ; M01\nsamples=500\n").unwrap();
        assert_eq!(c.window, 3);
        assert_eq!(c.roots.human, vec!["Humans", "M01"]);
        assert_eq!(c.samples, Some(500));
        assert_eq!(c.from, 1980);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PipelineConfig::parse("colour = red").is_err());
        assert!(PipelineConfig::parse("window").is_err());
        assert!(PipelineConfig::parse("dim = ten").is_err());
        let c = PipelineConfig { window: 0, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.roots.animal.clear();
        assert!(c.validate().is_err());
        let c = PipelineConfig { from: 2000, to: 1999, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn serialize_parse_serialize_is_identity(
            from in 1900i32..2000, span in 0i32..40, window in 1u32..10,
            rate in 1e-4f64..1.0, frac in 0.001f64..1.0, seed in any::<u64>(),
            samples in proptest::option::of(1u64..1_000_000),
            terms in prop::collection::vec("[A-Za-z][A-Za-z ,]{0,12}[A-Za-z]", 0..4),
        ) {
            let mut c = PipelineConfig {
                from,
                to: from + span,
                window,
                initial_rate: rate,
                sample_fraction: frac,
                ..PipelineConfig::default()
            };
            c.seed = seed;
            c.samples = samples;
            c.trajectory_terms = terms;
            c.papers = Some(PathBuf::from("data/papers.jsonl"));
            let text = c.to_text();
            let back = PipelineConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
