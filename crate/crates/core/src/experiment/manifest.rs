//! Tab-separated dataset manifests: `path<TAB>class[<TAB>extra]`.
//!
//! A third column of `train`, `test` or `evaluate` assigns the split; any
//! other third column (such as a recording id) is ignored and the entry is
//! treated as training data. Blank lines and `#` comments are skipped.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub class_name: String,
    pub split: Split,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Sorted; a class's label is its index here.
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if let Some(first) = seen.insert(&e.path, i) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate path {} (entries {} and {})",
                    e.path.display(),
                    first + 1,
                    i + 1
                )));
            }
        }
        let class_names = entries
            .iter()
            .map(|e| e.class_name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            entries,
            class_names,
        })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut entries = Vec::new();
        let mut lines_of: HashMap<PathBuf, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(err(line_no, "expected <path> TAB <class>".into()));
            }
            let path = PathBuf::from(fields[0]);
            if let Some(first) = lines_of.insert(path.clone(), line_no) {
                return Err(err(
                    line_no,
                    format!("duplicate path {} (first on line {first})", fields[0]),
                ));
            }
            let split = match fields.get(2).map(|s| s.to_ascii_lowercase()) {
                Some(s) if s == "test" || s == "evaluate" => Split::Test,
                _ => Split::Train,
            };
            entries.push(ManifestEntry {
                path,
                class_name: fields[1].to_string(),
                split,
            });
        }
        Self::from_entries(entries)
    }

    pub fn label_of(&self, class_name: &str) -> Option<usize> {
        self.class_names
            .binary_search_by(|c| c.as_str().cmp(class_name))
            .ok()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|e| {
                self.label_of(&e.class_name)
                    .expect("class list covers entries")
            })
            .collect()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Fails on the first entry whose audio file is missing under `root`.
    pub fn check_paths(&self, root: &Path) -> Result<()> {
        for e in &self.entries {
            let p = root.join(&e.path);
            if !p.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("audio file {} not found", p.display()),
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in &self.entries {
            let split = match e.split {
                Split::Train => "train",
                Split::Test => "test",
            };
            writeln!(f, "{}\t{}\t{split}", e.path.display(), e.class_name)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Reads and parses a manifest file.
pub fn ingest(manifest_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = manifest_path.as_ref();
    let text = std::fs::read_to_string(path)?;
    DatasetManifest::parse(&text, path)
}
