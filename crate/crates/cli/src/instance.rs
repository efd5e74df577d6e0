use anyhow::{Context, Result};
use lipsel::SelectionProblem;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

/// An instance on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: String,
    pub problem: SelectionProblem,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn new(problem: SelectionProblem, seed: Option<u64>) -> Self {
        InstanceFile {
            schema_version: SCHEMA_VERSION.into(),
            problem,
            seed,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let inst: InstanceFile = serde_json::from_str(text)?;
        anyhow::ensure!(
            inst.schema_version == SCHEMA_VERSION,
            "unsupported schema_version {:?}",
            inst.schema_version
        );
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(lipsel::json::to_string_pretty(self)? + "\n")
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it over
/// `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = lipsel::json::to_string_pretty(value)? + "\n";
    write_atomic(path, text.as_bytes())
}
