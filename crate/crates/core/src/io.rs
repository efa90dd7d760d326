//! Artifact headers and file helpers shared by every on-disk format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Header lines are `# ` prefixed and only appear before the data.
pub fn is_header_line(line: &str) -> bool {
    line.starts_with("# ") || line == "#"
}

/// Provenance block written at the top of every artifact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub tool: String,
    pub seed: u64,
    /// Serialized `key=value` configuration, one entry per line.
    pub config: String,
}

impl ArtifactHeader {
    pub fn new(seed: u64, config: impl Into<String>) -> Self {
        ArtifactHeader {
            tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            seed,
            config: config.into(),
        }
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.config.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# tool={}", self.tool)?;
        writeln!(w, "# config_hash={}", self.config_hash())?;
        writeln!(w, "# seed={}", self.seed)?;
        for line in self.config.lines() {
            writeln!(w, "# config: {line}")?;
        }
        Ok(())
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::file(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}
