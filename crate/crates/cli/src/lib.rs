//! Staged, file-based analysis pipeline. Each stage reads the previous
//! stage's artifacts from the output directory and writes its own, so the
//! human labeling loop can happen between `sample` and `classify`.

pub mod config;
pub mod report;
pub mod stages;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::Config;

/// Stage failures, mapped to process exit codes by the binary:
/// config problems exit 1, missing prerequisite artifacts exit 2, other
/// stage errors exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    MissingArtifact {
        path: PathBuf,
        produced_by: &'static str,
    },
    Stage {
        stage: &'static str,
        message: String,
    },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::MissingArtifact { path, produced_by } => write!(
                f,
                "missing artifact {}: run the `{produced_by}` stage first",
                path.display()
            ),
            CliError::Stage { stage, message } => write!(f, "[{stage}] {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::MissingArtifact { .. } => 2,
            CliError::Stage { .. } => 1,
        }
    }

    pub fn stage(stage: &'static str, err: impl std::fmt::Display) -> CliError {
        CliError::Stage {
            stage,
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// FNV-1a over a byte string; used for config digests and sub-seeds.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

/// Derives a deterministic sub-seed from the root seed and a purpose tag.
pub fn sub_seed(root: u64, tag: &str) -> u64 {
    root ^ fnv64(tag.as_bytes()).rotate_left(17)
}

/// Writes an artifact with the config digest as its first (comment) line.
pub fn write_artifact(path: &Path, digest: &str, body: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::stage("io", format!("creating {}: {e}", parent.display())))?;
    }
    let content = format!("# config_digest: {digest}\n{body}");
    std::fs::write(path, content)
        .map_err(|e| CliError::stage("io", format!("writing {}: {e}", path.display())))
}

/// Reads an artifact produced by an earlier stage; a missing file becomes a
/// dependency error naming the stage to run.
pub fn read_artifact(path: &Path, produced_by: &'static str) -> CliResult<String> {
    if !path.exists() {
        return Err(CliError::MissingArtifact {
            path: path.to_path_buf(),
            produced_by,
        });
    }
    std::fs::read_to_string(path)
        .map_err(|e| CliError::stage("io", format!("reading {}: {e}", path.display())))
}

/// Reads a user-supplied input file (config-referenced), exit-1 on absence.
pub fn read_input(path: &Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {what} file {}: {e}", path.display())))
}
