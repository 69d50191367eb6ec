//! Config hashing and the per-run sidecar log.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use deepfake_ballistics::TOOLKIT_VERSION;

use crate::error::CliResult;

pub const TOOLKIT_NAME: &str = "deepfake-ballistics";

/// What gets stamped into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub toolkit: String,
    pub toolkit_version: String,
    pub config_hash: String,
}

impl Provenance {
    /// Hashes the command name and its output-independent settings, so
    /// the same run written to another location carries the same hash.
    pub fn new<C: Serialize>(command: &str, config: &C) -> Self {
        let canonical = serde_json::to_string(&(command, config)).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Self {
            toolkit: TOOLKIT_NAME.to_string(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config_hash: hex::encode(&digest[..8]),
        }
    }

    /// `toolkit=NAME/VERSION config_hash=HASH`, used as a CSV comment line.
    pub fn comment(&self) -> String {
        format!(
            "toolkit={}/{} config_hash={}",
            self.toolkit, self.toolkit_version, self.config_hash
        )
    }

    pub fn as_map(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("toolkit".to_string(), self.toolkit.clone()),
            ("toolkit_version".to_string(), self.toolkit_version.clone()),
            ("config_hash".to_string(), self.config_hash.clone()),
        ])
    }
}

/// Sidecar next to a file artifact: `out.csv` logs to `out.csv.log`.
pub fn log_path_for_file(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".log");
    out.with_file_name(name)
}

/// Writes the resolved configuration, seed and wall-clock time. This is
/// the only place a timestamp is recorded, which keeps the primary
/// artifacts byte-identical across reruns.
pub fn write_log(
    path: &Path,
    command: &str,
    full_config: &dyn std::fmt::Debug,
    provenance: &Provenance,
    seed: Option<u64>,
) -> CliResult<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = format!(
        "timestamp_unix={secs}\ncommand={command}\n{}\nworkers={}\n",
        provenance.comment(),
        rayon::current_num_threads()
    );
    if let Some(s) = seed {
        text.push_str(&format!("seed={s}\n"));
    }
    text.push_str(&format!("config={full_config:?}\n"));
    fs::write(path, text)?;
    Ok(())
}
