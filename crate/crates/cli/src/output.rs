//! Output directory handling: atomic writes and reuse of matching results.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use robust_shrink::dataset::PlayerRecord;
use robust_shrink::error::{Error, Result};
use robust_shrink::mcmc::write_trace;
use robust_shrink::models::{ModelResult, Registry};
use serde::Serialize;

use crate::config::RunConfig;

pub struct Outputs {
    root: PathBuf,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `bytes` to `path` through a sibling temp file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    file.write_all(bytes)
        .and_then(|()| file.sync_all())
        .map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(name), bytes)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, &to_json(value)?)
    }

    /// The result of model `id`, read from `model_<id>/` when its
    /// `config.json` matches `config`, otherwise computed and written.
    pub fn model_result(
        &self,
        registry: &Registry,
        id: &str,
        players: &[PlayerRecord],
        config: &RunConfig,
    ) -> Result<ModelResult> {
        let dir = self.path(&format!("model_{id}"));
        let config_json = to_json(config)?;
        if let Some(cached) = Self::reusable(&dir, &config_json) {
            return Ok(cached);
        }
        let output = registry.get(id)?.estimate(players, &config.settings)?;
        if let Some(run) = &output.run {
            let mut csv = Vec::new();
            write_trace(&run.trace, &mut csv)?;
            write_atomic(&dir.join("trace.csv"), &csv)?;
        }
        write_atomic(&dir.join("result.json"), &to_json(&output.result)?)?;
        // Written last, so a present config.json marks a complete directory.
        write_atomic(&dir.join("config.json"), &config_json)?;
        Ok(output.result)
    }

    fn reusable(dir: &Path, config_json: &[u8]) -> Option<ModelResult> {
        let existing = fs::read(dir.join("config.json")).ok()?;
        if existing != config_json {
            return None;
        }
        let text = fs::read_to_string(dir.join("result.json")).ok()?;
        serde_json::from_str(&text).ok()
    }
}
