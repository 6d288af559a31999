//! Output staging. A command writes into a hidden sibling of `--out` and
//! the directory is renamed into place only after its manifest is written.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use socialkc::manifest::{RunManifest, MANIFEST_FILE};

pub struct Run {
    out: PathBuf,
    stage: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    /// Checks `out`, records the input digests and opens a fresh staging
    /// directory. `out` may be missing, empty, or a previous run's output.
    pub fn begin(manifest: RunManifest, out: &Path, inputs: &[(&str, &Path)]) -> Result<Self> {
        for (role, path) in inputs {
            if !path.exists() {
                bail!("{role} input {} does not exist", path.display());
            }
        }
        if out.exists() {
            if !out.is_dir() {
                bail!("output {} exists and is not a directory", out.display());
            }
            let empty = std::fs::read_dir(out)?.next().is_none();
            if !empty && !out.join(MANIFEST_FILE).is_file() {
                bail!(
                    "output {} is a non-empty directory without a {MANIFEST_FILE}; refusing to replace it",
                    out.display()
                );
            }
        }
        let name = out
            .file_name()
            .with_context(|| format!("output path {} has no final component", out.display()))?
            .to_string_lossy()
            .into_owned();
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)
            .with_context(|| format!("creating {}", parent.display()))?;
        let stage = parent.join(format!(".{name}.partial"));
        if stage.exists() {
            std::fs::remove_dir_all(&stage)
                .with_context(|| format!("clearing stale {}", stage.display()))?;
        }
        std::fs::create_dir(&stage).with_context(|| format!("creating {}", stage.display()))?;

        let mut manifest = manifest;
        for (role, path) in inputs {
            manifest.record_input(role, path)?;
        }
        Ok(Run {
            out: out.to_path_buf(),
            stage,
            manifest,
        })
    }

    /// Staging path for an output; recorded in the manifest relative to `--out`.
    pub fn output(&mut self, relative: &str) -> PathBuf {
        self.manifest.record_output(relative);
        self.stage.join(relative)
    }

    pub fn finish(self) -> Result<PathBuf> {
        self.manifest.clone().finish(&self.stage)?;
        if self.out.exists() {
            std::fs::remove_dir_all(&self.out)
                .with_context(|| format!("replacing {}", self.out.display()))?;
        }
        std::fs::rename(&self.stage, &self.out)
            .with_context(|| format!("moving results into {}", self.out.display()))?;
        info!("wrote {}", self.out.display());
        Ok(self.out.join(MANIFEST_FILE))
    }
}

impl Drop for Run {
    fn drop(&mut self) {
        // a command that failed leaves nothing behind
        let _ = std::fs::remove_dir_all(&self.stage);
    }
}
