use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use ser_core::Result;

/// Output directory that records every file written into it.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: Option<u64>,
    config_file: Option<String>,
    files: &'a [String],
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing and records it in the manifest.
    pub fn create_file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut f = self.create_file(name)?;
        f.write_all(bytes)?;
        f.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serializable value");
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `run_manifest.json` listing the produced files.
    pub fn finish(mut self, command: &str, seed: Option<u64>, config_file: Option<&Path>) -> Result<PathBuf> {
        let files = std::mem::take(&mut self.files);
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_file: config_file.map(|p| p.display().to_string()),
            files: &files,
        };
        let path = self.root.join("run_manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializable manifest"))?;
        Ok(path)
    }
}
