//! Artifact writing. Every artifact carries the run's config hash: JSON
//! files as a leading `config_hash` field, text files as a first
//! `# config_hash=` line. Wall-clock times go only to `run_metadata.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            hash,
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    /// `body` must serialize as a JSON object.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let hash = self.hash.clone();
        let stamped = Stamped {
            config_hash: &hash,
            body,
        };
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &stamped)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Text artifact; `fill` writes everything after the hash line.
    pub fn text<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let hash = self.hash.clone();
        let mut w = self.create(name)?;
        writeln!(w, "# config_hash={hash}")?;
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Raw file without a hash line, for formats other tools parse
    /// strictly. Its provenance lives in a JSON sidecar.
    pub fn plain<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let mut w = self.create(name)?;
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `run_metadata.json`, the one file with wall-clock content.
    pub fn metadata<C: Serialize>(
        &mut self,
        subcommand: &str,
        config: &C,
        started: chrono::DateTime<chrono::Utc>,
    ) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Meta<'a, C: Serialize> {
            config_hash: &'a str,
            subcommand: &'a str,
            version: &'a str,
            threads: usize,
            started_at: String,
            finished_at: String,
            artifacts: &'a [String],
            config: &'a C,
        }
        let meta = Meta {
            config_hash: &self.hash,
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            started_at: started.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            artifacts: &self.written,
            config,
        };
        let mut w = BufWriter::new(File::create(self.dir.join("run_metadata.json"))?);
        serde_json::to_writer_pretty(&mut w, &meta)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
