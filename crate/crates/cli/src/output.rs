//! Output files: CSV with a config echo in `#` comment lines, and a JSON
//! mirror carrying the same metadata. Every file is written to a temporary
//! sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

/// Metadata echoed into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &str, config: Value) -> Self {
        Meta { tool: "teamcomm", version: env!("CARGO_PKG_VERSION"), command: command.into(), config }
    }
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub meta: Meta,
    pub written: Vec<PathBuf>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

impl Sink {
    pub fn new(dir: PathBuf, format: Format, meta: Meta) -> Self {
        Sink { dir, format, meta, written: Vec::new() }
    }

    fn header(&self) -> String {
        format!(
            "# {} {} {}\n# config: {}\n",
            self.meta.tool,
            self.meta.version,
            self.meta.command,
            serde_json::to_string(&self.meta.config).expect("config serializes")
        )
    }

    /// Writes `<name>.csv` and/or `<name>.json` depending on the format.
    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if matches!(self.format, Format::Csv | Format::Both) {
            let mut w = csv::Writer::from_writer(self.header().into_bytes());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv flush: {e}"))?;
            self.put(&format!("{name}.csv"), &bytes)?;
        }
        if matches!(self.format, Format::Json | Format::Both) {
            self.json(name, &rows)?;
        }
        Ok(())
    }

    /// Writes `<name>.json` regardless of the CSV setting.
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, data: &T) -> Result<()> {
        let doc = json!({ "meta": self.meta, "data": data });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.put(&format!("{name}.json"), text.as_bytes())
    }

    fn put(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(file);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}
