use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// File-name-safe form of a provider id.
pub fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

pub struct Table {
    pub file: String,
    pub description: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, description: impl Into<String>, header: &[&str]) -> Self {
        Self {
            file: file.into(),
            description: description.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(file: impl Into<String>, description: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            file: file.into(),
            description: description.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileEntry {
    file: String,
    description: String,
    rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CommandEntry {
    parameters: BTreeMap<String, String>,
    files: Vec<FileEntry>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    commands: BTreeMap<String, CommandEntry>,
}

/// Output directory for one subcommand run. Every table starts with `#`
/// comment lines naming the table, the cost unit and the run parameters.
pub struct Output {
    root: PathBuf,
    command: String,
    parameters: BTreeMap<String, String>,
    files: Vec<FileEntry>,
}

fn internal(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("cannot write {}: {e}", path.display()))
}

impl Output {
    pub fn create(root: &Path, command: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| internal(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_owned(),
            parameters: BTreeMap::new(),
            files: Vec::new(),
        })
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_owned(), value.to_string());
    }

    pub fn write(&mut self, table: Table) -> Result<(), CliError> {
        let path = self.root.join(&table.file);
        let mut buf = Vec::new();
        writeln!(buf, "# table: {}", table.description).unwrap();
        for (k, v) in &self.parameters {
            writeln!(buf, "# {k}: {v}").unwrap();
        }
        {
            let mut wtr = csv::Writer::from_writer(&mut buf);
            wtr.write_record(&table.header).map_err(|e| internal(&path, e))?;
            for row in &table.rows {
                wtr.write_record(row).map_err(|e| internal(&path, e))?;
            }
            wtr.flush().map_err(|e| internal(&path, e))?;
        }
        fs::write(&path, buf).map_err(|e| internal(&path, e))?;
        tracing::info!(file = %path.display(), rows = table.rows.len(), "table written");
        self.files.push(FileEntry {
            file: table.file,
            description: table.description,
            rows: table.rows.len(),
        });
        Ok(())
    }

    pub fn write_raw(&mut self, file: &str, description: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(file);
        fs::write(&path, bytes).map_err(|e| internal(&path, e))?;
        self.files.push(FileEntry {
            file: file.to_owned(),
            description: description.to_owned(),
            rows: 0,
        });
        Ok(())
    }

    /// Records this run in `manifest.json`, keeping entries of other
    /// subcommands already present.
    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        let path = self.root.join("manifest.json");
        let mut manifest: Manifest = fs::read(&path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default();
        let written = self.files.iter().map(|f| self.root.join(&f.file)).collect();
        manifest.commands.insert(
            self.command,
            CommandEntry {
                parameters: self.parameters,
                files: self.files,
            },
        );
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| internal(&path, e))?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| internal(&path, e))?;
        Ok(written)
    }
}
