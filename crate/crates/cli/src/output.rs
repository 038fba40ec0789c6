//! Artifact writers. Every file starts with a metadata block.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub tolerances: Vec<(&'static str, f64)>,
    pub notes: Vec<String>,
}

impl Meta {
    pub fn new(
        command: &'static str,
        config: &impl Serialize,
        tolerances: Vec<(&'static str, f64)>,
    ) -> Self {
        Self {
            tool: "nhph",
            version: VERSION,
            command,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            tolerances,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json(
        &self,
        name: &str,
        meta: &Meta,
        body: &impl Serialize,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&Document { meta, body })
            .map_err(|e| CliError::Other(format!("serializing {name}: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn csv(
        &self,
        name: &str,
        meta: &Meta,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut out = Vec::new();
        let config = serde_json::to_string(&meta.config).unwrap_or_default();
        let tolerances: Vec<String> = meta
            .tolerances
            .iter()
            .map(|(k, v)| format!("{k}={v:e}"))
            .collect();
        let mut lines = vec![
            format!("# {} {}", meta.tool, meta.version),
            format!("# command: {}", meta.command),
            format!("# config: {config}"),
            format!("# tolerances: {}", tolerances.join(" ")),
        ];
        lines.extend(meta.notes.iter().map(|n| format!("# note: {n}")));
        lines.push(header.join(","));
        lines.extend(rows.iter().map(|r| r.join(",")));
        for line in lines {
            writeln!(out, "{line}").expect("writing to memory");
        }
        fs::write(&path, out).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
