//! Table assembly and CSV/JSON emission.

use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig, CONFIG_PREFIX};

/// Quotes a CSV field when it holds a comma or quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A command's result: a table plus free-form notes.
#[derive(Debug, Default)]
pub struct Report {
    pub notes: Vec<String>,
    pub header: String,
    pub csv_rows: Vec<String>,
    pub json_rows: Vec<Value>,
    /// Extra top-level JSON fields.
    pub extra: serde_json::Map<String, Value>,
    /// False when the command ran but its checks did not hold.
    pub ok: bool,
}

impl Report {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            ok: true,
            ..Default::default()
        }
    }

    pub fn push(&mut self, csv: String, json: impl Serialize) -> Result<()> {
        self.csv_rows.push(csv);
        self.json_rows.push(serde_json::to_value(json)?);
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn render(&self, config: &RunConfig) -> Result<String> {
        Ok(match config.format() {
            Format::Csv => {
                let mut out = format!("{CONFIG_PREFIX}{}\n", config.echo());
                for line in &self.notes {
                    out.push_str("# ");
                    out.push_str(line);
                    out.push('\n');
                }
                out.push_str(&self.header);
                out.push('\n');
                for row in &self.csv_rows {
                    out.push_str(row);
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let mut doc = serde_json::Map::new();
                doc.insert("config".into(), serde_json::to_value(config)?);
                doc.insert("notes".into(), serde_json::to_value(&self.notes)?);
                doc.extend(self.extra.clone());
                doc.insert("rows".into(), Value::Array(self.json_rows.clone()));
                serde_json::to_string_pretty(&Value::Object(doc))? + "\n"
            }
        })
    }

    pub fn emit(&self, config: &RunConfig) -> Result<()> {
        let text = self.render(config)?;
        match &config.output {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}
