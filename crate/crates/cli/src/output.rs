//! Output files. All files of a run are staged next to their targets and
//! renamed into place only after every one of them was written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata stamped on every output file.
pub fn meta(command: &str, params: &Value) -> Value {
    json!({
        "tool": "isoprofile",
        "version": VERSION,
        "command": command,
        "params": params,
    })
}

/// Prefixes a CSV body with `#` comment lines holding the metadata.
pub fn csv_with_header(meta: &Value, body: &str) -> String {
    let mut out = format!(
        "# isoprofile {VERSION}\n# {}\n",
        serde_json::to_string(meta).expect("json value")
    );
    out.push_str(body);
    out
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
            let written = fs::File::create(&tmp).and_then(|mut f| {
                f.write_all(bytes)?;
                f.sync_all()
            });
            staged.push((tmp, dir.join(name)));
            if let Err(e) = written {
                discard(&staged);
                return Err(e.into());
            }
        }
        for (tmp, target) in &staged {
            if let Err(e) = fs::rename(tmp, target) {
                discard(&staged);
                return Err(e.into());
            }
        }
        Ok(staged.into_iter().map(|(_, t)| t).collect())
    }
}

fn discard(staged: &[(PathBuf, PathBuf)]) {
    for (tmp, _) in staged {
        let _ = fs::remove_file(tmp);
    }
}
