//! Plain CSV with a leading `# manifest=<hash>` comment and fixed 17-significant-digit floats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use kinwave::{Error, Result};

pub const MANIFEST_PREFIX: &str = "# manifest=";

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

pub fn write_csv<I>(path: &Path, manifest_hash: Option<&str>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::new();
    if let Some(hash) = manifest_hash {
        body.push_str(MANIFEST_PREFIX);
        body.push_str(hash);
        body.push('\n');
    }
    body.push_str(&header.join(","));
    body.push('\n');
    out.write_all(body.as_bytes()).map_err(|e| io_error(path, e))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt17).collect();
        writeln!(out, "{}", line.join(",")).map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub manifest_hash: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut manifest_hash = None;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if let Some(hash) = line.strip_prefix(MANIFEST_PREFIX) {
            manifest_hash = Some(hash.trim().to_string());
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        match &header {
            None => header = Some(line.split(',').map(|s| s.trim().to_string()).collect()),
            Some(h) => {
                let row: Vec<f64> = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: format!("{}: {e}", path.display()),
                    })?;
                if row.len() != h.len() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("{}: expected {} columns, got {}", path.display(), h.len(), row.len()),
                    });
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or_else(|| Error::Input(format!("{}: no header line", path.display())))?;
    Ok(Table {
        manifest_hash,
        header,
        rows,
    })
}
