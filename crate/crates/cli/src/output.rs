use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes result files into one directory. Every CSV starts with a comment
/// line naming the crate version and the config digest.
pub struct OutputDir {
    dir: PathBuf,
    header: String,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, digest: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), header: format!("# qqft {} config={digest}", qqft::VERSION), written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut file = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(file, "{}", self.header)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file);
        if !columns.is_empty() {
            w.write_record(columns)?;
        }
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -3.5e-17, std::f64::consts::PI, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "");
    }
}
