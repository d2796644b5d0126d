//! Manifests and byte-stable CSV/JSON writers.
//!
//! Data files embed the deterministic part of the run manifest (command,
//! resolved parameters, tool version, truncation, max deficit). Wall time
//! and thread count go only into the `<out>.manifest.json` sidecar so that
//! reruns produce identical data bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (csv|json)")),
        }
    }
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub tool_version: String,
    pub truncation_dim: Option<usize>,
    pub max_deficit: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            tool_version: TOOL_VERSION.to_string(),
            truncation_dim: None,
            max_deficit: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn header_line(&self) -> String {
        format!("# {}\n", serde_json::to_string(self).expect("serializable"))
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    wall_time_s: f64,
    threads: usize,
    data_file: String,
}

/// 17 significant digits, scientific.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `body` to `out` (or stdout) and the sidecar manifest next to it.
pub fn emit(out: Option<&Path>, body: &str, manifest: &RunManifest, wall: Duration) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
        Some(path) => {
            std::fs::write(path, body)?;
            let sidecar = Sidecar {
                manifest,
                wall_time_s: wall.as_secs_f64(),
                threads: current_threads(),
                data_file: path.display().to_string(),
            };
            let mut text = serde_json::to_string_pretty(&sidecar)?;
            text.push('\n');
            std::fs::write(sidecar_path(path), text)?;
        }
    }
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(sci(0.5), "5.0000000000000000e-1");
        for x in [2.0e-13, 1.0 / 3.0, 2.738_993_880_093_841e-13, f64::MIN_POSITIVE] {
            assert_eq!(sci(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(sci(0.1), "1.0000000000000001e-1");
        assert_eq!(sci(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn header_is_one_comment_line() {
        let mut m = RunManifest::new("ber-curve");
        m.param("beta", 20.0).param("n-max", 100);
        let h = m.header_line();
        assert!(h.starts_with("# {"));
        assert_eq!(h.matches('\n').count(), 1);
        assert!(h.contains("\"n-max\":100"));
    }
}
