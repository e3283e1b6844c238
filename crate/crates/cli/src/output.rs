//! Number formatting, manifests and the single output writer.
//!
//! Floats are written in shortest round-trip form everywhere: `{:e}` in CSV
//! and text, serde_json's own shortest representation in JSON. The same bits
//! always give the same bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::Failure;

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Run metadata. `wall_clock_seconds` is only filled in the sidecar (or on
/// stderr) so that the primary output stays byte-identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub parameters: Value,
    pub tolerances: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &'static str, parameters: Value, tolerances: Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            parameters,
            tolerances,
            wall_clock_seconds: None,
        }
    }
}

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` (or stdout) and the timed manifest next to it
/// (or to stderr).
pub fn emit(out: Option<&Path>, body: &str, mut manifest: RunManifest, started: Instant) -> Result<(), Failure> {
    manifest.wall_clock_seconds = Some(started.elapsed().as_secs_f64());
    let meta = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Numerical(e.to_string()))?;
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let side = sidecar_path(path);
            fs::write(&side, meta + "\n").map_err(|e| Failure::Io(format!("{}: {e}", side.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            eprintln!("manifest: {}", serde_json::to_string(&manifest).unwrap_or_default());
            Ok(())
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[0.0, 1.0, -2.5, 1.6485046882828363e-55, std::f64::consts::PI, 1e300] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn linspace_hits_both_ends() {
        let g = linspace(-1.0, 4.0, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[20], 4.0);
        assert_eq!(g[4], 0.0);
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("/tmp/x.csv")), PathBuf::from("/tmp/x.csv.manifest.json"));
    }
}
