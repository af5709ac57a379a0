//! Artifact writing. Every file starts with (or contains) the hash of the
//! config that produced it; timestamps go to the sidecar log only, so
//! repeated runs of one config are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nashmoser_core::IterationTrace;

pub struct OutputDir {
    root: PathBuf,
    config_hash: String,
}

impl OutputDir {
    pub fn create(root: &Path, config_hash: &str) -> Result<Self, String> {
        fs::create_dir_all(root.join("reports"))
            .map_err(|e| format!("cannot create {}: {e}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            config_hash: config_hash.to_string(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), String> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }

    /// JSON artifact wrapped with the config hash.
    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<(), String> {
        #[derive(serde::Serialize)]
        struct Wrapped<'a, T> {
            config_hash: &'a str,
            #[serde(flatten)]
            value: &'a T,
        }
        let text = serde_json::to_string_pretty(&Wrapped {
            config_hash: &self.config_hash,
            value,
        })
        .map_err(|e| e.to_string())?;
        self.write_text(name, &(text + "\n"))
    }

    /// CSV artifact: hash comment, header, rows.
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<(), String> {
        let mut text = format!("# config_hash = {}\n{header}\n", self.config_hash);
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    /// Wall-clock timestamps live here and nowhere else.
    pub fn log(&self, message: &str) {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let line = format!("[{stamp}] {message}\n");
        let path = self.path("run.log");
        let previous = fs::read_to_string(&path).unwrap_or_default();
        let _ = fs::write(&path, previous + &line);
    }
}

/// Frozen trace schema: `p, theta, x_d, x_s0, z_d, z_s0, dx_d`, then
/// `x_at_{n}` and `dx_at_{n}` per configured index in ascending order, then
/// `neumann_terms`.
pub fn trace_csv(trace: &IterationTrace) -> (String, Vec<String>) {
    let mut header = String::from("p,theta,x_d,x_s0,z_d,z_s0,dx_d");
    for n in &trace.n_grid {
        let _ = write!(header, ",x_at_{n}");
    }
    for n in &trace.n_grid {
        let _ = write!(header, ",dx_at_{n}");
    }
    header.push_str(",neumann_terms");

    let rows = trace
        .rows
        .iter()
        .map(|row| {
            let mut line = format!(
                "{},{},{},{},{},{},{}",
                row.p, row.theta, row.x_d, row.x_s0, row.z_d, row.z_s0, row.dx_d
            );
            for v in &row.x_grid {
                let _ = write!(line, ",{v}");
            }
            for v in &row.dx_grid {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(line, ",{}", row.neumann_terms);
            line
        })
        .collect();
    (header, rows)
}
