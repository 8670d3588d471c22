//! On-disk store of built Lax data, one JSON file per `(K, N)`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ilw_core::hierarchy::{verify, Check};
use ilw_core::{HierarchyConfig, LaxData};
use serde::Serialize;

pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct Entry {
    pub file: String,
    pub valid: bool,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Cache {
    /// The explicit directory if given, else the platform cache directory.
    pub fn locate(explicit: Option<PathBuf>) -> Option<Cache> {
        let dir = explicit.or_else(|| dirs::cache_dir().map(|d| d.join("ilw-lax")))?;
        Some(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn file_name(k: u32, n: u32) -> String {
        format!("lax_K{k}_N{n}.json")
    }

    fn entry_path(&self, config: &HierarchyConfig) -> PathBuf {
        self.dir.join(Self::file_name(config.eps_order, config.lambda_depth))
    }

    /// `Ok(None)` when there is no entry; `Err` when an entry exists but
    /// cannot be trusted.
    pub fn load(&self, config: HierarchyConfig) -> Result<Option<LaxData>, String> {
        let path = self.entry_path(&config);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(format!("{}: {e}", path.display())),
        };
        let stored = parse_entry(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let sc = stored.config();
        if (sc.eps_order, sc.lambda_depth) != (config.eps_order, config.lambda_depth) {
            return Err(format!(
                "{}: holds K = {}, N = {}",
                path.display(),
                sc.eps_order,
                sc.lambda_depth
            ));
        }
        let lax = LaxData::from_coefficients(config, stored.a().to_vec(), stored.f_coeffs().to_vec())
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Some(lax))
    }

    /// Atomic write: a temporary file in the cache directory renamed into place.
    pub fn store(&self, lax: &LaxData) -> Result<PathBuf, String> {
        fs::create_dir_all(&self.dir).map_err(|e| format!("{}: {e}", self.dir.display()))?;
        let path = self.entry_path(lax.config());
        let json = serde_json::to_string(lax).map_err(|e| e.to_string())?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| e.to_string())?;
        tmp.write_all(json.as_bytes()).map_err(|e| e.to_string())?;
        tmp.write_all(b"\n").map_err(|e| e.to_string())?;
        tmp.as_file().sync_all().map_err(|e| e.to_string())?;
        tmp.persist(&path).map_err(|e| e.to_string())?;
        Ok(path)
    }

    fn entry_files(&self) -> Result<Vec<PathBuf>, String> {
        let read = match fs::read_dir(&self.dir) {
            Ok(r) => r,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(format!("{}: {e}", self.dir.display())),
        };
        let mut files: Vec<PathBuf> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("lax_K") && n.ends_with(".json"))
            })
            .collect();
        files.sort();
        Ok(files)
    }

    pub fn list(&self) -> Result<Vec<Entry>, String> {
        let mut out = Vec::new();
        for path in self.entry_files()? {
            let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let parsed = fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| parse_entry(&t));
            out.push(match parsed {
                Ok(lax) => Entry {
                    file,
                    valid: true,
                    k: Some(lax.config().eps_order),
                    n: Some(lax.config().lambda_depth),
                    error: None,
                },
                Err(e) => Entry { file, valid: false, k: None, n: None, error: Some(e) },
            });
        }
        Ok(out)
    }

    /// Removes every entry; returns how many were removed.
    pub fn purge(&self) -> Result<usize, String> {
        let files = self.entry_files()?;
        for f in &files {
            fs::remove_file(f).map_err(|e| format!("{}: {e}", f.display()))?;
        }
        Ok(files.len())
    }
}

/// Parses a stored entry and checks it beyond the structural invariants:
/// the defining equation and `[log L, L] = 0` must hold.
fn parse_entry(text: &str) -> Result<LaxData, String> {
    let lax: LaxData = serde_json::from_str(text).map_err(|e| e.to_string())?;
    for check in [Check::DefiningEquation, Check::LogCommutation(1)] {
        let report = verify(&lax, check).map_err(|e| e.to_string())?;
        if !report.pass {
            return Err(format!("stored data fails {check}"));
        }
    }
    Ok(lax)
}
