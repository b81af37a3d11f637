use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("katzforge ", env!("CARGO_PKG_VERSION"));
pub const TOL_ENV: &str = "KATZFORGE_TOL";

/// Flag, then `KATZFORGE_TOL`, then the library default.
pub fn resolve_tol(flag: Option<f64>) -> Result<f64> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .with_context(|| format!("{TOL_ENV}={s:?} is not a number"))?,
            Err(_) => katzforge::DEFAULT_TOL,
        },
    };
    if !(tol > 0.0 && tol.is_finite()) {
        bail!("tolerance must be positive and finite, got {tol}");
    }
    Ok(tol)
}

/// Reproducibility header embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_sha256: Option<String>,
    pub seed: Option<u64>,
    pub tol: f64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, String>,
}

impl Meta {
    pub fn new(instance_text: Option<&str>, seed: Option<u64>, tol: f64) -> Self {
        Self {
            tool: TOOL,
            instance_sha256: instance_text.map(sha256_hex),
            seed,
            tol,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.into(), value.to_string());
        self
    }

    pub fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![self.tool.to_string()];
        if let Some(h) = &self.instance_sha256 {
            lines.push(format!("instance_sha256: {h}"));
        }
        lines.push(format!(
            "seed: {}",
            self.seed.map_or("none".into(), |s| s.to_string())
        ));
        lines.push(format!("tol: {:e}", self.tol));
        lines.extend(self.extra.iter().map(|(k, v)| format!("{k}: {v}")));
        lines
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// JSON object with the artifact's fields plus a `meta` entry.
pub fn with_meta<T: Serialize>(body: &T, meta: &Meta) -> Result<String> {
    let mut value = serde_json::to_value(body)?;
    let obj = value
        .as_object_mut()
        .context("artifact body must be a JSON object")?;
    obj.insert("meta".into(), serde_json::to_value(meta)?);
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// `trace.csv` -> `trace.seed7.csv`.
pub fn per_seed_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    path.with_file_name(name)
}
