//! Run manifests: every output carries the parameters that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: serde_json::Value,
    pub version: &'static str,
    pub grid: Option<(usize, usize)>,
    pub tolerances: serde_json::Value,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new<P: Serialize>(subcommand: &'static str, parameters: &P) -> Result<Self> {
        Ok(Self {
            subcommand,
            parameters: serde_json::to_value(parameters)?,
            version: env!("CARGO_PKG_VERSION"),
            grid: None,
            tolerances: serde_json::Value::Object(Default::default()),
            seed: None,
        })
    }

    pub fn grid(mut self, n_t: usize, n_theta: usize) -> Self {
        self.grid = Some((n_t, n_theta));
        self
    }

    pub fn tolerances(mut self, tol: serde_json::Value) -> Self {
        self.tolerances = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `<out>.manifest.json` next to a data file.
    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_sidecar(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::sidecar_path(out);
        fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
