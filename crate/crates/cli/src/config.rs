//! Run configuration: TOML file values overridden by command-line flags.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub alpha: Option<f64>,
    pub method: Option<Vec<String>>,
    pub kernels: Option<String>,
    pub train_fraction: Option<f64>,
    pub constraint: Option<String>,
    pub cond_threshold: Option<f64>,
    pub ridge: Option<f64>,
    pub trials: Option<usize>,
    pub n: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub dataset: Option<String>,
    pub null_mode: Option<bool>,
    pub variance: Option<f64>,
    pub mu0: Option<f64>,
    pub mnist_dir: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                FileConfig { $($f: over.$f.or(self.$f)),* }
            };
        }
        pick!(
            command, alpha, method, kernels, train_fraction, constraint, cond_threshold, ridge,
            trials, n, seed, workers, out, format, dataset, null_mode, variance, mu0, mnist_dir,
            x, y
        )
    }

    /// Fills unset run parameters with their defaults so the echoed
    /// configuration is complete.
    pub fn with_defaults(mut self) -> FileConfig {
        self.alpha.get_or_insert(0.05);
        self.method.get_or_insert_with(|| vec!["ost".into()]);
        self.kernels.get_or_insert_with(|| "d6".into());
        self.seed.get_or_insert(0);
        self.cond_threshold
            .get_or_insert(ostkit::numerics::DEFAULT_COND_THRESHOLD);
        if self.command.as_deref() == Some("simulate") {
            self.trials.get_or_insert(1000);
            self.n.get_or_insert_with(|| vec![512]);
            self.format.get_or_insert_with(|| "csv".into());
            self.dataset.get_or_insert_with(|| "diff_var".into());
            self.null_mode.get_or_insert(false);
            self.workers.get_or_insert(0);
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
