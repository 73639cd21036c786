use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_GAME: &str = "mermin3";
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_ETA_C: f64 = 0.2;
pub const DEFAULT_EPS1: f64 = 0.03;
pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_MU: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_WORKERS: usize = 1;
pub const DEFAULT_TRIALS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every tunable. Flags and config-file keys share these names; unset
/// fields fall through flag → file → built-in default.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// `mermin3`, `chsh`, or a game-definition JSON file.
    #[arg(long, global = true)]
    pub game: Option<String>,
    /// Robustness constant on the success side.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Violation-side constant; sets c = 1/(b_Q·c_tilde).
    #[arg(long, global = true)]
    pub c_tilde: Option<f64>,
    /// Device-dependent constant (figure fig2a).
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub eta_c: Option<f64>,
    #[arg(long, global = true)]
    pub eps1: Option<f64>,
    /// Override the tolerance derived from c and eta (bound only).
    #[arg(long, global = true)]
    pub eps2: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Copy count; replaces the planned N.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Require every round to be won and stop at the first loss.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub allpass: Option<bool>,
    /// Source shorthand (`iid-ghz-depolarized:0.1`, `coinflip`, ...) or JSON file.
    #[arg(long, global = true)]
    pub source: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; a directory for `figure`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write the run transcript as CSV here.
    #[arg(long, global = true)]
    pub transcript: Option<PathBuf>,
    /// Figure η grid, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Figure threshold p1.
    #[arg(long, global = true)]
    pub p1: Option<f64>,
    #[arg(long, global = true)]
    pub n_min: Option<u64>,
    #[arg(long, global = true)]
    pub n_max: Option<u64>,
    #[arg(long, global = true)]
    pub n_step: Option<u64>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Params { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Params {
    /// Fields set here win; the rest come from `lower`.
    pub fn over(self, lower: Params) -> Params {
        overlay!(
            self, lower, game, c, c_tilde, nu, eta, eta_c, eps1, eps2, delta, mu, n, allpass, source, seed, workers,
            trials, format, out, transcript, etas, p1, n_min, n_max, n_step
        )
    }

    pub fn from_file(path: &Path) -> Result<Params, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))
    }

    pub fn game_name(&self) -> &str {
        self.game.as_deref().unwrap_or(DEFAULT_GAME)
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(DEFAULT_ETA)
    }

    pub fn eta_c(&self) -> f64 {
        self.eta_c.unwrap_or(DEFAULT_ETA_C)
    }

    pub fn eps1(&self) -> f64 {
        self.eps1.unwrap_or(DEFAULT_EPS1)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(DEFAULT_MU)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(DEFAULT_WORKERS)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn allpass(&self) -> bool {
        self.allpass.unwrap_or(false)
    }
}
