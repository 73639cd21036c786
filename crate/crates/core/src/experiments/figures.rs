use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{allpass_sample_size, certification_tail_bound, dd_sample_size, verification_tail_bound};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    /// Device-independent vs device-dependent copy counts.
    Fig2a,
    /// Verification confidence against N.
    Fig2b,
    /// Certification confidence against N.
    Fig3,
}

impl FigureId {
    pub const ALL: [FigureId; 3] = [FigureId::Fig2a, FigureId::Fig2b, FigureId::Fig3];

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            FigureId::Fig2a => &["eta", "N_DI", "N_DD", "ratio"],
            FigureId::Fig2b => &["N", "eta", "confidence"],
            FigureId::Fig3 => &["N", "eta_c", "confidence"],
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3 => "fig3",
        })
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2a" => Ok(FigureId::Fig2a),
            "fig2b" => Ok(FigureId::Fig2b),
            "fig3" => Ok(FigureId::Fig3),
            _ => Err(Error::UnknownName(format!("figure `{s}`"))),
        }
    }
}

/// Parameter grid for one figure. Fields a figure does not use are ignored.
///
/// The fig2b/fig3 η grids are reconstructions chosen so the curves cover the
/// plotted confidence range; fig2a uses c = (2−√2)/4 and ν = 1/3, the pair
/// that yields the constant copy-count ratio 2(2+√2)/3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub figure_id: FigureId,
    pub etas: Vec<f64>,
    pub n_min: u64,
    pub n_max: u64,
    pub n_step: u64,
    pub mu: f64,
    pub p1: f64,
    pub c: f64,
    pub nu: f64,
    pub delta: f64,
}

impl FigureSpec {
    pub fn default_for(figure_id: FigureId) -> Self {
        let sqrt2 = std::f64::consts::SQRT_2;
        let base = Self {
            figure_id,
            etas: vec![0.1, 0.15, 0.2, 0.3],
            n_min: 50,
            n_max: 10_000,
            n_step: 50,
            mu: 0.5,
            p1: 0.95,
            c: 2.0 - sqrt2,
            nu: 1.0 / 3.0,
            delta: 1e-4,
        };
        match figure_id {
            FigureId::Fig2a => Self {
                etas: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
                c: (2.0 - sqrt2) / 4.0,
                ..base
            },
            FigureId::Fig2b => base,
            FigureId::Fig3 => Self { p1: 0.98, ..base },
        }
    }

    pub fn n_values(&self) -> Vec<u64> {
        (self.n_min..=self.n_max).step_by(self.n_step.max(1) as usize).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.etas.is_empty() {
            return Err(Error::InvalidParameter("empty eta grid".into()));
        }
        if self.figure_id != FigureId::Fig2a && (self.n_step == 0 || self.n_min > self.n_max) {
            return Err(Error::InvalidParameter(format!(
                "bad N range {}..={} step {}",
                self.n_min, self.n_max, self.n_step
            )));
        }
        Ok(())
    }
}

/// A CSV cell: counts print as integers, reals in shortest round-trip form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Count(u64),
    Real(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Count(n) => n as f64,
            Value::Real(x) => x,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Count(n) => write!(f, "{n}"),
            Value::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureDataset {
    pub figure_id: FigureId,
    pub rows: Vec<Vec<Value>>,
}

impl FigureDataset {
    pub fn columns(&self) -> &'static [&'static str] {
        self.figure_id.columns()
    }

    /// Values of one named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns().iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Computes a figure's rows; pure and single-threaded.
pub fn figure_dataset(spec: &FigureSpec) -> Result<FigureDataset> {
    spec.validate()?;
    let mut rows = Vec::new();
    match spec.figure_id {
        FigureId::Fig2a => {
            for &eta in &spec.etas {
                let di = allpass_sample_size(spec.c, eta, spec.delta)?;
                let dd = dd_sample_size(spec.nu, eta, spec.delta)?;
                rows.push(vec![
                    Value::Real(eta),
                    Value::Count(di),
                    Value::Count(dd),
                    Value::Real(di as f64 / dd as f64),
                ]);
            }
        }
        FigureId::Fig2b => {
            for &eta in &spec.etas {
                let p2 = 1.0 - spec.c * eta;
                for n in spec.n_values() {
                    let tail = verification_tail_bound(spec.p1, p2, n)?;
                    rows.push(vec![Value::Count(n), Value::Real(eta), Value::Real(1.0 - tail)]);
                }
            }
        }
        FigureId::Fig3 => {
            for &eta_c in &spec.etas {
                let p2 = 1.0 - spec.c * eta_c * (1.0 - spec.mu);
                for n in spec.n_values() {
                    let tail = certification_tail_bound(spec.mu, spec.p1, p2, n)?;
                    rows.push(vec![Value::Count(n), Value::Real(eta_c), Value::Real(1.0 - tail)]);
                }
            }
        }
    }
    Ok(FigureDataset {
        figure_id: spec.figure_id,
        rows,
    })
}

/// Writes `<id>.csv` and the `<id>.json` spec sidecar into `dir`; returns the CSV path.
pub fn write_figure(spec: &FigureSpec, dir: &Path) -> Result<PathBuf> {
    let data = figure_dataset(spec)?;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", spec.figure_id));
    fs::write(&csv_path, data.to_csv()?)?;
    let sidecar = serde_json::to_string_pretty(spec)?;
    fs::write(dir.join(format!("{}.json", spec.figure_id)), sidecar + "\n")?;
    Ok(csv_path)
}
