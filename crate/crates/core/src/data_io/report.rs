//! The JSON run report and its plot-ready side files.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::config::RunConfig;
use crate::analogy::{AnalogyVerdict, FolReport, RegularityReport, VerdictStatus};
use crate::error::{Error, Result};
use crate::estimation::BootstrapSummary;
use crate::hoare::{EffectiveRegion, TripleReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinBlock {
    pub estimate: f64,
    pub estimator: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapQuantiles {
    #[serde(rename = "0.025")]
    pub q025: f64,
    #[serde(rename = "0.05")]
    pub q05: f64,
    #[serde(rename = "0.95")]
    pub q95: f64,
    #[serde(rename = "0.975")]
    pub q975: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBlock {
    pub mean: f64,
    pub sd: f64,
    pub q: BootstrapQuantiles,
    #[serde(rename = "B")]
    pub b: usize,
}

impl BootstrapBlock {
    pub fn from_summary(s: &BootstrapSummary) -> Result<Self> {
        Ok(BootstrapBlock {
            mean: s.mean,
            sd: s.sd,
            q: BootstrapQuantiles {
                q025: s.quantile(0.025)?,
                q05: s.quantile(0.05)?,
                q95: s.quantile(0.95)?,
                q975: s.quantile(0.975)?,
            },
            b: s.b,
        })
    }
}

/// Where a parameter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Estimated,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametersBlock {
    pub epsilon: f64,
    /// Bootstrap upper confidence bound on the distance; equals `epsilon`
    /// unless ε was given explicitly.
    pub epsilon_estimate: f64,
    pub eta: f64,
    pub gamma: f64,
    pub xi: f64,
    /// Absent when neither labels nor an explicit value were available.
    pub delta: Option<f64>,
    pub separable: Option<bool>,
    /// Class pair attaining δ, when δ was estimated from labels.
    pub delta_pair: Option<(usize, usize)>,
    /// Quantile level behind ε: one-sided `1 − α`.
    pub epsilon_level: f64,
    /// Quantile level behind η: two-sided `1 − α/2`.
    pub eta_level: f64,
    pub sources: BTreeMap<String, Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictBlock {
    /// `verified` and `status` here are final: they also require
    /// `within_epsilon`.
    #[serde(flatten)]
    pub verdict: AnalogyVerdict,
    /// The observed domains are ε-close: `epsilon_estimate ≤ epsilon`.
    pub within_epsilon: bool,
    pub effective_region: Option<EffectiveRegion>,
}

impl VerdictBlock {
    pub fn new(mut verdict: AnalogyVerdict, within_epsilon: bool, effective_region: Option<EffectiveRegion>) -> Self {
        if !within_epsilon && verdict.verified {
            verdict.verified = false;
            verdict.status = VerdictStatus::NotVerified;
        }
        VerdictBlock {
            verdict,
            within_epsilon,
            effective_region,
        }
    }
}

/// Everything a run produces. Every top-level key is always present;
/// stages a command does not run are `null` (or an empty list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config_echo: RunConfig,
    pub wasserstein: Option<WassersteinBlock>,
    pub bootstrap: Option<BootstrapBlock>,
    pub parameters: Option<ParametersBlock>,
    pub verdict: Option<VerdictBlock>,
    pub regularity: Option<RegularityReport>,
    pub hoare: Vec<TripleReport>,
    pub fol: Option<FolReport>,
    pub notes: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Report {
            command: command.to_string(),
            config_echo: config.clone(),
            wasserstein: None,
            bootstrap: None,
            parameters: None,
            verdict: None,
            regularity: None,
            hoare: Vec::new(),
            fol: None,
            notes: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Serialized report; floats carry 17 significant digits, non-finite
    /// values become `null`.
    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits::default());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    /// The report with `timings_ms` cleared, for reproducibility comparisons.
    pub fn without_timings(&self) -> Report {
        Report {
            timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }
}

/// Pretty-printing formatter writing every `f64` as `d.dddddddddddddddde±x`.
#[derive(Default)]
struct SigDigits {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    let text = report.to_json()?;
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing report {}", path.display()), e))
}

/// One bootstrap replicate per row under a `replicate,value` header, in
/// sorted order.
pub fn write_plot_data(summary: &BootstrapSummary, path: &Path) -> Result<()> {
    let ctx = || format!("writing plot data {}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", ctx())))?;
    let wrap = |e: csv::Error| Error::Config(format!("{}: {e}", ctx()));
    w.write_record(["replicate", "value"]).map_err(wrap)?;
    for (i, v) in summary.replicates.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:?}")]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}
