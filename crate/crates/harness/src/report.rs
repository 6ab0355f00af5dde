//! Experiment reports: channel series, fitted slopes, asserted exponents,
//! and deterministic CSV/JSON/plot-script emission.
//!
//! Given the same configuration and seed, every byte written here is
//! reproducible regardless of worker count; the only non-reproducible field
//! is `runtime_s`, which carries wall-clock time.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::fit::{fit_loglog_slope, LogLogFit};

/// Measured values of one error channel across the sweep abscissa
/// (usually the spacing `h`).
#[derive(Debug, Clone)]
pub struct ChannelSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// How a measured number was compared against its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// measured >= bound - tolerance
    SlopeAtLeast,
    /// |measured - bound| <= tolerance
    SlopeWithin,
    /// measured <= bound
    AtMost,
    /// informational; never fails
    Reported,
}

impl CheckKind {
    fn as_str(self) -> &'static str {
        match self {
            CheckKind::SlopeAtLeast => "slope_at_least",
            CheckKind::SlopeWithin => "slope_within",
            CheckKind::AtMost => "at_most",
            CheckKind::Reported => "reported",
        }
    }
}

/// One asserted (or reported) comparison, tagged with the rate law it
/// checks so the report is self-describing.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub name: String,
    pub law: String,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: String,
    /// Label of the sweep variable the channel series run over.
    pub abscissa: String,
    pub config: BTreeMap<String, String>,
    pub channels: Vec<ChannelSeries>,
    pub slopes: BTreeMap<String, LogLogFit>,
    pub assessments: Vec<Assessment>,
    pub scalars: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub pass: bool,
    pub runtime_s: f64,
}

impl ExperimentReport {
    pub fn new(kind: &str, config: BTreeMap<String, String>) -> Self {
        Self {
            kind: kind.to_string(),
            abscissa: "h".to_string(),
            config,
            channels: Vec::new(),
            slopes: BTreeMap::new(),
            assessments: Vec::new(),
            scalars: BTreeMap::new(),
            warnings: Vec::new(),
            notes: Vec::new(),
            pass: true,
            runtime_s: 0.0,
        }
    }

    pub fn add_channel(&mut self, name: &str, points: Vec<(f64, f64)>) {
        self.channels.push(ChannelSeries { name: name.to_string(), points });
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelSeries> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Fit the named channel on log-log axes and remember the fit.
    pub fn fit_channel(&mut self, name: &str) -> Result<LogLogFit> {
        let series = self
            .channel(name)
            .ok_or_else(|| crate::error::HarnessError::Config(format!("no channel '{name}'")))?;
        let fit = fit_loglog_slope(&series.points)?;
        if fit.floored {
            self.warnings.push(format!(
                "channel '{name}': measurements at the 1e-16 floor entered the fit"
            ));
        }
        self.slopes.insert(name.to_string(), fit);
        Ok(fit)
    }

    fn push_assessment(&mut self, a: Assessment) {
        if a.kind != CheckKind::Reported {
            self.pass &= a.pass;
        }
        self.assessments.push(a);
    }

    /// Assert `slope >= bound - tolerance` for a fitted channel.
    pub fn assert_slope_at_least(
        &mut self,
        name: &str,
        law: &str,
        bound: f64,
        tolerance: f64,
    ) -> Result<()> {
        let fit = self.fit_channel(name)?;
        let pass = fit.slope >= bound - tolerance;
        self.push_assessment(Assessment {
            name: name.to_string(),
            law: law.to_string(),
            measured: fit.slope,
            bound,
            tolerance,
            kind: CheckKind::SlopeAtLeast,
            pass,
        });
        Ok(())
    }

    /// Assert `|slope - bound| <= tolerance` for a fitted channel.
    pub fn assert_slope_within(
        &mut self,
        name: &str,
        law: &str,
        bound: f64,
        tolerance: f64,
    ) -> Result<()> {
        let fit = self.fit_channel(name)?;
        let pass = (fit.slope - bound).abs() <= tolerance;
        self.push_assessment(Assessment {
            name: name.to_string(),
            law: law.to_string(),
            measured: fit.slope,
            bound,
            tolerance,
            kind: CheckKind::SlopeWithin,
            pass,
        });
        Ok(())
    }

    /// Assert a scalar `measured <= bound`.
    pub fn assert_at_most(&mut self, name: &str, law: &str, measured: f64, bound: f64) {
        self.push_assessment(Assessment {
            name: name.to_string(),
            law: law.to_string(),
            measured,
            bound,
            tolerance: 0.0,
            kind: CheckKind::AtMost,
            pass: measured <= bound,
        });
    }

    /// Record a fit or scalar without asserting anything.
    pub fn report_only(&mut self, name: &str, law: &str, measured: f64) {
        self.push_assessment(Assessment {
            name: name.to_string(),
            law: law.to_string(),
            measured,
            bound: f64::NAN,
            tolerance: 0.0,
            kind: CheckKind::Reported,
            pass: true,
        });
    }

    pub fn to_json(&self) -> Value {
        let config: Map<String, Value> =
            self.config.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let mut channels = Map::new();
        for c in &self.channels {
            channels.insert(
                c.name.clone(),
                json!({
                    self.abscissa.clone(): c.points.iter().map(|p| p.0).collect::<Vec<_>>(),
                    "value": c.points.iter().map(|p| p.1).collect::<Vec<_>>(),
                }),
            );
        }
        let mut slopes = Map::new();
        for (name, fit) in &self.slopes {
            slopes.insert(
                name.clone(),
                json!({"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}),
            );
        }
        let mut exponents = Map::new();
        for a in &self.assessments {
            exponents.insert(
                a.name.clone(),
                json!({
                    "law": a.law,
                    "measured": a.measured,
                    "bound": if a.bound.is_nan() { Value::Null } else { json!(a.bound) },
                    "tolerance": a.tolerance,
                    "check": a.kind.as_str(),
                    "pass": a.pass,
                }),
            );
        }
        json!({
            "config": config,
            "channels": channels,
            "slopes": slopes,
            "exponents": exponents,
            "scalars": self.scalars,
            "warnings": self.warnings,
            "notes": self.notes,
            "pass": self.pass,
            "runtime_s": self.runtime_s,
        })
    }

    /// Flat CSV rendering of the summary (one `section,key,value` row each).
    pub fn to_summary_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        for (k, v) in &self.config {
            out.push_str(&format!("config,{k},{v}\n"));
        }
        for (name, fit) in &self.slopes {
            out.push_str(&format!("slope,{name},{}\n", fmt_float(fit.slope)));
            out.push_str(&format!("r2,{name},{}\n", fmt_float(fit.r2)));
        }
        for a in &self.assessments {
            out.push_str(&format!(
                "check,{},{}|law={}|measured={}|bound={}|tolerance={}|pass={}\n",
                a.name,
                a.kind.as_str(),
                a.law,
                fmt_float(a.measured),
                fmt_float(a.bound),
                fmt_float(a.tolerance),
                a.pass
            ));
        }
        for (k, v) in &self.scalars {
            out.push_str(&format!("scalar,{k},{}\n", fmt_float(*v)));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning,,{w}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note,,{n}\n"));
        }
        out.push_str(&format!("result,pass,{}\n", self.pass));
        out.push_str(&format!("result,runtime_s,{}\n", fmt_float(self.runtime_s)));
        out
    }

    /// Write the report (json or csv summary), the channel table and its
    /// plot script; returns the paths written.
    pub fn write(&self, out_dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();
        let report_path = match format {
            ReportFormat::Json => {
                let path = out_dir.join(format!("{}_report.json", self.kind));
                fs::write(&path, serde_json::to_string_pretty(&self.to_json()).expect("serializable") + "\n")?;
                path
            }
            ReportFormat::Csv => {
                let path = out_dir.join(format!("{}_report.csv", self.kind));
                fs::write(&path, self.to_summary_csv())?;
                path
            }
        };
        written.push(report_path);
        if !self.channels.is_empty() {
            let stem = format!("{}_channels", self.kind);
            written.extend(write_series_table(out_dir, &stem, &self.abscissa, &self.channels)?);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// 17-significant-digit float rendering used in every CSV.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write aligned series as `<stem>.csv` plus a gnuplot script `<stem>.gp`
/// that references only the CSV next to it. All series must share the
/// abscissa grid.
pub fn write_series_table(
    out_dir: &Path,
    stem: &str,
    abscissa: &str,
    series: &[ChannelSeries],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut csv = String::new();
    csv.push_str(abscissa);
    for s in series {
        csv.push(',');
        csv.push_str(&s.name);
    }
    csv.push('\n');
    let rows = series.first().map(|s| s.points.len()).unwrap_or(0);
    for i in 0..rows {
        csv.push_str(&fmt_float(series[0].points[i].0));
        for s in series {
            csv.push(',');
            csv.push_str(&fmt_float(s.points[i].1));
        }
        csv.push('\n');
    }
    fs::write(&csv_path, csv)?;

    let gp_path = out_dir.join(format!("{stem}.gp"));
    let mut gp = String::new();
    gp.push_str("set datafile separator \",\"\n");
    gp.push_str("set key outside\n");
    gp.push_str("set logscale xy\n");
    gp.push_str(&format!("set xlabel \"{abscissa}\"\n"));
    gp.push_str("set ylabel \"measured\"\n");
    gp.push_str("plot ");
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            gp.push_str(", \\\n     ");
        }
        gp.push_str(&format!(
            "\"{stem}.csv\" using 1:{} with linespoints title \"{}\"",
            i + 2,
            s.name
        ));
    }
    gp.push('\n');
    fs::write(&gp_path, gp)?;
    Ok(vec![csv_path, gp_path])
}
