//! Report structures and CSV/JSON emission. Reports are byte-stable for a
//! fixed config and build (timing defaults to zeros).

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::serialize::{PointJson, PredictionJson, RingJson};

pub const CSV_HEADER: &str =
    "eps,h,crit_count,index_sum,sad_x,sad_y,pred_x,pred_y,err_abs,err_rel,align_deg,runtime_s";

/// 17 significant digits, locale-independent.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{:.16e}", v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvStamp {
    pub version: String,
    pub build_hash: String,
}

impl EnvStamp {
    pub fn current() -> EnvStamp {
        EnvStamp {
            version: env!("CARGO_PKG_VERSION").to_string(),
            build_hash: option_env!("HOLEPOINT_BUILD").unwrap_or("dev").to_string(),
        }
    }
}

/// Comparison of the primary measured extra point against its prediction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtraMatch {
    pub sad_x: f64,
    pub sad_y: f64,
    pub pred_x: f64,
    pub pred_y: f64,
    pub err_abs: f64,
    pub err_rel: f64,
    pub align_deg: f64,
    pub measured_value: f64,
    pub location_verdict: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepData {
    pub crit_count: usize,
    pub index_sum: Option<i64>,
    pub audit: String,
    pub points: Vec<PointJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingJson>,
    pub prediction: PredictionJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<ExtraMatch>,
    pub paired: usize,
    pub extras_total: usize,
    pub dropped_seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRecord {
    pub eps: f64,
    pub h: f64,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<SweepData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitSummary {
    pub law: String,
    pub c: Vec<f64>,
    pub residual: f64,
    pub records_used: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepReport {
    pub command: String,
    pub environment: EnvStamp,
    pub records: Vec<SweepRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let nanrow = (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
            let (sx, sy, px, py, ea, er, al) = r
                .data
                .as_ref()
                .and_then(|d| d.extra.as_ref())
                .map(|e| {
                    (
                        e.sad_x, e.sad_y, e.pred_x, e.pred_y, e.err_abs, e.err_rel, e.align_deg,
                    )
                })
                .unwrap_or(nanrow);
            let crit_count = r
                .data
                .as_ref()
                .map(|d| d.crit_count.to_string())
                .unwrap_or_else(|| "nan".to_string());
            let index_sum = r
                .data
                .as_ref()
                .and_then(|d| d.index_sum)
                .map(|s| s.to_string())
                .unwrap_or_else(|| "nan".to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(r.eps),
                fmt_f64(r.h),
                crit_count,
                index_sum,
                fmt_f64(sx),
                fmt_f64(sy),
                fmt_f64(px),
                fmt_f64(py),
                fmt_f64(ea),
                fmt_f64(er),
                fmt_f64(al),
                fmt_f64(r.runtime_s),
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Radial sweep CSV: eps,r_eps,ratio_to_law,pred_printed,pred_cross,newton_iters
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadialReportEntry {
    pub eps: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_to_law: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_printed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_cross: Option<f64>,
    pub newton_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadialReport {
    pub command: String,
    pub environment: EnvStamp,
    pub dim: usize,
    pub entries: Vec<RadialReportEntry>,
}

impl RadialReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,r_eps,ratio_to_law,pred_printed,pred_cross,newton_iters\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(e.eps),
                fmt_f64(e.r_eps.unwrap_or(f64::NAN)),
                fmt_f64(e.ratio_to_law.unwrap_or(f64::NAN)),
                fmt_f64(e.pred_printed.unwrap_or(f64::NAN)),
                fmt_f64(e.pred_cross.unwrap_or(f64::NAN)),
                e.newton_iters,
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GreenVerifyEntry {
    pub eps: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GreenVerifyReport {
    pub command: String,
    pub environment: EnvStamp,
    pub p: [f64; 2],
    pub probe_radius: f64,
    pub entries: Vec<GreenVerifyEntry>,
    pub deviations_decreasing: bool,
    /// static kernel identities: name → residual
    pub kernel_checks: Vec<(String, f64)>,
}

impl GreenVerifyReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let third = fmt_f64(1.0 / 3.0);
        assert_eq!(third.len(), "3.3333333333333331e-1".len());
    }

    #[test]
    fn empty_sweep_gives_header_only_csv() {
        let rep = SweepReport {
            command: "sweep".into(),
            environment: EnvStamp::current(),
            records: vec![],
            fit: None,
        };
        assert_eq!(rep.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let rep = SweepReport {
            command: "sweep".into(),
            environment: EnvStamp::current(),
            records: vec![SweepRecord {
                eps: 0.04,
                h: 0.01,
                runtime_s: 0.0,
                data: None,
                error: Some("solver failed".into()),
            }],
            fit: None,
        };
        let text = rep.to_json().unwrap();
        let back: SweepReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
