//! Diagnostics records and their CSV/JSON serializations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Brody fit result carried by a record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaRecord {
    pub value: f64,
    pub fit_error: f64,
}

/// Extremal deviations of the binned moment ratio from pi/2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaDeviation {
    pub min: f64,
    pub max: f64,
}

/// Survival-probability summary: plateau and correlation-hole location.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurvivalSummary {
    pub s_inf: f64,
    pub hole_depth: f64,
    pub hole_time: f64,
}

/// One grid point's diagnostics. Fields a run did not produce are `None`
/// and serialize as JSON null, never as zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub n: u32,
    pub wells: u32,
    pub tau: f64,
    pub gamma: f64,
    pub e_cut: f64,
    pub e_mid: f64,
    pub half_width: f64,
    pub eta: Option<usize>,
    pub beta: Option<BetaRecord>,
    pub kurtosis: Option<f64>,
    pub gamma_dev: Option<GammaDeviation>,
    pub survival: Option<SurvivalSummary>,
    pub flag: Option<String>,
    pub cache_hits: u32,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl DiagnosticsRecord {
    pub fn blank(n: u32, wells: u32, tau: f64, gamma: f64, e_cut: f64, e_mid: f64, half_width: f64) -> Self {
        DiagnosticsRecord {
            n,
            wells,
            tau,
            gamma,
            e_cut,
            e_mid,
            half_width,
            eta: None,
            beta: None,
            kurtosis: None,
            gamma_dev: None,
            survival: None,
            flag: None,
            cache_hits: 0,
            started_unix_ms: 0,
            finished_unix_ms: 0,
        }
    }

    pub fn add_flag(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        match &mut self.flag {
            Some(existing) => {
                existing.push_str("; ");
                existing.push_str(&msg);
            }
            None => self.flag = Some(msg),
        }
    }
}

/// 17 significant digits, enough to round-trip an f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Quotes a CSV field, doubling interior quotes.
fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub const SWEEP_CSV_VERSION: &str = "# multiwell sweep csv v1";

pub const SWEEP_CSV_COLUMNS: &str = "n,wells,tau,gamma,e_cut,e_mid,half_width,eta,beta,beta_err,kurtosis,gamma_dev_min,gamma_dev_max,s_inf,hole_depth,hole_time,flag";

/// Renders records as the versioned sweep CSV. The body excludes
/// timestamps and cache counters so identical inputs give identical bytes.
pub fn sweep_csv(records: &[DiagnosticsRecord], extra_comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_VERSION);
    out.push('\n');
    for c in extra_comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(SWEEP_CSV_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.wells,
            fmt_f64(r.tau),
            fmt_f64(r.gamma),
            fmt_f64(r.e_cut),
            fmt_f64(r.e_mid),
            fmt_f64(r.half_width),
            r.eta.map(|e| e.to_string()).unwrap_or_default(),
            opt_f64(r.beta.map(|b| b.value)),
            opt_f64(r.beta.map(|b| b.fit_error)),
            opt_f64(r.kurtosis),
            opt_f64(r.gamma_dev.map(|g| g.min)),
            opt_f64(r.gamma_dev.map(|g| g.max)),
            opt_f64(r.survival.map(|s| s.s_inf)),
            opt_f64(r.survival.map(|s| s.hole_depth)),
            opt_f64(r.survival.map(|s| s.hole_time)),
            r.flag.as_deref().map(quote).unwrap_or_default(),
        );
    }
    out
}

/// Best points of a sweep, reported with their parameters.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub flagged: usize,
    pub argmax_beta: Option<Extremum>,
    pub argmin_kurtosis: Option<Extremum>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extremum {
    pub n: u32,
    pub wells: u32,
    pub tau: f64,
    pub gamma: f64,
    pub value: f64,
}

pub fn summarize(records: &[DiagnosticsRecord]) -> SweepSummary {
    let mut best_beta: Option<Extremum> = None;
    let mut best_kurt: Option<Extremum> = None;
    for r in records {
        if let Some(b) = r.beta {
            if best_beta.map_or(true, |e| b.value > e.value) {
                best_beta = Some(Extremum {
                    n: r.n,
                    wells: r.wells,
                    tau: r.tau,
                    gamma: r.gamma,
                    value: b.value,
                });
            }
        }
        if let Some(k) = r.kurtosis {
            if best_kurt.map_or(true, |e| k < e.value) {
                best_kurt = Some(Extremum {
                    n: r.n,
                    wells: r.wells,
                    tau: r.tau,
                    gamma: r.gamma,
                    value: k,
                });
            }
        }
    }
    SweepSummary {
        points: records.len(),
        flagged: records.iter().filter(|r| r.flag.is_some()).count(),
        argmax_beta: best_beta,
        argmin_kurtosis: best_kurt,
    }
}

/// Minimal CSV body parser for our own files: skips `#` comments, first
/// non-comment line is the header, quoted fields are unescaped.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_csv_line(line)?;
        match &header {
            None => header = Some(fields),
            Some(h) => {
                if fields.len() != h.len() {
                    return Err(format!(
                        "row has {} fields, header has {}",
                        fields.len(),
                        h.len()
                    ));
                }
                rows.push(fields);
            }
        }
    }
    let header = header.ok_or("no header row")?;
    Ok((header, rows))
}

fn split_csv_line(line: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut in_quotes = false;
    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push(c);
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => fields.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            }
        }
    }
    if in_quotes {
        return Err("unterminated quoted field".into());
    }
    fields.push(cur);
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_round_trips() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 12.5, 1e-300, -0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let mut r = DiagnosticsRecord::blank(2, 2, 1.0, 2.0, 100.0, 50.0, 10.0);
        r.beta = Some(BetaRecord {
            value: 0.5,
            fit_error: 0.01,
        });
        let records = vec![r.clone(), r.clone(), r];
        let text = sweep_csv(&records, &[]);
        let (header, rows) = parse_csv(&text).unwrap();
        assert_eq!(header.len(), 17);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0][8].parse::<f64>().unwrap(), 0.5);
        assert_eq!(rows[0][10], "");
    }

    #[test]
    fn flags_survive_quoting() {
        let mut r = DiagnosticsRecord::blank(2, 2, 0.0, 0.0, 100.0, 50.0, 10.0);
        r.add_flag("first, with comma");
        r.add_flag("second \"quoted\"");
        let text = sweep_csv(&[r], &[]);
        let (_, rows) = parse_csv(&text).unwrap();
        assert_eq!(rows[0][16], "first, with comma; second \"quoted\"");
    }

    #[test]
    fn absent_diagnostics_serialize_as_null() {
        let r = DiagnosticsRecord::blank(2, 2, 1.0, 2.0, 100.0, 50.0, 10.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"beta\":null"));
        assert!(json.contains("\"kurtosis\":null"));
        assert!(!json.contains("\"kurtosis\":0"));
    }

    #[test]
    fn summary_finds_extrema() {
        let mut a = DiagnosticsRecord::blank(4, 2, 10.0, 20.0, 700.0, 300.0, 60.0);
        a.beta = Some(BetaRecord {
            value: 0.8,
            fit_error: 0.02,
        });
        a.kurtosis = Some(5.0);
        let mut b = DiagnosticsRecord::blank(4, 2, 15.0, 30.0, 700.0, 300.0, 60.0);
        b.beta = Some(BetaRecord {
            value: 0.6,
            fit_error: 0.02,
        });
        b.kurtosis = Some(4.2);
        let s = summarize(&[a, b]);
        assert_eq!(s.argmax_beta.unwrap().tau, 10.0);
        assert_eq!(s.argmin_kurtosis.unwrap().tau, 15.0);
        assert_eq!(s.points, 2);
        assert_eq!(s.flagged, 0);
    }
}
