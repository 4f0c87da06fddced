//! Rate gains, empirical CDFs and the text outputs of a run.

use std::fmt::Write as _;
use std::path::Path;

use super::RunReport;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Percentile gains of the adaptive scheme over one fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub label: String,
    /// `(percentile, gain in percent)` pairs.
    pub values: Vec<(f64, f64)>,
}

/// Linearly interpolated percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn gain_rows(
    labels: &[String],
    adaptive: &[f64],
    fixed: &[Vec<f64>],
    percentiles: &[f64],
) -> Result<Vec<GainRow>> {
    if adaptive.is_empty() {
        return Err(Error::Argument("no epochs to compute gains from".into()));
    }
    labels
        .iter()
        .zip(fixed)
        .map(|(label, rates)| {
            let mut gains: Vec<f64> = adaptive
                .iter()
                .zip(rates)
                .map(|(a, f)| (a / f - 1.0) * 100.0)
                .collect();
            gains.sort_by(f64::total_cmp);
            let values = percentiles
                .iter()
                .map(|&p| {
                    percentile(&gains, p)
                        .map(|g| (p, g))
                        .ok_or_else(|| Error::Argument(format!("percentile {p} outside [0, 100]")))
                })
                .collect::<Result<_>>()?;
            Ok(GainRow {
                label: label.clone(),
                values,
            })
        })
        .collect()
}

/// Percentiles of the per-epoch gain `adaptive / fixed - 1`, in percent,
/// for every fixed configuration.
pub fn percentile_gains<T: Real>(
    report: &RunReport<T>,
    percentiles: &[f64],
) -> Result<Vec<GainRow>> {
    let adaptive: Vec<f64> = report
        .records
        .iter()
        .map(|r| r.rate_adaptive.as_f64())
        .collect();
    let fixed: Vec<Vec<f64>> = (0..report.fixed_configs.len())
        .map(|j| {
            report
                .records
                .iter()
                .map(|r| r.rate_fixed[j].as_f64())
                .collect()
        })
        .collect();
    gain_rows(&report.fixed_labels(), &adaptive, &fixed, percentiles)
}

/// Recomputes percentile gains from the text of a `trace.csv`.
pub fn gains_from_trace(csv: &str, percentiles: &[f64]) -> Result<Vec<GainRow>> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trace".into()))?
        .split(',')
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let adaptive_col =
        col("rate_adaptive").ok_or_else(|| Error::Parse("trace lacks rate_adaptive".into()))?;
    let fixed_cols: Vec<(String, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("rate_V").map(|s| (format!("V{s}"), i)))
        .collect();
    let mut adaptive = Vec::new();
    let mut fixed = vec![Vec::new(); fixed_cols.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let num = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("trace row {}: bad field {}", n + 1, i + 1)))
        };
        adaptive.push(num(adaptive_col)?);
        for (j, &(_, i)) in fixed_cols.iter().enumerate() {
            fixed[j].push(num(i)?);
        }
    }
    let labels: Vec<String> = fixed_cols.into_iter().map(|(l, _)| l).collect();
    gain_rows(&labels, &adaptive, &fixed, percentiles)
}

/// Formats with six significant digits, like C's `%g`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Per-epoch trace with one rate column per fixed configuration.
pub fn trace_csv<T: Real>(report: &RunReport<T>) -> String {
    let mut out =
        String::from("epoch,t_sec,stage,f_d_hz,tau_rms_ns,snr_db,rho_db,dpf,dpt,rate_adaptive");
    for label in report.fixed_labels() {
        let _ = write!(out, ",rate_{label}");
    }
    out.push('\n');
    for r in &report.records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            fmt_g(r.t_sec.as_f64()),
            r.stage,
            fmt_g(r.f_d.as_f64()),
            fmt_g(r.tau_rms.as_f64() * 1e9),
            fmt_g(r.snr_db.as_f64()),
            fmt_g(r.config.rho_db().as_f64()),
            r.config.dpf,
            r.config.dpt,
            fmt_g(r.rate_adaptive.as_f64()),
        );
        for v in &r.rate_fixed {
            let _ = write!(out, ",{}", fmt_g(v.as_f64()));
        }
        out.push('\n');
    }
    out
}

/// Empirical CDF of the per-epoch rate of every scheme.
pub fn cdf_csv<T: Real>(report: &RunReport<T>) -> String {
    let mut out = String::from("scheme,rate,cdf\n");
    let mut schemes = vec![(
        "adaptive".to_string(),
        report
            .records
            .iter()
            .map(|r| r.rate_adaptive.as_f64())
            .collect::<Vec<_>>(),
    )];
    for (j, label) in report.fixed_labels().into_iter().enumerate() {
        schemes.push((
            label,
            report
                .records
                .iter()
                .map(|r| r.rate_fixed[j].as_f64())
                .collect(),
        ));
    }
    for (name, mut rates) in schemes {
        rates.sort_by(f64::total_cmp);
        let n = rates.len() as f64;
        for (i, v) in rates.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{}", fmt_g(*v), fmt_g((i + 1) as f64 / n));
        }
    }
    out
}

pub fn gains_csv(rows: &[GainRow]) -> String {
    let mut out = String::from("config");
    if let Some(first) = rows.first() {
        for (p, _) in &first.values {
            let _ = write!(out, ",p{}", fmt_g(*p));
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.label);
        for (_, g) in &row.values {
            let _ = write!(out, ",{}", fmt_g(*g));
        }
        out.push('\n');
    }
    out
}

pub fn summary_text<T: Real>(report: &RunReport<T>, rows: &[GainRow]) -> String {
    let (adaptive, fixed) = report.mean_rates();
    let mut out = String::new();
    let _ = writeln!(out, "epochs {}", report.records.len());
    let _ = writeln!(out, "epoch_s {}", fmt_g(report.epoch_s.as_f64()));
    let _ = writeln!(out, "feedback_mode {}", report.feedback_mode);
    let _ = writeln!(out, "feedback_bits {}", report.feedback_bits());
    let _ = writeln!(
        out,
        "feedback_bps {}",
        fmt_g(report.feedback_bps().as_f64())
    );
    let _ = writeln!(out, "mean_rate adaptive {}", fmt_g(adaptive.as_f64()));
    for (label, m) in report.fixed_labels().iter().zip(fixed) {
        let _ = writeln!(out, "mean_rate {label} {}", fmt_g(m.as_f64()));
    }
    for row in rows {
        let _ = write!(out, "gain {}", row.label);
        for (p, g) in &row.values {
            let _ = write!(out, " p{}={}%", fmt_g(*p), fmt_g(*g));
        }
        out.push('\n');
    }
    out
}

/// Every feedback message of the run, one per line.
pub fn feedback_log<T: Real>(report: &RunReport<T>) -> String {
    report
        .records
        .iter()
        .map(|r| format!("{}\n", r.feedback))
        .collect()
}

/// Writes `trace.csv`, `cdf.csv`, `gains.csv`, `summary.txt` and
/// `feedback.log` into `dir`.
pub fn write_outputs<T: Real>(report: &RunReport<T>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let rows = percentile_gains(report, &[10.0, 50.0, 90.0])?;
    std::fs::write(dir.join("trace.csv"), trace_csv(report))?;
    std::fs::write(dir.join("cdf.csv"), cdf_csv(report))?;
    std::fs::write(dir.join("gains.csv"), gains_csv(&rows))?;
    std::fs::write(dir.join("summary.txt"), summary_text(report, &rows))?;
    std::fs::write(dir.join("feedback.log"), feedback_log(report))?;
    Ok(())
}
