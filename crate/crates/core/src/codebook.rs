//! Channel statistics codebook shared by both link ends, and nearest-codeword
//! matching of estimated correlation profiles.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::channel::{jakes_correlation, pdp_frequency_correlation};
use crate::error::{Error, Result};
use crate::estimator::{CorrelationDomain, CorrelationProfile};
use crate::scalar::Real;

/// Doppler codewords in Hz with their mobility labels (5 GHz carrier).
pub const DOPPLER_PROFILES: [(&str, f64); 6] = [
    ("Almost stationary", 4.6),
    ("Low speed (taxiing)", 70.0),
    ("High speed (taxiing)", 250.0),
    ("Takeoff/Landing", 550.0),
    ("Medium speed (airborne)", 750.0),
    ("High speed (airborne)", 1150.0),
];

/// Delay-spread codewords in nanoseconds with their scattering labels.
pub const DELAY_PROFILES: [(&str, f64); 4] = [
    ("Low (near-LoS)", 221.5),
    ("Medium (suburban A2G)", 476.4),
    ("High (near-urban A2G)", 791.2),
    ("Very high (urban/hilly A2G)", 1440.0),
];

/// Temporal lags per codeword.
pub const DEFAULT_TIME_LAGS: usize = 40;
/// Spectral lags per codeword.
pub const DEFAULT_FREQ_LAGS: usize = 62;

#[derive(Debug, Clone, PartialEq)]
pub struct Codeword<T> {
    pub label: String,
    /// Generating parameter: `f_d` in Hz (temporal) or `tau_rms` in s (spectral).
    pub parameter: T,
    pub profile: CorrelationProfile<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    pub temporal: Vec<Codeword<T>>,
    pub spectral: Vec<Codeword<T>>,
}

/// Matched codeword indices (0-based) with their generating parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodewordPair<T> {
    pub m: usize,
    pub l: usize,
    pub f_d: T,
    pub tau_rms: T,
}

impl<T: Real> Codeword<T> {
    pub fn temporal(label: impl Into<String>, f_d: T, t_sym: T, n_dt: usize) -> Self {
        let lags = (0..=n_dt)
            .map(|k| {
                Complex::new(
                    jakes_correlation(f_d, T::from_usize_lossy(k) * t_sym),
                    T::zero(),
                )
            })
            .collect();
        Self {
            label: label.into(),
            parameter: f_d,
            profile: CorrelationProfile {
                lags,
                domain: CorrelationDomain::Time,
                lag_step: t_sym,
            },
        }
    }

    pub fn spectral(label: impl Into<String>, tau_rms: T, delta_f: T, n_df: usize) -> Self {
        let lags = (0..=n_df)
            .map(|k| pdp_frequency_correlation(tau_rms, T::from_usize_lossy(k) * delta_f))
            .collect();
        Self {
            label: label.into(),
            parameter: tau_rms,
            profile: CorrelationProfile {
                lags,
                domain: CorrelationDomain::Frequency,
                lag_step: delta_f,
            },
        }
    }
}

/// Index of the codeword nearest to `target`. Distances that agree to within
/// a few ulps count as ties and resolve to the lower index.
fn nearest<T: Real>(target: &CorrelationProfile<T>, words: &[Codeword<T>]) -> Result<usize> {
    let tol = T::epsilon() * T::lit(64.0);
    let mut best: Option<(usize, T)> = None;
    for (i, w) in words.iter().enumerate() {
        let d = target.distance(&w.profile)?;
        match best {
            Some((_, bd)) if !(d < bd - tol * bd.max(T::one())) => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Config("empty codebook".into()))
}

impl<T: Real> Codebook<T> {
    pub fn new(temporal: Vec<Codeword<T>>, spectral: Vec<Codeword<T>>) -> Result<Self> {
        if temporal.is_empty() || spectral.is_empty() {
            return Err(Error::Config(
                "codebook needs at least one codeword per domain".into(),
            ));
        }
        let one = Complex::new(T::one(), T::zero());
        if temporal
            .iter()
            .chain(&spectral)
            .any(|w| w.profile.lags.first() != Some(&one))
        {
            return Err(Error::Config("every codeword must be 1 at lag 0".into()));
        }
        let same_len = |ws: &[Codeword<T>]| {
            ws.iter()
                .all(|w| w.profile.lags.len() == ws[0].profile.lags.len())
        };
        if !same_len(&temporal) || !same_len(&spectral) {
            return Err(Error::Config(
                "codewords within a domain must share a length".into(),
            ));
        }
        Ok(Self { temporal, spectral })
    }

    /// Six Doppler and four delay-spread profiles at the given lag resolution.
    pub fn standard(t_sym: T, delta_f: T, n_dt: usize, n_df: usize) -> Self {
        let temporal = DOPPLER_PROFILES
            .iter()
            .map(|&(label, fd)| Codeword::temporal(label, T::lit(fd), t_sym, n_dt))
            .collect();
        let spectral = DELAY_PROFILES
            .iter()
            .map(|&(label, ns)| Codeword::spectral(label, T::lit(ns * 1e-9), delta_f, n_df))
            .collect();
        Self { temporal, spectral }
    }

    pub fn m_t(&self) -> usize {
        self.temporal.len()
    }

    pub fn m_f(&self) -> usize {
        self.spectral.len()
    }

    pub fn time_lags(&self) -> usize {
        self.temporal[0].profile.max_lag()
    }

    pub fn freq_lags(&self) -> usize {
        self.spectral[0].profile.max_lag()
    }

    /// Resolves 0-based indices into a pair, failing on out-of-range values.
    pub fn pair(&self, m: usize, l: usize) -> Result<CodewordPair<T>> {
        match (self.temporal.get(m), self.spectral.get(l)) {
            (Some(t), Some(s)) => Ok(CodewordPair {
                m,
                l,
                f_d: t.parameter,
                tau_rms: s.parameter,
            }),
            _ => Err(Error::Protocol(format!(
                "codeword indices ({m}, {l}) outside {}x{} codebook",
                self.m_t(),
                self.m_f()
            ))),
        }
    }

    /// Nearest temporal and spectral codewords, chosen independently.
    /// Inputs are expected to be normalized to unit lag-0 value.
    pub fn nearest(
        &self,
        r_t: &CorrelationProfile<T>,
        r_f: &CorrelationProfile<T>,
    ) -> Result<CodewordPair<T>> {
        let m = nearest(r_t, &self.temporal)?;
        let l = nearest(r_f, &self.spectral)?;
        self.pair(m, l)
    }

    /// Line-oriented dump: one row per codeword with index (1-based), domain,
    /// label, parameter and every lag value.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# domain index label parameter lags...");
        for (domain, unit, scale, words) in [
            ("temporal", "Hz", 1.0, &self.temporal),
            ("spectral", "ns", 1e9, &self.spectral),
        ] {
            for (i, w) in words.iter().enumerate() {
                let _ = write!(
                    out,
                    "{domain}\t{}\t{}\t{:.1} {unit}",
                    i + 1,
                    w.label,
                    w.parameter.as_f64() * scale
                );
                for v in &w.profile.lags {
                    if domain == "temporal" {
                        let _ = write!(out, "\t{:.6}", v.re.as_f64());
                    } else {
                        let _ = write!(out, "\t{:.6}{:+.6}j", v.re.as_f64(), v.im.as_f64());
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}
