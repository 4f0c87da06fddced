//! Cached Monte Carlo estimation-MSE oracle.
//!
//! Entries are keyed by `(dpf, dpt, m, l, pilot SNR in whole dB)`; the power
//! ratio only enters through the pilot SNR. Each value is computed at the
//! rounded SNR from seeds derived from the key, so a value is a pure function
//! of its key and concurrent writers of the same key store the same number.
//!
//! Persisted form is plain text, one entry per line:
//!
//! ```text
//! # dpf dpt m l pilot_snr_db mse
//! 6 4 3 1 27 0.0012345678901234
//! ```
//!
//! Indices are 0-based codeword positions. An SNR field of `inf` marks the
//! noiseless limit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::channel::{generate_channel, ChannelParams, ChannelRealization};
use crate::codebook::CodewordPair;
use crate::error::{Error, Result};
use crate::estimator::mse_on_channel;
use crate::grid::{GridDims, PilotConfig};
use crate::optimizer::MseProvider;
use crate::scalar::{db_to_linear, linear_to_db, Real};
use crate::seed;

const SNR_DB_MIN: i32 = -60;
const SNR_DB_MAX: i32 = 120;
const NOISELESS: i32 = i32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MseKey {
    pub dpf: usize,
    pub dpt: usize,
    pub m: usize,
    pub l: usize,
    /// Pilot SNR rounded to whole dB, or `i32::MAX` when noiseless.
    pub snr_db: i32,
}

impl MseKey {
    pub fn new<T: Real>(cfg: &PilotConfig<T>, stats: &CodewordPair<T>, pilot_snr: T) -> Self {
        let snr_db = if pilot_snr.is_infinite() && pilot_snr > T::zero() {
            NOISELESS
        } else {
            let db = linear_to_db(pilot_snr).round().as_f64();
            if db.is_nan() {
                SNR_DB_MIN
            } else {
                (db as i32).clamp(SNR_DB_MIN, SNR_DB_MAX)
            }
        };
        Self {
            dpf: cfg.dpf,
            dpt: cfg.dpt,
            m: stats.m,
            l: stats.l,
            snr_db,
        }
    }

    fn pilot_snr<T: Real>(&self) -> T {
        if self.snr_db == NOISELESS {
            T::infinity()
        } else {
            db_to_linear(T::lit(self.snr_db as f64))
        }
    }
}

/// Concurrent map of computed MSE values.
#[derive(Debug, Default)]
pub struct MseCache<T> {
    map: RwLock<HashMap<MseKey, T>>,
}

impl<T: Real> MseCache<T> {
    pub fn new() -> Self {
        Self {
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, key: &MseKey) -> Option<T> {
        self.map.read().get(key).copied()
    }

    pub fn insert(&self, key: MseKey, value: T) {
        self.map.write().insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Text dump, sorted by key.
    pub fn to_text(&self) -> String {
        let map = self.map.read();
        let mut keys: Vec<_> = map.keys().copied().collect();
        keys.sort();
        let mut out = String::from("# dpf dpt m l pilot_snr_db mse\n");
        for k in keys {
            let snr = if k.snr_db == NOISELESS {
                "inf".to_string()
            } else {
                k.snr_db.to_string()
            };
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                k.dpf,
                k.dpt,
                k.m,
                k.l,
                snr,
                map[&k].as_f64()
            );
        }
        out
    }

    /// Merges entries parsed from `text`.
    pub fn extend_from_text(&self, text: &str) -> Result<usize> {
        let mut parsed = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse(format!("MSE cache line {}: {line:?}", n + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let snr_db = if f[4] == "inf" {
                NOISELESS
            } else {
                f[4].parse::<i32>().map_err(|_| bad())?
            };
            let value: f64 = f[5].parse().map_err(|_| bad())?;
            let key = MseKey {
                dpf: int(f[0])?,
                dpt: int(f[1])?,
                m: int(f[2])?,
                l: int(f[3])?,
                snr_db,
            };
            parsed.push((key, T::lit(value)));
        }
        let count = parsed.len();
        self.map.write().extend(parsed);
        Ok(count)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Loads `path` if it exists; returns the number of entries read.
    pub fn load(&self, path: &Path) -> Result<usize> {
        match std::fs::read_to_string(path) {
            Ok(text) => self.extend_from_text(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(e.into()),
        }
    }
}

type ChannelStore<T> = RwLock<HashMap<(usize, usize, usize), Arc<ChannelRealization<T>>>>;

/// Monte Carlo MSE provider over a fixed window, with per-codeword channel
/// draws shared across configurations (paired comparisons).
#[derive(Debug)]
pub struct MonteCarloMse<T> {
    pub dims: GridDims<T>,
    pub trials: usize,
    pub seed: u64,
    pub n_taps: usize,
    pub cache: MseCache<T>,
    channels: ChannelStore<T>,
}

/// Default oracle window length in OFDM symbols.
pub const DEFAULT_ORACLE_SYMBOLS: usize = 360;
pub const DEFAULT_ORACLE_TRIALS: usize = 2;

impl<T: Real> MonteCarloMse<T> {
    pub fn new(dims: GridDims<T>, trials: usize, seed: u64, n_taps: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Argument(
                "MSE oracle needs at least one trial".into(),
            ));
        }
        Ok(Self {
            dims,
            trials,
            seed,
            n_taps,
            cache: MseCache::new(),
            channels: RwLock::new(HashMap::new()),
        })
    }

    /// Tag identifying the oracle setup; caches are only valid for one tag.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}x{}-trials{}-taps{}-seed{}",
            self.dims.n_sub, self.dims.n_sym, self.trials, self.n_taps, self.seed
        )
    }

    fn channel(&self, stats: &CodewordPair<T>, trial: usize) -> Result<Arc<ChannelRealization<T>>> {
        let key = (stats.m, stats.l, trial);
        if let Some(ch) = self.channels.read().get(&key) {
            return Ok(Arc::clone(ch));
        }
        let params = ChannelParams::new(stats.f_d, stats.tau_rms, self.n_taps)?;
        let seed = seed::derive(
            self.seed,
            &[0, stats.m as u64, stats.l as u64, trial as u64],
        );
        let ch = Arc::new(generate_channel(&params, &self.dims, seed));
        self.channels.write().insert(key, Arc::clone(&ch));
        Ok(ch)
    }

    fn compute(&self, cfg: &PilotConfig<T>, stats: &CodewordPair<T>, key: &MseKey) -> Result<T> {
        let snr = key.pilot_snr::<T>();
        let mut total = T::zero();
        for trial in 0..self.trials {
            let ch = self.channel(stats, trial)?;
            let noise_seed = seed::derive(
                self.seed,
                &[
                    1,
                    key.dpf as u64,
                    key.dpt as u64,
                    key.m as u64,
                    key.l as u64,
                    trial as u64,
                ],
            );
            total += mse_on_channel(cfg, &ch, snr, noise_seed)?;
        }
        Ok(total / T::from_usize_lossy(self.trials))
    }
}

impl<T: Real> MseProvider<T> for MonteCarloMse<T> {
    fn mse(&self, cfg: &PilotConfig<T>, stats: &CodewordPair<T>, pilot_snr: T) -> Result<T> {
        let key = MseKey::new(cfg, stats, pilot_snr);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = self.compute(cfg, stats, &key)?;
        self.cache.insert(key, v);
        Ok(v)
    }
}
