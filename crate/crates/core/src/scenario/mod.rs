//! Multi-stage flight simulation comparing adaptive pilots with fixed ones.

mod file;
mod report;

pub use file::{parse_scenario, ScenarioFile};
pub use report::{
    cdf_csv, feedback_log, fmt_g, gains_csv, gains_from_trace, percentile, percentile_gains,
    summary_text, trace_csv, write_outputs, GainRow,
};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_channel, doppler_from_speed, generate_channel, path_loss_db, ChannelParams,
    ChannelRealization, LinkBudget, LinkCondition, PathLossParams, DEFAULT_TAPS,
};
use crate::codebook::{Codebook, CodewordPair, DEFAULT_FREQ_LAGS, DEFAULT_TIME_LAGS};
use crate::error::{Error, Result};
use crate::estimator::{data_cell_mse, estimate_channel, ChannelEstimate};
use crate::grid::{random_grid, GridDims, PilotConfig, ResourceGrid};
use crate::link::{
    receiver_epoch, transmitter_apply, EpochState, FeedbackMessage, FeedbackMode, LinkContext,
};
use crate::optimizer::{rate_objective, FeasibleSets, MseProvider};
use crate::scalar::{db_to_linear, Real};
use crate::seed;

/// r.m.s. delay spread over a stage, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauProfile<T> {
    Constant {
        ns: T,
    },
    /// Redrawn uniformly once per stationarity interval.
    Uniform {
        min_ns: T,
        max_ns: T,
    },
}

/// One leg of the flight. Speed and ground-station distance ramp linearly
/// from start to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStage<T> {
    #[serde(default)]
    pub name: String,
    pub duration_s: T,
    pub v_start_kmh: T,
    pub v_end_kmh: T,
    pub d_start_m: T,
    pub d_end_m: T,
    pub tau: TauProfile<T>,
}

impl<T: Real> ScenarioStage<T> {
    pub fn validate(&self, path_loss: &PathLossParams<T>) -> Result<()> {
        let in_range = |d: T| d >= path_loss.r_min && d <= path_loss.r_max;
        if !(self.duration_s > T::zero()) || !self.duration_s.is_finite() {
            return Err(Error::Config(format!(
                "stage {:?}: duration must be positive",
                self.name
            )));
        }
        if !(self.v_start_kmh >= T::zero() && self.v_end_kmh >= T::zero()) {
            return Err(Error::Config(format!(
                "stage {:?}: speeds must be non-negative",
                self.name
            )));
        }
        if !in_range(self.d_start_m) || !in_range(self.d_end_m) {
            return Err(Error::Config(format!(
                "stage {:?}: distances must lie in [{}, {}] m",
                self.name, path_loss.r_min, path_loss.r_max
            )));
        }
        match self.tau {
            TauProfile::Constant { ns } if ns >= T::zero() => Ok(()),
            TauProfile::Uniform { min_ns, max_ns } if min_ns >= T::zero() && min_ns <= max_ns => {
                Ok(())
            }
            _ => Err(Error::Config(format!(
                "stage {:?}: invalid delay-spread profile",
                self.name
            ))),
        }
    }
}

/// Hilly, suburban and urban legs of two minutes each, decelerating from
/// 300 km/h to 50 km/h while closing from 17 km to 1.7 km.
pub fn default_scenario<T: Real>() -> Vec<ScenarioStage<T>> {
    let l = T::lit;
    let (d0, d3) = (17_000.0, 1_700.0);
    let d1 = d0 + (d3 - d0) / 3.0;
    let d2 = d0 + 2.0 * (d3 - d0) / 3.0;
    vec![
        ScenarioStage {
            name: "hilly".into(),
            duration_s: l(120.0),
            v_start_kmh: l(300.0),
            v_end_kmh: l(200.0),
            d_start_m: l(d0),
            d_end_m: l(d1),
            tau: TauProfile::Constant { ns: l(1000.0) },
        },
        ScenarioStage {
            name: "suburban".into(),
            duration_s: l(120.0),
            v_start_kmh: l(200.0),
            v_end_kmh: l(100.0),
            d_start_m: l(d1),
            d_end_m: l(d2),
            tau: TauProfile::Uniform {
                min_ns: l(50.0),
                max_ns: l(500.0),
            },
        },
        ScenarioStage {
            name: "urban".into(),
            duration_s: l(120.0),
            v_start_kmh: l(100.0),
            v_end_kmh: l(50.0),
            d_start_m: l(d2),
            d_end_m: l(d3),
            tau: TauProfile::Constant { ns: l(1440.0) },
        },
    ]
}

/// `{-3 dB, a, b}` for (a, b) in (2,2), (4,2), (6,4), (6,6), (8,8).
pub fn default_fixed_configs<T: Real>() -> Vec<PilotConfig<T>> {
    [(2, 2), (4, 2), (6, 4), (6, 6), (8, 8)]
        .into_iter()
        .map(|(dpf, dpt)| PilotConfig {
            rho: db_to_linear(T::lit(-3.0)),
            dpf,
            dpt,
        })
        .collect()
}

/// Trace label of a fixed configuration, e.g. `V64`.
pub fn config_label<T>(cfg: &PilotConfig<T>) -> String {
    format!("V{}{}", cfg.dpf, cfg.dpt)
}

/// Physical-layer and link settings shared by every epoch.
#[derive(Debug, Clone)]
pub struct SimParams<T> {
    pub window: GridDims<T>,
    pub carrier_hz: T,
    /// Full-scale stationarity interval in seconds.
    pub stationarity_s: T,
    pub link_budget: LinkBudget<T>,
    pub path_loss: PathLossParams<T>,
    pub n_taps: usize,
    pub feedback: FeedbackMode,
    pub sets: FeasibleSets<T>,
    pub time_lags: usize,
    pub freq_lags: usize,
}

impl<T: Real> Default for SimParams<T> {
    fn default() -> Self {
        Self {
            window: GridDims::reference(),
            carrier_hz: T::lit(5e9),
            stationarity_s: T::lit(0.45),
            link_budget: LinkBudget::reference(),
            path_loss: PathLossParams::air_to_ground(),
            n_taps: DEFAULT_TAPS,
            feedback: FeedbackMode::Explicit,
            sets: FeasibleSets::standard(),
            time_lags: DEFAULT_TIME_LAGS,
            freq_lags: DEFAULT_FREQ_LAGS,
        }
    }
}

impl<T: Real> SimParams<T> {
    pub fn codebook(&self) -> Codebook<T> {
        Codebook::standard(
            self.window.t_sym,
            self.window.delta_f,
            self.time_lags,
            self.freq_lags,
        )
    }

    /// Length of one adaptation epoch in seconds.
    pub fn epoch_s(&self) -> T {
        self.window.duration()
    }
}

/// Flight state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightPoint<T> {
    /// 0-based stage index.
    pub stage: usize,
    pub v_kmh: T,
    pub d_m: T,
    pub tau: TauProfile<T>,
}

/// Locates `t` (seconds, scaled timeline) on the flight. Times past the end
/// clamp to the final point.
pub fn flight_point<T: Real>(
    stages: &[ScenarioStage<T>],
    time_scale: T,
    t: T,
) -> Option<FlightPoint<T>> {
    let mut start = T::zero();
    for (i, s) in stages.iter().enumerate() {
        let len = s.duration_s * time_scale;
        if t < start + len || i + 1 == stages.len() {
            let u = ((t - start) / len).max(T::zero()).min(T::one());
            return Some(FlightPoint {
                stage: i,
                v_kmh: s.v_start_kmh + u * (s.v_end_kmh - s.v_start_kmh),
                d_m: s.d_start_m + u * (s.d_end_m - s.d_start_m),
                tau: s.tau,
            });
        }
        start += len;
    }
    None
}

/// Shadowing in dB for one stationarity interval.
pub fn shadowing_db<T: Real>(seed: u64, interval: u64, sigma_db: T) -> T {
    let z: f64 = seed::rng(seed, &[2, interval]).sample(StandardNormal);
    T::lit(z) * sigma_db
}

/// Delay spread in seconds for one stationarity interval.
pub fn tau_rms_s<T: Real>(profile: &TauProfile<T>, seed: u64, interval: u64) -> T {
    let ns = match *profile {
        TauProfile::Constant { ns } => ns,
        TauProfile::Uniform { min_ns, max_ns } => {
            let u: f64 = seed::rng(seed, &[3, interval]).random();
            min_ns + T::lit(u) * (max_ns - min_ns)
        }
    };
    ns * T::lit(1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: u64,
    pub t_sec: T,
    /// 1-based stage number.
    pub stage: usize,
    pub f_d: T,
    pub tau_rms: T,
    pub snr_db: T,
    /// Adaptive configuration in force during this epoch.
    pub config: PilotConfig<T>,
    pub matched: CodewordPair<T>,
    pub feedback: FeedbackMessage<T>,
    pub rate_adaptive: T,
    /// Rates of the fixed configurations, in report order.
    pub rate_fixed: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<T> {
    pub fixed_configs: Vec<PilotConfig<T>>,
    pub records: Vec<EpochRecord<T>>,
    pub feedback_mode: FeedbackMode,
    pub epoch_s: T,
}

impl<T: Real> RunReport<T> {
    pub fn fixed_labels(&self) -> Vec<String> {
        self.fixed_configs.iter().map(config_label).collect()
    }

    /// Mean adaptive rate followed by the mean of every fixed configuration.
    pub fn mean_rates(&self) -> (T, Vec<T>) {
        let n = T::from_usize_lossy(self.records.len().max(1));
        let adaptive = self.records.iter().map(|r| r.rate_adaptive).sum::<T>() / n;
        let fixed = (0..self.fixed_configs.len())
            .map(|j| self.records.iter().map(|r| r.rate_fixed[j]).sum::<T>() / n)
            .collect();
        (adaptive, fixed)
    }

    pub fn feedback_bits(&self) -> u64 {
        self.records
            .iter()
            .map(|r| u64::from(r.feedback.bit_cost))
            .sum()
    }

    /// Mean feedback rate in bits per second.
    pub fn feedback_bps(&self) -> T {
        if self.records.is_empty() {
            return T::zero();
        }
        T::lit(self.feedback_bits() as f64)
            / (T::from_usize_lossy(self.records.len()) * self.epoch_s)
    }

    /// Joins runs end to end, renumbering epochs globally.
    pub fn concat(runs: Vec<Self>) -> Result<Self> {
        let mut it = runs.into_iter();
        let mut out = it
            .next()
            .ok_or_else(|| Error::Argument("no runs to join".into()))?;
        for run in it {
            if run.fixed_configs != out.fixed_configs {
                return Err(Error::Argument(
                    "runs compare different fixed configurations".into(),
                ));
            }
            out.records.extend(run.records);
        }
        for (i, r) in out.records.iter_mut().enumerate() {
            r.epoch = i as u64;
        }
        Ok(out)
    }
}

fn transmit<T: Real>(
    cfg: &PilotConfig<T>,
    ch: &ChannelRealization<T>,
    cond: &LinkCondition<T>,
    f_d: T,
    seed: u64,
    epoch: u64,
) -> Result<ResourceGrid<T>> {
    let grid = random_grid(cfg, &ch.dims, &mut seed::rng(seed, &[5, epoch]))?;
    apply_channel(&grid, ch, cond, f_d, seed::derive(seed, &[6, epoch]))
}

fn realized_rate<T: Real>(
    est: &ChannelEstimate<T>,
    rx: &ResourceGrid<T>,
    ch: &ChannelRealization<T>,
    cond: &LinkCondition<T>,
    f_d: T,
) -> Result<T> {
    let mse = data_cell_mse(est, ch, &rx.pilot_mask);
    rate_objective(&rx.config, &ch.dims, cond, f_d, mse)
}

/// Runs the adaptive link and every fixed configuration through the flight.
///
/// Stage durations and the stationarity interval shrink by `time_scale`; the
/// epoch length does not. Each epoch draws one channel that all schemes see,
/// with identical data and noise streams. Output depends only on the inputs
/// and `seed`.
pub fn run_scenario<T: Real, P: MseProvider<T> + ?Sized>(
    stages: &[ScenarioStage<T>],
    fixed: &[PilotConfig<T>],
    params: &SimParams<T>,
    time_scale: T,
    seed: u64,
    mse: &P,
) -> Result<RunReport<T>> {
    if !(time_scale > T::zero() && time_scale <= T::one()) {
        return Err(Error::Argument(format!(
            "time scale {time_scale} outside (0, 1]"
        )));
    }
    if stages.is_empty() {
        return Err(Error::Argument("scenario has no stages".into()));
    }
    params.path_loss.validate()?;
    params.sets.validate()?;
    for s in stages {
        s.validate(&params.path_loss)?;
    }
    for c in fixed {
        c.validate()?;
    }
    let window = params.window;
    let codebook = params.codebook();
    let ctx = LinkContext {
        codebook: &codebook,
        sets: &params.sets,
        mode: params.feedback,
        mse,
    };
    let epoch_s = params.epoch_s();
    let interval_s = params.stationarity_s * time_scale;
    let total_s: T = stages.iter().map(|s| s.duration_s * time_scale).sum();
    let n_epochs = (total_s / epoch_s).floor().to_u64().unwrap_or(0).max(1);

    let mut state = EpochState::bootstrap(window);
    let mut records = Vec::with_capacity(n_epochs as usize);
    for k in 0..n_epochs {
        let t = T::lit(k as f64) * epoch_s;
        let here = flight_point(stages, time_scale, t)
            .ok_or_else(|| Error::Argument("empty flight".into()))?;
        let interval = (t / interval_s).floor().to_u64().unwrap_or(0);
        let f_d = doppler_from_speed(here.v_kmh, params.carrier_hz);
        let tau = tau_rms_s(&here.tau, seed, interval);
        let shadow = shadowing_db(seed, interval, params.path_loss.sigma_x_db);
        let snr_db = params
            .link_budget
            .snr_db(path_loss_db(here.d_m, &params.path_loss, shadow)?, &window);
        let cond = LinkCondition::from_snr_db(snr_db);
        let ch = generate_channel(
            &ChannelParams::new(f_d, tau, params.n_taps)?,
            &window,
            seed::derive(seed, &[4, k]),
        );

        let active = state.active;
        let rx = transmit(&active, &ch, &cond, f_d, seed, k)?;
        let (msg, next) = receiver_epoch(&rx, &state, &ctx, &cond)?;
        let est = next
            .last_estimate
            .as_ref()
            .ok_or_else(|| Error::Protocol("receiver kept no estimate".into()))?;
        let rate_adaptive = realized_rate(est, &rx, &ch, &cond, f_d)?;
        let matched = next
            .last_match
            .ok_or_else(|| Error::Protocol("receiver kept no match".into()))?;
        let rate_fixed = fixed
            .par_iter()
            .map(|cfg| {
                let rx = transmit(cfg, &ch, &cond, f_d, seed, k)?;
                realized_rate(&estimate_channel(&rx)?, &rx, &ch, &cond, f_d)
            })
            .collect::<Result<Vec<_>>>()?;

        let applied = transmitter_apply(&msg, &window, &ctx, &cond)?;
        state = next;
        state.last_estimate = None;
        state.advance(applied)?;

        records.push(EpochRecord {
            epoch: k,
            t_sec: t,
            stage: here.stage + 1,
            f_d,
            tau_rms: tau,
            snr_db,
            config: active,
            matched,
            feedback: msg,
            rate_adaptive,
            rate_fixed,
        });
    }
    Ok(RunReport {
        fixed_configs: fixed.to_vec(),
        records,
        feedback_mode: params.feedback,
        epoch_s,
    })
}
