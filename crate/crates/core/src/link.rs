//! Per-epoch receiver processing, feedback messages and the transmitter side
//! of the exchange.
//!
//! A configuration chosen from the window of epoch `k` is applied from epoch
//! `k + 1` on.

use std::fmt;
use std::str::FromStr;

use crate::channel::LinkCondition;
use crate::codebook::{Codebook, CodewordPair};
use crate::error::{Error, Result};
use crate::estimator::{estimate_channel, estimate_correlations, ChannelEstimate};
use crate::grid::{GridDims, PilotConfig, ResourceGrid};
use crate::optimizer::{
    feedback_bits_explicit, feedback_bits_implicit, optimize, FeasibleSets, MseProvider,
};
use crate::scalar::{db_to_linear, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackMode {
    /// The chosen configuration itself.
    Explicit,
    /// Matched codeword indices; the transmitter re-derives the configuration.
    Implicit,
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Explicit => "explicit",
            Self::Implicit => "implicit",
        })
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Self::Explicit),
            "implicit" => Ok(Self::Implicit),
            other => Err(Error::Parse(format!("unknown feedback mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackPayload<T> {
    Config(PilotConfig<T>),
    /// 0-based temporal and spectral codeword indices.
    Indices {
        m: usize,
        l: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackMessage<T> {
    pub epoch: u64,
    pub payload: FeedbackPayload<T>,
    pub bit_cost: u32,
}

impl<T> FeedbackMessage<T> {
    pub fn mode(&self) -> FeedbackMode {
        match self.payload {
            FeedbackPayload::Config(_) => FeedbackMode::Explicit,
            FeedbackPayload::Indices { .. } => FeedbackMode::Implicit,
        }
    }
}

/// One line per message; codeword indices are printed 1-based.
///
/// ```text
/// epoch=3 mode=explicit rho_db=-3 dpf=6 dpt=4 bits=9
/// epoch=3 mode=implicit m=5 l=2 bits=5
/// ```
impl<T: Real> fmt::Display for FeedbackMessage<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch={} mode={} ", self.epoch, self.mode())?;
        match self.payload {
            FeedbackPayload::Config(c) => write!(
                f,
                "rho_db={} dpf={} dpt={}",
                c.rho_db().as_f64(),
                c.dpf,
                c.dpt
            )?,
            FeedbackPayload::Indices { m, l } => write!(f, "m={} l={}", m + 1, l + 1)?,
        }
        write!(f, " bits={}", self.bit_cost)
    }
}

impl<T: Real> FromStr for FeedbackMessage<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed feedback line {s:?}"));
        let mut fields = std::collections::HashMap::new();
        for tok in s.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(bad)?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        let int = |k: &str| get(k)?.parse::<usize>().map_err(|_| bad());
        let epoch = get("epoch")?.parse::<u64>().map_err(|_| bad())?;
        let bit_cost = get("bits")?.parse::<u32>().map_err(|_| bad())?;
        let payload = match get("mode")?.parse::<FeedbackMode>()? {
            FeedbackMode::Explicit => {
                let rho_db: f64 = get("rho_db")?.parse().map_err(|_| bad())?;
                FeedbackPayload::Config(PilotConfig::new(
                    db_to_linear(T::lit(rho_db)),
                    int("dpf")?,
                    int("dpt")?,
                )?)
            }
            FeedbackMode::Implicit => {
                let (m, l) = (int("m")?, int("l")?);
                if m == 0 || l == 0 {
                    return Err(Error::Parse(format!("codeword indices are 1-based: {s:?}")));
                }
                FeedbackPayload::Indices { m: m - 1, l: l - 1 }
            }
        };
        Ok(Self {
            epoch,
            payload,
            bit_cost,
        })
    }
}

/// Configuration used before any feedback has arrived: -3 dB, dpf 6, dpt 4.
pub fn bootstrap_config<T: Real>() -> PilotConfig<T> {
    PilotConfig {
        rho: db_to_linear(T::lit(-3.0)),
        dpf: 6,
        dpt: 4,
    }
}

#[derive(Debug, Clone)]
pub struct EpochState<T> {
    pub epoch: u64,
    /// Window every epoch must span.
    pub window: GridDims<T>,
    /// Configuration in force during `epoch`.
    pub active: PilotConfig<T>,
    /// Configuration chosen during `epoch`, to be applied at `epoch + 1`.
    pub pending: Option<PilotConfig<T>>,
    pub last_match: Option<CodewordPair<T>>,
    pub last_estimate: Option<ChannelEstimate<T>>,
}

impl<T: Real> EpochState<T> {
    pub fn new(window: GridDims<T>, active: PilotConfig<T>) -> Self {
        Self {
            epoch: 0,
            window,
            active,
            pending: None,
            last_match: None,
            last_estimate: None,
        }
    }

    pub fn bootstrap(window: GridDims<T>) -> Self {
        Self::new(window, bootstrap_config())
    }

    /// Moves to the next epoch under `applied`, the configuration the
    /// transmitter derived from this epoch's feedback. It must equal the
    /// receiver's pending choice.
    pub fn advance(&mut self, applied: PilotConfig<T>) -> Result<()> {
        match self.pending.take() {
            Some(p) if p == applied => {
                self.active = applied;
                self.epoch += 1;
                Ok(())
            }
            Some(p) => Err(Error::Protocol(format!(
                "transmitter applied {applied:?} but receiver chose {p:?}"
            ))),
            None => Err(Error::Protocol(format!(
                "epoch {} ended without feedback",
                self.epoch
            ))),
        }
    }
}

/// Shared inputs of both link ends.
pub struct LinkContext<'a, T, P: ?Sized> {
    pub codebook: &'a Codebook<T>,
    pub sets: &'a FeasibleSets<T>,
    pub mode: FeedbackMode,
    pub mse: &'a P,
}

impl<T: Real, P: MseProvider<T> + ?Sized> LinkContext<'_, T, P> {
    pub fn bit_cost(&self) -> u32 {
        match self.mode {
            FeedbackMode::Explicit => feedback_bits_explicit(self.sets),
            FeedbackMode::Implicit => feedback_bits_implicit(self.codebook),
        }
    }
}

/// Receiver side of one epoch: estimate the channel from the pilots, match
/// its correlation to the codebook, pick the rate-maximizing configuration
/// and emit feedback. The choice is stored as pending in the returned state.
pub fn receiver_epoch<T: Real, P: MseProvider<T> + ?Sized>(
    received: &ResourceGrid<T>,
    state: &EpochState<T>,
    ctx: &LinkContext<'_, T, P>,
    cond: &LinkCondition<T>,
) -> Result<(FeedbackMessage<T>, EpochState<T>)> {
    if received.config != state.active {
        return Err(Error::Protocol(format!(
            "window carries {:?} but {:?} is active",
            received.config, state.active
        )));
    }
    let (w, d) = (&state.window, &received.dims);
    if (d.n_sub, d.n_sym) != (w.n_sub, w.n_sym) {
        return Err(Error::Protocol(format!(
            "window is {}x{}, expected {}x{}",
            d.n_sub, d.n_sym, w.n_sub, w.n_sym
        )));
    }
    let est = estimate_channel(received)?;
    let (r_t, r_f) =
        estimate_correlations(&est, ctx.codebook.time_lags(), ctx.codebook.freq_lags())?;
    let matched = ctx.codebook.nearest(&r_t, &r_f)?;
    let best = optimize(&matched, cond, ctx.sets, &state.window, ctx.mse)?;
    let payload = match ctx.mode {
        FeedbackMode::Explicit => FeedbackPayload::Config(best.config),
        FeedbackMode::Implicit => FeedbackPayload::Indices {
            m: matched.m,
            l: matched.l,
        },
    };
    let msg = FeedbackMessage {
        epoch: state.epoch,
        payload,
        bit_cost: ctx.bit_cost(),
    };
    let next = EpochState {
        pending: Some(best.config),
        last_match: Some(matched),
        last_estimate: Some(est),
        ..state.clone()
    };
    Ok((msg, next))
}

/// Transmitter side: the configuration to use from the next epoch on.
/// `cond` is the transmitter's view of the link, shared with the receiver.
pub fn transmitter_apply<T: Real, P: MseProvider<T> + ?Sized>(
    msg: &FeedbackMessage<T>,
    window: &GridDims<T>,
    ctx: &LinkContext<'_, T, P>,
    cond: &LinkCondition<T>,
) -> Result<PilotConfig<T>> {
    match msg.payload {
        FeedbackPayload::Config(cfg) => {
            cfg.validate().map_err(|e| Error::Protocol(e.to_string()))?;
            Ok(cfg)
        }
        FeedbackPayload::Indices { m, l } => {
            let stats = ctx.codebook.pair(m, l)?;
            Ok(optimize(&stats, cond, ctx.sets, window, ctx.mse)?.config)
        }
    }
}
