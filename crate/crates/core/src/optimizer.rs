//! Rate objective and exhaustive search over the discrete pilot configurations.

use rayon::prelude::*;

use crate::channel::{ici_power, LinkCondition};
use crate::codebook::{Codebook, CodewordPair};
use crate::error::{Error, Result};
use crate::grid::{power_allocation, spectrum_utilization, GridDims, PilotConfig};
use crate::scalar::{db_to_linear, Real};

/// Candidate values for the power ratio and both pilot spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSets<T> {
    /// Data-to-pilot power ratios, linear.
    pub powers: Vec<T>,
    pub freq_spacings: Vec<usize>,
    pub time_spacings: Vec<usize>,
}

impl<T: Real> FeasibleSets<T> {
    pub fn new(
        powers: Vec<T>,
        freq_spacings: Vec<usize>,
        time_spacings: Vec<usize>,
    ) -> Result<Self> {
        let sets = Self {
            powers,
            freq_spacings,
            time_spacings,
        };
        sets.validate()?;
        Ok(sets)
    }

    /// Powers {-10, -9, -7, -5, -3, 0} dB, frequency spacings 2..=12 step 2,
    /// time spacings 1..=10.
    pub fn standard() -> Self {
        Self {
            powers: [-10.0, -9.0, -7.0, -5.0, -3.0, 0.0]
                .iter()
                .map(|&db| db_to_linear(T::lit(db)))
                .collect(),
            freq_spacings: (2..=12).step_by(2).collect(),
            time_spacings: (1..=10).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers.is_empty() || self.freq_spacings.is_empty() || self.time_spacings.is_empty()
        {
            return Err(Error::Config("feasible sets must be non-empty".into()));
        }
        if self.freq_spacings.iter().any(|&d| d < 2) || self.time_spacings.iter().any(|&d| d < 1) {
            return Err(Error::Config(
                "spacings must satisfy dpf >= 2 and dpt >= 1".into(),
            ));
        }
        if self
            .powers
            .iter()
            .any(|&p| !(p > T::zero()) || !p.is_finite())
        {
            return Err(Error::Config(
                "power ratios must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.powers.len() * self.freq_spacings.len() * self.time_spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every configuration, powers outermost.
    pub fn configs(&self) -> Vec<PilotConfig<T>> {
        let mut out = Vec::with_capacity(self.len());
        for &rho in &self.powers {
            for &dpf in &self.freq_spacings {
                for &dpt in &self.time_spacings {
                    out.push(PilotConfig { rho, dpf, dpt });
                }
            }
        }
        out
    }
}

/// Inputs of the post-equalization SINR of a zero-forcing receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms<T> {
    pub sigma_d2: T,
    pub sigma_w2: T,
    pub sigma_ici2: T,
    pub sigma_mse2: T,
    /// ZF noise enhancement factor; 1 for single-antenna links.
    pub sigma_zf: T,
}

impl<T: Real> SinrTerms<T> {
    pub fn siso(sigma_d2: T, sigma_w2: T, sigma_ici2: T, sigma_mse2: T) -> Self {
        Self {
            sigma_d2,
            sigma_w2,
            sigma_ici2,
            sigma_mse2,
            sigma_zf: T::one(),
        }
    }
}

/// `sigma_d2 sigma_zf / (sigma_w2 + sigma_ici2 + sigma_mse2 sigma_d2)`.
pub fn post_eq_sinr<T: Real>(t: &SinrTerms<T>) -> Result<T> {
    let denom = t.sigma_w2 + t.sigma_ici2 + t.sigma_mse2 * t.sigma_d2;
    if !(denom > T::zero()) {
        return Err(Error::Domain(format!(
            "SINR denominator is {denom}; noiseless perfect-CSI links have unbounded SINR"
        )));
    }
    Ok(t.sigma_d2 * t.sigma_zf / denom)
}

/// Achievable-rate bound `S log2(1 + SINR)` for one configuration.
pub fn rate_objective<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
    cond: &LinkCondition<T>,
    f_d: T,
    mse: T,
) -> Result<T> {
    let s = spectrum_utilization(cfg, dims)?;
    if s <= T::zero() {
        return Ok(T::zero());
    }
    let power = power_allocation(cfg, dims)?;
    let terms = SinrTerms::siso(
        power.sigma_d2,
        cond.noise_power,
        ici_power(f_d, dims.delta_f, power.sigma_d2),
        mse,
    );
    let sinr = if mse.is_infinite() {
        T::zero()
    } else {
        post_eq_sinr(&terms)?
    };
    Ok(s * sinr.ln_1p() / T::LN_2())
}

/// Supplies the channel estimation MSE of a configuration under given
/// channel statistics and average pilot SNR (linear).
pub trait MseProvider<T>: Sync {
    fn mse(&self, cfg: &PilotConfig<T>, stats: &CodewordPair<T>, pilot_snr: T) -> Result<T>;
}

impl<T, F> MseProvider<T> for F
where
    F: Fn(&PilotConfig<T>, &CodewordPair<T>, T) -> T + Sync,
{
    fn mse(&self, cfg: &PilotConfig<T>, stats: &CodewordPair<T>, pilot_snr: T) -> Result<T> {
        Ok(self(cfg, stats, pilot_snr))
    }
}

/// Average pilot SNR `sigma_p2 / sigma_w2` of a configuration.
pub fn pilot_snr<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
    cond: &LinkCondition<T>,
) -> Result<T> {
    let sigma_p2 = power_allocation(cfg, dims)?.sigma_p2;
    Ok(if cond.noise_power > T::zero() {
        sigma_p2 / cond.noise_power
    } else {
        T::infinity()
    })
}

/// Objective of `cfg` under matched statistics, with the MSE drawn from `provider`.
pub fn evaluate<T: Real, P: MseProvider<T> + ?Sized>(
    cfg: &PilotConfig<T>,
    stats: &CodewordPair<T>,
    cond: &LinkCondition<T>,
    dims: &GridDims<T>,
    provider: &P,
) -> Result<T> {
    let mse = provider.mse(cfg, stats, pilot_snr(cfg, dims, cond)?)?;
    rate_objective(cfg, dims, cond, stats.f_d, mse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum<T> {
    pub config: PilotConfig<T>,
    pub objective: T,
}

/// Total order used to pick among candidates: higher objective, then fewer
/// pilots, then higher power ratio, then lower frequency spacing.
pub fn prefer<T: Real>(a: &Optimum<T>, b: &Optimum<T>) -> bool {
    let (oa, ob) = (a.objective, b.objective);
    if oa != ob {
        return match (oa.is_nan(), ob.is_nan()) {
            (false, true) => true,
            (true, _) => false,
            _ => oa > ob,
        };
    }
    let (ca, cb) = (&a.config, &b.config);
    if ca.sparsity() != cb.sparsity() {
        return ca.sparsity() > cb.sparsity();
    }
    if ca.rho != cb.rho {
        return ca.rho > cb.rho;
    }
    ca.dpf < cb.dpf
}

/// Exhaustive search over `sets` for the rate-maximizing configuration.
pub fn optimize<T: Real, P: MseProvider<T> + ?Sized>(
    stats: &CodewordPair<T>,
    cond: &LinkCondition<T>,
    sets: &FeasibleSets<T>,
    dims: &GridDims<T>,
    provider: &P,
) -> Result<Optimum<T>> {
    sets.validate()?;
    let scored = sets
        .configs()
        .into_par_iter()
        .map(|config| {
            Ok(Optimum {
                config,
                objective: evaluate(&config, stats, cond, dims, provider)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scored
        .into_iter()
        .reduce(|best, c| if prefer(&c, &best) { c } else { best })
        .ok_or_else(|| Error::Config("feasible sets must be non-empty".into()))
}

/// Smallest `b` with `2^b >= n`.
pub fn ceil_log2(n: usize) -> u32 {
    n.max(1).next_power_of_two().trailing_zeros()
}

/// Bits to index one configuration of `sets`.
pub fn feedback_bits_explicit<T: Real>(sets: &FeasibleSets<T>) -> u32 {
    ceil_log2(sets.len())
}

/// Bits to index one temporal/spectral codeword pair.
pub fn feedback_bits_implicit<T: Real>(cb: &Codebook<T>) -> u32 {
    ceil_log2(cb.m_t() * cb.m_f())
}

/// Feedback rate in bps for one message per window.
pub fn feedback_rate<T: Real>(bits: u32, dims: &GridDims<T>) -> T {
    T::from_u32(bits).unwrap_or_else(T::zero) / dims.duration()
}

pub fn feedback_rate_explicit<T: Real>(sets: &FeasibleSets<T>, dims: &GridDims<T>) -> T {
    feedback_rate(feedback_bits_explicit(sets), dims)
}

pub fn feedback_rate_implicit<T: Real>(cb: &Codebook<T>, dims: &GridDims<T>) -> T {
    feedback_rate(feedback_bits_implicit(cb), dims)
}
