//! Pilot-aided channel estimation and channel statistics estimation.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_channel, generate_channel, ChannelParams, ChannelRealization, LinkCondition,
};
use crate::error::{Error, Result};
use crate::grid::{
    build_grid, pilot_positions, power_allocation, unit_pilots, GridDims, PilotConfig, ResourceGrid,
};
use crate::scalar::Real;
use crate::seed;

/// A complex value attached to one resource element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValue<T> {
    pub f: usize,
    pub t: usize,
    pub value: Complex<T>,
}

/// Pilot symbols as transmitted (after power scaling) for `cfg`.
pub fn known_pilots<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
) -> Result<Vec<CellValue<T>>> {
    let amp = power_allocation(cfg, dims)?.sigma_p2.sqrt();
    Ok(pilot_positions(cfg, dims)?
        .into_iter()
        .map(|(f, t)| CellValue {
            f,
            t,
            value: Complex::new(amp, T::zero()),
        })
        .collect())
}

/// Least-squares channel estimates `y_p / x_p` at every sent pilot.
pub fn ls_at_pilots<T: Real>(
    received: &ResourceGrid<T>,
    sent: &[CellValue<T>],
) -> Result<Vec<CellValue<T>>> {
    sent.iter()
        .map(|p| {
            if p.f >= received.dims.n_sub || p.t >= received.dims.n_sym {
                return Err(Error::Argument(format!(
                    "pilot ({}, {}) outside grid",
                    p.f, p.t
                )));
            }
            if p.value.norm_sqr() == T::zero() {
                return Err(Error::Argument(format!(
                    "zero pilot symbol at ({}, {})",
                    p.f, p.t
                )));
            }
            Ok(CellValue {
                f: p.f,
                t: p.t,
                value: received.get(p.f, p.t) / p.value,
            })
        })
        .collect()
}

/// Channel estimate over a full window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate<T> {
    pub dims: GridDims<T>,
    pub h_hat: Vec<Complex<T>>,
}

impl<T: Real> ChannelEstimate<T> {
    #[inline]
    pub fn get(&self, f: usize, t: usize) -> Complex<T> {
        self.h_hat[self.dims.index(f, t)]
    }
}

/// Linear interpolation of sorted `(position, value)` knots onto `0..n`,
/// holding the edge knots constant outside their span.
fn interpolate_line<T: Real>(knots: &[(usize, Complex<T>)], n: usize, out: &mut [Complex<T>]) {
    let mut j = 0;
    for (x, slot) in out.iter_mut().enumerate().take(n) {
        while j + 1 < knots.len() && knots[j + 1].0 <= x {
            j += 1;
        }
        let (x0, v0) = knots[j];
        *slot = if x <= x0 || j + 1 == knots.len() {
            v0
        } else {
            let (x1, v1) = knots[j + 1];
            let w = T::from_usize_lossy(x - x0) / T::from_usize_lossy(x1 - x0);
            v0 + (v1 - v0) * w
        };
    }
}

/// Two-pass linear interpolation: along frequency on every pilot-bearing
/// symbol, then along time on every subcarrier. Cells outside the pilot span
/// take the nearest edge value; pilot cells keep their input value.
pub fn interpolate_2d<T: Real>(
    estimates: &[CellValue<T>],
    dims: &GridDims<T>,
) -> Result<ChannelEstimate<T>> {
    if estimates.is_empty() {
        return Err(Error::Argument("no pilot estimates to interpolate".into()));
    }
    let mut by_symbol: BTreeMap<usize, BTreeMap<usize, Complex<T>>> = BTreeMap::new();
    for e in estimates {
        if e.f >= dims.n_sub || e.t >= dims.n_sym {
            return Err(Error::Argument(format!(
                "estimate ({}, {}) outside grid",
                e.f, e.t
            )));
        }
        by_symbol.entry(e.t).or_default().insert(e.f, e.value);
    }

    let zero = Complex::new(T::zero(), T::zero());
    let mut columns: Vec<(usize, Vec<Complex<T>>)> = Vec::with_capacity(by_symbol.len());
    for (t, row) in &by_symbol {
        let knots: Vec<_> = row.iter().map(|(&f, &v)| (f, v)).collect();
        let mut col = vec![zero; dims.n_sub];
        interpolate_line(&knots, dims.n_sub, &mut col);
        columns.push((*t, col));
    }

    let mut h_hat = vec![zero; dims.n_cells()];
    let mut j = 0;
    for t in 0..dims.n_sym {
        while j + 1 < columns.len() && columns[j + 1].0 <= t {
            j += 1;
        }
        let row = &mut h_hat[t * dims.n_sub..(t + 1) * dims.n_sub];
        let (t0, ref c0) = columns[j];
        if t <= t0 || j + 1 == columns.len() {
            row.copy_from_slice(c0);
        } else {
            let (t1, ref c1) = columns[j + 1];
            let w = T::from_usize_lossy(t - t0) / T::from_usize_lossy(t1 - t0);
            for ((cell, &a), &b) in row.iter_mut().zip(c0).zip(c1) {
                *cell = a + (b - a) * w;
            }
        }
    }
    Ok(ChannelEstimate { dims: *dims, h_hat })
}

/// LS at the pilots of `received.config`, then 2-D interpolation.
pub fn estimate_channel<T: Real>(received: &ResourceGrid<T>) -> Result<ChannelEstimate<T>> {
    let sent = known_pilots(&received.config, &received.dims)?;
    interpolate_2d(&ls_at_pilots(received, &sent)?, &received.dims)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationDomain {
    Time,
    Frequency,
}

/// Correlation values at lags `0..=max_lag`. The value at lag `k` stands for
/// `E[h(x + k) h*(x)]`; negative lags are the conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile<T> {
    pub lags: Vec<Complex<T>>,
    pub domain: CorrelationDomain,
    /// Seconds per lag (time) or Hz per lag (frequency).
    pub lag_step: T,
}

impl<T: Real> CorrelationProfile<T> {
    pub fn max_lag(&self) -> usize {
        self.lags.len().saturating_sub(1)
    }

    /// Rescales so the lag-0 value is exactly `1 + 0j`.
    pub fn normalized(&self) -> Result<Self> {
        let r0 = self.lags.first().map(|c| c.re).unwrap_or_else(T::zero);
        if !(r0 > T::zero()) || !r0.is_finite() {
            return Err(Error::Argument(format!(
                "profile has non-positive lag-0 value {r0}"
            )));
        }
        let mut lags: Vec<_> = self.lags.iter().map(|c| c / r0).collect();
        lags[0] = Complex::new(T::one(), T::zero());
        Ok(Self {
            lags,
            domain: self.domain,
            lag_step: self.lag_step,
        })
    }

    /// Euclidean norm of the lag-wise difference.
    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.lags.len() != other.lags.len() {
            return Err(Error::Argument(format!(
                "profile lengths differ: {} vs {}",
                self.lags.len(),
                other.lags.len()
            )));
        }
        Ok(self
            .lags
            .iter()
            .zip(&other.lags)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt())
    }
}

/// Temporal and spectral correlation of an estimated channel window,
/// averaged along the diagonals of `H^H H` and `H H^H`, each normalized to
/// unit lag-0 value. Profiles cover lags `0..=n_dt` and `0..=n_df`.
pub fn estimate_correlations<T: Real>(
    est: &ChannelEstimate<T>,
    n_dt: usize,
    n_df: usize,
) -> Result<(CorrelationProfile<T>, CorrelationProfile<T>)> {
    let d = est.dims;
    if n_dt >= d.n_sym || n_df >= d.n_sub {
        return Err(Error::Argument(format!(
            "lag counts {n_dt}/{n_df} need a window larger than {}x{}",
            d.n_sub, d.n_sym
        )));
    }
    let h = &est.h_hat;
    let zero = Complex::new(T::zero(), T::zero());

    let time: Vec<Complex<T>> = (0..=n_dt)
        .map(|lag| {
            let span = d.n_sym - lag;
            let acc: Complex<T> = (0..span)
                .map(|t| {
                    let a = &h[(t + lag) * d.n_sub..(t + lag + 1) * d.n_sub];
                    let b = &h[t * d.n_sub..(t + 1) * d.n_sub];
                    a.iter().zip(b).fold(zero, |s, (x, y)| s + x * y.conj())
                })
                .sum();
            acc / T::from_usize_lossy(span)
        })
        .collect();

    let freq: Vec<Complex<T>> = (0..=n_df)
        .map(|lag| {
            let span = d.n_sub - lag;
            let acc: Complex<T> = h
                .chunks_exact(d.n_sub)
                .map(|row| {
                    row[lag..]
                        .iter()
                        .zip(&row[..span])
                        .fold(zero, |s, (x, y)| s + x * y.conj())
                })
                .sum();
            acc / T::from_usize_lossy(span)
        })
        .collect();

    let time = CorrelationProfile {
        lags: time,
        domain: CorrelationDomain::Time,
        lag_step: d.t_sym,
    };
    let freq = CorrelationProfile {
        lags: freq,
        domain: CorrelationDomain::Frequency,
        lag_step: d.delta_f,
    };
    Ok((time.normalized()?, freq.normalized()?))
}

/// Mean `|H_hat - H|^2` over the data cells of `cfg`.
pub fn data_cell_mse<T: Real>(
    est: &ChannelEstimate<T>,
    ch: &ChannelRealization<T>,
    pilot_mask: &[bool],
) -> T {
    let (sum, n) = est
        .h_hat
        .iter()
        .zip(&ch.h)
        .zip(pilot_mask)
        .filter(|(_, &p)| !p)
        .fold((T::zero(), 0usize), |(s, n), ((a, b), _)| {
            (s + (a - b).norm_sqr(), n + 1)
        });
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(n)
    }
}

/// Estimation MSE at the data cells of one known channel, with pilots
/// received at average SNR `pilot_snr` (linear). No ICI is added: the pilot
/// SNR is the whole impairment budget.
pub fn mse_on_channel<T: Real>(
    cfg: &PilotConfig<T>,
    ch: &ChannelRealization<T>,
    pilot_snr: T,
    seed: u64,
) -> Result<T> {
    let dims = ch.dims;
    let n_p = pilot_positions(cfg, &dims)?.len();
    let grid = build_grid(
        cfg,
        &dims,
        &unit_pilots(dims.n_cells() - n_p),
        &unit_pilots(n_p),
    )?;
    let sigma_p2 = power_allocation(cfg, &dims)?.sigma_p2;
    let noise = if pilot_snr.is_infinite() {
        T::zero()
    } else {
        sigma_p2 / pilot_snr
    };
    let cond = LinkCondition {
        snr_db: T::nan(),
        noise_power: noise,
    };
    let received = apply_channel(&grid, ch, &cond, T::zero(), seed)?;
    let est = estimate_channel(&received)?;
    Ok(data_cell_mse(&est, ch, &grid.pilot_mask))
}

/// Monte Carlo estimate of the data-cell estimation MSE for `cfg` over
/// channels with Doppler `f_d` and delay spread `tau_rms`, per unit channel power.
pub fn empirical_mse<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
    f_d: T,
    tau_rms: T,
    pilot_snr: T,
    trials: usize,
    seed: u64,
) -> Result<T> {
    if trials == 0 {
        return Err(Error::Argument(
            "empirical MSE needs at least one trial".into(),
        ));
    }
    let params = ChannelParams::with_default_taps(f_d, tau_rms)?;
    let mut total = T::zero();
    for trial in 0..trials as u64 {
        let ch = generate_channel(&params, dims, seed::derive(seed, &[trial, 0]));
        total += mse_on_channel(cfg, &ch, pilot_snr, seed::derive(seed, &[trial, 1]))?;
    }
    Ok(total / T::from_usize_lossy(trials))
}
