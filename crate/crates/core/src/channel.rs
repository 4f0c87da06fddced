//! Doubly selective air-to-ground channel: tapped delay line with an
//! exponential power delay profile and a Jakes Doppler spectrum per tap,
//! plus path loss, link budget and the mobility-induced ICI bound.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{power_allocation, GridDims, ResourceGrid};
use crate::scalar::{db_to_linear, Real};
use crate::seed;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default tap count of the tapped delay line.
pub const DEFAULT_TAPS: usize = 8;

/// Exponential decay of the discrete PDP, in units of tap spacing.
const PDP_DECAY_TAPS: f64 = 3.0;

/// Sinusoids per fading tap.
const SINUSOIDS: usize = 32;

/// Zeroth-order Bessel function of the first kind.
///
/// Evaluates `(1/2pi) * integral cos(x sin(theta))` over a full period with
/// the trapezoidal rule. The integrand is periodic and entire, so the rule's
/// error is bounded by `2 |J_N(x)|`, which is negligible once `N` comfortably
/// exceeds `|x|`.
pub fn bessel_j0<T: Real>(x: T) -> T {
    let ax = x.abs().as_f64();
    let n = 2 * (ax.ceil() as usize) + 40;
    let step = T::TAU() / T::from_usize_lossy(n);
    let mut acc = T::zero();
    for k in 0..n {
        acc += (x * (step * T::from_usize_lossy(k)).sin()).cos();
    }
    acc / T::from_usize_lossy(n)
}

/// Temporal correlation of a Jakes (Clarke) Doppler spectrum, `J0(2 pi f_d dt)`.
pub fn jakes_correlation<T: Real>(f_d: T, dt: T) -> T {
    bessel_j0(T::TAU() * f_d * dt)
}

/// Frequency correlation of a continuous exponential PDP with r.m.s. delay
/// spread `tau_rms`: `1 / (1 + j 2 pi df tau_rms)`.
pub fn pdp_frequency_correlation<T: Real>(tau_rms: T, df: T) -> Complex<T> {
    Complex::new(T::one(), T::TAU() * df * tau_rms).inv()
}

/// Maximum Doppler shift for speed `v_kmh` at carrier `f_c` Hz.
pub fn doppler_from_speed<T: Real>(v_kmh: T, f_c: T) -> T {
    v_kmh / T::lit(3.6) * f_c / T::lit(SPEED_OF_LIGHT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    /// Maximum Doppler shift in Hz.
    pub f_d: T,
    /// r.m.s. delay spread in seconds.
    pub tau_rms: T,
    pub n_taps: usize,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(f_d: T, tau_rms: T, n_taps: usize) -> Result<Self> {
        if !(f_d >= T::zero()) || !(tau_rms >= T::zero()) || n_taps == 0 {
            return Err(Error::Config(format!(
                "channel needs f_d >= 0, tau_rms >= 0, n_taps >= 1; got {f_d}, {tau_rms}, {n_taps}"
            )));
        }
        Ok(Self {
            f_d,
            tau_rms,
            n_taps,
        })
    }

    pub fn with_default_taps(f_d: T, tau_rms: T) -> Result<Self> {
        Self::new(f_d, tau_rms, DEFAULT_TAPS)
    }
}

/// Discrete power delay profile with unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile<T> {
    pub delays: Vec<T>,
    pub powers: Vec<T>,
}

impl<T: Real> PowerDelayProfile<T> {
    /// Uniformly spaced taps with exponentially decaying power. The tap
    /// spacing is scaled so the profile's r.m.s. delay spread equals `tau_rms`.
    pub fn exponential(tau_rms: T, n_taps: usize) -> Self {
        let n_taps = n_taps.max(1);
        let decay = T::lit(PDP_DECAY_TAPS);
        let raw: Vec<T> = (0..n_taps)
            .map(|k| (-T::from_usize_lossy(k) / decay).exp())
            .collect();
        let total: T = raw.iter().copied().sum();
        let powers: Vec<T> = raw.iter().map(|&p| p / total).collect();
        let unit_delays: Vec<T> = (0..n_taps).map(T::from_usize_lossy).collect();
        let unit_rms = rms_spread(&unit_delays, &powers);
        let spacing = if unit_rms > T::zero() {
            tau_rms / unit_rms
        } else {
            T::zero()
        };
        let delays = unit_delays.into_iter().map(|d| d * spacing).collect();
        Self { delays, powers }
    }

    /// Second central moment width of the profile.
    pub fn rms_delay_spread(&self) -> T {
        rms_spread(&self.delays, &self.powers)
    }

    /// `sum_k p_k exp(-j 2 pi df tau_k)`.
    pub fn frequency_correlation(&self, df: T) -> Complex<T> {
        self.delays
            .iter()
            .zip(&self.powers)
            .map(|(&d, &p)| Complex::from_polar(p, -T::TAU() * df * d))
            .sum()
    }
}

fn rms_spread<T: Real>(delays: &[T], powers: &[T]) -> T {
    let total: T = powers.iter().copied().sum();
    let mean: T = delays.iter().zip(powers).map(|(&d, &p)| d * p).sum::<T>() / total;
    let second: T = delays
        .iter()
        .zip(powers)
        .map(|(&d, &p)| d * d * p)
        .sum::<T>()
        / total;
    (second - mean * mean).max(T::zero()).sqrt()
}

/// Unit-power complex fading process with a Jakes spectrum, synthesized as a
/// sum of sinusoids with stratified arrival angles and random phases.
///
/// Angles are `(2 pi n + theta) / N` with one uniform `theta` per process, so
/// each angle is marginally uniform on the circle and the ensemble
/// autocorrelation is exactly `J0(2 pi f_d dt)`.
#[derive(Debug, Clone)]
pub struct JakesProcess<T> {
    dopplers: Vec<T>,
    phases: Vec<T>,
}

impl<T: Real> JakesProcess<T> {
    pub fn new<R: Rng + ?Sized>(f_d: T, rng: &mut R) -> Self {
        let n = SINUSOIDS;
        let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let dopplers = (0..n)
            .map(|i| {
                let alpha = (std::f64::consts::TAU * i as f64 + theta) / n as f64;
                f_d * T::lit(alpha.cos())
            })
            .collect();
        let phases = (0..n)
            .map(|_| T::lit(rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        Self { dopplers, phases }
    }

    /// Samples at `t = k * t_step` for `k in 0..n`.
    pub fn sample(&self, n: usize, t_step: T) -> Vec<Complex<T>> {
        const RESYNC: usize = 64;
        let scale = T::one() / T::from_usize_lossy(self.dopplers.len()).sqrt();
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for (&fd, &ph) in self.dopplers.iter().zip(&self.phases) {
            let w = T::TAU() * fd * t_step;
            let step = Complex::from_polar(T::one(), w);
            let mut rot = Complex::new(T::zero(), T::zero());
            for (k, o) in out.iter_mut().enumerate() {
                if k % RESYNC == 0 {
                    // recompute exactly to stop phasor drift
                    rot = Complex::from_polar(scale, ph + w * T::from_usize_lossy(k));
                } else {
                    rot *= step;
                }
                *o += rot;
            }
        }
        out
    }
}

/// Complex channel gains over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub dims: GridDims<T>,
    pub h: Vec<Complex<T>>,
    pub pdp: PowerDelayProfile<T>,
}

impl<T: Real> ChannelRealization<T> {
    #[inline]
    pub fn get(&self, f: usize, t: usize) -> Complex<T> {
        self.h[self.dims.index(f, t)]
    }

    pub fn mean_power(&self) -> T {
        self.h.iter().map(|c| c.norm_sqr()).sum::<T>() / T::from_usize_lossy(self.h.len())
    }

    /// Channel equal to `value` on every cell.
    pub fn constant(dims: GridDims<T>, value: Complex<T>) -> Self {
        Self {
            dims,
            h: vec![value; dims.n_cells()],
            pdp: PowerDelayProfile {
                delays: vec![T::zero()],
                powers: vec![T::one()],
            },
        }
    }
}

/// Draws one channel realization; identical seeds give identical output.
pub fn generate_channel<T: Real>(
    params: &ChannelParams<T>,
    dims: &GridDims<T>,
    seed: u64,
) -> ChannelRealization<T> {
    let pdp = PowerDelayProfile::exponential(params.tau_rms, params.n_taps);
    let mut h = vec![Complex::new(T::zero(), T::zero()); dims.n_cells()];
    let mut steering = vec![Complex::new(T::zero(), T::zero()); dims.n_sub];
    for (k, (&delay, &power)) in pdp.delays.iter().zip(&pdp.powers).enumerate() {
        let mut rng = seed::rng(seed, &[k as u64]);
        let gains = JakesProcess::new(params.f_d, &mut rng).sample(dims.n_sym, dims.t_sym);
        let amp = power.sqrt();
        for (f, s) in steering.iter_mut().enumerate() {
            *s = Complex::from_polar(
                amp,
                -T::TAU() * T::from_usize_lossy(f) * dims.delta_f * delay,
            );
        }
        for (t, g) in gains.iter().enumerate() {
            let row = &mut h[t * dims.n_sub..(t + 1) * dims.n_sub];
            for (cell, s) in row.iter_mut().zip(&steering) {
                *cell += g * s;
            }
        }
    }
    ChannelRealization {
        dims: *dims,
        h,
        pdp,
    }
}

/// Log-distance path loss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams<T> {
    pub a_db: T,
    pub n_exp: T,
    pub sigma_x_db: T,
    pub f_db: T,
    pub r_min: T,
    pub r_max: T,
}

impl<T: Real> PathLossParams<T> {
    /// Suburban/near-urban air-to-ground fit: A = 116 dB, n = 1.8,
    /// sigma_X = 3.1 dB, F = 2.3 dB over 1.7 km to 19 km.
    pub fn air_to_ground() -> Self {
        Self {
            a_db: T::lit(116.0),
            n_exp: T::lit(1.8),
            sigma_x_db: T::lit(3.1),
            f_db: T::lit(2.3),
            r_min: T::lit(1700.0),
            r_max: T::lit(19_000.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > T::zero() && self.r_min < self.r_max) || !(self.sigma_x_db >= T::zero()) {
            return Err(Error::Config(
                "path loss needs 0 < r_min < r_max and sigma_x >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// `A + 10 n log10(d / R_min) + X - F` in dB.
pub fn path_loss_db<T: Real>(d: T, params: &PathLossParams<T>, shadow_x_db: T) -> Result<T> {
    if !(d >= params.r_min && d <= params.r_max) {
        return Err(Error::Range(format!(
            "distance {d} m outside [{}, {}] m",
            params.r_min, params.r_max
        )));
    }
    Ok(
        params.a_db + T::lit(10.0) * params.n_exp * (d / params.r_min).log10() + shadow_x_db
            - params.f_db,
    )
}

/// Transmit power and thermal noise density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget<T> {
    pub tx_power_dbm: T,
    pub noise_psd_dbm_hz: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn reference() -> Self {
        Self {
            tx_power_dbm: T::lit(37.5),
            noise_psd_dbm_hz: T::lit(-174.0),
        }
    }

    /// Noise power over the occupied bandwidth `n_sub * delta_f`.
    pub fn noise_power_dbm(&self, dims: &GridDims<T>) -> T {
        self.noise_psd_dbm_hz
            + T::lit(10.0) * (T::from_usize_lossy(dims.n_sub) * dims.delta_f).log10()
    }

    pub fn snr_db(&self, path_loss_db: T, dims: &GridDims<T>) -> T {
        self.tx_power_dbm - path_loss_db - self.noise_power_dbm(dims)
    }
}

/// Receive SNR and the matching noise power relative to unit grid power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCondition<T> {
    pub snr_db: T,
    pub noise_power: T,
}

impl<T: Real> LinkCondition<T> {
    pub fn from_snr_db(snr_db: T) -> Self {
        Self {
            snr_db,
            noise_power: db_to_linear(-snr_db),
        }
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: T::infinity(),
            noise_power: T::zero(),
        }
    }
}

/// Doppler-induced ICI power at its upper bound, `(1/3) (pi f_d / delta_f)^2 sigma_d2`.
pub fn ici_power<T: Real>(f_d: T, delta_f: T, sigma_d2: T) -> T {
    let x = T::PI() * f_d / delta_f;
    x * x * sigma_d2 / T::lit(3.0)
}

/// Circularly symmetric complex Gaussian with power `power`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(power: T, rng: &mut R) -> Complex<T> {
    let s = (power / T::lit(2.0)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re) * s, T::lit(im) * s)
}

/// Passes a grid through the channel: `y = h x + w + i` per resource element,
/// with thermal noise `w` and ICI `i` drawn as independent complex Gaussians.
pub fn apply_channel<T: Real>(
    grid: &ResourceGrid<T>,
    ch: &ChannelRealization<T>,
    cond: &LinkCondition<T>,
    f_d: T,
    seed: u64,
) -> Result<ResourceGrid<T>> {
    if grid.dims.n_sub != ch.dims.n_sub || grid.dims.n_sym != ch.dims.n_sym {
        return Err(Error::Argument(format!(
            "grid is {}x{} but channel is {}x{}",
            grid.dims.n_sub, grid.dims.n_sym, ch.dims.n_sub, ch.dims.n_sym
        )));
    }
    let sigma_d2 = power_allocation(&grid.config, &grid.dims)?.sigma_d2;
    let impairment = cond.noise_power + ici_power(f_d, grid.dims.delta_f, sigma_d2);
    let faded = grid.cells.iter().zip(&ch.h).map(|(x, h)| h * x);
    let cells = if impairment > T::zero() {
        let mut rng = seed::rng(seed, &[]);
        faded
            .map(|y| y + complex_gaussian(impairment, &mut rng))
            .collect()
    } else {
        faded.collect()
    };
    grid.with_cells(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, pilot_positions, unit_pilots, PilotConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Power series `sum (-1)^k (x/2)^(2k) / (k!)^2`, carried to many terms.
    fn j0_series(x: f64) -> f64 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= -q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    /// Series truncated after the x^8 term.
    fn j0_series_x8(x: f64) -> f64 {
        let q = x * x / 4.0;
        1.0 - q + q * q / 4.0 - q.powi(3) / 36.0 + q.powi(4) / 576.0
    }

    #[test]
    fn j0_matches_series() {
        for i in 0..=120 {
            let x = i as f64 * 0.1;
            assert!((bessel_j0(x) - j0_series(x)).abs() < 1e-12, "x = {x}");
            assert!((bessel_j0(-x) - bessel_j0(x)).abs() < 1e-15);
        }
        // first zero
        assert!(bessel_j0(2.404_825_557_695_773_f64).abs() < 1e-14);
        // f32 path
        assert!((bessel_j0(1.0f32) - 0.765_197_7).abs() < 1e-6);
    }

    #[test]
    fn jakes_correlation_examples() {
        assert_eq!(jakes_correlation(550.0, 0.0), 1.0);
        let x = std::f64::consts::TAU * 550.0 * 71.875e-6;
        assert_relative_eq!(x, 0.24838, epsilon = 1e-4);
        let v = jakes_correlation(550.0, 71.875e-6);
        assert!((v - j0_series_x8(x)).abs() < 1e-12);
        assert!((v - 0.98465).abs() < 1e-4);
        let dt = 2.404_825_557_695_773 / std::f64::consts::TAU;
        assert!(jakes_correlation(1.0, dt).abs() < 1e-6);
    }

    #[test]
    fn pdp_correlation_examples() {
        assert_eq!(pdp_frequency_correlation(1e-6, 0.0), Complex::new(1.0, 0.0));
        assert_eq!(pdp_frequency_correlation(0.0, 15e3), Complex::new(1.0, 0.0));
        let r = pdp_frequency_correlation(1440e-9, 15e3);
        let x: f64 = std::f64::consts::TAU * 15e3 * 1440e-9;
        assert_relative_eq!(x, 0.13572, epsilon = 1e-5);
        assert_relative_eq!(r.norm(), 1.0 / (1.0 + x * x).sqrt(), epsilon = 1e-14);
        assert!((r.norm() - 0.99091).abs() < 1e-5);
    }

    #[test]
    fn exponential_pdp_hits_target_spread() {
        for tau in [221.5e-9, 476.4e-9, 791.2e-9, 1440e-9] {
            let pdp = PowerDelayProfile::<f64>::exponential(tau, DEFAULT_TAPS);
            assert_relative_eq!(pdp.powers.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!((pdp.rms_delay_spread() - tau).abs() / tau < 0.05);
        }
        let flat = PowerDelayProfile::<f64>::exponential(0.0, DEFAULT_TAPS);
        assert!(flat.delays.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn static_flat_channel_is_constant() {
        let dims = GridDims::<f64>::new(16, 40, 15e3, 71.875e-6).unwrap();
        let ch = generate_channel(&ChannelParams::new(0.0, 0.0, 1).unwrap(), &dims, 3);
        let h0 = ch.h[0];
        assert!(ch.h.iter().all(|&h| (h - h0).norm() < 1e-12));
    }

    #[test]
    fn generation_is_deterministic() {
        let dims = GridDims::<f64>::new(12, 50, 15e3, 71.875e-6).unwrap();
        let p = ChannelParams::with_default_taps(550.0, 476.4e-9).unwrap();
        assert_eq!(
            generate_channel(&p, &dims, 9),
            generate_channel(&p, &dims, 9)
        );
        assert_ne!(
            generate_channel(&p, &dims, 9).h,
            generate_channel(&p, &dims, 10).h
        );
    }

    #[test]
    fn unit_average_channel_power() {
        let dims = GridDims::<f64>::new(72, 1500, 15e3, 71.875e-6).unwrap();
        let p = ChannelParams::with_default_taps(1150.0, 476.4e-9).unwrap();
        let mut total = 0.0;
        let seeds = 20;
        for s in 0..seeds {
            total += generate_channel(&p, &dims, s).mean_power();
        }
        let mean = total / seeds as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean power {mean}");
    }

    #[test]
    fn temporal_acf_follows_jakes() {
        let dims = GridDims::<f64>::new(8, 1500, 15e3, 71.875e-6).unwrap();
        let p = ChannelParams::with_default_taps(550.0, 221.5e-9).unwrap();
        let seeds = 20;
        let mut acf = [Complex::new(0.0, 0.0); 11];
        for s in 0..seeds {
            let ch = generate_channel(&p, &dims, 100 + s);
            let mut local = [Complex::new(0.0, 0.0); 11];
            for (lag, slot) in local.iter_mut().enumerate() {
                for t in 0..dims.n_sym - lag {
                    for f in 0..dims.n_sub {
                        *slot += ch.get(f, t + lag) * ch.get(f, t).conj();
                    }
                }
                *slot /= (dims.n_sym - lag) as f64;
            }
            let norm = local[0].re;
            for (a, l) in acf.iter_mut().zip(local) {
                *a += l / norm / seeds as f64;
            }
        }
        for (lag, a) in acf.iter().enumerate() {
            let want = jakes_correlation(550.0, lag as f64 * dims.t_sym);
            assert!((a.re - want).abs() <= 0.05, "lag {lag}: {} vs {want}", a.re);
        }
    }

    #[test]
    fn path_loss_examples() {
        let p = PathLossParams::<f64>::air_to_ground();
        assert_relative_eq!(
            path_loss_db(1700.0, &p, 0.0).unwrap(),
            113.7,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            path_loss_db(17_000.0, &p, 0.0).unwrap(),
            131.7,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            path_loss_db(1700.0, &p, 3.1).unwrap(),
            116.8,
            epsilon = 1e-12
        );
        assert!(matches!(
            path_loss_db(1000.0, &p, 0.0),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            path_loss_db(20_000.0, &p, 0.0),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn link_budget_at_minimum_range() {
        let dims = GridDims::<f64>::reference();
        let lb = LinkBudget::reference();
        assert!((lb.noise_power_dbm(&dims) - -113.666).abs() < 1e-3);
        let pl = path_loss_db(1700.0, &PathLossParams::air_to_ground(), 0.0).unwrap();
        assert!((lb.snr_db(pl, &dims) - 37.47).abs() < 0.01);
        let c = LinkCondition::from_snr_db(20.0);
        assert_relative_eq!(c.noise_power, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn ici_examples() {
        assert_eq!(ici_power(0.0, 15e3, 1.0), 0.0);
        assert!((ici_power(1150.0_f64, 15e3, 1.0) - 0.019_338).abs() < 1e-6);
        assert!((ici_power(4.6_f64, 15e3, 1.0) - 3.1e-7).abs() < 0.05e-7);
    }

    #[test]
    fn doppler_from_speed_examples() {
        assert!((doppler_from_speed(300.0_f64, 5e9) - 1389.0).abs() < 1.5);
        assert!((doppler_from_speed(50.0_f64, 5e9) - 232.0).abs() < 0.5);
    }

    fn ones_grid(cfg: &PilotConfig<f64>, dims: &GridDims<f64>) -> ResourceGrid<f64> {
        let n_p = pilot_positions(cfg, dims).unwrap().len();
        build_grid(
            cfg,
            dims,
            &unit_pilots(dims.n_cells() - n_p),
            &unit_pilots(n_p),
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_passes_through() {
        let dims = GridDims::<f64>::new(12, 8, 15e3, 71.875e-6).unwrap();
        let g = ones_grid(&PilotConfig::from_db(-3.0, 6, 4).unwrap(), &dims);
        let ch = ChannelRealization::constant(dims, Complex::new(1.0, 0.0));
        let y = apply_channel(&g, &ch, &LinkCondition::noiseless(), 0.0, 1).unwrap();
        assert_eq!(y.cells, g.cells);
    }

    #[test]
    fn zero_input_shows_impairment_power() {
        let dims = GridDims::<f64>::new(72, 400, 15e3, 71.875e-6).unwrap();
        let cfg = PilotConfig::from_db(-3.0, 6, 4).unwrap();
        let g = ones_grid(&cfg, &dims);
        let g = g
            .with_cells(vec![Complex::new(0.0, 0.0); dims.n_cells()])
            .unwrap();
        let ch = ChannelRealization::constant(dims, Complex::new(1.0, 0.0));
        let cond = LinkCondition::from_snr_db(20.0);
        let y = apply_channel(&g, &ch, &cond, 1150.0, 5).unwrap();
        let sd2 = power_allocation(&cfg, &dims).unwrap().sigma_d2;
        let want = 0.01 + ici_power(1150.0, 15e3, sd2);
        assert!((y.mean_power() - want).abs() / want < 0.05);
    }

    #[test]
    fn noise_only_mse() {
        let dims = GridDims::<f64>::new(72, 400, 15e3, 71.875e-6).unwrap();
        let g = ones_grid(&PilotConfig::from_db(0.0, 4, 2).unwrap(), &dims);
        let ch = ChannelRealization::constant(dims, Complex::new(1.0, 0.0));
        let y = apply_channel(&g, &ch, &LinkCondition::from_snr_db(20.0), 0.0, 5).unwrap();
        let mse = y
            .cells
            .iter()
            .zip(&g.cells)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / dims.n_cells() as f64;
        assert!((mse - 0.01).abs() / 0.01 < 0.05);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let dims = GridDims::<f64>::new(12, 8, 15e3, 71.875e-6).unwrap();
        let g = ones_grid(&PilotConfig::from_db(-3.0, 6, 4).unwrap(), &dims);
        let ch =
            ChannelRealization::constant(dims.with_symbols(9).unwrap(), Complex::new(1.0, 0.0));
        assert!(matches!(
            apply_channel(&g, &ch, &LinkCondition::noiseless(), 0.0, 1),
            Err(Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn ici_monotone(fd in 0.0f64..2000.0, df in 1e3f64..60e3, sd in 0.01f64..4.0) {
            prop_assert!(ici_power(fd + 1.0, df, sd) > ici_power(fd, df, sd));
            prop_assert!(ici_power(fd, df, sd * 1.1) >= ici_power(fd, df, sd));
            prop_assert!(ici_power(fd, df * 1.1, sd) <= ici_power(fd, df, sd));
        }

        #[test]
        fn path_loss_monotone(d in 1700.0f64..18_000.0, x in -10.0f64..10.0) {
            let p = PathLossParams::air_to_ground();
            prop_assert!(path_loss_db(d + 100.0, &p, x).unwrap() > path_loss_db(d, &p, x).unwrap());
        }

        #[test]
        fn pdp_correlation_bounded(tau in 0.0f64..5e-6, df in 0.0f64..2e6) {
            prop_assert!(pdp_frequency_correlation(tau, df).norm() <= 1.0 + 1e-15);
        }
    }
}
