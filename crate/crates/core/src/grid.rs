//! OFDM resource grid, diamond pilot lattice and data/pilot power split.
//!
//! Cells are stored symbol-major: index `t * n_sub + f` for subcarrier `f`
//! and OFDM symbol `t`, so one OFDM symbol is a contiguous slice.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, linear_to_db, Real};

/// Shape and timing of one estimation window of the time-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDims<T> {
    pub n_sub: usize,
    pub n_sym: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: T,
    /// OFDM symbol duration in seconds, cyclic prefix included.
    pub t_sym: T,
}

impl<T: Real> GridDims<T> {
    pub fn new(n_sub: usize, n_sym: usize, delta_f: T, t_sym: T) -> Result<Self> {
        if n_sub < 2 || n_sym < 1 {
            return Err(Error::Config(format!(
                "grid needs n_sub >= 2 and n_sym >= 1, got {n_sub}x{n_sym}"
            )));
        }
        if !(delta_f > T::zero()) || !(t_sym > T::zero()) {
            return Err(Error::Config(format!(
                "subcarrier spacing and symbol duration must be positive, got {delta_f} Hz / {t_sym} s"
            )));
        }
        Ok(Self {
            n_sub,
            n_sym,
            delta_f,
            t_sym,
        })
    }

    /// 72 subcarriers at 15 kHz, 71.875 us symbols, 1500-symbol window.
    pub fn reference() -> Self {
        Self {
            n_sub: 72,
            n_sym: 1500,
            delta_f: T::lit(15e3),
            t_sym: T::lit(71.875e-6),
        }
    }

    /// Same numerology with a different window length.
    pub fn with_symbols(&self, n_sym: usize) -> Result<Self> {
        Self::new(self.n_sub, n_sym, self.delta_f, self.t_sym)
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_sub * self.n_sym
    }

    #[inline]
    pub fn index(&self, f: usize, t: usize) -> usize {
        t * self.n_sub + f
    }

    /// Window duration in seconds.
    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.n_sym) * self.t_sym
    }
}

/// Pilot pattern: data-to-pilot power ratio and lattice spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig<T> {
    /// Data-to-pilot power ratio, linear.
    pub rho: T,
    /// Pilot spacing in subcarriers.
    pub dpf: usize,
    /// Pilot spacing in OFDM symbols.
    pub dpt: usize,
}

impl<T: Real> PilotConfig<T> {
    pub fn new(rho: T, dpf: usize, dpt: usize) -> Result<Self> {
        let cfg = Self { rho, dpf, dpt };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_db(rho_db: T, dpf: usize, dpt: usize) -> Result<Self> {
        Self::new(db_to_linear(rho_db), dpf, dpt)
    }

    pub fn rho_db(&self) -> T {
        linear_to_db(self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dpf < 2 {
            return Err(Error::Config(format!(
                "frequency pilot spacing must be >= 2, got {}",
                self.dpf
            )));
        }
        if self.dpt < 1 {
            return Err(Error::Config(format!(
                "time pilot spacing must be >= 1, got {}",
                self.dpt
            )));
        }
        if !(self.rho > T::zero()) || !self.rho.is_finite() {
            return Err(Error::Config(format!(
                "power ratio must be positive and finite, got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// Product `dpf * dpt`; larger means fewer pilots.
    pub fn sparsity(&self) -> usize {
        self.dpf * self.dpt
    }
}

#[inline]
fn in_comb_a(dpf: usize, dpt: usize, f: usize, t: usize) -> bool {
    f.is_multiple_of(dpf) && t.is_multiple_of(dpt)
}

#[inline]
fn in_comb_b(dpf: usize, dpt: usize, f: usize, t: usize) -> bool {
    f % dpf == dpf / 2 && t % dpt == dpt / 2
}

/// Whether `(f, t)` carries a pilot under the diamond lattice of `cfg`.
#[inline]
pub fn is_pilot<T>(cfg: &PilotConfig<T>, f: usize, t: usize) -> bool {
    in_comb_a(cfg.dpf, cfg.dpt, f, t) || in_comb_b(cfg.dpf, cfg.dpt, f, t)
}

/// Pilot positions `(subcarrier, symbol)` of the diamond lattice, ordered by
/// symbol then subcarrier.
///
/// The lattice is the union of two rectangular combs: one anchored at
/// `(0, 0)` and one offset by `(dpf / 2, dpt / 2)`.
pub fn pilot_positions<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for t in 0..dims.n_sym {
        let a_row = t % cfg.dpt == 0;
        let b_row = t % cfg.dpt == cfg.dpt / 2;
        if !(a_row || b_row) {
            continue;
        }
        for f in 0..dims.n_sub {
            if (a_row && f % cfg.dpf == 0) || (b_row && f % cfg.dpf == cfg.dpf / 2) {
                out.push((f, t));
            }
        }
    }
    Ok(out)
}

/// Boolean pilot mask in grid storage order.
pub fn pilot_mask<T: Real>(cfg: &PilotConfig<T>, dims: &GridDims<T>) -> Result<Vec<bool>> {
    let mut mask = vec![false; dims.n_cells()];
    for (f, t) in pilot_positions(cfg, dims)? {
        mask[dims.index(f, t)] = true;
    }
    Ok(mask)
}

/// Number of indices `i < n` with `i % step == offset`.
fn comb_count(n: usize, step: usize, offset: usize) -> usize {
    if n > offset {
        (n - offset - 1) / step + 1
    } else {
        0
    }
}

/// Pilot count of the lattice, without enumerating cells.
pub fn pilot_count<T: Real>(cfg: &PilotConfig<T>, dims: &GridDims<T>) -> Result<usize> {
    cfg.validate()?;
    let a = comb_count(dims.n_sub, cfg.dpf, 0) * comb_count(dims.n_sym, cfg.dpt, 0);
    let b =
        comb_count(dims.n_sub, cfg.dpf, cfg.dpf / 2) * comb_count(dims.n_sym, cfg.dpt, cfg.dpt / 2);
    Ok(a + b)
}

fn pilot_density<T: Real>(cfg: &PilotConfig<T>, dims: &GridDims<T>) -> Result<T> {
    let n = pilot_count(cfg, dims)?;
    Ok(T::from_usize_lossy(n) / T::from_usize_lossy(dims.n_cells()))
}

/// Fraction of resource elements left for data.
pub fn spectrum_utilization<T: Real>(cfg: &PilotConfig<T>, dims: &GridDims<T>) -> Result<T> {
    Ok(T::one() - pilot_density(cfg, dims)?)
}

/// Average power per data and per pilot resource element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation<T> {
    pub sigma_d2: T,
    pub sigma_p2: T,
}

impl<T: Real> PowerAllocation<T> {
    /// Mean power per cell for a grid with pilot fraction `density`.
    pub fn mean_power(&self, density: T) -> T {
        (T::one() - density) * self.sigma_d2 + density * self.sigma_p2
    }
}

/// Splits unit average power between data and pilots so that
/// `sigma_d2 = rho * sigma_p2` and the grid mean is exactly 1.
pub fn power_allocation<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
) -> Result<PowerAllocation<T>> {
    let delta = pilot_density(cfg, dims)?;
    Ok(allocation_for_density(cfg.rho, delta))
}

pub(crate) fn allocation_for_density<T: Real>(rho: T, delta: T) -> PowerAllocation<T> {
    if delta >= T::one() {
        // all-pilot grid, nothing to split
        return PowerAllocation {
            sigma_d2: rho,
            sigma_p2: T::one(),
        };
    }
    let sigma_p2 = T::one() / ((T::one() - delta) * rho + delta);
    PowerAllocation {
        sigma_d2: rho * sigma_p2,
        sigma_p2,
    }
}

/// Transmitted grid for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid<T> {
    pub dims: GridDims<T>,
    pub config: PilotConfig<T>,
    pub cells: Vec<Complex<T>>,
    pub pilot_mask: Vec<bool>,
}

impl<T: Real> ResourceGrid<T> {
    #[inline]
    pub fn get(&self, f: usize, t: usize) -> Complex<T> {
        self.cells[self.dims.index(f, t)]
    }

    pub fn mean_power(&self) -> T {
        let total: T = self.cells.iter().map(|c| c.norm_sqr()).sum();
        total / T::from_usize_lossy(self.cells.len())
    }

    pub fn pilot_count(&self) -> usize {
        self.pilot_mask.iter().filter(|&&p| p).count()
    }

    /// Copy of this grid carrying different cell values.
    pub fn with_cells(&self, cells: Vec<Complex<T>>) -> Result<Self> {
        if cells.len() != self.cells.len() {
            return Err(Error::Argument(format!(
                "expected {} cells, got {}",
                self.cells.len(),
                cells.len()
            )));
        }
        Ok(Self {
            dims: self.dims,
            config: self.config,
            cells,
            pilot_mask: self.pilot_mask.clone(),
        })
    }
}

/// Maps unit-power data and pilot symbols onto the grid, in storage order,
/// scaling each to its allocated power.
pub fn build_grid<T: Real>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
    data_symbols: &[Complex<T>],
    pilot_symbols: &[Complex<T>],
) -> Result<ResourceGrid<T>> {
    let mask = pilot_mask(cfg, dims)?;
    let n_pilots = mask.iter().filter(|&&p| p).count();
    let n_data = mask.len() - n_pilots;
    if data_symbols.len() != n_data || pilot_symbols.len() != n_pilots {
        return Err(Error::Argument(format!(
            "grid needs {n_data} data and {n_pilots} pilot symbols, got {} and {}",
            data_symbols.len(),
            pilot_symbols.len()
        )));
    }
    let power = power_allocation(cfg, dims)?;
    let (amp_d, amp_p) = (power.sigma_d2.sqrt(), power.sigma_p2.sqrt());
    let mut data = data_symbols.iter();
    let mut pilots = pilot_symbols.iter();
    let cells = mask
        .iter()
        .map(|&is_p| match is_p {
            true => pilots.next().map(|s| s * amp_p),
            false => data.next().map(|s| s * amp_d),
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Argument("symbol stream exhausted".into()))?;
    Ok(ResourceGrid {
        dims: *dims,
        config: *cfg,
        cells,
        pilot_mask: mask,
    })
}

/// Unit-magnitude constant-phase pilot sequence.
pub fn unit_pilots<T: Real>(n: usize) -> Vec<Complex<T>> {
    vec![Complex::new(T::one(), T::zero()); n]
}

/// Unit-power QPSK symbols.
pub fn qpsk_symbols<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex<T>> {
    let a = T::FRAC_1_SQRT_2();
    (0..n)
        .map(|_| {
            let bits: u8 = rng.random_range(0..4);
            let re = if bits & 1 == 0 { a } else { -a };
            let im = if bits & 2 == 0 { a } else { -a };
            Complex::new(re, im)
        })
        .collect()
}

/// Builds a grid with QPSK data and unit pilots drawn from `rng`.
pub fn random_grid<T: Real, R: Rng + ?Sized>(
    cfg: &PilotConfig<T>,
    dims: &GridDims<T>,
    rng: &mut R,
) -> Result<ResourceGrid<T>> {
    let n_pilots = pilot_positions(cfg, dims)?.len();
    let data = qpsk_symbols(dims.n_cells() - n_pilots, rng);
    build_grid(cfg, dims, &data, &unit_pilots(n_pilots))
}
