//! Binary amplitude holograms by pulse-width / pulse-position modulation of
//! a carrier grating.
//!
//! A complex value `A·e^{iφ}` (with `A ≤ 1`) sets the local duty cycle
//! `w = arcsin(A)/π` and pulse position `p = φ/π`. A mirror is switched on
//! when `cos(2πx/x₀ + πp) ≥ cos(πw)`, which is evaluated here in the
//! equivalent form `|wrap(x/x₀ + p/2)| ≤ w/2` with `wrap` onto `[-1/2, 1/2]`.
//!
//! The carrier phase is referenced to the edge between the centre mirror and
//! its left neighbour, i.e. mirror `i` sits at `(i - nx/2 + 1/2)` carrier
//! samples. With that reference no mirror centre ever coincides with a pulse
//! centre of a `p = 0` grating, so vanishing amplitude gives vanishing pulses
//! and a `w = 1/2` grating turns on exactly half of every period.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

/// Offset of mirror centres from the carrier reference, in samples.
pub const CARRIER_ORIGIN_OFFSET: f64 = 0.5;

/// The pulse-train coefficient of order `m` (with its `e^{+i2πmp}` phase)
/// equals the forward-DFT harmonic `ANALYTIC_ORDER_SIGN · m` of the sampled
/// grating (kernel `e^{-i2πkx/x₀}`). Checked by the DFT oracle in the tests.
pub const ANALYTIC_ORDER_SIGN: i32 = -1;

/// Amplitudes may exceed one by this much from rounding in normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GratingConfig {
    period_samples: u32,
}

impl GratingConfig {
    pub const DEFAULT_PERIOD: u32 = 20;

    pub fn new(period_samples: u32) -> Result<Self> {
        if period_samples < 4 {
            return Err(Error::invalid(format!(
                "grating period must be at least 4 samples, got {period_samples}"
            )));
        }
        Ok(Self { period_samples })
    }

    #[inline]
    pub fn period_samples(&self) -> u32 {
        self.period_samples
    }

    /// Carrier period `x₀` in meters on the given grid.
    pub fn period_m(&self, grid: &GridSpec) -> f64 {
        self.period_samples as f64 * grid.pitch()
    }
}

impl Default for GratingConfig {
    fn default() -> Self {
        Self {
            period_samples: Self::DEFAULT_PERIOD,
        }
    }
}

/// Duty cycle `w ∈ [0, 1]` and pulse position `p ∈ [0, 2)`, both in units of
/// the carrier period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    pub w: f64,
    pub p: f64,
}

impl PulseParams {
    pub fn new(w: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("duty cycle {w} outside [0, 1]")));
        }
        if !(0.0..2.0).contains(&p) {
            return Err(Error::invalid(format!("pulse position {p} outside [0, 2)")));
        }
        Ok(Self { w, p })
    }
}

/// On/off mirror map plus the carrier it was synthesized with.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHologram {
    grid: GridSpec,
    bits: Vec<bool>,
    config: GratingConfig,
}

impl BinaryHologram {
    pub fn new(grid: GridSpec, bits: Vec<bool>, config: GratingConfig) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} bits do not fill a {} grid",
                bits.len(),
                grid
            )));
        }
        Ok(Self { grid, bits, config })
    }

    pub fn all_off(grid: GridSpec, config: GratingConfig) -> Self {
        Self {
            grid,
            bits: vec![false; grid.len()],
            config,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn config(&self) -> &GratingConfig {
        &self.config
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> bool {
        self.bits[self.grid.index(i, j)]
    }

    pub fn row(&self, j: usize) -> &[bool] {
        let nx = self.grid.nx();
        &self.bits[j * nx..(j + 1) * nx]
    }

    pub fn on_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// The mirror map as a real 0/1 transmittance.
    pub fn transmittance(&self) -> ComplexField {
        let values = self
            .bits
            .iter()
            .map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0))
            .collect();
        ComplexField::new(self.grid, values).expect("shape checked at construction")
    }
}

/// `1` when `|u| ≤ 1/2`, else `0`.
#[inline]
pub fn rect(u: f64) -> u8 {
    u8::from(u.abs() <= 0.5)
}

/// Distance (in periods) from `t` to the nearest integer, in `[-1/2, 1/2]`.
#[inline]
fn centered_fraction(t: f64) -> f64 {
    t - t.round()
}

/// Carrier position of column `i` in periods, reduced to `[0, 1)`.
#[inline]
fn carrier_cycles(i: usize, nx: usize, period: u32) -> f64 {
    let m = (i as i64 - (nx / 2) as i64).rem_euclid(period as i64);
    (m as f64 + CARRIER_ORIGIN_OFFSET) / period as f64
}

/// Sampled pulse train: mirror `m` (centre at `(m + 1/2)·Δ`) is on when a
/// pulse of width `w·x₀` centred at `(k + p)·x₀` covers it, boundaries
/// included.
pub fn uniform_grating_1d(n: usize, period_samples: u32, params: PulseParams) -> Result<Vec<bool>> {
    if period_samples == 0 || n < period_samples as usize {
        return Err(Error::invalid(format!(
            "need at least one full period ({period_samples} samples), got {n}"
        )));
    }
    let half = 0.5 * params.w;
    let period = period_samples as usize;
    Ok((0..n)
        .map(|m| {
            let t = ((m % period) as f64 + CARRIER_ORIGIN_OFFSET) / period as f64 - params.p;
            params.w > 0.0 && centered_fraction(t).abs() <= half
        })
        .collect())
}

/// Fourier coefficient of order `m` of the pulse train:
/// `sin(πmw)/(πm) · e^{i2πmp}`, with the `m = 0` limit `w`.
pub fn analytic_coefficient(m: i32, params: PulseParams) -> Complex64 {
    if m == 0 {
        return Complex64::new(params.w, 0.0);
    }
    let mf = m as f64;
    let mag = (PI * mf * params.w).sin() / (PI * mf);
    Complex64::from_polar(mag, 2.0 * PI * mf * params.p)
}

/// Duty cycle for amplitude `a`: `arcsin(a)/π ∈ [0, 1/2]`.
pub fn encode_amplitude(a: f64) -> Result<f64> {
    if !(0.0..=1.0 + NORMALIZATION_TOLERANCE).contains(&a) {
        return Err(Error::NotNormalized(a));
    }
    Ok(a.min(1.0).asin() / PI)
}

/// Pulse position for phase `phi`: the phase is wrapped onto `[0, 2π)` and
/// mapped to `phi/π ∈ [0, 2)`.
pub fn encode_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(2.0 * PI);
    let p = wrapped / PI;
    if p >= 2.0 {
        0.0
    } else {
        p
    }
}

/// Pulse parameters for one complex sample. Zero amplitude encodes as
/// `w = 0, p = 0` (no pulse, phase irrelevant).
pub fn encode_value(v: Complex64) -> Result<PulseParams> {
    let a = v.norm();
    if a == 0.0 {
        return Ok(PulseParams { w: 0.0, p: 0.0 });
    }
    Ok(PulseParams {
        w: encode_amplitude(a)?,
        p: encode_phase(v.arg()),
    })
}

fn check_normalized(field: &ComplexField) -> Result<()> {
    let peak = field.max_amplitude();
    if peak.is_nan() || peak > 1.0 + NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(peak));
    }
    Ok(())
}

/// Threshold the modulated carrier for a peak-normalized field.
pub fn synthesize(field: &ComplexField, config: GratingConfig) -> Result<BinaryHologram> {
    check_normalized(field)?;
    let grid = *field.grid();
    let nx = grid.nx();
    let period = config.period_samples();

    let mut bits = vec![false; grid.len()];
    bits.par_chunks_mut(nx)
        .zip(field.values().par_chunks(nx))
        .try_for_each(|(row_bits, row_vals)| -> Result<()> {
            for (i, (bit, &v)) in row_bits.iter_mut().zip(row_vals).enumerate() {
                let params = encode_value(v)?;
                if params.w == 0.0 {
                    continue;
                }
                let t = carrier_cycles(i, nx, period) + 0.5 * params.p;
                *bit = centered_fraction(t).abs() <= 0.5 * params.w;
            }
            Ok(())
        })?;
    BinaryHologram::new(grid, bits, config)
}

/// Slowly-varying first-order prediction `(1/π)·sin(πw)·e^{iπp}`, which for
/// the encoding maps is `A·e^{iφ}/π`.
pub fn predicted_first_order(field: &ComplexField) -> Result<ComplexField> {
    check_normalized(field)?;
    let mut out = ComplexField::zeros(*field.grid());
    for (o, &v) in out.values_mut().iter_mut().zip(field.values()) {
        let params = encode_value(v)?;
        *o = Complex64::from_polar((PI * params.w).sin() / PI, PI * params.p);
    }
    Ok(out)
}

/// Fraction of on-mirrors in each carrier-period window of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct DutyProfile {
    pub rows: usize,
    pub cols: usize,
    /// Column where the first window starts; windows are aligned to the
    /// carrier so that one boundary falls on the grid centre column.
    pub first_column: usize,
    pub period_samples: u32,
    pub values: Vec<f64>,
}

impl DutyProfile {
    pub fn at(&self, window: usize, row: usize) -> f64 {
        self.values[row * self.cols + window]
    }
}

pub fn duty_cycle_profile(holo: &BinaryHologram) -> DutyProfile {
    let g = holo.grid();
    let period = holo.config().period_samples() as usize;
    let first_column = (g.nx() / 2) % period;
    let cols = (g.nx() - first_column) / period;
    let mut values = Vec::with_capacity(cols * g.ny());
    for j in 0..g.ny() {
        let row = holo.row(j);
        for k in 0..cols {
            let start = first_column + k * period;
            let on = row[start..start + period].iter().filter(|&&b| b).count();
            values.push(on as f64 / period as f64);
        }
    }
    DutyProfile {
        rows: g.ny(),
        cols,
        first_column,
        period_samples: period as u32,
        values,
    }
}
