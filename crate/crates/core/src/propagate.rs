//! Simulated verification arm: unit plane-wave illumination of the mirror
//! map, a unitary zero-centred 2D DFT standing in for the Fourier plane of an
//! ideal 4f relay, a hard circular aperture around one diffraction order and
//! demodulation back to the slowly varying envelope.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::hologram::{BinaryHologram, GratingConfig, CARRIER_ORIGIN_OFFSET};

/// The hologram is embedded in a frame this many times larger per axis
/// before transforming.
pub const PAD_FACTOR: usize = 2;

/// Complex amplitude on the frequency grid conjugate to `grid`, zero
/// frequency at index `(nx/2, ny/2)`; frequency step `1/(n·pitch)` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SpectrumField {
    /// Grid of the spatial field this spectrum was computed from.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Frequency (cycles/m) of column `k`.
    pub fn fx(&self, k: usize) -> f64 {
        let n = self.grid.nx();
        (k as f64 - (n / 2) as f64) / (n as f64 * self.grid.pitch())
    }

    /// Frequency (cycles/m) of row `l`.
    pub fn fy(&self, l: usize) -> f64 {
        let n = self.grid.ny();
        (l as f64 - (n / 2) as f64) / (n as f64 * self.grid.pitch())
    }

    pub fn at(&self, k: usize, l: usize) -> Complex64 {
        self.values[self.grid.index(k, l)]
    }

    /// `Σ |S|²`, equal to `Σ |f|²` of the source field.
    pub fn total_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    fn range_x(&self) -> (f64, f64) {
        (self.fx(0), self.fx(self.grid.nx() - 1))
    }

    fn range_y(&self) -> (f64, f64) {
        (self.fy(0), self.fy(self.grid.ny() - 1))
    }
}

/// Hard-edged circular pass band in the Fourier plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSpec {
    /// Centre frequency (cycles/m).
    pub center: (f64, f64),
    /// Radius (cycles/m).
    pub radius: f64,
}

impl ApertureSpec {
    pub fn new(center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "aperture radius must be positive, got {radius}"
            )));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(Error::invalid("aperture centre must be finite"));
        }
        Ok(Self { center, radius })
    }

    /// Disk of radius `1/(2x₀)` around the +1 order at `(1/x₀, 0)`.
    pub fn first_order(config: &GratingConfig, grid: &GridSpec) -> Self {
        let x0 = config.period_m(grid);
        Self {
            center: (1.0 / x0, 0.0),
            radius: 0.5 / x0,
        }
    }

    /// Same disk mirrored through zero frequency.
    pub fn conjugate(&self) -> Self {
        Self {
            center: (-self.center.0, -self.center.1),
            radius: self.radius,
        }
    }

    #[inline]
    pub fn contains(&self, fx: f64, fy: f64) -> bool {
        let dx = fx - self.center.0;
        let dy = fy - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

fn transpose(width: usize, height: usize, src: &[Complex64], dst: &mut [Complex64]) {
    for (j, row) in src.chunks_exact(width).enumerate() {
        for (i, &v) in row.iter().enumerate() {
            dst[i * height + j] = v;
        }
    }
}

/// Unscaled 2D FFT over row-major `data` of shape `ny x nx`.
fn fft2(nx: usize, ny: usize, data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(nx, direction);
    let col_fft = planner.plan_fft(ny, direction);
    let zero = Complex64::new(0.0, 0.0);

    data.par_chunks_mut(nx).for_each_init(
        || vec![zero; row_fft.get_inplace_scratch_len()],
        |scratch, row| row_fft.process_with_scratch(row, scratch),
    );
    let mut cols = vec![zero; data.len()];
    transpose(nx, ny, data, &mut cols);
    cols.par_chunks_mut(ny).for_each_init(
        || vec![zero; col_fft.get_inplace_scratch_len()],
        |scratch, col| col_fft.process_with_scratch(col, scratch),
    );
    transpose(ny, nx, &cols, data);
}

fn shift(nx: usize, ny: usize, src: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let (hx, hy) = (nx / 2, ny / 2);
    for j in 0..ny {
        for i in 0..nx {
            let (si, sj) = ((i + hx) % nx, (j + hy) % ny);
            if inverse {
                out[j * nx + i] = src[sj * nx + si];
            } else {
                out[sj * nx + si] = src[j * nx + i];
            }
        }
    }
    out
}

/// Unitary, zero-centred 2D DFT.
pub fn forward_spectrum(f: &ComplexField) -> SpectrumField {
    let g = *f.grid();
    let mut data = f.values().to_vec();
    fft2(g.nx(), g.ny(), &mut data, FftDirection::Forward);
    let scale = 1.0 / (g.len() as f64).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    SpectrumField {
        grid: g,
        values: shift(g.nx(), g.ny(), &data, false),
    }
}

/// Inverse of [`forward_spectrum`].
pub fn inverse_spectrum(s: &SpectrumField) -> ComplexField {
    let g = s.grid;
    let mut data = shift(g.nx(), g.ny(), &s.values, true);
    fft2(g.nx(), g.ny(), &mut data, FftDirection::Inverse);
    let scale = 1.0 / (g.len() as f64).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    ComplexField::new(g, data).expect("shape preserved")
}

/// Embed `f` in a zero frame `factor` times larger per axis, keeping the
/// origin sample at the origin.
pub fn pad(f: &ComplexField, factor: usize) -> Result<ComplexField> {
    let g = f.grid();
    let big = GridSpec::new(g.nx() * factor, g.ny() * factor, g.pitch())?;
    let (ox, oy) = (big.nx() / 2 - g.nx() / 2, big.ny() / 2 - g.ny() / 2);
    let mut out = ComplexField::zeros(big);
    let nx = g.nx();
    for j in 0..g.ny() {
        let dst = big.index(ox, oy + j);
        out.values_mut()[dst..dst + nx].copy_from_slice(&f.values()[j * nx..(j + 1) * nx]);
    }
    Ok(out)
}

/// Inverse of [`pad`]: cut the centred `target` window out of `f`.
pub fn crop(f: &ComplexField, target: GridSpec) -> Result<ComplexField> {
    let g = f.grid();
    if target.nx() > g.nx() || target.ny() > g.ny() || target.pitch() != g.pitch() {
        return Err(Error::invalid(format!("cannot crop {g} to {target}")));
    }
    let (ox, oy) = (g.nx() / 2 - target.nx() / 2, g.ny() / 2 - target.ny() / 2);
    let mut values = Vec::with_capacity(target.len());
    for j in 0..target.ny() {
        let src = g.index(ox, oy + j);
        values.extend_from_slice(&f.values()[src..src + target.nx()]);
    }
    ComplexField::new(target, values)
}

fn check_aperture(s: &SpectrumField, ap: &ApertureSpec) -> Result<()> {
    let (x0, x1) = s.range_x();
    let (y0, y1) = s.range_y();
    let (cx, cy) = ap.center;
    let r = ap.radius;
    if cx - r < x0 || cx + r > x1 || cy - r < y0 || cy + r > y1 {
        return Err(Error::ApertureOutsideGrid {
            center: ap.center,
            radius: r,
        });
    }
    Ok(())
}

fn masked_power(s: &SpectrumField, ap: &ApertureSpec) -> f64 {
    let g = s.grid;
    let mut total = 0.0;
    for l in 0..g.ny() {
        let fy = s.fy(l);
        for k in 0..g.nx() {
            if ap.contains(s.fx(k), fy) {
                total += s.at(k, l).norm_sqr();
            }
        }
    }
    total
}

/// Keep the aperture disk, move its centre to zero frequency and return to
/// the spatial domain on the spectrum's own grid.
pub fn extract_first_order(s: &SpectrumField, ap: &ApertureSpec) -> Result<ComplexField> {
    check_aperture(s, ap)?;
    let g = s.grid;
    let mut masked = s.clone();
    for l in 0..g.ny() {
        let fy = s.fy(l);
        for k in 0..g.nx() {
            if !ap.contains(s.fx(k), fy) {
                masked.values[g.index(k, l)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let mut out = inverse_spectrum(&masked);
    let (cx, cy) = ap.center;
    let nx = g.nx();
    out.values_mut()
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(j, row)| {
            let y = g.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                let x = g.x(i);
                *v *= Complex64::from_polar(1.0, -2.0 * PI * (cx * x + cy * y));
            }
        });
    Ok(out)
}

/// Reconstructed order together with its diffraction efficiency.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: ComplexField,
    pub efficiency: f64,
}

/// Full pipeline: pad, transform, filter, demodulate, crop.
///
/// The result is referenced to the hologram's carrier origin (half a mirror
/// left of the centre sample), so the +1 order of a synthesized field comes
/// back with the encoded phase and no constant offset.
pub fn reconstruct(h: &BinaryHologram, ap: &ApertureSpec) -> Result<Reconstruction> {
    let g = *h.grid();
    let padded = pad(&h.transmittance(), PAD_FACTOR)?;
    let spectrum = forward_spectrum(&padded);
    check_aperture(&spectrum, ap)?;
    let efficiency = masked_power(&spectrum, ap) / g.len() as f64;
    let full = extract_first_order(&spectrum, ap)?;
    let mut field = crop(&full, g)?;
    let carrier_ref = Complex64::from_polar(
        1.0,
        -2.0 * PI * ap.center.0 * CARRIER_ORIGIN_OFFSET * g.pitch(),
    );
    for v in field.values_mut() {
        *v *= carrier_ref;
    }
    Ok(Reconstruction { field, efficiency })
}

pub fn simulate_reconstruction(h: &BinaryHologram, ap: &ApertureSpec) -> Result<ComplexField> {
    reconstruct(h, ap).map(|r| r.field)
}

/// Power passed by the aperture divided by the unit-amplitude power falling
/// on the full `nx x ny` panel.
pub fn diffraction_efficiency(h: &BinaryHologram, ap: &ApertureSpec) -> Result<f64> {
    let padded = pad(&h.transmittance(), PAD_FACTOR)?;
    let spectrum = forward_spectrum(&padded);
    check_aperture(&spectrum, ap)?;
    Ok(masked_power(&spectrum, ap) / h.grid().len() as f64)
}
