//! Target fields: top-hat vortices, waist-plane Laguerre-Gaussian modes and
//! angular (ANG) superpositions, plus the grid inner product used everywhere
//! else in the crate.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

/// Radial profile shared by the OAM modes that make up an ANG superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialBase {
    /// Top-hat disk of the given radius (meters).
    Vortex { radius: f64 },
    /// Laguerre-Gaussian with radial index `p_r` and waist (meters).
    Lg { p_r: u32, waist: f64 },
}

impl RadialBase {
    pub fn mode(&self, ell: i32) -> ModeSpec {
        match *self {
            RadialBase::Vortex { radius } => ModeSpec::Vortex { ell, radius },
            RadialBase::Lg { p_r, waist } => ModeSpec::Lg { p_r, ell, waist },
        }
    }
}

/// Declarative description of a target mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSpec {
    Vortex {
        ell: i32,
        radius: f64,
    },
    Lg {
        p_r: u32,
        ell: i32,
        waist: f64,
    },
    Ang {
        j: u32,
        n_ell: u32,
        base: RadialBase,
    },
}

impl ModeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            ModeSpec::Vortex { radius, .. } => positive("radius", radius),
            ModeSpec::Lg { waist, .. } => positive("waist", waist),
            ModeSpec::Ang { j, n_ell, base } => {
                if n_ell < 1 {
                    return Err(Error::invalid("ANG modes need n_ell >= 1"));
                }
                if j > 2 * n_ell {
                    return Err(Error::invalid(format!(
                        "ANG index j={j} outside [0, {}]",
                        2 * n_ell
                    )));
                }
                base.mode(0).validate()
            }
        }
    }

    /// Sample the mode on `grid` (not peak-normalized).
    pub fn build(&self, grid: GridSpec) -> Result<ComplexField> {
        self.validate()?;
        match *self {
            ModeSpec::Vortex { ell, radius } => vortex_mode(grid, ell, radius),
            ModeSpec::Lg { p_r, ell, waist } => lg_mode(grid, p_r, ell, waist),
            ModeSpec::Ang { j, n_ell, base } => ang_mode(grid, j, n_ell, base),
        }
    }

    /// Short identifier safe for CSV headers and file names.
    pub fn label(&self) -> String {
        match *self {
            ModeSpec::Vortex { ell, .. } => format!("vortex_l{ell}"),
            ModeSpec::Lg { p_r, ell, .. } => format!("lg_p{p_r}_l{ell}"),
            ModeSpec::Ang { j, n_ell, .. } => format!("ang_j{j}_n{n_ell}"),
        }
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Top-hat vortex: `e^{iℓφ}` inside the disk `r <= radius`, zero outside.
///
/// The phase is undefined on the axis, so the origin sample is zero for any
/// `ℓ != 0`.
pub fn vortex_mode(grid: GridSpec, ell: i32, radius: f64) -> Result<ComplexField> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let (wx, wy) = grid.extent();
    let limit = 0.5 * wx.min(wy);
    if radius > limit {
        return Err(Error::ModeClipped { radius, limit });
    }
    let r2max = radius * radius;
    let ell_f = ell as f64;
    Ok(ComplexField::from_fn(grid, |x, y| {
        let r2 = x * x + y * y;
        if r2 > r2max || (r2 == 0.0 && ell != 0) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, ell_f * y.atan2(x))
        }
    }))
}

/// Generalized Laguerre polynomial `L_n^α(x)` by the three-term recurrence.
pub fn generalized_laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Laguerre-Gaussian mode at the waist plane, unit-amplitude convention:
/// `(√2 r/w₀)^{|ℓ|} L_p^{|ℓ|}(2r²/w₀²) e^{-r²/w₀²} e^{iℓφ}`.
pub fn lg_mode(grid: GridSpec, p_r: u32, ell: i32, waist: f64) -> Result<ComplexField> {
    if !(waist.is_finite() && waist > 0.0) {
        return Err(Error::invalid(format!(
            "waist must be positive, got {waist}"
        )));
    }
    let abs_l = ell.unsigned_abs() as i32;
    let alpha = abs_l as f64;
    let w2 = waist * waist;
    let field = ComplexField::from_fn(grid, |x, y| {
        let r2 = x * x + y * y;
        let rho = (2.0 * r2 / w2).sqrt();
        let envelope =
            rho.powi(abs_l) * generalized_laguerre(p_r, alpha, 2.0 * r2 / w2) * (-r2 / w2).exp();
        Complex64::from_polar(envelope, ell as f64 * y.atan2(x))
    });

    let edge = edge_amplitude(&field);
    if edge >= 1e-6 {
        log::warn!(
            "LG(p={p_r}, l={ell}) with waist {waist} m reaches amplitude {edge:e} at the grid edge; expect aliasing"
        );
    }
    Ok(field)
}

fn edge_amplitude(f: &ComplexField) -> f64 {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut m = 0.0f64;
    for i in 0..nx {
        m = m.max(f.at(i, 0).norm()).max(f.at(i, ny - 1).norm());
    }
    for j in 0..ny {
        m = m.max(f.at(0, j).norm()).max(f.at(nx - 1, j).norm());
    }
    m
}

/// Angular mode `θ_j = (2N+1)^{-1/2} Σ_{ℓ=-N}^{N} u_ℓ e^{-i2πjℓ/(2N+1)}`.
///
/// Every `u_ℓ` is rescaled to carry the same energy as `u_0`, so the members
/// are energy-orthonormal up to a common factor and `n_ell = 0` returns `u_0`
/// unchanged.
pub fn ang_mode(grid: GridSpec, j: u32, n_ell: u32, base: RadialBase) -> Result<ComplexField> {
    if j > 2 * n_ell {
        return Err(Error::invalid(format!(
            "ANG index j={j} outside [0, {}]",
            2 * n_ell
        )));
    }
    let dim = (2 * n_ell + 1) as f64;
    let n = n_ell as i32;
    let u0 = base.mode(0).build(grid)?;
    let ref_energy = inner_product(&u0, &u0)?.re;
    if ref_energy <= 0.0 {
        return Err(Error::ZeroField);
    }

    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for ell in -n..=n {
        let u = if ell == 0 {
            u0.clone()
        } else {
            base.mode(ell).build(grid)?
        };
        let energy = inner_product(&u, &u)?.re;
        if energy <= 0.0 {
            return Err(Error::ZeroField);
        }
        let scale = (ref_energy / energy).sqrt() / dim.sqrt();
        let weight = Complex64::from_polar(scale, -TAU * (j as f64) * (ell as f64) / dim);
        for (a, v) in acc.iter_mut().zip(u.values()) {
            *a += v * weight;
        }
    }
    ComplexField::new(grid, acc)
}

/// Riemann-sum inner product `⟨f, g⟩ = Σ conj(f)·g · pitch²`.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.grid().ensure_same(g.grid())?;
    let sum: Complex64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * f.grid().cell_area())
}

pub fn norm(f: &ComplexField) -> f64 {
    f.power().sqrt()
}

/// Scale so that the largest amplitude is exactly one; phases are kept.
pub fn normalize_peak(f: &ComplexField) -> Result<ComplexField> {
    let peak = f.max_amplitude();
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::ZeroField);
    }
    if peak == 1.0 {
        return Ok(f.clone());
    }
    let inv = 1.0 / peak;
    let mut out = f.map(|v| v * inv);
    // division by the peak may land one ulp above 1
    for v in out.values_mut() {
        let a = v.norm();
        if a > 1.0 {
            *v /= a;
        }
    }
    Ok(out)
}

fn wrap_pi(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Sum of wrapped phase differences around the centered circle of the given
/// radius; `2πℓ` for an ℓ-charged vortex.
pub fn phase_circulation(f: &ComplexField, radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let pitch = f.grid().pitch();
    let samples = ((8.0 * TAU * radius / pitch).ceil() as usize).max(256);
    let mut phases = Vec::with_capacity(samples);
    for k in 0..samples {
        let a = TAU * k as f64 / samples as f64;
        let v = f
            .sample_bilinear(radius * a.cos(), radius * a.sin())
            .ok_or_else(|| Error::invalid(format!("loop radius {radius} m leaves the grid")))?;
        let amp = v.norm();
        if amp < 1e-12 {
            return Err(Error::UndefinedPhase {
                radius,
                amplitude: amp,
            });
        }
        phases.push(v.arg());
    }
    let total = (0..samples)
        .map(|k| wrap_pi(phases[(k + 1) % samples] - phases[k]))
        .sum();
    Ok(total)
}
