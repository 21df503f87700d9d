//! Modal analysis of reconstructed fields: projections on mode bases,
//! fidelity, interferograms, the ANG/OAM unbiasedness matrix, crosstalk and
//! the frame-sequenced switching timeline with ideal modal detection.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldgen::{ang_mode, inner_product, normalize_peak, ModeSpec, RadialBase};
use crate::grid::{ComplexField, GridSpec};
use crate::hologram::{synthesize, BinaryHologram, GratingConfig};
use crate::propagate::{simulate_reconstruction, ApertureSpec};

/// Relative pivot norm below which a basis member counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Labelled real matrix (crosstalk, unbiasedness, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn max_abs_deviation(&self, target: f64) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|v| (v - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Normalized squared overlap `|⟨t, f⟩|² / (‖t‖²‖f‖²)`.
pub fn fidelity(f: &ComplexField, target: &ComplexField) -> Result<f64> {
    let ff = inner_product(f, f)?.re;
    let tt = inner_product(target, target)?.re;
    if ff <= 0.0 || tt <= 0.0 {
        return Err(Error::ZeroField);
    }
    let ov = inner_product(target, f)?.norm_sqr();
    Ok((ov / (ff * tt)).clamp(0.0, 1.0))
}

/// Gram-Schmidt under the grid inner product (two projection passes per
/// member to keep orthogonality at the 1e-10 level).
pub fn orthonormalize(fields: &[ComplexField]) -> Result<Vec<ComplexField>> {
    let mut out: Vec<ComplexField> = Vec::with_capacity(fields.len());
    for (index, f) in fields.iter().enumerate() {
        let start = inner_product(f, f)?.re.sqrt();
        if start == 0.0 {
            return Err(Error::RankDeficient { index, pivot: 0.0 });
        }
        let mut v = f.clone();
        for _ in 0..2 {
            for b in &out {
                let c = inner_product(b, &v)?;
                for (x, y) in v.values_mut().iter_mut().zip(b.values()) {
                    *x -= c * y;
                }
            }
        }
        let n = inner_product(&v, &v)?.re.sqrt();
        if n / start < RANK_TOLERANCE {
            return Err(Error::RankDeficient {
                index,
                pivot: n / start,
            });
        }
        out.push(v.scaled(Complex64::new(1.0 / n, 0.0)));
    }
    Ok(out)
}

/// Löwdin orthonormalization `B = F·S^{-1/2}`. Unlike Gram-Schmidt it does
/// not depend on the order of the inputs.
pub fn orthonormalize_symmetric(fields: &[ComplexField]) -> Result<Vec<ComplexField>> {
    let n = fields.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = inner_product(&fields[a], &fields[b])?;
            gram[(a, b)] = v;
            gram[(b, a)] = v.conj();
        }
    }
    let eig = SymmetricEigen::new(gram);
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    for (index, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.is_nan() || ev <= 0.0 || (ev / largest).sqrt() < RANK_TOLERANCE {
            return Err(Error::RankDeficient {
                index,
                pivot: (ev.max(0.0) / largest).sqrt(),
            });
        }
    }
    let inv_sqrt = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|ev| Complex64::new(1.0 / ev.sqrt(), 0.0)),
    );
    let s_inv_half = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();

    let grid = *fields[0].grid();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (m, f) in fields.iter().enumerate() {
            let c = s_inv_half[(m, k)];
            for (a, v) in acc.iter_mut().zip(f.values()) {
                *a += v * c;
            }
        }
        out.push(ComplexField::new(grid, acc)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthonormalization {
    GramSchmidt,
    Symmetric,
}

/// Orthonormal set of fields with display labels.
#[derive(Debug, Clone)]
pub struct Basis {
    labels: Vec<String>,
    fields: Vec<ComplexField>,
}

impl Basis {
    pub fn from_fields(
        labels: Vec<String>,
        fields: &[ComplexField],
        method: Orthonormalization,
    ) -> Result<Self> {
        if labels.len() != fields.len() {
            return Err(Error::invalid("one label per basis field required"));
        }
        if fields.is_empty() {
            return Err(Error::Empty("basis is empty"));
        }
        let grid = fields[0].grid();
        for f in fields {
            grid.ensure_same(f.grid())?;
        }
        let fields = match method {
            Orthonormalization::GramSchmidt => orthonormalize(fields)?,
            Orthonormalization::Symmetric => orthonormalize_symmetric(fields)?,
        };
        Ok(Self { labels, fields })
    }

    pub fn from_modes(
        grid: GridSpec,
        modes: &[ModeSpec],
        method: Orthonormalization,
    ) -> Result<Self> {
        let fields = modes
            .iter()
            .map(|m| m.build(grid))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(modes.iter().map(|m| m.label()).collect(), &fields, method)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn grid(&self) -> &GridSpec {
        self.fields[0].grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub labels: Vec<String>,
    pub coefficients: Vec<Complex64>,
    /// `1 - Σ|c|²`, clamped at zero.
    pub residual_power: f64,
}

impl DecompositionResult {
    pub fn powers(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Coefficients `c_k = ⟨b_k, f⟩ / ‖f‖` over an orthonormal basis.
pub fn decompose(f: &ComplexField, basis: &Basis) -> Result<DecompositionResult> {
    basis.grid().ensure_same(f.grid())?;
    let norm = inner_product(f, f)?.re.sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let coefficients = basis
        .fields()
        .iter()
        .map(|b| inner_product(b, f).map(|c| c / norm))
        .collect::<Result<Vec<_>>>()?;
    let raw = 1.0 - coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>();
    if raw < 0.0 {
        log::debug!("residual power {raw:e} clamped to zero");
    }
    Ok(DecompositionResult {
        labels: basis.labels().to_vec(),
        coefficients,
        residual_power: raw.max(0.0),
    })
}

/// Real-valued image on a grid (intensities, interferograms).
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl RealImage {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

pub fn intensity(f: &ComplexField) -> RealImage {
    RealImage {
        grid: *f.grid(),
        values: f.values().iter().map(|v| v.norm_sqr()).collect(),
    }
}

/// `|f + a·e^{i2π(νx·x + νy·y)}|²`, the pattern recorded when the field
/// interferes with a tilted plane wave of amplitude `a`.
pub fn interferogram(f: &ComplexField, tilt: (f64, f64), ref_amplitude: f64) -> Result<RealImage> {
    if !(ref_amplitude.is_finite() && ref_amplitude > 0.0) {
        return Err(Error::invalid(format!(
            "reference amplitude must be positive, got {ref_amplitude}"
        )));
    }
    let g = *f.grid();
    let mut values = Vec::with_capacity(g.len());
    for j in 0..g.ny() {
        let y = g.y(j);
        for i in 0..g.nx() {
            let x = g.x(i);
            let r = Complex64::from_polar(ref_amplitude, 2.0 * PI * (tilt.0 * x + tilt.1 * y));
            values.push((f.at(i, j) + r).norm_sqr());
        }
    }
    Ok(RealImage { grid: g, values })
}

/// `M[ℓ][j] = |⟨u_ℓ, θ_j⟩|² / (‖u_ℓ‖²‖θ_j‖²)` for `ℓ ∈ [-N, N]`, `j ∈ [0, 2N]`.
pub fn mub_matrix(grid: GridSpec, n_ell: u32, base: RadialBase) -> Result<Matrix> {
    if n_ell < 1 {
        return Err(Error::invalid("unbiasedness matrix needs n_ell >= 1"));
    }
    let n = n_ell as i32;
    let oam: Vec<(String, ComplexField)> = (-n..=n)
        .map(|ell| {
            let m = base.mode(ell);
            m.build(grid).map(|f| (m.label(), f))
        })
        .collect::<Result<_>>()?;
    let angular: Vec<ComplexField> = (0..=2 * n_ell)
        .map(|j| ang_mode(grid, j, n_ell, base))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(oam.len());
    for (_, u) in &oam {
        let uu = inner_product(u, u)?.re;
        let row = angular
            .iter()
            .map(|t| {
                let tt = inner_product(t, t)?.re;
                Ok(inner_product(u, t)?.norm_sqr() / (uu * tt))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(Matrix {
        row_labels: oam.into_iter().map(|(l, _)| l).collect(),
        col_labels: (0..=2 * n_ell)
            .map(|j| ModeSpec::Ang { j, n_ell, base }.label())
            .collect(),
        values,
    })
}

/// How a mode is turned into the field that gets analysed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pipeline {
    /// Feed the orthonormal basis member straight through.
    Identity,
    /// Peak-normalize, synthesize, reconstruct the selected order. `None`
    /// picks the default +1 aperture.
    Hologram {
        config: GratingConfig,
        aperture: Option<ApertureSpec>,
    },
}

/// Synthesize the (peak-normalized) target and reconstruct it.
pub fn round_trip(
    target: &ComplexField,
    config: GratingConfig,
    aperture: Option<ApertureSpec>,
) -> Result<ComplexField> {
    let holo = synthesize(&normalize_peak(target)?, config)?;
    let ap = aperture.unwrap_or_else(|| ApertureSpec::first_order(&config, holo.grid()));
    simulate_reconstruction(&holo, &ap)
}

/// `X[i][k] = |⟨b_k, r_i⟩|² / ‖r_i‖²` where `r_i` is mode `i` after the
/// pipeline and `b` the symmetrically orthonormalized mode set.
pub fn crosstalk_matrix(grid: GridSpec, modes: &[ModeSpec], pipeline: Pipeline) -> Result<Matrix> {
    if modes.is_empty() {
        return Err(Error::Empty("mode set is empty"));
    }
    let basis = Basis::from_modes(grid, modes, Orthonormalization::Symmetric)?;
    let rows = (0..modes.len())
        .into_par_iter()
        .map(|i| {
            let r = match pipeline {
                Pipeline::Identity => basis.fields()[i].clone(),
                Pipeline::Hologram { config, aperture } => {
                    round_trip(&modes[i].build(grid)?, config, aperture)?
                }
            };
            Ok(decompose(&r, &basis)?.powers())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix {
        row_labels: basis.labels().to_vec(),
        col_labels: basis.labels().to_vec(),
        values: rows,
    })
}

/// One hologram held on the mirrors for `duration` seconds.
#[derive(Debug, Clone)]
pub struct SwitchFrame {
    pub hologram: BinaryHologram,
    pub duration: f64,
}

impl SwitchFrame {
    pub fn new(hologram: BinaryHologram, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(format!(
                "frame duration must be positive, got {duration}"
            )));
        }
        Ok(Self { hologram, duration })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineSample {
    pub time: f64,
    /// Index of the frame on the mirrors at this instant.
    pub frame: usize,
    /// Detected power per channel, divided by that channel's maximum over
    /// the run.
    pub channel_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub channel_labels: Vec<String>,
    /// Start time of each frame (seconds); a final entry marks the end.
    pub frame_edges: Vec<f64>,
    pub samples: Vec<TimelineSample>,
}

impl Timeline {
    /// Whether `t` lies strictly between the edges of its frame.
    pub fn strictly_inside(&self, sample: &TimelineSample) -> bool {
        let (a, b) = (
            self.frame_edges[sample.frame],
            self.frame_edges[sample.frame + 1],
        );
        sample.time > a && sample.time < b
    }
}

/// Sample the detected channel powers while the frames play once in order.
///
/// Holograms switch instantaneously at frame edges. Each distinct hologram
/// is reconstructed once up front; samples only look up the cached channel
/// powers.
pub fn switching_timeline(
    frames: &[SwitchFrame],
    sample_rate: f64,
    channels: &[ModeSpec],
    aperture: Option<ApertureSpec>,
) -> Result<Timeline> {
    if frames.is_empty() {
        return Err(Error::Empty("frame list is empty"));
    }
    if channels.is_empty() {
        return Err(Error::Empty("channel list is empty"));
    }
    let shortest = frames
        .iter()
        .map(|f| f.duration)
        .fold(f64::INFINITY, f64::min);
    if !(sample_rate.is_finite() && sample_rate * shortest >= 10.0 * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate} Hz is below 10x the frame rate {} Hz",
            1.0 / shortest
        )));
    }
    let grid = *frames[0].hologram.grid();
    let basis = Basis::from_modes(grid, channels, Orthonormalization::GramSchmidt)?;

    let mut unique: Vec<&BinaryHologram> = Vec::new();
    let mut slot_of_frame = Vec::with_capacity(frames.len());
    for f in frames {
        f.hologram.grid().ensure_same(&grid)?;
        match unique.iter().position(|h| **h == f.hologram) {
            Some(k) => slot_of_frame.push(k),
            None => {
                slot_of_frame.push(unique.len());
                unique.push(&f.hologram);
            }
        }
    }
    let detected: Vec<Vec<f64>> = unique
        .par_iter()
        .map(|h| {
            let ap = aperture.unwrap_or_else(|| ApertureSpec::first_order(h.config(), h.grid()));
            let r = simulate_reconstruction(h, &ap)?;
            let norm2 = inner_product(&r, &r)?.re;
            basis
                .fields()
                .iter()
                .map(|b| {
                    let c = inner_product(b, &r)?;
                    Ok(if norm2 > 0.0 {
                        c.norm_sqr() / norm2
                    } else {
                        0.0
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut edges = Vec::with_capacity(frames.len() + 1);
    let mut t = 0.0;
    edges.push(t);
    for f in frames {
        t += f.duration;
        edges.push(t);
    }
    let total = t;
    let n_samples = ((total * sample_rate) - 1e-9).ceil().max(1.0) as usize;

    let mut samples = Vec::with_capacity(n_samples);
    let mut frame = 0;
    for n in 0..n_samples {
        let time = n as f64 / sample_rate;
        while frame + 1 < frames.len() && time >= edges[frame + 1] {
            frame += 1;
        }
        samples.push(TimelineSample {
            time,
            frame,
            channel_power: detected[slot_of_frame[frame]].clone(),
        });
    }
    for c in 0..channels.len() {
        let max = samples
            .iter()
            .map(|s| s.channel_power[c])
            .fold(0.0, f64::max);
        if max > 0.0 {
            for s in &mut samples {
                s.channel_power[c] /= max;
            }
        }
    }
    Ok(Timeline {
        channel_labels: basis.labels().to_vec(),
        frame_edges: edges,
        samples,
    })
}

/// Azimuthal average of `|f|²` in annuli of width `bin` around the origin.
pub fn radial_profile(f: &ComplexField, bin: f64) -> Vec<f64> {
    let g = f.grid();
    let (wx, wy) = g.extent();
    let rmax = 0.5 * wx.min(wy);
    let nbins = (rmax / bin).floor() as usize;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let r = g.x(i).hypot(g.y(j));
            let k = (r / bin) as usize;
            if k < nbins {
                sum[k] += f.at(i, j).norm_sqr();
                count[k] += 1;
            }
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Number of strict local maxima of a radial profile, counting a central
/// lobe at the first bin. Maxima below `floor` times the peak are ignored.
pub fn count_rings(profile: &[f64], floor: f64) -> usize {
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let floor = peak * floor;
    (0..profile.len())
        .filter(|&k| {
            let v = profile[k];
            let left_ok = k == 0 || v > profile[k - 1];
            let right_ok = k + 1 == profile.len() || v > profile[k + 1];
            v > floor && left_ok && right_ok
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{lg_mode, vortex_mode};
    use proptest::prelude::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, n, 1e-5).unwrap()
    }

    fn vortex_set(g: GridSpec, ells: &[i32], radius: f64) -> Vec<ComplexField> {
        ells.iter()
            .map(|&l| vortex_mode(g, l, radius).unwrap())
            .collect()
    }

    fn assert_orthonormal(b: &[ComplexField], tol: f64) {
        for (i, x) in b.iter().enumerate() {
            for (k, y) in b.iter().enumerate() {
                let ip = inner_product(x, y).unwrap();
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!(
                    (ip - Complex64::new(expect, 0.0)).norm() < tol,
                    "{i},{k}: {ip}"
                );
            }
        }
    }

    #[test]
    fn gram_schmidt_output_is_orthonormal() {
        let g = grid(96);
        let fields = vec![
            lg_mode(g, 0, 0, 20e-5).unwrap(),
            lg_mode(g, 1, 0, 20e-5).unwrap(),
            lg_mode(g, 0, 0, 30e-5).unwrap(),
        ];
        let b = orthonormalize(&fields).unwrap();
        assert_orthonormal(&b, 1e-10);
        let b = orthonormalize_symmetric(&fields).unwrap();
        assert_orthonormal(&b, 1e-10);
    }

    #[test]
    fn orthogonal_vortices_only_get_scaled() {
        let g = grid(128);
        let set = vortex_set(g, &[0, 1], 50e-5);
        let b = orthonormalize(&set).unwrap();
        for (x, f) in b.iter().zip(&set) {
            let n = inner_product(f, f).unwrap().re.sqrt();
            let scaled = f.scaled(Complex64::new(1.0 / n, 0.0));
            for (u, v) in x.values().iter().zip(scaled.values()) {
                assert!((u - v).norm() * g.pitch() < 1e-10);
            }
        }
    }

    #[test]
    fn dependent_inputs_are_rejected() {
        let g = grid(32);
        let f = lg_mode(g, 0, 1, 8e-5).unwrap();
        let f2 = f.scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(
            orthonormalize(&[f.clone(), f2.clone()]),
            Err(Error::RankDeficient { index: 1, .. })
        ));
        assert!(matches!(
            orthonormalize_symmetric(&[f, f2]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn decompose_basis_members_and_superpositions() {
        let g = grid(128);
        let basis = Basis::from_fields(
            vec!["a".into(), "b".into(), "c".into()],
            &vortex_set(g, &[-1, 0, 2], 50e-5),
            Orthonormalization::GramSchmidt,
        )
        .unwrap();
        for k in 0..3 {
            let d = decompose(&basis.fields()[k], &basis).unwrap();
            for (i, c) in d.coefficients.iter().enumerate() {
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((c.norm() - e).abs() < 1e-8);
            }
            assert!(d.residual_power < 1e-8);
        }
        let b = basis.fields();
        let mix = ComplexField::new(
            *g_of(&b[0]),
            b[0].values()
                .iter()
                .zip(b[1].values())
                .map(|(x, y)| (x + y) / 2f64.sqrt())
                .collect(),
        )
        .unwrap();
        let d = decompose(&mix, &basis).unwrap();
        let p = d.powers();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9);
        assert!(d.residual_power < 1e-9);
    }

    fn g_of(f: &ComplexField) -> &GridSpec {
        f.grid()
    }

    #[test]
    fn decomposition_power_balance() {
        let g = grid(96);
        let basis = Basis::from_modes(
            g,
            &[-2, -1, 0, 1, 2].map(|ell| ModeSpec::Lg {
                p_r: 0,
                ell,
                waist: 20e-5,
            }),
            Orthonormalization::GramSchmidt,
        )
        .unwrap();
        let f = lg_mode(g, 1, 1, 25e-5).unwrap();
        let d = decompose(&f, &basis).unwrap();
        let total: f64 = d.powers().iter().sum::<f64>() + d.residual_power;
        assert!((total - 1.0).abs() < 1e-9);
        assert!(d.residual_power > 0.01);
    }

    #[test]
    fn fidelity_properties() {
        let g = grid(64);
        let f = lg_mode(g, 1, 2, 15e-5).unwrap();
        assert!((fidelity(&f, &f).unwrap() - 1.0).abs() < 1e-14);
        let a = vortex_mode(g, 1, 25e-5).unwrap();
        let b = vortex_mode(g, -1, 25e-5).unwrap();
        assert!(fidelity(&a, &b).unwrap() < 1e-8);
        assert!(matches!(
            fidelity(&ComplexField::zeros(g), &f),
            Err(Error::ZeroField)
        ));
    }

    proptest! {
        #[test]
        fn fidelity_ignores_global_phase_and_scale(alpha in 0.0f64..6.3, scale in 1e-3f64..1e3) {
            let g = grid(48);
            let f = lg_mode(g, 1, 1, 12e-5).unwrap();
            let t = lg_mode(g, 0, 1, 10e-5).unwrap();
            let base = fidelity(&f, &t).unwrap();
            let moved = f.scaled(Complex64::from_polar(scale, alpha));
            prop_assert!((fidelity(&moved, &t).unwrap() - base).abs() < 1e-12);
            prop_assert!((fidelity(&moved, &f).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interferogram_cases() {
        let g = GridSpec::new(40, 20, 1e-5).unwrap();
        let f = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        let img = interferogram(&f, (0.0, 0.0), 1.0).unwrap();
        assert!(img.values.iter().all(|&v| (v - 4.0).abs() < 1e-15));
        // fringes of period 1/ν = 10 samples along x
        let nu = 1.0 / (10.0 * g.pitch());
        let img = interferogram(&f, (nu, 0.0), 1.0).unwrap();
        for i in 0..30 {
            assert!((img.at(i, 3) - img.at(i + 10, 3)).abs() < 1e-12);
            assert!((img.at(i, 3) - img.at(i, 11)).abs() < 1e-12);
        }
        assert!((img.at(20, 0) - 4.0).abs() < 1e-12);
        assert!(img.at(25, 0) < 1e-12);
        assert!(interferogram(&f, (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn small_mub_matrices() {
        let g = grid(256);
        for (n, base) in [
            (1, RadialBase::Vortex { radius: 100e-5 }),
            (
                2,
                RadialBase::Lg {
                    p_r: 0,
                    waist: 30e-5,
                },
            ),
        ] {
            let m = mub_matrix(g, n, base).unwrap();
            let d = (2 * n + 1) as usize;
            assert_eq!((m.rows(), m.cols()), (d, d));
            assert!(m.max_abs_deviation(1.0 / d as f64) < 1e-3);
            for row in &m.values {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
        assert!(mub_matrix(g, 0, RadialBase::Vortex { radius: 1e-4 }).is_err());
    }

    #[test]
    fn identity_crosstalk_is_identity() {
        let g = grid(128);
        let modes: Vec<ModeSpec> = (-5..=5)
            .map(|ell| ModeSpec::Vortex { ell, radius: 50e-5 })
            .collect();
        let x = crosstalk_matrix(g, &modes, Pipeline::Identity).unwrap();
        for (i, row) in x.values.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-8, "{i},{k}: {v}");
            }
        }
        assert!(crosstalk_matrix(g, &[], Pipeline::Identity).is_err());
    }

    #[test]
    fn ring_counting() {
        let g = grid(512);
        for (p, l) in [(0, 0), (1, 0), (2, 0), (2, 2), (1, 3), (0, 1)] {
            let f = lg_mode(g, p, l, 50e-5).unwrap();
            let prof = radial_profile(&f, g.pitch());
            assert_eq!(count_rings(&prof, 1e-6), p as usize + 1, "p={p} l={l}");
        }
        assert_eq!(count_rings(&[3.0, 2.0, 1.0], 0.0), 1);
        assert_eq!(count_rings(&[1.0, 2.0, 1.0, 2.0, 0.5], 0.0), 2);
        assert_eq!(count_rings(&[1.0, 2.0, 1.0, 1e-4, 0.0], 1e-3), 1);
    }

    #[test]
    fn timeline_rejects_bad_inputs() {
        let g = grid(64);
        let cfg = GratingConfig::default();
        let channels = [ModeSpec::Vortex {
            ell: 0,
            radius: 20e-5,
        }];
        assert!(switching_timeline(&[], 1e5, &channels, None).is_err());
        let holo = BinaryHologram::all_off(g, cfg);
        let frame = SwitchFrame::new(holo, 2.5e-4).unwrap();
        assert!(
            switching_timeline(std::slice::from_ref(&frame), 39_000.0, &channels, None).is_err()
        );
        assert!(
            switching_timeline(std::slice::from_ref(&frame), 40_000.0, &channels, None).is_ok()
        );
        assert!(SwitchFrame::new(BinaryHologram::all_off(g, cfg), 0.0).is_err());
    }

    #[test]
    fn single_frame_matching_channel_is_constant() {
        let g = GridSpec::new(160, 160, 7.5e-6).unwrap();
        let mode = ModeSpec::Vortex {
            ell: 1,
            radius: 0.5e-3,
        };
        let holo = synthesize(&mode.build(g).unwrap(), GratingConfig::default()).unwrap();
        let frame = SwitchFrame::new(holo, 2.5e-4).unwrap();
        let t = switching_timeline(&[frame], 40_000.0, &[mode], None).unwrap();
        assert_eq!(t.samples.len(), 10);
        for s in &t.samples {
            assert_eq!(s.channel_power, vec![1.0]);
        }
    }
}
