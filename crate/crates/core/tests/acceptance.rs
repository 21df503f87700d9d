//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each and exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use binholo::analysis::{fidelity, mub_matrix, round_trip, switching_timeline, SwitchFrame};
use binholo::cli::{ApertureChoice, JobConfig};
use binholo::fieldgen::{normalize_peak, phase_circulation, ModeSpec, RadialBase};
use binholo::hologram::{
    analytic_coefficient, synthesize, uniform_grating_1d, BinaryHologram, GratingConfig,
    PulseParams, ANALYTIC_ORDER_SIGN,
};
use binholo::io::csv::Table;
use binholo::io::{cf64, pnm};
use binholo::propagate::{diffraction_efficiency, ApertureSpec};
use binholo::{ComplexField, GridSpec};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn panel() -> GridSpec {
    GridSpec::dmd_default()
}

const VORTEX_RADIUS: f64 = 1.5e-3;
const LG_WAIST: f64 = 0.5e-3;

fn efficiency_of(field: &ComplexField, cfg: GratingConfig) -> f64 {
    let h = synthesize(&normalize_peak(field).unwrap(), cfg).unwrap();
    diffraction_efficiency(&h, &ApertureSpec::first_order(&cfg, h.grid())).unwrap()
}

fn c1_grating_efficiency() -> Outcome {
    let start = Instant::now();
    let g = panel();
    let cfg = GratingConfig::default();
    let holo = synthesize(&ComplexField::constant(g, Complex64::new(1.0, 0.0)), cfg).unwrap();
    let eta = diffraction_efficiency(&holo, &ApertureSpec::first_order(&cfg, &g)).unwrap();
    let elapsed = start.elapsed();
    let target = 1.0 / (PI * PI);
    outcome(
        (eta - target).abs() <= 0.005 && elapsed < Duration::from_secs(5),
        format!("efficiency {eta:.5} (1/pi^2 = {target:.5}), {elapsed:.2?}"),
    )
}

/// Forward DFT harmonic `k` of one sampled period, mirror `n` at `(n + 1/2)/N`.
fn dft_harmonic(bits: &[bool], k: i32) -> Complex64 {
    let n = bits.len() as f64;
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * (i as f64 + 0.5) / n))
        .sum::<Complex64>()
        / n
}

fn c2_fourier_coefficients() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for wi in 0..=10 {
        for pi in 0..=10 {
            let params = PulseParams::new(wi as f64 / 10.0, pi as f64 / 10.0).unwrap();
            let bits = uniform_grating_1d(1000, 1000, params).unwrap();
            for m in -5..=5 {
                let numeric = dft_harmonic(&bits, ANALYTIC_ORDER_SIGN * m);
                worst = worst.max((numeric - analytic_coefficient(m, params)).norm());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 2e-3 && elapsed < Duration::from_secs(10),
        format!("max |DFT - analytic| = {worst:.2e} over 121 (w,p) x 11 orders, {elapsed:.2?}"),
    )
}

fn c3_phase_circulation() -> Outcome {
    let start = Instant::now();
    let g = panel();
    let cfg = GratingConfig::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for ell in -5..=5 {
        let target = ModeSpec::Vortex {
            ell,
            radius: VORTEX_RADIUS,
        }
        .build(g)
        .unwrap();
        let recon = round_trip(&target, cfg, None).unwrap();
        let c = phase_circulation(&recon, 0.5 * VORTEX_RADIUS).unwrap();
        let err = (c - 2.0 * PI * ell as f64).abs();
        worst = worst.max(err);
        ok &= err <= 0.1;
    }
    let elapsed = start.elapsed();
    outcome(
        ok && elapsed < Duration::from_secs(60),
        format!("max |circulation - 2 pi l| = {worst:.2e} for l in -5..5, {elapsed:.2?}"),
    )
}

/// Grid with the default panel's physical size sampled at `period` mirrors
/// per fixed 150 µm carrier period.
fn fixed_carrier_grid(period: u32) -> GridSpec {
    let x0 = 20.0 * 7.5e-6;
    let nx = (608.0 * period as f64 / 20.0).round() as usize;
    let ny = (684.0 * period as f64 / 20.0).round() as usize;
    GridSpec::new(nx, ny, x0 / period as f64).unwrap()
}

fn c4_fidelity() -> Outcome {
    let g = panel();
    let cfg = GratingConfig::default();
    let mut modes: Vec<ModeSpec> = (-5..=5)
        .map(|ell| ModeSpec::Vortex {
            ell,
            radius: VORTEX_RADIUS,
        })
        .collect();
    for p_r in 0..=2 {
        for ell in -2..=2 {
            modes.push(ModeSpec::Lg {
                p_r,
                ell,
                waist: LG_WAIST,
            });
        }
    }
    let mut worst = (1.0, String::new());
    for m in &modes {
        let target = m.build(g).unwrap();
        let f = fidelity(&round_trip(&target, cfg, None).unwrap(), &target).unwrap();
        if f < worst.0 {
            worst = (f, m.label());
        }
    }
    // convergence: carrier period fixed at 150 µm over the panel's physical
    // size, finer mirrors per period
    let mut broken = Vec::new();
    for m in &modes {
        let mut trace = Vec::new();
        for period in [8, 12, 20, 40] {
            let grid = fixed_carrier_grid(period);
            let target = m.build(grid).unwrap();
            let cfg = GratingConfig::new(period).unwrap();
            trace.push(fidelity(&round_trip(&target, cfg, None).unwrap(), &target).unwrap());
        }
        if trace.windows(2).any(|w| w[1] < w[0]) {
            let t: Vec<String> = trace.iter().map(|f| format!("{f:.6}")).collect();
            broken.push(format!("{} [{}]", m.label(), t.join(" ")));
        }
    }
    outcome(
        worst.0 >= 0.90 && broken.is_empty(),
        format!(
            "min fidelity {:.4} ({}) over {} modes; non-monotone over P=8,12,20,40: {}",
            worst.0,
            worst.1,
            modes.len(),
            if broken.is_empty() {
                "none".to_string()
            } else {
                broken.join(", ")
            }
        ),
    )
}

fn c5_mub() -> Outcome {
    let start = Instant::now();
    let g = GridSpec::new(512, 512, 7.5e-6).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let m = mub_matrix(
            g,
            n,
            RadialBase::Vortex {
                radius: VORTEX_RADIUS,
            },
        )
        .unwrap();
        let dev = m.max_abs_deviation(1.0 / (2 * n + 1) as f64);
        ok &= dev < 1e-3;
        parts.push(format!("N={n}: {dev:.2e}"));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && elapsed < Duration::from_secs(30),
        format!(
            "max deviation from 1/(2N+1): {}, {elapsed:.2?}",
            parts.join(", ")
        ),
    )
}

fn c6_ang_efficiency_ratio() -> Outcome {
    let g = panel();
    let cfg = GratingConfig::default();
    let base = RadialBase::Vortex {
        radius: VORTEX_RADIUS,
    };
    let single = efficiency_of(&base.mode(0).build(g).unwrap(), cfg);
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [0, 2] {
        let ang = ModeSpec::Ang { j, n_ell: 2, base }.build(g).unwrap();
        let ratio = efficiency_of(&ang, cfg) / single;
        ok &= (ratio - 0.2).abs() <= 0.2 * 0.2;
        parts.push(format!("j={j}: {ratio:.4}"));
    }
    outcome(
        ok,
        format!(
            "ANG(N=2)/vortex efficiency ratio {} (target 0.2 +/- 20%)",
            parts.join(", ")
        ),
    )
}

fn c7_switching() -> Outcome {
    let g = panel();
    let cfg = GratingConfig::default();
    let channels: Vec<ModeSpec> = [5, -5, 0]
        .iter()
        .map(|&ell| ModeSpec::Vortex {
            ell,
            radius: VORTEX_RADIUS,
        })
        .collect();
    let frames: Vec<SwitchFrame> = channels
        .iter()
        .map(|m| {
            let h = synthesize(&normalize_peak(&m.build(g).unwrap()).unwrap(), cfg).unwrap();
            SwitchFrame::new(h, 1.0 / 4000.0).unwrap()
        })
        .collect();
    let t = switching_timeline(&frames, 40_000.0, &channels, None).unwrap();
    let mut argmax_ok = true;
    let mut inside = 0;
    let mut peak_in_slot = [false; 3];
    let mut off_slot: f64 = 0.0;
    for s in &t.samples {
        let best = (0..3)
            .max_by(|&a, &b| s.channel_power[a].total_cmp(&s.channel_power[b]))
            .unwrap();
        if t.strictly_inside(s) {
            inside += 1;
            argmax_ok &= best == s.frame;
        }
        for (c, &power) in s.channel_power.iter().enumerate() {
            if c == s.frame {
                peak_in_slot[c] |= power == 1.0;
            } else {
                off_slot = off_slot.max(power);
            }
        }
    }
    outcome(
        argmax_ok && peak_in_slot.iter().all(|&b| b),
        format!(
            "{} samples ({inside} strictly inside slots), argmax matches schedule: {argmax_ok}, \
             each channel reaches 1 in its slot: {}, max off-slot normalized power {off_slot:.2e}",
            t.samples.len(),
            peak_in_slot.iter().all(|&b| b)
        ),
    )
}

/// Deterministic value in `[-1, 1)` from two integers.
fn hash_unit(a: u64, b: u64) -> f64 {
    let mut x = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn c8_round_trips() -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    for case in 0..60u64 {
        let nx = 2 + (case * 7 % 37) as usize;
        let ny = 2 + (case * 11 % 23) as usize;
        let pitch = (1.0 + 9.0 * (0.5 + 0.5 * hash_unit(case, 0))) * 1e-6;
        let g = GridSpec::new(nx, ny, pitch).unwrap();
        let field = ComplexField::new(
            g,
            (0..g.len() as u64)
                .map(|k| {
                    Complex64::new(
                        hash_unit(case, 2 * k + 1) * 10f64.powi((case % 9) as i32 - 4),
                        hash_unit(case, 2 * k + 2),
                    )
                })
                .collect(),
        )
        .unwrap();
        let cfg = GratingConfig::new(4 + (case % 30) as u32).unwrap();
        let bits: Vec<bool> = (0..g.len() as u64)
            .map(|k| hash_unit(case, k + 7) > 0.0)
            .collect();
        let holo = BinaryHologram::new(g, bits, cfg).unwrap();

        let mut ok = true;
        let bytes = cf64::encode(&field);
        let back = cf64::decode(&bytes).unwrap();
        ok &= back == field && cf64::encode(&back) == bytes;

        for kind in [pnm::PnmKind::P4, pnm::PnmKind::P5] {
            let (img, side) = pnm::encode_hologram(&holo, kind);
            let back = pnm::decode_hologram(&img, &side).unwrap();
            let (img2, side2) = pnm::encode_hologram(&back, kind);
            ok &= back == holo && img2 == img && side2 == side;
        }

        let job = JobConfig {
            grid: g,
            grating: cfg,
            modes: vec![
                ModeSpec::Vortex {
                    ell: (case % 11) as i32 - 5,
                    radius: pitch * 3.0,
                },
                ModeSpec::Lg {
                    p_r: (case % 3) as u32,
                    ell: -(case as i32 % 4),
                    waist: pitch * 2.5,
                },
                ModeSpec::Ang {
                    j: (case % 3) as u32,
                    n_ell: 1 + (case % 3) as u32,
                    base: if case % 2 == 0 {
                        RadialBase::Vortex {
                            radius: pitch * (1.0 + hash_unit(case, 99).abs()),
                        }
                    } else {
                        RadialBase::Lg {
                            p_r: 1,
                            waist: pitch * 0.7,
                        }
                    },
                },
            ],
            aperture: if case % 3 == 0 {
                ApertureChoice::Auto
            } else {
                ApertureChoice::Manual(
                    ApertureSpec::new(
                        (hash_unit(case, 5) * 1e4, hash_unit(case, 6) * 1e3),
                        1e3 + case as f64,
                    )
                    .unwrap(),
                )
            },
            out: PathBuf::from(format!("runs/case_{case}")),
            sample_rate: (case % 2 == 1).then_some(4e4 + case as f64),
            frame_duration: 2.5e-4 * (1.0 + hash_unit(case, 8).abs()),
            cycles: 1 + (case % 4) as u32,
        };
        let text = job.to_text();
        let parsed = JobConfig::parse(&text).unwrap();
        ok &= parsed == job && parsed.to_text() == text;

        let table = Table {
            corner: "mode".into(),
            columns: (0..3).map(|k| format!("c{case}_{k}")).collect(),
            rows: (0..4)
                .map(|r| {
                    (
                        format!("r{r}"),
                        (0..3)
                            .map(|k| hash_unit(case, 1000 + 10 * r + k) * 1e3f64.powi(k as i32 - 1))
                            .collect(),
                    )
                })
                .collect(),
        };
        let csv = table.encode().unwrap();
        let back = Table::decode(&csv).unwrap();
        ok &= back == table && back.encode().unwrap() == csv;

        cases += 1;
        if !ok {
            failures.push(case);
        }
    }
    outcome(
        failures.is_empty() && cases >= 50,
        format!("{cases} cases (CF64, P4, P5, config, CSV), failures: {failures:?}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 binary grating efficiency", c1_grating_efficiency),
        ("2 analytic vs DFT coefficients", c2_fourier_coefficients),
        ("3 vortex phase circulation", c3_phase_circulation),
        ("4 round-trip fidelity and convergence", c4_fidelity),
        ("5 ANG/OAM unbiasedness", c5_mub),
        ("6 ANG efficiency ratio", c6_ang_efficiency_ratio),
        ("7 switching timeline", c7_switching),
        ("8 format round trips", c8_round_trips),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
