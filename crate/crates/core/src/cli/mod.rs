//! Command-line front end.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    crosstalk_matrix, fidelity, intensity, interferogram, mub_matrix, switching_timeline, Pipeline,
    SwitchFrame,
};
use crate::error::{Error, Result};
use crate::fieldgen::{normalize_peak, ModeSpec, RadialBase};
use crate::grid::{ComplexField, GridSpec};
use crate::hologram::{synthesize, BinaryHologram, GratingConfig};
use crate::io::cf64;
use crate::io::csv::Table;
use crate::io::pnm::{self, GrayImage, PnmKind};
use crate::propagate::{reconstruct, ApertureSpec};

pub use config::{ApertureChoice, JobConfig};

#[derive(Debug, Parser)]
#[command(
    name = "binholo",
    version,
    about = "Binary amplitude holograms for structured light"
)]
pub struct Cli {
    /// Sampling grid: columns, rows, pitch in metres.
    #[arg(long, global = true, num_args = 3, value_names = ["NX", "NY", "PITCH_M"])]
    grid: Option<Vec<String>>,

    /// Carrier period in samples.
    #[arg(long, global = true)]
    period: Option<u32>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Job configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ModeArgs {
    /// Top-hat vortex with this topological charge.
    #[arg(long, value_name = "L", allow_negative_numbers = true)]
    vortex: Option<i32>,

    /// Vortex disk radius in metres.
    #[arg(long, value_name = "M")]
    radius: Option<f64>,

    /// Laguerre-Gaussian mode with radial index P and charge L.
    #[arg(long, num_args = 2, value_names = ["P", "L"], allow_negative_numbers = true)]
    lg: Option<Vec<i32>>,

    /// LG waist in metres.
    #[arg(long, value_name = "M")]
    waist: Option<f64>,

    /// Angular mode J of the 2N+1 dimensional set.
    #[arg(long, num_args = 2, value_names = ["J", "N"])]
    ang: Option<Vec<u32>>,

    /// Build ANG modes from top-hat vortices of this radius.
    #[arg(long, value_name = "M")]
    base_vortex_radius: Option<f64>,

    /// Build ANG modes from LG modes with radial index P and waist W.
    #[arg(long, num_args = 2, value_names = ["P", "W"])]
    base_lg: Option<Vec<String>>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| Error::invalid(format!("{flag} is required")))
}

impl ModeArgs {
    fn base(&self) -> Result<Option<RadialBase>> {
        match (&self.base_vortex_radius, &self.base_lg) {
            (Some(_), Some(_)) => Err(Error::invalid(
                "--base-vortex-radius and --base-lg are mutually exclusive",
            )),
            (Some(r), None) => Ok(Some(RadialBase::Vortex { radius: *r })),
            (None, Some(v)) => {
                let p_r = v[0]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad LG radial index {:?}", v[0])))?;
                let waist = v[1]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad LG waist {:?}", v[1])))?;
                Ok(Some(RadialBase::Lg { p_r, waist }))
            }
            (None, None) => Ok(None),
        }
    }

    /// The requested mode, or `None` when no mode flag was given.
    pub fn spec(&self) -> Result<Option<ModeSpec>> {
        let chosen = [self.vortex.is_some(), self.lg.is_some(), self.ang.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if chosen > 1 {
            return Err(Error::invalid("give only one of --vortex, --lg, --ang"));
        }
        let spec = if let Some(ell) = self.vortex {
            ModeSpec::Vortex {
                ell,
                radius: need(self.radius, "--radius")?,
            }
        } else if let Some(v) = &self.lg {
            if v[0] < 0 {
                return Err(Error::invalid("LG radial index must be non-negative"));
            }
            ModeSpec::Lg {
                p_r: v[0] as u32,
                ell: v[1],
                waist: need(self.waist, "--waist")?,
            }
        } else if let Some(v) = &self.ang {
            let base = self
                .base()?
                .ok_or_else(|| Error::invalid("--ang needs --base-vortex-radius or --base-lg"))?;
            ModeSpec::Ang {
                j: v[0],
                n_ell: v[1],
                base,
            }
        } else {
            return Ok(None);
        };
        spec.validate()?;
        Ok(Some(spec))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a target mode: CF64 field plus intensity image.
    Mode {
        #[command(flatten)]
        mode: ModeArgs,
        /// Base name of the output files.
        #[arg(long)]
        name: Option<String>,
    },
    /// Encode a field (CF64 file or mode flags) as a binary hologram.
    Holo {
        /// Field to encode; peak-normalized before encoding.
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long)]
        name: Option<String>,
        /// Write an 8-bit P5 image instead of packed P4.
        #[arg(long)]
        p5: bool,
    },
    /// Reconstruct the filtered diffraction order of a hologram.
    Simulate {
        /// Hologram image (its sidecar must sit next to it).
        #[arg(long)]
        holo: PathBuf,
        /// Aperture centre and radius in cycles per metre.
        #[arg(long, num_args = 3, value_names = ["FX", "FY", "R"], allow_negative_numbers = true)]
        aperture: Option<Vec<f64>>,
        /// Use the -1 order instead of the +1 order.
        #[arg(long)]
        conjugate: bool,
        /// Field to compare the reconstruction against.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Interfere a field with a tilted plane wave.
    Interfere {
        #[arg(long)]
        field: PathBuf,
        /// Reference tilt in cycles per metre (defaults to the carrier).
        #[arg(long, num_args = 2, value_names = ["FX", "FY"], allow_negative_numbers = true)]
        tilt: Option<Vec<f64>>,
        /// Reference amplitude relative to the field peak.
        #[arg(long, default_value_t = 1.0)]
        ref_amplitude: f64,
        #[arg(long)]
        name: Option<String>,
    },
    /// Play a hologram sequence and record modal detector powers.
    Sequence {
        /// Vortex charges to play in order (needs --radius).
        #[arg(long, num_args = 1.., value_name = "L", allow_negative_numbers = true)]
        vortices: Option<Vec<i32>>,
        #[arg(long, value_name = "M")]
        radius: Option<f64>,
        #[arg(long, value_name = "HZ")]
        sample_rate: Option<f64>,
        #[arg(long, value_name = "S")]
        frame_duration: Option<f64>,
        #[arg(long)]
        cycles: Option<u32>,
        /// Also write one trace image per channel.
        #[arg(long)]
        plots: bool,
    },
    /// Crosstalk and unbiasedness matrices as CSV.
    Report {
        /// Unbiasedness matrix of the 2N+1 dimensional ANG/OAM pair.
        #[arg(long, value_name = "N")]
        mub: Option<u32>,
        /// Crosstalk matrix of the configured (or --vortex-range) modes.
        #[arg(long)]
        crosstalk: bool,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        vortex_range: Option<Vec<i32>>,
        /// Vortex radius for --vortex-range and the default MUB base.
        #[arg(long, value_name = "M")]
        radius: Option<f64>,
        #[arg(long, value_name = "M")]
        base_vortex_radius: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["P", "W"])]
        base_lg: Option<Vec<String>>,
        /// Skip the hologram and feed the targets straight through.
        #[arg(long)]
        identity: bool,
    },
}

/// Vortex radius used by `report` when none is given.
pub const DEFAULT_RADIUS: f64 = 1.0e-3;

struct Context {
    job: JobConfig,
    files: Vec<PathBuf>,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut job = match &cli.config {
            Some(p) => JobConfig::load(p)?,
            None => JobConfig::default(),
        };
        if let Some(g) = &cli.grid {
            let nx = g[0]
                .parse()
                .map_err(|_| Error::invalid(format!("bad grid width {:?}", g[0])))?;
            let ny = g[1]
                .parse()
                .map_err(|_| Error::invalid(format!("bad grid height {:?}", g[1])))?;
            let pitch = g[2]
                .parse()
                .map_err(|_| Error::invalid(format!("bad grid pitch {:?}", g[2])))?;
            job.grid = GridSpec::new(nx, ny, pitch)?;
        }
        if let Some(p) = cli.period {
            job.grating = GratingConfig::new(p)?;
        }
        if let Some(o) = &cli.out {
            job.out = o.clone();
        }
        std::fs::create_dir_all(&job.out)?;
        Ok(Self {
            job,
            files: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.job.out.join(name)
    }

    fn wrote(&mut self, p: PathBuf) {
        println!("wrote {}", p.display());
        self.files.push(p);
    }

    fn save_field(&mut self, name: &str, f: &ComplexField) -> Result<()> {
        let p = self.path(&format!("{name}.cf64"));
        cf64::save(&p, f)?;
        self.wrote(p);
        Ok(())
    }

    fn save_intensity(&mut self, name: &str, f: &ComplexField) -> Result<()> {
        let img = intensity(f);
        let p = self.path(&format!("{name}.pgm"));
        pnm::save_gray(&p, &pnm::to_gray(img.grid.nx(), img.grid.ny(), &img.values))?;
        self.wrote(p);
        Ok(())
    }

    fn save_table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name);
        t.save(&p)?;
        self.wrote(p);
        Ok(())
    }

    /// Modes from the command line, falling back to the configuration.
    fn modes(&self, args: &ModeArgs) -> Result<Vec<ModeSpec>> {
        match args.spec()? {
            Some(m) => Ok(vec![m]),
            None if !self.job.modes.is_empty() => Ok(self.job.modes.clone()),
            None => Err(Error::Empty(
                "no mode given (use --vortex, --lg, --ang or a config)",
            )),
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into())
}

fn single_name(name: &Option<String>, count: usize, default: String) -> Result<String> {
    match name {
        Some(_) if count > 1 => Err(Error::invalid("--name needs exactly one mode")),
        Some(n) => Ok(n.clone()),
        None => Ok(default),
    }
}

fn cmd_mode(ctx: &mut Context, mode: &ModeArgs, name: &Option<String>) -> Result<()> {
    let modes = ctx.modes(mode)?;
    for m in &modes {
        let base = single_name(name, modes.len(), m.label())?;
        let f = m.build(ctx.job.grid)?;
        ctx.save_field(&base, &f)?;
        ctx.save_intensity(&format!("{base}_intensity"), &f)?;
    }
    Ok(())
}

fn cmd_holo(
    ctx: &mut Context,
    field: &Option<PathBuf>,
    mode: &ModeArgs,
    name: &Option<String>,
    p5: bool,
) -> Result<()> {
    let kind = if p5 { PnmKind::P5 } else { PnmKind::P4 };
    let targets: Vec<(String, ComplexField)> = match field {
        Some(path) => {
            if mode.spec()?.is_some() {
                return Err(Error::invalid("give either --field or a mode, not both"));
            }
            vec![(stem(path), cf64::load(path)?)]
        }
        None => ctx
            .modes(mode)?
            .iter()
            .map(|m| Ok((m.label(), m.build(ctx.job.grid)?)))
            .collect::<Result<_>>()?,
    };
    let count = targets.len();
    for (label, f) in targets {
        let base = single_name(name, count, label)?;
        let f = if f.max_amplitude() == 0.0 {
            f
        } else {
            normalize_peak(&f)?
        };
        let h = synthesize(&f, ctx.job.grating)?;
        let p = ctx.path(&format!("{base}.pgm"));
        pnm::save_hologram(&p, &h, kind)?;
        ctx.wrote(pnm::sidecar_path(&p));
        ctx.wrote(p);
        println!("on mirrors: {} of {}", h.on_count(), h.grid().len());
    }
    Ok(())
}

fn cmd_simulate(
    ctx: &mut Context,
    holo: &Path,
    aperture: &Option<Vec<f64>>,
    conjugate: bool,
    target: &Option<PathBuf>,
    name: &Option<String>,
) -> Result<()> {
    let h = pnm::load_hologram(holo)?;
    let mut ap = match aperture {
        Some(v) => ApertureSpec::new((v[0], v[1]), v[2])?,
        None => ctx.job.aperture.resolve(h.config(), h.grid()),
    };
    if conjugate {
        ap = ap.conjugate();
    }
    let target = match target {
        Some(t) => Some(cf64::load(t)?),
        None => None,
    };
    let r = reconstruct(&h, &ap)?;
    let base = name.clone().unwrap_or_else(|| stem(holo));
    let mut metrics = format!("efficiency = {:.6}\n", r.efficiency);
    if let Some(t) = &target {
        metrics.push_str(&format!("fidelity = {:.6}\n", fidelity(&r.field, t)?));
    }
    print!("{metrics}");
    ctx.save_field(&format!("{base}_recon"), &r.field)?;
    ctx.save_intensity(&format!("{base}_recon_intensity"), &r.field)?;
    let p = ctx.path(&format!("{base}_metrics.txt"));
    std::fs::write(&p, metrics)?;
    ctx.wrote(p);
    Ok(())
}

fn cmd_interfere(
    ctx: &mut Context,
    field: &Path,
    tilt: &Option<Vec<f64>>,
    ref_amplitude: f64,
    name: &Option<String>,
) -> Result<()> {
    let f = cf64::load(field)?;
    let tilt = match tilt {
        Some(v) => (v[0], v[1]),
        None => (1.0 / ctx.job.grating.period_m(f.grid()), 0.0),
    };
    let peak = f.max_amplitude();
    let scale = if peak > 0.0 { peak } else { 1.0 };
    let img = interferogram(&f, tilt, ref_amplitude * scale)?;
    let base = name.clone().unwrap_or_else(|| stem(field));
    let p = ctx.path(&format!("{base}_interferogram.pgm"));
    pnm::save_gray(&p, &pnm::to_gray(img.grid.nx(), img.grid.ny(), &img.values))?;
    ctx.wrote(p);
    Ok(())
}

fn trace_image(values: &[f64]) -> GrayImage {
    const HEIGHT: usize = 64;
    let width = values.len().max(1);
    let mut pixels = vec![0u8; width * HEIGHT];
    for (i, v) in values.iter().enumerate() {
        let level = (v.clamp(0.0, 1.0) * (HEIGHT - 1) as f64).round() as usize;
        for row in 0..=level {
            pixels[(HEIGHT - 1 - row) * width + i] = 255;
        }
    }
    GrayImage {
        width,
        height: HEIGHT,
        pixels,
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sequence(
    ctx: &mut Context,
    vortices: &Option<Vec<i32>>,
    radius: Option<f64>,
    sample_rate: Option<f64>,
    frame_duration: Option<f64>,
    cycles: Option<u32>,
    plots: bool,
) -> Result<()> {
    let schedule: Vec<ModeSpec> = match vortices {
        Some(ls) => {
            let radius = need(radius, "--radius")?;
            ls.iter()
                .map(|&ell| ModeSpec::Vortex { ell, radius })
                .collect()
        }
        None => ctx.job.modes.clone(),
    };
    if schedule.is_empty() {
        return Err(Error::Empty("sequence has no modes"));
    }
    let duration = frame_duration.unwrap_or(ctx.job.frame_duration);
    let cycles = cycles.unwrap_or(ctx.job.cycles).max(1);
    let rate = sample_rate
        .or(ctx.job.sample_rate)
        .unwrap_or(10.0 / duration);
    let grid = ctx.job.grid;

    let mut channels: Vec<ModeSpec> = Vec::new();
    for m in &schedule {
        if !channels.contains(m) {
            channels.push(*m);
        }
    }
    let holos: Vec<BinaryHologram> = channels
        .iter()
        .map(|m| synthesize(&normalize_peak(&m.build(grid)?)?, ctx.job.grating))
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(schedule.len() * cycles as usize);
    for _ in 0..cycles {
        for m in &schedule {
            let k = channels.iter().position(|c| c == m).unwrap();
            frames.push(SwitchFrame::new(holos[k].clone(), duration)?);
        }
    }
    let aperture = match ctx.job.aperture {
        ApertureChoice::Auto => None,
        ApertureChoice::Manual(a) => Some(a),
    };
    let timeline = switching_timeline(&frames, rate, &channels, aperture)?;
    ctx.save_table("timeline.csv", &Table::from(&timeline))?;
    if plots {
        for (c, label) in timeline.channel_labels.clone().iter().enumerate() {
            let trace: Vec<f64> = timeline
                .samples
                .iter()
                .map(|s| s.channel_power[c])
                .collect();
            let p = ctx.path(&format!("timeline_{label}.pgm"));
            pnm::save_gray(&p, &trace_image(&trace))?;
            ctx.wrote(p);
        }
    }
    println!(
        "{} frames, {} samples at {} Hz",
        frames.len(),
        timeline.samples.len(),
        rate
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    ctx: &mut Context,
    mub: Option<u32>,
    crosstalk: bool,
    vortex_range: &Option<Vec<i32>>,
    radius: Option<f64>,
    base_vortex_radius: Option<f64>,
    base_lg: &Option<Vec<String>>,
    identity: bool,
) -> Result<()> {
    let grid = ctx.job.grid;
    let want_crosstalk = crosstalk || vortex_range.is_some();
    if mub.is_none() && !want_crosstalk {
        return Err(Error::invalid(
            "nothing to report (use --mub and/or --crosstalk)",
        ));
    }
    if let Some(n) = mub {
        let base = ModeArgs {
            base_vortex_radius,
            base_lg: base_lg.clone(),
            ..ModeArgs::default()
        }
        .base()?
        .unwrap_or(RadialBase::Vortex {
            radius: radius.unwrap_or(DEFAULT_RADIUS),
        });
        let m = mub_matrix(grid, n, base)?;
        println!(
            "mub: max deviation from 1/{} is {:.3e}",
            m.cols(),
            m.max_abs_deviation(1.0 / m.cols() as f64)
        );
        ctx.save_table("mub.csv", &Table::from(&m))?;
    }
    if want_crosstalk {
        let modes: Vec<ModeSpec> = match vortex_range {
            Some(r) => {
                if r[0] > r[1] {
                    return Err(Error::invalid("--vortex-range needs LO <= HI"));
                }
                let radius = radius.unwrap_or(DEFAULT_RADIUS);
                (r[0]..=r[1])
                    .map(|ell| ModeSpec::Vortex { ell, radius })
                    .collect()
            }
            None => ctx.job.modes.clone(),
        };
        if modes.is_empty() {
            return Err(Error::Empty("mode set is empty"));
        }
        let pipeline = if identity {
            Pipeline::Identity
        } else {
            Pipeline::Hologram {
                config: ctx.job.grating,
                aperture: match ctx.job.aperture {
                    ApertureChoice::Auto => None,
                    ApertureChoice::Manual(a) => Some(a),
                },
            }
        };
        let x = crosstalk_matrix(grid, &modes, pipeline)?;
        ctx.save_table("crosstalk.csv", &Table::from(&x))?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let mut ctx = Context::new(cli)?;
    match &cli.command {
        Command::Mode { mode, name } => cmd_mode(&mut ctx, mode, name),
        Command::Holo {
            field,
            mode,
            name,
            p5,
        } => cmd_holo(&mut ctx, field, mode, name, *p5),
        Command::Simulate {
            holo,
            aperture,
            conjugate,
            target,
            name,
        } => cmd_simulate(&mut ctx, holo, aperture, *conjugate, target, name),
        Command::Interfere {
            field,
            tilt,
            ref_amplitude,
            name,
        } => cmd_interfere(&mut ctx, field, tilt, *ref_amplitude, name),
        Command::Sequence {
            vortices,
            radius,
            sample_rate,
            frame_duration,
            cycles,
            plots,
        } => cmd_sequence(
            &mut ctx,
            vortices,
            *radius,
            *sample_rate,
            *frame_duration,
            *cycles,
            *plots,
        ),
        Command::Report {
            mub,
            crosstalk,
            vortex_range,
            radius,
            base_vortex_radius,
            base_lg,
            identity,
        } => cmd_report(
            &mut ctx,
            *mub,
            *crosstalk,
            vortex_range,
            *radius,
            *base_vortex_radius,
            base_lg,
            *identity,
        ),
    }
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("binholo").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn negative_charges_parse() {
        let cli = parse(&["mode", "--vortex", "-5", "--radius", "1e-3"]);
        match cli.command {
            Command::Mode { mode, .. } => {
                assert_eq!(
                    mode.spec().unwrap(),
                    Some(ModeSpec::Vortex {
                        ell: -5,
                        radius: 1e-3
                    })
                );
            }
            _ => panic!(),
        }
        let cli = parse(&["sequence", "--vortices", "5", "-5", "0", "--radius", "1e-3"]);
        assert!(
            matches!(cli.command, Command::Sequence { vortices: Some(ref v), .. } if v == &[5, -5, 0])
        );
    }

    #[test]
    fn mode_flag_combinations() {
        let m = |args: &[&str]| match parse(args).command {
            Command::Mode { mode, .. } => mode.spec(),
            _ => unreachable!(),
        };
        assert!(m(&["mode", "--vortex", "1"]).is_err());
        assert!(m(&["mode", "--vortex", "1", "--radius", "1e-3", "--lg", "0", "1"]).is_err());
        assert!(m(&["mode", "--ang", "0", "2"]).is_err());
        assert_eq!(
            m(&["mode", "--ang", "1", "2", "--base-lg", "1", "5e-4"]).unwrap(),
            Some(ModeSpec::Ang {
                j: 1,
                n_ell: 2,
                base: RadialBase::Lg {
                    p_r: 1,
                    waist: 5e-4
                }
            })
        );
        assert_eq!(m(&["mode"]).unwrap(), None);
    }

    #[test]
    fn parse_failures_exit_with_one() {
        assert_eq!(run(["binholo", "frobnicate"]), 1);
        assert_eq!(run(["binholo", "mode", "--vortex", "x"]), 1);
        assert_eq!(run(["binholo", "--help"]), 0);
    }
}
