//! Job configuration files.
//!
//! Line-oriented `key = value` text. Blank lines and lines starting with `#`
//! are ignored. Keys:
//!
//! ```text
//! grid           = <nx> <ny> <pitch_m>
//! period         = <samples per carrier period>
//! mode           = vortex <ell> <radius_m>
//! mode           = lg <p> <ell> <waist_m>
//! mode           = ang <j> <n_ell> vortex <radius_m>
//! mode           = ang <j> <n_ell> lg <p> <waist_m>
//! aperture       = auto | <fx_per_m> <fy_per_m> <radius_per_m>
//! out            = <directory>
//! sample_rate    = <Hz>
//! frame_duration = <s>
//! cycles         = <repetitions of the mode list>
//! ```
//!
//! `mode` may repeat and keeps its order; every other key appears at most
//! once. Absent keys take the defaults of [`JobConfig::default`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fieldgen::{ModeSpec, RadialBase};
use crate::grid::GridSpec;
use crate::hologram::GratingConfig;
use crate::propagate::ApertureSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApertureChoice {
    /// The +1 order disk implied by the grating.
    Auto,
    Manual(ApertureSpec),
}

impl ApertureChoice {
    pub fn resolve(&self, config: &GratingConfig, grid: &GridSpec) -> ApertureSpec {
        match self {
            ApertureChoice::Auto => ApertureSpec::first_order(config, grid),
            ApertureChoice::Manual(a) => *a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub grid: GridSpec,
    pub grating: GratingConfig,
    pub modes: Vec<ModeSpec>,
    pub aperture: ApertureChoice,
    pub out: PathBuf,
    pub sample_rate: Option<f64>,
    pub frame_duration: f64,
    pub cycles: u32,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::dmd_default(),
            grating: GratingConfig::default(),
            modes: Vec::new(),
            aperture: ApertureChoice::Auto,
            out: PathBuf::from("."),
            sample_rate: None,
            frame_duration: 2.5e-4,
            cycles: 1,
        }
    }
}

fn mode_text(m: &ModeSpec) -> String {
    match *m {
        ModeSpec::Vortex { ell, radius } => format!("vortex {ell} {radius:e}"),
        ModeSpec::Lg { p_r, ell, waist } => format!("lg {p_r} {ell} {waist:e}"),
        ModeSpec::Ang { j, n_ell, base } => match base {
            RadialBase::Vortex { radius } => format!("ang {j} {n_ell} vortex {radius:e}"),
            RadialBase::Lg { p_r, waist } => format!("ang {j} {n_ell} lg {p_r} {waist:e}"),
        },
    }
}

fn num<T: FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::format("config", format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::format("config", format!("{what}: cannot parse {tok:?}")))
}

fn finish<'a>(mut it: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    match it.next() {
        None => Ok(()),
        Some(t) => Err(Error::format(
            "config",
            format!("{what}: unexpected token {t:?}"),
        )),
    }
}

/// Parse a mode descriptor such as `lg 2 -1 5e-4`.
pub fn parse_mode(text: &str) -> Result<ModeSpec> {
    let mut it = text.split_whitespace();
    let m = match it.next() {
        Some("vortex") => ModeSpec::Vortex {
            ell: num(it.next(), "vortex ell")?,
            radius: num(it.next(), "vortex radius")?,
        },
        Some("lg") => ModeSpec::Lg {
            p_r: num(it.next(), "lg p")?,
            ell: num(it.next(), "lg ell")?,
            waist: num(it.next(), "lg waist")?,
        },
        Some("ang") => {
            let j = num(it.next(), "ang j")?;
            let n_ell = num(it.next(), "ang n_ell")?;
            let base = match it.next() {
                Some("vortex") => RadialBase::Vortex {
                    radius: num(it.next(), "base radius")?,
                },
                Some("lg") => RadialBase::Lg {
                    p_r: num(it.next(), "base p")?,
                    waist: num(it.next(), "base waist")?,
                },
                other => {
                    return Err(Error::format(
                        "config",
                        format!("ang base must be vortex or lg, got {other:?}"),
                    ))
                }
            };
            ModeSpec::Ang { j, n_ell, base }
        }
        other => {
            return Err(Error::format(
                "config",
                format!("unknown mode kind {other:?}"),
            ))
        }
    };
    finish(it, "mode")?;
    m.validate()?;
    Ok(m)
}

impl JobConfig {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "grid = {} {} {:e}", g.nx(), g.ny(), g.pitch());
        let _ = writeln!(s, "period = {}", self.grating.period_samples());
        for m in &self.modes {
            let _ = writeln!(s, "mode = {}", mode_text(m));
        }
        match self.aperture {
            ApertureChoice::Auto => s.push_str("aperture = auto\n"),
            ApertureChoice::Manual(a) => {
                let _ = writeln!(
                    s,
                    "aperture = {:e} {:e} {:e}",
                    a.center.0, a.center.1, a.radius
                );
            }
        }
        let _ = writeln!(s, "out = {}", self.out.display());
        if let Some(r) = self.sample_rate {
            let _ = writeln!(s, "sample_rate = {r:e}");
        }
        let _ = writeln!(s, "frame_duration = {:e}", self.frame_duration);
        let _ = writeln!(s, "cycles = {}", self.cycles);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = JobConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format("config", format!("line {}: expected key = value", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key != "mode" {
                if seen.contains(&key) {
                    return Err(Error::format("config", format!("duplicate key {key}")));
                }
                seen.push(key);
            }
            let mut it = value.split_whitespace();
            match key {
                "grid" => {
                    let nx = num(it.next(), "grid nx")?;
                    let ny = num(it.next(), "grid ny")?;
                    let pitch = num(it.next(), "grid pitch")?;
                    finish(it, "grid")?;
                    cfg.grid = GridSpec::new(nx, ny, pitch)?;
                }
                "period" => {
                    cfg.grating = GratingConfig::new(num(it.next(), "period")?)?;
                    finish(it, "period")?;
                }
                "mode" => cfg.modes.push(parse_mode(value)?),
                "aperture" => {
                    cfg.aperture = if value == "auto" {
                        ApertureChoice::Auto
                    } else {
                        let fx = num(it.next(), "aperture fx")?;
                        let fy = num(it.next(), "aperture fy")?;
                        let r = num(it.next(), "aperture radius")?;
                        finish(it, "aperture")?;
                        ApertureChoice::Manual(ApertureSpec::new((fx, fy), r)?)
                    };
                }
                "out" => {
                    if value.is_empty() {
                        return Err(Error::format("config", "empty out directory"));
                    }
                    cfg.out = PathBuf::from(value);
                }
                "sample_rate" => {
                    let r: f64 = num(it.next(), "sample_rate")?;
                    finish(it, "sample_rate")?;
                    if !(r.is_finite() && r > 0.0) {
                        return Err(Error::invalid("sample_rate must be positive"));
                    }
                    cfg.sample_rate = Some(r);
                }
                "frame_duration" => {
                    let d: f64 = num(it.next(), "frame_duration")?;
                    finish(it, "frame_duration")?;
                    if !(d.is_finite() && d > 0.0) {
                        return Err(Error::invalid("frame_duration must be positive"));
                    }
                    cfg.frame_duration = d;
                }
                "cycles" => {
                    cfg.cycles = num(it.next(), "cycles")?;
                    finish(it, "cycles")?;
                    if cfg.cycles == 0 {
                        return Err(Error::invalid("cycles must be at least 1"));
                    }
                }
                other => return Err(Error::format("config", format!("unknown key {other}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_text() {
        let c = JobConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, JobConfig::default());
        assert_eq!(c.grid, GridSpec::dmd_default());
        assert_eq!(c.grating.period_samples(), 20);
    }

    #[test]
    fn full_round_trip() {
        let text = "\
grid = 64 48 1e-5
period = 12
mode = vortex -5 1.5e-4
mode = lg 2 1 1e-4
mode = ang 1 2 vortex 1e-4
mode = ang 0 3 lg 1 8e-5
aperture = 8.333e3 0e0 4e3
out = results/run1
sample_rate = 4e4
frame_duration = 2.5e-4
cycles = 3
";
        let c = JobConfig::parse(text).unwrap();
        assert_eq!(c.modes.len(), 4);
        assert_eq!(
            c.modes[0],
            ModeSpec::Vortex {
                ell: -5,
                radius: 1.5e-4
            }
        );
        assert_eq!(c.cycles, 3);
        let again = c.to_text();
        assert_eq!(JobConfig::parse(&again).unwrap(), c);
        assert_eq!(JobConfig::parse(&again).unwrap().to_text(), again);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in [
            "grid = 10 10",
            "grid = 10 10 1 9",
            "period = 2",
            "mode = ring 1",
            "mode = vortex 1",
            "mode = ang 0 2 cube 1",
            "mode = lg 0 0 -1",
            "color = red",
            "period = 20\nperiod = 20",
            "just text",
            "cycles = 0",
            "sample_rate = -1",
        ] {
            assert!(JobConfig::parse(bad).is_err(), "{bad}");
        }
    }
}
