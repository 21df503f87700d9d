//! Binary amplitude holograms for structured light.
//!
//! Complex target fields are encoded into on/off mirror maps by modulating
//! the width and position of the pulses of a carrier grating. A simulated
//! Fourier-plane filter recovers the first diffraction order so that
//! fidelity, efficiency, modal crosstalk and mode switching can be checked
//! numerically.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fieldgen;
pub mod grid;
pub mod hologram;
pub mod io;
pub mod propagate;

pub use error::{Error, Result};
pub use fieldgen::{ModeSpec, RadialBase};
pub use grid::{ComplexField, GridSpec};
pub use hologram::{synthesize, BinaryHologram, GratingConfig, PulseParams};
pub use propagate::{simulate_reconstruction, ApertureSpec};
