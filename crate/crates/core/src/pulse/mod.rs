//! Control-field parameterizations, synthesis, truncation and time-frequency analysis.
//!
//! Fields are complex rotating-frame envelopes Ẽ(t) in V/m. The physical field is
//! E(t) = ê [Ẽ(t) e^{−iω₀t} + c.c.], so a component Ẽ ∝ e^{−iδt} oscillates at the
//! optical frequency ω₀ + δ and the peak physical amplitude is 2|Ẽ|.

mod chirp;
mod crab;
mod field;
mod truncate;
mod wigner;

pub use chirp::{synthesize_chirp, ChirpPulse, CHIRP_POINTS};
pub use crab::{crab_frequencies, synthesize_crab, CrabPulse, TimeGrid};
pub use field::{polarization_vector, SampledField};
pub use truncate::{truncate_pulse, TruncationRule};
pub use wigner::{spectral_intensity, wigner_on_grid, wigner_spectrogram, Spectrogram};

/// Default sampling interval of synthesized fields, fs. Propagation steps span two samples.
pub const FIELD_DT: f64 = 0.25;
