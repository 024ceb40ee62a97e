//! Domain types, the exponential kernel, and exact plus incremental intensity evaluation.

mod events;
mod intensity;
mod kernel;
mod params;
mod state;

pub use events::{Event, EventLog};
pub use intensity::intensity_naive;
pub use kernel::{clamped_mass, kernel_eval, kernel_integral};
pub(crate) use kernel::{clamped_mass_parts, decay, mass};
pub use params::{ModelParams, ParamRow, UserParams};
pub use state::{intensity_from_state, IntensityState};
