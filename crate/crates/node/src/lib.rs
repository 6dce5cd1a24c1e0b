//! Network runtime for the front and central nodes.

pub mod clock;
pub mod front;
pub mod http;
pub mod state;

pub use clock::{Clock, ManualClock, SystemClock};
pub use state::AppState;
