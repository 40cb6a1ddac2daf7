//! Shared fixtures for the benchmarks.

use warpiso_core::{Preset, WarpSpec};

/// The `paper` preset with m = 1 in dimension n; it violates the stability condition everywhere.
pub fn paper_metric(n: usize) -> WarpSpec {
    WarpSpec::preset(Preset::Paper { m: 1.0 }, n).expect("paper preset is valid")
}
