//! Simulation engine: scenarios, the Monte Carlo runner, result persistence
//! and built-in presets.

pub mod presets;
pub mod results;
pub mod runner;
pub mod scenario;

pub use presets::{find_preset, presets, Preset};
pub use results::{write_results, BerCell, BerCurve, BerPoint};
pub use runner::{run_sweep, run_window_instrumented, WindowResult};
pub use scenario::{load_scenario, scenario_to_json, Scenario, SpatialSpec, StatsMode, StopRule};
