//! Declarative scenario runs: parse a config, run every scenario, write
//! reports.

mod config;
mod output;
mod run;

pub use config::{
    parse_config, to_config_text, ConditionCheck, ConfigError, ConfigErrors, ScenarioConfig, ScenarioKind, DEFAULT_DELTA,
    DEFAULT_SAMPLES, DEFAULT_X_MULTIPLIERS, MIN_SCALED_SAMPLES,
};
pub use output::{config_hash, emit_outputs, RunInfo, SCHEMA_VERSION};
pub use run::{
    run_scenario, run_scenarios, ConditionOutcome, DiagnosticsReport, RuinScenario, ScenarioOutcome, ScenarioReport,
};

#[cfg(test)]
mod tests;
