//! Wellposedness experiments: parameter families, dependence sweeps,
//! blow-up comparisons and closed-form scenarios.

mod example21;
mod family;
mod oracle;
mod sweep;

pub use example21::{secant_squared, three_piece, IntegralCache, SquaredIntegral, StepsSolution};
pub use family::{
    example21_family, geometric_sequence, DelayedAmari, FamilyParameter, OperatorBuilder, PerturbationFamily,
    RateProbe,
};
pub use oracle::{example31_solution, verify_oracle, Example31Setup, OracleReport, ScenarioOracle};
pub use sweep::{
    compare_blowup_windows, run_dependence_sweep, BlowupRow, BlowupTable, DependenceReport, DependenceRow,
    HypothesisCheck, DEFAULT_GAMMA,
};
