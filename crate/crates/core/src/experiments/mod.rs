//! Exact oracles for the tail bounds, a seeded Monte Carlo harness and the
//! datasets behind the sample-size and confidence figures.

mod figures;
mod monte_carlo;
mod oracles;

pub use figures::{figure_dataset, write_figure, FigureDataset, FigureId, FigureSpec, Value};
pub use monte_carlo::{mc_pass_estimate, mc_trials, trial_seeds, McEstimate, TrialSummary};
pub use oracles::{
    exact_certification_pass_probability, exact_pass_probability, oracle_certification, oracle_verification,
    OracleResult, MAX_CERTIFICATION_ORACLE_COPIES, MAX_PASS_ORACLE_COPIES,
};
