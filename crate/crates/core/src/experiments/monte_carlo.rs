use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::Plan;
use crate::sources::BoundSource;

/// Per-trial seeds: the first `trials` outputs of a generator seeded with
/// `master`. Trial i always gets the same seed regardless of scheduling.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub success: bool,
    pub q1: u64,
    pub n1: u64,
    pub realized_branch: Option<usize>,
}

/// Runs `trials` independent protocol runs on up to `workers` threads.
/// Results are in trial order and identical for any worker count.
pub fn mc_trials(
    plan: &Plan,
    source: &BoundSource<'_>,
    trials: usize,
    master: u64,
    workers: usize,
) -> Result<Vec<TrialSummary>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is needed".into()));
    }
    let run = |seed: u64| -> Result<TrialSummary> {
        let (t, v) = plan.run(source, seed)?;
        Ok(TrialSummary {
            seed,
            success: v.success(),
            q1: v.q1,
            n1: v.n1,
            realized_branch: t.realized_branch,
        })
    };
    let seeds = trial_seeds(master, trials);
    if workers <= 1 {
        return seeds.into_iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| seeds.into_par_iter().map(run).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: usize,
    pub passes: usize,
    pub rate: f64,
    /// Binomial standard error sqrt(rate(1 − rate)/trials).
    pub stderr: f64,
}

impl McEstimate {
    pub fn from_counts(passes: usize, trials: usize) -> Self {
        let rate = passes as f64 / trials as f64;
        Self {
            trials,
            passes,
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        }
    }
}

/// Fraction of seeded runs that pass, with its binomial standard error.
pub fn mc_pass_estimate(
    plan: &Plan,
    source: &BoundSource<'_>,
    trials: usize,
    master: u64,
    workers: usize,
) -> Result<McEstimate> {
    let runs = mc_trials(plan, source, trials, master, workers)?;
    Ok(McEstimate::from_counts(
        runs.iter().filter(|r| r.success).count(),
        trials,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::exact_pass_probability;
    use crate::games::{standard_game, StandardGame};
    use crate::protocols::plan_verification;
    use crate::sources::SourceModel;

    #[test]
    fn worker_count_does_not_change_results() {
        let (game, model) = standard_game(StandardGame::Mermin3);
        let plan = Plan::Verification(plan_verification(&model, 0.1, 0.03, 0.01).unwrap().with_copies(100));
        let src = SourceModel::bernoulli(&[0.96; 100]).unwrap();
        let bound = src.bind(&game, None).unwrap();
        let one = mc_trials(&plan, &bound, 300, 42, 1).unwrap();
        let four = mc_trials(&plan, &bound, 300, 42, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn rate_agrees_with_exact_oracle() {
        let (game, model) = standard_game(StandardGame::Mermin3);
        let plan = plan_verification(&model, 0.1, 0.03, 0.01).unwrap().with_copies(100);
        let src = SourceModel::bernoulli(&[0.96; 100]).unwrap();
        let bound = src.bind(&game, None).unwrap();
        let exact = exact_pass_probability(&[0.96; 100], plan.p1).unwrap();
        let est = mc_pass_estimate(&Plan::Verification(plan), &bound, 20_000, 9, 4).unwrap();
        assert!((est.rate - exact).abs() <= 4.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn zero_trials_is_an_error() {
        let (game, model) = standard_game(StandardGame::Mermin3);
        let plan = Plan::Verification(plan_verification(&model, 0.1, 0.03, 0.01).unwrap());
        let src = SourceModel::bernoulli(&[1.0; 600]).unwrap();
        let bound = src.bind(&game, None).unwrap();
        assert!(mc_pass_estimate(&plan, &bound, 0, 1, 1).is_err());
        let est = mc_pass_estimate(&plan, &bound, 50, 1, 2).unwrap();
        assert_eq!((est.rate, est.stderr), (1.0, 0.0));
    }
}
