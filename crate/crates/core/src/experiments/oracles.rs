use serde::{Deserialize, Serialize};

use crate::bounds::{certification_tail_bound, verification_tail_bound};
use crate::error::{Error, Result};
use crate::protocols::acceptance_threshold;

pub const MAX_PASS_ORACLE_COPIES: usize = 5000;
pub const MAX_CERTIFICATION_ORACLE_COPIES: usize = 300;

fn check_probs(probs: &[f64], limit: usize) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidParameter("empty success-probability list".into()));
    }
    if probs.len() > limit {
        return Err(Error::InvalidParameter(format!(
            "{} copies exceed the oracle limit {limit}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!(
            "success probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Pr[Σ oₖ ≥ ⌈p1·N⌉] for independent rounds won with probabilities `probs`,
/// by Poisson-binomial convolution in O(N²).
pub fn exact_pass_probability(probs: &[f64], p1: f64) -> Result<f64> {
    check_probs(probs, MAX_PASS_ORACLE_COPIES)?;
    let k = acceptance_threshold(p1, probs.len() as u64) as usize;
    let mut dist = vec![0.0; probs.len() + 1];
    dist[0] = 1.0;
    for (j, &p) in probs.iter().enumerate() {
        for s in (0..=j + 1).rev() {
            let stay = if s <= j { dist[s] * (1.0 - p) } else { 0.0 };
            let step = if s > 0 { dist[s - 1] * p } else { 0.0 };
            dist[s] = stay + step;
        }
    }
    Ok(dist[k.min(probs.len() + 1)..].iter().sum::<f64>().min(1.0))
}

/// Pass probability of the certification protocol: each copy is measured
/// with probability `mu`, and the run passes iff N1 ≥ 1 and
/// q1 ≥ ⌈p1·N1⌉. An empty split (N1 = 0, mass (1−μ)^N) never passes.
///
/// O(N³) dynamic program over (measured count, success count).
pub fn exact_certification_pass_probability(probs: &[f64], mu: f64, p1: f64) -> Result<f64> {
    check_probs(probs, MAX_CERTIFICATION_ORACLE_COPIES)?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu={mu} outside [0, 1]")));
    }
    let n = probs.len();
    // dp[m][s]: measured m copies so far, s of them won.
    let mut dp = vec![vec![0.0; n + 1]; n + 1];
    dp[0][0] = 1.0;
    for (j, &p) in probs.iter().enumerate() {
        for m in (0..=j).rev() {
            for s in (0..=m).rev() {
                let mass = dp[m][s];
                if mass == 0.0 {
                    continue;
                }
                dp[m][s] = mass * (1.0 - mu);
                dp[m + 1][s + 1] += mass * mu * p;
                dp[m + 1][s] += mass * mu * (1.0 - p);
            }
        }
    }
    let mut total = 0.0;
    for (m, row) in dp.iter().enumerate().skip(1) {
        let k = acceptance_threshold(p1, m as u64) as usize;
        total += row[k.min(m + 1)..=m].iter().sum::<f64>();
    }
    Ok(total.min(1.0))
}

/// Exact pass probability next to the bound that should dominate it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub exact_probability: f64,
    pub bound: f64,
    /// bound − exact; negative means the bound failed.
    pub slack: f64,
}

impl OracleResult {
    fn new(exact_probability: f64, bound: f64) -> Self {
        Self {
            exact_probability,
            bound,
            slack: bound - exact_probability,
        }
    }
}

fn check_average(probs: &[f64], p2: f64) -> Result<()> {
    let mean = probs.iter().sum::<f64>() / probs.len() as f64;
    if mean > p2 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "average success {mean} exceeds p2={p2}; the bound does not apply"
        )));
    }
    Ok(())
}

/// Verification oracle against e^{−D(p1‖p2)N}; `probs` must average at most `p2`.
pub fn oracle_verification(probs: &[f64], p1: f64, p2: f64) -> Result<OracleResult> {
    check_probs(probs, MAX_PASS_ORACLE_COPIES)?;
    check_average(probs, p2)?;
    let bound = verification_tail_bound(p1, p2, probs.len() as u64)?;
    Ok(OracleResult::new(exact_pass_probability(probs, p1)?, bound))
}

/// Certification oracle against [1 − μ + μe^{−D(p1‖p2)}]^N.
pub fn oracle_certification(probs: &[f64], mu: f64, p1: f64, p2: f64) -> Result<OracleResult> {
    check_probs(probs, MAX_CERTIFICATION_ORACLE_COPIES)?;
    check_average(probs, p2)?;
    let bound = certification_tail_bound(mu, p1, p2, probs.len() as u64)?;
    Ok(OracleResult::new(
        exact_certification_pass_probability(probs, mu, p1)?,
        bound,
    ))
}
