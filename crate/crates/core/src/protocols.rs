//! Verification and certification runs.
//!
//! Both protocols consume rounds through [`BoundSource::conditional_round`],
//! so abstract Bernoulli sources exercise the same path as quantum ones.
//! Acceptance compares integers: a run passes iff `q1 ≥ ⌈p1·N1 − 1e-9⌉`,
//! so an observed rate exactly equal to `p1` passes and float noise in the
//! product `p1·N1` cannot flip the outcome.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    allpass_sample_size, certificate_success_floor, certification_sample_size, certification_tail_bound,
    extractability_floor, hypotheses, verification_sample_size, verification_tail_bound,
};
use crate::error::{Error, Result};
use crate::games::{score_round, NonlocalGame, RobustnessModel, RoundRecord};
use crate::sources::BoundSource;

/// Slack absorbed before rounding `p1·N1` up.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// Smallest success count that passes among `n1` measured rounds.
pub fn acceptance_threshold(p1: f64, n1: u64) -> u64 {
    (p1 * n1 as f64 - THRESHOLD_SLACK).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationPlan {
    pub robustness: RobustnessModel,
    pub eta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    pub n: u64,
    pub p1: f64,
    pub p2: f64,
    /// Stop at the first lost round (all-pass mode).
    #[serde(default)]
    pub halt_on_failure: bool,
}

impl VerificationPlan {
    /// Bound on passing when the average success is at most `p2`, at `n` copies.
    pub fn tail_bound(&self) -> Result<f64> {
        verification_tail_bound(self.p1, self.p2, self.n)
    }

    /// Same plan with a different copy count. Fewer copies than planned
    /// weaken the confidence to `1 − tail_bound()`.
    pub fn with_copies(mut self, n: u64) -> Self {
        self.n = n;
        self
    }
}

/// Threshold plan: tolerance `eps2 = c·eta`, copies from the KL planner.
pub fn plan_verification(robustness: &RobustnessModel, eta: f64, eps1: f64, delta: f64) -> Result<VerificationPlan> {
    robustness.validate()?;
    let c = robustness.c()?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta={eta} must lie in (0, 1]")));
    }
    let eps2 = c * eta;
    let (p1, p2) = hypotheses(robustness.p_qm, eps1, eps2)?;
    Ok(VerificationPlan {
        robustness: *robustness,
        eta,
        eps1,
        eps2,
        delta,
        n: verification_sample_size(robustness.p_qm, eps1, eps2, delta)?,
        p1,
        p2,
        halt_on_failure: false,
    })
}

/// All-pass plan for games with `p_qm = 1`: every round must be won and the
/// run halts at the first loss.
pub fn plan_allpass(robustness: &RobustnessModel, eta: f64, delta: f64) -> Result<VerificationPlan> {
    robustness.validate()?;
    if robustness.p_qm < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "all-pass mode needs p_qm = 1, got {}",
            robustness.p_qm
        )));
    }
    let c = robustness.c()?;
    let eps2 = c * eta;
    let n = allpass_sample_size(c, eta, delta)?;
    Ok(VerificationPlan {
        robustness: *robustness,
        eta,
        eps1: 0.0,
        eps2,
        delta,
        n,
        p1: 1.0,
        p2: 1.0 - eps2,
        halt_on_failure: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationPlan {
    pub robustness: RobustnessModel,
    pub eta_c: f64,
    pub mu: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    pub n: u64,
    pub p1: f64,
    pub p2: f64,
    /// Certificate extractability deficit at the expected split N1 = round(μN),
    /// using the exact finite-N floor rather than `eps2/(c(1−μ))`.
    pub eta_c_at_expected_split: Option<f64>,
}

impl CertificationPlan {
    pub fn tail_bound(&self) -> Result<f64> {
        certification_tail_bound(self.mu, self.p1, self.p2, self.n)
    }

    pub fn with_copies(mut self, n: u64) -> Self {
        self.n = n;
        self
    }
}

/// Certification plan: `eps2 = c·eta_c·(1 − μ)`, copies from the
/// certification planner.
pub fn plan_certification(
    robustness: &RobustnessModel,
    eta_c: f64,
    mu: f64,
    eps1: f64,
    delta: f64,
) -> Result<CertificationPlan> {
    robustness.validate()?;
    if mu >= 1.0 {
        return Err(Error::NoCertificateRemains(format!("mu={mu} measures every copy")));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu={mu} must lie in (0, 1)")));
    }
    if !(eta_c > 0.0) {
        return Err(Error::InvalidParameter(format!("eta_c={eta_c} must be positive")));
    }
    let c = robustness.c()?;
    let eps2 = c * eta_c * (1.0 - mu);
    let (p1, p2) = hypotheses(robustness.p_qm, eps1, eps2)?;
    let n = certification_sample_size(mu, robustness.p_qm, eps1, eps2, delta)?;
    let n1 = (mu * n as f64).round() as u64;
    let eta_c_at_expected_split = certificate_success_floor(p2, robustness.p_qm, n, n1, Some(mu))
        .ok()
        .map(|f| (robustness.p_qm - f.exact) / c);
    Ok(CertificationPlan {
        robustness: *robustness,
        eta_c,
        mu,
        eps1,
        eps2,
        delta,
        n,
        p1,
        p2,
        eta_c_at_expected_split,
    })
}

/// One copy of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRound {
    pub round: usize,
    pub measured: bool,
    pub record: Option<RoundRecord>,
    /// Conditional win probability the source assigned to this round.
    pub success_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub rounds: Vec<TranscriptRound>,
    pub n1: u64,
    pub q1: u64,
    /// q1/N1, absent when nothing was measured.
    pub p: Option<f64>,
    /// Unmeasured copies, left untouched for the certificate.
    pub certificate_indices: Vec<usize>,
    /// Round at which an all-pass run stopped.
    pub halted_at: Option<usize>,
    /// Branch the source prepared, for mixture sources.
    pub realized_branch: Option<usize>,
}

impl Transcript {
    fn from_rounds(rounds: Vec<TranscriptRound>, halted_at: Option<usize>, realized_branch: Option<usize>) -> Self {
        let n1 = rounds.iter().filter(|r| r.measured).count() as u64;
        let q1 = rounds
            .iter()
            .filter(|r| r.record.as_ref().is_some_and(|rec| rec.win))
            .count() as u64;
        let certificate_indices = rounds.iter().filter(|r| !r.measured).map(|r| r.round).collect();
        Self {
            rounds,
            n1,
            q1,
            p: (n1 > 0).then(|| q1 as f64 / n1 as f64),
            certificate_indices,
            halted_at,
            realized_branch,
        }
    }

    /// Re-scores every measured round from its inputs and outputs.
    pub fn rescore(&self, game: &NonlocalGame) -> Result<u64> {
        let mut q1 = 0;
        for rec in self.rounds.iter().filter_map(|r| r.record.as_ref()) {
            q1 += score_round(game, &rec.inputs, &rec.outputs)? as u64;
        }
        Ok(q1)
    }

    /// Round log with header `round,measured,i1..in,o1..on,win`; unmeasured
    /// rows leave inputs, outputs and win empty.
    pub fn write_csv<W: Write>(&self, parties: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["round".to_string(), "measured".to_string()];
        header.extend((1..=parties).map(|k| format!("i{k}")));
        header.extend((1..=parties).map(|k| format!("o{k}")));
        header.push("win".into());
        w.write_record(&header)?;
        for r in &self.rounds {
            let mut row = vec![r.round.to_string(), (r.measured as u8).to_string()];
            match &r.record {
                Some(rec) => {
                    row.extend(rec.inputs.iter().map(|v| v.to_string()));
                    row.extend(rec.outputs.iter().map(|v| v.to_string()));
                    row.push((rec.win as u8).to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 2 * parties + 1)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    /// Average extractability of the measured sample.
    AverageExtractability,
    /// Average extractability of the unmeasured copies.
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub kind: ClaimKind,
    /// Guaranteed lower bound 1 − η on average extractability.
    pub extractability_floor: f64,
    /// Average success probability floor the extractability floor is mapped from.
    pub success_floor: f64,
    /// Set when the mapped floor left [0, 1] and was clamped.
    pub clamped: bool,
    /// Large-N approximation of the certificate floor, for comparison.
    pub approx_extractability_floor: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub claim: Option<Claim>,
    pub p: Option<f64>,
    pub q1: u64,
    pub n1: u64,
    /// Success count needed to pass.
    pub threshold: u64,
    pub note: Option<String>,
}

impl Verdict {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

fn check_copies(source: &BoundSource<'_>, n: u64) -> Result<usize> {
    let available = source.model().copies();
    if (available as u64) < n {
        return Err(Error::SourceExhausted(available));
    }
    Ok(n as usize)
}

fn coin_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Measures N rounds in order and accepts iff q1 ≥ ⌈p1·N⌉.
///
/// Round randomness comes from stream 0 of `ChaCha8Rng::seed_from_u64(seed)`.
pub fn run_verification(plan: &VerificationPlan, source: &BoundSource<'_>, seed: u64) -> Result<(Transcript, Verdict)> {
    let n = check_copies(source, plan.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = source.start(&mut rng);
    let realized = state.realized_branch;
    let mut rounds = Vec::with_capacity(n);
    let mut halted_at = None;
    for k in 0..n {
        let step = source.conditional_round(state, &mut rng)?;
        state = step.next;
        let lost = !step.record.win;
        rounds.push(TranscriptRound {
            round: k,
            measured: true,
            record: Some(step.record),
            success_probability: Some(step.success_probability),
        });
        if lost && plan.halt_on_failure {
            halted_at = Some(k);
            break;
        }
    }
    let transcript = Transcript::from_rounds(rounds, halted_at, realized);
    let threshold = acceptance_threshold(plan.p1, plan.n);
    let passed = halted_at.is_none() && transcript.q1 >= threshold;
    let claim = if passed {
        let floor = extractability_floor(&plan.robustness, plan.p2)?;
        Some(Claim {
            kind: ClaimKind::AverageExtractability,
            extractability_floor: floor.value,
            success_floor: plan.p2,
            clamped: floor.clamped,
            approx_extractability_floor: None,
            confidence: 1.0 - plan.delta,
        })
    } else {
        None
    };
    let verdict = Verdict {
        outcome: if passed {
            Outcome::Success
        } else {
            Outcome::Inconclusive
        },
        claim,
        p: transcript.p,
        q1: transcript.q1,
        n1: transcript.n1,
        threshold,
        note: halted_at.map(|k| format!("halted at round {k} after a lost round")),
    };
    Ok((transcript, verdict))
}

/// Measures each copy with probability μ, scores the measured ones and, on
/// success, certifies the average extractability of the rest.
///
/// Rounds use stream 0 and coins stream 1 of the seeded generator, so a
/// plan with μ = 1 reproduces [`run_verification`] on the same seed.
pub fn run_certification(
    plan: &CertificationPlan,
    source: &BoundSource<'_>,
    seed: u64,
) -> Result<(Transcript, Verdict)> {
    if !source.model().kind().independent_copies() {
        return Err(Error::NonIidCertification);
    }
    if !(plan.mu > 0.0 && plan.mu <= 1.0) {
        return Err(Error::InvalidParameter(format!("mu={} must lie in (0, 1]", plan.mu)));
    }
    let n = check_copies(source, plan.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coins = coin_rng(seed);
    let mut state = source.start(&mut rng);
    let mut rounds = Vec::with_capacity(n);
    for k in 0..n {
        let measured = coins.random::<f64>() < plan.mu;
        if measured {
            let step = source.conditional_round(state, &mut rng)?;
            state = step.next;
            rounds.push(TranscriptRound {
                round: k,
                measured,
                record: Some(step.record),
                success_probability: Some(step.success_probability),
            });
        } else {
            state = source.skip(state)?;
            rounds.push(TranscriptRound {
                round: k,
                measured,
                record: None,
                success_probability: None,
            });
        }
    }
    let transcript = Transcript::from_rounds(rounds, None, None);
    let (n1, q1) = (transcript.n1, transcript.q1);
    let threshold = acceptance_threshold(plan.p1, n1);
    let mut note = None;
    let passed = if n1 == 0 {
        note = Some("no rounds measured".to_string());
        false
    } else {
        q1 >= threshold
    };
    let mut claim = None;
    if passed {
        match certificate_success_floor(plan.p2, plan.robustness.p_qm, plan.n, n1, Some(plan.mu)) {
            Ok(floor) => {
                let exact = extractability_floor(&plan.robustness, floor.exact)?;
                let approx = floor
                    .approx
                    .map(|a| extractability_floor(&plan.robustness, a).map(|m| m.value))
                    .transpose()?;
                claim = Some(Claim {
                    kind: ClaimKind::Certificate,
                    extractability_floor: exact.value,
                    success_floor: floor.exact,
                    clamped: exact.clamped,
                    approx_extractability_floor: approx,
                    confidence: 1.0 - plan.delta,
                });
            }
            Err(Error::NoCertificateRemains(msg)) => note = Some(format!("no certificate remains: {msg}")),
            Err(e) => return Err(e),
        }
    }
    let verdict = Verdict {
        outcome: if passed {
            Outcome::Success
        } else {
            Outcome::Inconclusive
        },
        claim,
        p: transcript.p,
        q1,
        n1,
        threshold,
        note,
    };
    Ok((transcript, verdict))
}

/// Either protocol, for harnesses that treat them uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Plan {
    Verification(VerificationPlan),
    Certification(CertificationPlan),
}

impl Plan {
    pub fn copies(&self) -> u64 {
        match self {
            Plan::Verification(p) => p.n,
            Plan::Certification(p) => p.n,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Plan::Verification(p) => p.delta,
            Plan::Certification(p) => p.delta,
        }
    }

    pub fn tail_bound(&self) -> Result<f64> {
        match self {
            Plan::Verification(p) => p.tail_bound(),
            Plan::Certification(p) => p.tail_bound(),
        }
    }

    pub fn run(&self, source: &BoundSource<'_>, seed: u64) -> Result<(Transcript, Verdict)> {
        match self {
            Plan::Verification(p) => run_verification(p, source, seed),
            Plan::Certification(p) => run_certification(p, source, seed),
        }
    }
}
