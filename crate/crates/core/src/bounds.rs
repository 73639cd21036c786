//! Finite-sample bounds and sample-size planners for both protocols.
//!
//! Notation: a round is won with probability at most `p2 = p_qm − eps2` under
//! the hypothesis to reject, and the acceptance threshold on the observed
//! success rate is `p1 = p_qm − eps1`. All logarithms are natural. All sample
//! sizes are the smallest integer satisfying the bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::RobustnessModel;

/// Binary relative entropy value; infinite cases are tagged, not overflowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn finite(self, a: f64, b: f64) -> Result<f64> {
        match self {
            Divergence::Finite(d) => Ok(d),
            Divergence::Infinite => Err(Error::InfiniteDivergence { a, b }),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }
}

fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// D(a‖b) = a ln(a/b) + (1−a) ln((1−a)/(1−b)) with 0·ln 0 = 0.
pub fn kl_divergence(a: f64, b: f64) -> Result<Divergence> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!(
            "KL arguments must lie in [0, 1], got a={a} b={b}"
        )));
    }
    if a == b {
        return Ok(Divergence::Finite(0.0));
    }
    if (b == 0.0 && a > 0.0) || (b == 1.0 && a < 1.0) {
        return Ok(Divergence::Infinite);
    }
    let d = xlogy_ratio(a, b) + xlogy_ratio(1.0 - a, 1.0 - b);
    Ok(Divergence::Finite(d.max(0.0)))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta={delta} must lie in (0, 1]")))
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "mu={mu} must lie in (0, 1]; nothing is measured at mu=0"
        )))
    }
}

/// Validated hypothesis pair `0 < p2 < p1 ≤ 1`.
fn check_pair(p1: f64, p2: f64) -> Result<()> {
    if !(p1 <= 1.0 && p2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < p2 and p1 <= 1, got p1={p1} p2={p2}"
        )));
    }
    if p1 <= p2 {
        return Err(Error::InvalidParameter(format!(
            "bound is vacuous unless p2 < p1 (p1={p1}, p2={p2})"
        )));
    }
    Ok(())
}

/// Acceptance threshold and hypothesis ceiling from the tolerances.
pub fn hypotheses(p_qm: f64, eps1: f64, eps2: f64) -> Result<(f64, f64)> {
    if !(eps1 < eps2) {
        return Err(Error::IndistinguishableHypotheses { eps1, eps2 });
    }
    if eps1 < 0.0 {
        return Err(Error::InvalidParameter(format!("eps1={eps1} must be non-negative")));
    }
    let (p1, p2) = (p_qm - eps1, p_qm - eps2);
    if p2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps2={eps2} leaves no success probability (p_qm - eps2 = {p2})"
        )));
    }
    check_pair(p1, p2)?;
    Ok((p1, p2))
}

/// Smallest `n` with `tail(n) <= delta`, starting from an analytic estimate.
fn smallest_n(estimate: f64, delta: f64, tail: impl Fn(u64) -> f64) -> Result<u64> {
    if !estimate.is_finite() || estimate > 1e15 {
        return Err(Error::InvalidParameter(format!(
            "sample size estimate {estimate} is not representable"
        )));
    }
    let mut n = estimate.max(0.0).ceil() as u64;
    while n > 0 && tail(n - 1) <= delta {
        n -= 1;
    }
    while tail(n) > delta {
        n += 1;
    }
    Ok(n)
}

/// e^{−D(p1‖p2)·N}: chance that a sequence with average success at most
/// `p2` reaches an observed rate of at least `p1`.
pub fn verification_tail_bound(p1: f64, p2: f64, n: u64) -> Result<f64> {
    check_pair(p1, p2)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok(match kl_divergence(p1, p2)? {
        Divergence::Finite(d) => (-d * n as f64).exp().clamp(0.0, 1.0),
        Divergence::Infinite => 0.0,
    })
}

/// Copies needed so that [`verification_tail_bound`] drops to `delta`.
pub fn verification_sample_size(p_qm: f64, eps1: f64, eps2: f64, delta: f64) -> Result<u64> {
    check_delta(delta)?;
    let (p1, p2) = hypotheses(p_qm, eps1, eps2)?;
    let d = kl_divergence(p1, p2)?.finite(p1, p2)?;
    smallest_n((1.0 / delta).ln() / d, delta, |n| {
        verification_tail_bound(p1, p2, n).unwrap_or(1.0)
    })
}

/// Copies needed when every round must be won: `(1 − cη)^N <= delta`.
pub fn allpass_sample_size(c: f64, eta: f64, delta: f64) -> Result<u64> {
    geometric_sample_size(c * eta, delta)
}

/// Device-dependent counterpart: `(1 − ην)^N <= delta`.
pub fn dd_sample_size(nu: f64, eta: f64, delta: f64) -> Result<u64> {
    geometric_sample_size(eta * nu, delta)
}

fn geometric_sample_size(rate: f64, delta: f64) -> Result<u64> {
    check_delta(delta)?;
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "per-round rejection rate {rate} must lie in (0, 1)"
        )));
    }
    let log_base = (-rate).ln_1p();
    smallest_n(delta.ln() / log_base, delta, |n| (n as f64 * log_base).exp())
}

/// Per-copy factor `1 − μ + μ e^{−D(p1‖p2)}` of the certification bound.
pub fn certification_base(mu: f64, p1: f64, p2: f64) -> Result<f64> {
    check_mu(mu)?;
    check_pair(p1, p2)?;
    let decay = match kl_divergence(p1, p2)? {
        Divergence::Finite(d) => (-d).exp(),
        Divergence::Infinite => 0.0,
    };
    Ok(1.0 - mu + mu * decay)
}

/// ln of [`certification_base`], computed as `ln(1 + μ·expm1(−D))` so small
/// divergences keep their precision; exactly `−D` at μ = 1.
fn certification_log_base(mu: f64, p1: f64, p2: f64) -> Result<f64> {
    check_mu(mu)?;
    check_pair(p1, p2)?;
    Ok(match kl_divergence(p1, p2)? {
        Divergence::Finite(d) if mu == 1.0 => -d,
        Divergence::Finite(d) => (mu * (-d).exp_m1()).ln_1p(),
        Divergence::Infinite => (1.0 - mu).ln(),
    })
}

/// `[1 − μ + μ e^{−D(p1‖p2)}]^N`.
pub fn certification_tail_bound(mu: f64, p1: f64, p2: f64, n: u64) -> Result<f64> {
    let log_base = certification_log_base(mu, p1, p2)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok((n as f64 * log_base).exp().clamp(0.0, 1.0))
}

pub fn certification_sample_size(mu: f64, p_qm: f64, eps1: f64, eps2: f64, delta: f64) -> Result<u64> {
    check_delta(delta)?;
    let (p1, p2) = hypotheses(p_qm, eps1, eps2)?;
    let log_base = certification_log_base(mu, p1, p2)?;
    smallest_n(delta.ln() / log_base, delta, |n| {
        certification_tail_bound(mu, p1, p2, n).unwrap_or(1.0)
    })
}

/// Lower bound on the average success probability of the unmeasured copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateFloor {
    /// (N·p2 − N1·p_qm)/(N − N1), using the realized split.
    pub exact: f64,
    /// p_qm − ε2/(1 − μ), the large-N approximation.
    pub approx: Option<f64>,
}

pub fn certificate_success_floor(p2: f64, p_qm: f64, n: u64, n1: u64, mu: Option<f64>) -> Result<CertificateFloor> {
    if n1 >= n {
        return Err(Error::NoCertificateRemains(format!(
            "all {n} copies were measured (N1={n1})"
        )));
    }
    let (nf, n1f) = (n as f64, n1 as f64);
    let exact = (nf * p2 - n1f * p_qm) / (nf - n1f);
    let approx = mu.filter(|&m| m < 1.0).map(|m| p_qm - (p_qm - p2) / (1.0 - m));
    Ok(CertificateFloor { exact, approx })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    /// η ↦ p_qm − c·η.
    EtaToSuccess,
    /// p ↦ (p_qm − p)/c.
    SuccessToEta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedValue {
    pub value: f64,
    /// Set when the raw value left [0, 1] and was clamped.
    pub clamped: bool,
}

fn clamp_unit(raw: f64) -> MappedValue {
    let value = raw.clamp(0.0, 1.0);
    MappedValue {
        value,
        clamped: value != raw,
    }
}

/// Linear robustness relation between extractability deficit and success probability.
pub fn extractability_success_map(model: &RobustnessModel, direction: MapDirection, value: f64) -> Result<MappedValue> {
    let c = model.c()?;
    Ok(clamp_unit(match direction {
        MapDirection::EtaToSuccess => model.p_qm - c * value,
        MapDirection::SuccessToEta => (model.p_qm - value) / c,
    }))
}

/// Extractability floor 1 − η implied by a guaranteed success probability.
pub fn extractability_floor(model: &RobustnessModel, success: f64) -> Result<MappedValue> {
    let eta = extractability_success_map(model, MapDirection::SuccessToEta, success)?;
    Ok(MappedValue {
        value: 1.0 - eta.value,
        clamped: eta.clamped,
    })
}

/// Moment-generating-function bound
/// `f(t) = 1 − μ + μe^{−p1 t} + μ p2 (e^{(1−p1)t} − e^{−p1 t})`.
///
/// At `t = ∞` (only meaningful for `p1 = 1`) the limit `1 − μ + μ p2` is returned.
pub fn mgf_bound_raw(t: f64, mu: f64, p1: f64, p2: f64) -> f64 {
    if t.is_infinite() && p1 == 1.0 {
        return 1.0 - mu + mu * p2;
    }
    let down = (-p1 * t).exp();
    let up = ((1.0 - p1) * t).exp();
    1.0 - mu + mu * down + mu * p2 * (up - down)
}

/// Minimizer `t* = ln[p1(1−p2)/((1−p1)p2)]`; infinite when `p1 = 1`.
pub fn optimal_t(p1: f64, p2: f64) -> Result<f64> {
    check_pair(p1, p2)?;
    if p1 == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((p1 * (1.0 - p2) / ((1.0 - p1) * p2)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Quantum bound equals the algebraic bound (p_qm = 1).
    Algebraic,
    Nonalgebraic,
}

impl Regime {
    pub fn of(p_qm: f64) -> Self {
        if p_qm >= 1.0 {
            Regime::Algebraic
        } else {
            Regime::Nonalgebraic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Verification,
    Certification,
}

/// Small-ε expansions of the planners. These drop higher-order terms and are
/// reported for scaling comparisons only.
///
/// Algebraic: `ln δ⁻¹/ε2 · (1 + ε1/ε2)`; nonalgebraic:
/// `2(1−p_qm)p_qm ln δ⁻¹/ε2² · (1 + 2ε1/ε2)`; certification divides by μ.
pub fn taylor_sample_size(
    protocol: ProtocolKind,
    regime: Regime,
    p_qm: f64,
    eps1: f64,
    eps2: f64,
    delta: f64,
    mu: f64,
) -> Result<u64> {
    check_delta(delta)?;
    if !(eps1 < eps2) || eps2 <= 0.0 {
        return Err(Error::IndistinguishableHypotheses { eps1, eps2 });
    }
    let log_inv = (1.0 / delta).ln();
    let ratio = eps1 / eps2;
    let verification = match regime {
        Regime::Algebraic => log_inv / eps2 * (1.0 + ratio),
        Regime::Nonalgebraic => 2.0 * (1.0 - p_qm) * p_qm * log_inv / (eps2 * eps2) * (1.0 + 2.0 * ratio),
    };
    let n = match protocol {
        ProtocolKind::Verification => verification,
        ProtocolKind::Certification => {
            check_mu(mu)?;
            verification / mu
        }
    };
    Ok(n.ceil() as u64)
}

/// Probability that independent rounds with deficits `etas` all pass: Π(1 − cηⱼ).
pub fn all_pass_probability(c: f64, etas: &[f64]) -> f64 {
    etas.iter().map(|&e| 1.0 - c * e).product()
}

/// Worst case at fixed average deficit: (1 − c·η̄)^N.
pub fn all_pass_worst_case(c: f64, etas: &[f64]) -> f64 {
    if etas.is_empty() {
        return 1.0;
    }
    let mean = etas.iter().sum::<f64>() / etas.len() as f64;
    (1.0 - c * mean).powi(etas.len() as i32)
}

/// Everything the planners know about one parameter choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub protocol: ProtocolKind,
    pub regime: Regime,
    pub p_qm: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    pub p1: f64,
    pub p2: f64,
    pub kl: f64,
    /// Tail bound evaluated at `sample_size`.
    pub tail_bound: f64,
    /// `None` when the minimizer is unbounded (p1 = 1).
    pub optimal_t: Option<f64>,
    pub sample_size: u64,
    pub taylor_size: u64,
    pub mu: Option<f64>,
}

/// Builds a report for verification (`mu = None`) or certification.
pub fn bound_report(p_qm: f64, eps1: f64, eps2: f64, delta: f64, mu: Option<f64>) -> Result<BoundReport> {
    let (p1, p2) = hypotheses(p_qm, eps1, eps2)?;
    let kl = kl_divergence(p1, p2)?.finite(p1, p2)?;
    let regime = Regime::of(p_qm);
    let (protocol, sample_size, tail_bound) = match mu {
        None => {
            let n = verification_sample_size(p_qm, eps1, eps2, delta)?;
            (ProtocolKind::Verification, n, verification_tail_bound(p1, p2, n)?)
        }
        Some(m) => {
            let n = certification_sample_size(m, p_qm, eps1, eps2, delta)?;
            (ProtocolKind::Certification, n, certification_tail_bound(m, p1, p2, n)?)
        }
    };
    let t = optimal_t(p1, p2)?;
    Ok(BoundReport {
        protocol,
        regime,
        p_qm,
        eps1,
        eps2,
        delta,
        p1,
        p2,
        kl,
        tail_bound,
        optimal_t: t.is_finite().then_some(t),
        sample_size,
        taylor_size: taylor_sample_size(protocol, regime, p_qm, eps1, eps2, delta, mu.unwrap_or(1.0))?,
        mu,
    })
}
