//! Sources of the copies consumed by the protocols.
//!
//! A source emits N rounds. The non-IID family supported here is a finite
//! convex mixture of product sequences: with probability `w_b` every round j
//! is prepared by device `σ_b^{(j)}`. Conditioning on earlier measurement
//! records then reduces to a Bayesian update of the branch weights, so the
//! conditional state of round j is `Σ_b w_b(past) σ_b^{(j)}` without ever
//! building the full N-round operator. Sequences entangled across rounds are
//! not representable.
//!
//! Devices are either quantum states played with a fixed strategy or abstract
//! Bernoulli devices that win with a given probability. Both are reduced to
//! outcome tables when a source is bound to a game, so downstream code never
//! distinguishes them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{encode_outputs, sample_index, NonlocalGame, OutcomeTable, QuantumStrategy, RoundRecord};
use crate::linalg::{depolarize, DensityOperator, StateVector, TOLERANCE};

/// Posterior weights below this are treated as eliminated branches.
pub const PRUNE_FLOOR: f64 = 1e-300;

/// What prepares one round.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundDevice {
    Quantum(DensityOperator),
    /// Wins with this probability; outputs are uniform among winning (or
    /// losing) answers of the asked input.
    Bernoulli(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Iid,
    Independent,
    Mixture,
    Bernoulli,
}

impl SourceKind {
    /// True for sources whose rounds are mutually independent.
    pub fn independent_copies(self) -> bool {
        !matches!(self, SourceKind::Mixture)
    }
}

/// Immutable description of an N-round source.
///
/// Devices are stored once in a palette; each branch lists, per round, the
/// palette index of its device.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    kind: SourceKind,
    palette: Vec<RoundDevice>,
    branches: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl SourceModel {
    pub fn new(
        kind: SourceKind,
        palette: Vec<RoundDevice>,
        branches: Vec<Vec<usize>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if branches.is_empty() || branches.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} branches with {} weights",
                branches.len(),
                weights.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "branch weights must be a probability vector (sum {total})"
            )));
        }
        let n = branches[0].len();
        if n == 0 {
            return Err(Error::InvalidParameter("a source needs at least one copy".into()));
        }
        if branches.iter().any(|b| b.len() != n) {
            return Err(Error::ShapeMismatch("branches have different lengths".into()));
        }
        if branches.iter().flatten().any(|&i| i >= palette.len()) {
            return Err(Error::ShapeMismatch("branch refers to a missing device".into()));
        }
        for device in &palette {
            if let RoundDevice::Bernoulli(p) = device {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "success probability {p} outside [0, 1]"
                    )));
                }
            }
        }
        if kind != SourceKind::Mixture && branches.len() != 1 {
            return Err(Error::ShapeMismatch(format!("{kind:?} source with several branches")));
        }
        Ok(Self {
            kind,
            palette,
            branches,
            weights,
        })
    }

    pub fn iid(device: RoundDevice, copies: usize) -> Result<Self> {
        Self::new(SourceKind::Iid, vec![device], vec![vec![0; copies]], vec![1.0])
    }

    pub fn independent(devices: Vec<RoundDevice>) -> Result<Self> {
        let idx = (0..devices.len()).collect();
        Self::new(SourceKind::Independent, devices, vec![idx], vec![1.0])
    }

    /// Abstract source with a per-round success probability.
    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        let mut palette: Vec<f64> = Vec::new();
        let idx = probs
            .iter()
            .map(|&p| match palette.iter().position(|&q| q == p) {
                Some(i) => i,
                None => {
                    palette.push(p);
                    palette.len() - 1
                }
            })
            .collect();
        let palette = palette.into_iter().map(RoundDevice::Bernoulli).collect();
        Self::new(SourceKind::Bernoulli, palette, vec![idx], vec![1.0])
    }

    /// Mixture whose branch b repeats `devices[b]` for all rounds.
    pub fn mixture_of_repeats(weights: Vec<f64>, devices: Vec<RoundDevice>, copies: usize) -> Result<Self> {
        let branches = (0..devices.len()).map(|b| vec![b; copies]).collect();
        Self::new(SourceKind::Mixture, devices, branches, weights)
    }

    /// Mixture with an explicit per-round device list per branch.
    pub fn mixture(weights: Vec<f64>, branches: Vec<Vec<RoundDevice>>) -> Result<Self> {
        let mut palette = Vec::new();
        let mut index = Vec::new();
        for branch in branches {
            index.push(
                branch
                    .into_iter()
                    .map(|d| {
                        palette.push(d);
                        palette.len() - 1
                    })
                    .collect(),
            );
        }
        Self::new(SourceKind::Mixture, palette, index, weights)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn copies(&self) -> usize {
        self.branches[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Device preparing round `round` in branch `branch`.
    pub fn device(&self, branch: usize, round: usize) -> Option<&RoundDevice> {
        self.branches.get(branch)?.get(round).map(|&i| &self.palette[i])
    }

    /// Precomputes outcome tables for `game`. Quantum devices need a strategy.
    pub fn bind<'a>(&'a self, game: &'a NonlocalGame, strategy: Option<&QuantumStrategy>) -> Result<BoundSource<'a>> {
        let tables = self
            .palette
            .iter()
            .map(|device| device_table(device, game, strategy))
            .collect::<Result<Vec<_>>>()?;
        let win = tables.iter().map(|t| game.win_probability_of(t)).collect();
        Ok(BoundSource {
            model: self,
            game,
            tables,
            win,
        })
    }
}

fn device_table(device: &RoundDevice, game: &NonlocalGame, strategy: Option<&QuantumStrategy>) -> Result<OutcomeTable> {
    match device {
        RoundDevice::Quantum(rho) => {
            let strategy = strategy
                .ok_or_else(|| Error::InvalidParameter("quantum source needs a measurement strategy".into()))?;
            strategy.with_state(rho.clone())?.outcome_table(game)
        }
        RoundDevice::Bernoulli(p) => {
            let probabilities = (0..game.inputs().len())
                .map(|idx| {
                    let wins: Vec<usize> = game.winning_outputs(idx).collect();
                    let losses: Vec<usize> = game.losing_outputs(idx).collect();
                    // Degenerate predicates put all mass on the side that exists.
                    let (pw, pl) = match (wins.is_empty(), losses.is_empty()) {
                        (false, false) => (*p, 1.0 - p),
                        (false, true) => (1.0, 0.0),
                        (true, false) => (0.0, 1.0),
                        (true, true) => unreachable!("binary outputs always exist"),
                    };
                    let mut row = vec![0.0; game.output_count()];
                    for &c in &wins {
                        row[c] = pw / wins.len() as f64;
                    }
                    for &c in &losses {
                        row[c] = pl / losses.len() as f64;
                    }
                    row
                })
                .collect();
            Ok(OutcomeTable { probabilities })
        }
    }
}

/// Per-run state threaded through [`BoundSource::conditional_round`].
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub round_index: usize,
    pub posterior: Vec<f64>,
    pub history: Vec<RoundRecord>,
    /// Branch the source actually prepared, when the run drew one.
    pub realized_branch: Option<usize>,
}

/// Result of one conditional round.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRound {
    /// Win probability of the round's conditional state given the past.
    pub success_probability: f64,
    pub record: RoundRecord,
    pub next: SourceState,
}

/// A source with outcome tables precomputed for one game and strategy.
#[derive(Debug, Clone)]
pub struct BoundSource<'a> {
    model: &'a SourceModel,
    game: &'a NonlocalGame,
    tables: Vec<OutcomeTable>,
    win: Vec<f64>,
}

impl<'a> BoundSource<'a> {
    pub fn model(&self) -> &SourceModel {
        self.model
    }

    pub fn game(&self) -> &NonlocalGame {
        self.game
    }

    /// Fresh state at the prior, without a realized branch.
    pub fn prior(&self) -> SourceState {
        SourceState {
            round_index: 0,
            posterior: self.model.weights.clone(),
            history: Vec::new(),
            realized_branch: None,
        }
    }

    /// Fresh state with the prepared branch drawn from the prior.
    ///
    /// Drawing the branch once and sampling every round from it yields the
    /// same record distribution as sampling each round from the conditional
    /// state, and lets callers condition statistics on the branch.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> SourceState {
        let branch = if self.model.branches.len() == 1 {
            0
        } else {
            sample_index(&self.model.weights, rng.random())
        };
        SourceState {
            realized_branch: Some(branch),
            ..self.prior()
        }
    }

    pub fn start_in_branch(&self, branch: usize) -> Result<SourceState> {
        if branch >= self.model.branches.len() {
            return Err(Error::InvalidParameter(format!("no branch {branch}")));
        }
        Ok(SourceState {
            realized_branch: Some(branch),
            ..self.prior()
        })
    }

    fn table(&self, branch: usize, round: usize) -> usize {
        self.model.branches[branch][round]
    }

    fn check_round(&self, state: &SourceState) -> Result<()> {
        if state.round_index >= self.model.copies() {
            return Err(Error::SourceExhausted(self.model.copies()));
        }
        Ok(())
    }

    /// Win probability of the next round's conditional state.
    pub fn success_probability(&self, state: &SourceState) -> Result<f64> {
        self.check_round(state)?;
        Ok(state
            .posterior
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(b, &w)| w * self.win[self.table(b, state.round_index)])
            .sum())
    }

    /// Win probability of round `round` within one branch.
    pub fn branch_round_success(&self, branch: usize, round: usize) -> Result<f64> {
        if branch >= self.model.branches.len() || round >= self.model.copies() {
            return Err(Error::InvalidParameter(format!("no round {round} in branch {branch}")));
        }
        Ok(self.win[self.table(branch, round)])
    }

    /// Bayesian update on an observed record: `w_b ∝ w_b · p_b(o | i)`.
    pub fn observe(&self, mut state: SourceState, record: RoundRecord) -> Result<SourceState> {
        self.check_round(&state)?;
        let idx = self
            .game
            .input_index(&record.inputs)
            .ok_or_else(|| Error::ShapeMismatch(format!("input tuple {:?} is not asked", record.inputs)))?;
        let code = encode_outputs(&record.outputs);
        if record.outputs.len() != self.game.parties() || code >= self.game.output_count() {
            return Err(Error::ShapeMismatch(format!("bad output tuple {:?}", record.outputs)));
        }
        if self.model.branches.len() > 1 {
            let round = state.round_index;
            for (b, w) in state.posterior.iter_mut().enumerate() {
                *w *= self.tables[self.table(b, round)].probabilities[idx][code];
            }
            let total: f64 = state.posterior.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidState(
                    "record has zero likelihood under every branch".into(),
                ));
            }
            for w in state.posterior.iter_mut() {
                *w /= total;
                if *w < PRUNE_FLOOR {
                    *w = 0.0;
                }
            }
            let total: f64 = state.posterior.iter().sum();
            state.posterior.iter_mut().for_each(|w| *w /= total);
        }
        state.round_index += 1;
        state.history.push(record);
        Ok(state)
    }

    /// Advances past a copy that is not measured; the posterior is unchanged.
    pub fn skip(&self, mut state: SourceState) -> Result<SourceState> {
        self.check_round(&state)?;
        state.round_index += 1;
        Ok(state)
    }

    /// Plays the next round: reports the conditional win probability, samples
    /// a record and returns the updated state.
    pub fn conditional_round<R: Rng + ?Sized>(&self, state: SourceState, rng: &mut R) -> Result<ConditionalRound> {
        let success_probability = self.success_probability(&state)?;
        let branch = match state.realized_branch {
            Some(b) => b,
            None => sample_index(&state.posterior, rng.random()),
        };
        let record = self.tables[self.table(branch, state.round_index)].sample(self.game, rng);
        let next = self.observe(state, record.clone())?;
        Ok(ConditionalRound {
            success_probability,
            record,
            next,
        })
    }

    /// Mean per-round win probability along one branch.
    pub fn branch_average_success(&self, branch: usize) -> Result<f64> {
        if branch >= self.model.branches.len() {
            return Err(Error::InvalidParameter(format!("no branch {branch}")));
        }
        let n = self.model.copies();
        Ok((0..n).map(|j| self.win[self.table(branch, j)]).sum::<f64>() / n as f64)
    }

    /// Mean conditional win probability along a realized history
    /// (p̄ = (1/k) Σ_j p_{j|past}), replayed from the prior.
    pub fn history_average_success(&self, history: &[RoundRecord]) -> Result<f64> {
        if history.is_empty() {
            return Err(Error::InvalidParameter("empty history".into()));
        }
        let mut state = self.prior();
        let mut sum = 0.0;
        for record in history {
            sum += self.success_probability(&state)?;
            state = self.observe(state, record.clone())?;
        }
        Ok(sum / history.len() as f64)
    }
}

/// Device description in source files. `target` is the game's target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceSpec {
    /// Target state with depolarizing noise of strength `depolarize`.
    Target {
        #[serde(default)]
        depolarize: f64,
    },
    MaximallyMixed,
    Bernoulli {
        p: f64,
    },
    Density {
        state: DensityOperator,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSpec {
    /// Same device in every round.
    Repeat(DeviceSpec),
    /// One device per round.
    Rounds(Vec<DeviceSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKindSpec {
    Iid {
        device: DeviceSpec,
    },
    Independent {
        devices: Vec<DeviceSpec>,
    },
    Mixture {
        weights: Vec<f64>,
        branches: Vec<BranchSpec>,
    },
    Bernoulli {
        probs: Vec<f64>,
    },
}

/// JSON source description `{kind, ..., n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    #[serde(flatten)]
    pub kind: SourceKindSpec,
    /// Number of copies; optional where the device list fixes it.
    #[serde(default, alias = "N")]
    pub n: Option<usize>,
}

impl SourceSpec {
    /// Parses a shorthand:
    /// `iid-ghz-depolarized:λ` / `iid-target:λ`, `bernoulli:p`, `coinflip`
    /// (target or maximally mixed, equal odds) and `coinflip:λ` (target or
    /// target depolarized by λ).
    pub fn parse_shorthand(text: &str, copies: Option<usize>) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::InvalidParameter(format!("source `{text}` needs a parameter")))?;
            a.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number `{a}` in source `{text}`")))
        };
        let kind = match name {
            "iid-ghz-depolarized" | "iid-target" => SourceKindSpec::Iid {
                device: DeviceSpec::Target {
                    depolarize: number(arg)?,
                },
            },
            "bernoulli" => {
                let n = copies.ok_or_else(|| Error::InvalidParameter("bernoulli source needs a copy count".into()))?;
                SourceKindSpec::Bernoulli {
                    probs: vec![number(arg)?; n],
                }
            }
            "coinflip" => {
                let other = match arg {
                    None => DeviceSpec::MaximallyMixed,
                    Some(_) => DeviceSpec::Target {
                        depolarize: number(arg)?,
                    },
                };
                SourceKindSpec::Mixture {
                    weights: vec![0.5, 0.5],
                    branches: vec![
                        BranchSpec::Repeat(DeviceSpec::Target { depolarize: 0.0 }),
                        BranchSpec::Repeat(other),
                    ],
                }
            }
            _ => return Err(Error::UnknownName(format!("source `{text}`"))),
        };
        Ok(Self { kind, n: copies })
    }
}

fn resolve_device(spec: &DeviceSpec, target: Option<&StateVector>) -> Result<RoundDevice> {
    let need_target = || {
        target.ok_or_else(|| Error::InvalidParameter("source refers to a target state but the game has none".into()))
    };
    Ok(match spec {
        DeviceSpec::Target { depolarize: lambda } => RoundDevice::Quantum(depolarize(need_target()?, *lambda)?),
        DeviceSpec::MaximallyMixed => {
            RoundDevice::Quantum(DensityOperator::maximally_mixed(need_target()?.dims().to_vec())?)
        }
        DeviceSpec::Bernoulli { p } => RoundDevice::Bernoulli(*p),
        DeviceSpec::Density { state } => RoundDevice::Quantum(state.clone()),
    })
}

fn copies_or(spec_n: Option<usize>, implied: Option<usize>) -> Result<usize> {
    match (spec_n, implied) {
        (Some(n), Some(m)) if n != m => Err(Error::ShapeMismatch(format!(
            "n={n} but the device list has {m} rounds"
        ))),
        (Some(n), _) | (None, Some(n)) => Ok(n),
        (None, None) => Err(Error::InvalidParameter("source needs a copy count `n`".into())),
    }
}

/// Validates a source description. `target` resolves `target` and
/// `maximally_mixed` devices.
pub fn make_source(spec: &SourceSpec, target: Option<&StateVector>) -> Result<SourceModel> {
    match &spec.kind {
        SourceKindSpec::Iid { device } => SourceModel::iid(resolve_device(device, target)?, copies_or(spec.n, None)?),
        SourceKindSpec::Independent { devices } => {
            copies_or(spec.n, Some(devices.len()))?;
            SourceModel::independent(
                devices
                    .iter()
                    .map(|d| resolve_device(d, target))
                    .collect::<Result<_>>()?,
            )
        }
        SourceKindSpec::Bernoulli { probs } => {
            copies_or(spec.n, Some(probs.len()))?;
            SourceModel::bernoulli(probs)
        }
        SourceKindSpec::Mixture { weights, branches } => {
            let implied = branches.iter().find_map(|b| match b {
                BranchSpec::Rounds(r) => Some(r.len()),
                BranchSpec::Repeat(_) => None,
            });
            let n = copies_or(spec.n, implied)?;
            let mut palette = Vec::new();
            let mut index = Vec::new();
            for branch in branches {
                match branch {
                    BranchSpec::Repeat(d) => {
                        palette.push(resolve_device(d, target)?);
                        index.push(vec![palette.len() - 1; n]);
                    }
                    BranchSpec::Rounds(ds) => {
                        let mut idx = Vec::with_capacity(ds.len());
                        for d in ds {
                            palette.push(resolve_device(d, target)?);
                            idx.push(palette.len() - 1);
                        }
                        index.push(idx);
                    }
                }
            }
            SourceModel::new(SourceKind::Mixture, palette, index, weights.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{optimal_strategy, standard_game, target_state, win_probability, StandardGame};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mermin() -> (NonlocalGame, QuantumStrategy, StateVector) {
        let (game, _) = standard_game(StandardGame::Mermin3);
        let strategy = optimal_strategy(StandardGame::Mermin3).unwrap();
        (game, strategy, target_state(StandardGame::Mermin3).unwrap())
    }

    #[test]
    fn iid_conditional_probability_is_constant() {
        let (game, strategy, psi) = mermin();
        let rho = depolarize(&psi, 0.2).unwrap();
        let expected = win_probability(&game, &strategy.with_state(rho.clone()).unwrap()).unwrap();
        let model = SourceModel::iid(RoundDevice::Quantum(rho), 20).unwrap();
        let source = model.bind(&game, Some(&strategy)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = source.start(&mut rng);
        for _ in 0..20 {
            let step = source.conditional_round(state, &mut rng).unwrap();
            assert_abs_diff_eq!(step.success_probability, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(step.success_probability, 0.9, epsilon = 1e-12);
            state = step.next;
        }
        assert!(matches!(
            source.conditional_round(state.clone(), &mut rng),
            Err(Error::SourceExhausted(20))
        ));
        assert_abs_diff_eq!(
            source.history_average_success(&state.history).unwrap(),
            0.9,
            epsilon = 1e-12
        );
    }

    #[test]
    fn coin_flip_posterior_after_wins() {
        let (game, strategy, psi) = mermin();
        let spec = SourceSpec::parse_shorthand("coinflip", Some(10)).unwrap();
        let model = make_source(&spec, Some(&psi)).unwrap();
        assert_eq!(model.kind(), SourceKind::Mixture);
        let source = model.bind(&game, Some(&strategy)).unwrap();
        let mut state = source.prior();
        let win = RoundRecord {
            inputs: vec![0, 0, 0],
            outputs: vec![0, 0, 0],
            win: true,
        };
        for k in 0..10 {
            let q = 0.5f64.powi(k);
            assert_abs_diff_eq!(state.posterior[0], 1.0 / (1.0 + q), epsilon = 1e-12);
            let expected = (1.0 + q * 0.5) / (1.0 + q);
            assert_abs_diff_eq!(source.success_probability(&state).unwrap(), expected, epsilon = 1e-12);
            state = source.observe(state, win.clone()).unwrap();
        }
    }

    #[test]
    fn loss_collapses_onto_noisy_branch() {
        let (game, strategy, psi) = mermin();
        let model = make_source(&SourceSpec::parse_shorthand("coinflip", Some(4)).unwrap(), Some(&psi)).unwrap();
        let source = model.bind(&game, Some(&strategy)).unwrap();
        let loss = RoundRecord {
            inputs: vec![0, 0, 0],
            outputs: vec![0, 0, 1],
            win: false,
        };
        let state = source.observe(source.prior(), loss).unwrap();
        assert_eq!(state.posterior, vec![0.0, 1.0]);
        assert_abs_diff_eq!(source.success_probability(&state).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_likelihood_record_is_rejected() {
        let (game, strategy, psi) = mermin();
        let model = SourceModel::iid(RoundDevice::Quantum(psi.to_density()), 3).unwrap();
        let two = SourceModel::mixture_of_repeats(
            vec![0.5, 0.5],
            vec![RoundDevice::Quantum(psi.to_density()), RoundDevice::Bernoulli(1.0)],
            3,
        )
        .unwrap();
        let loss = RoundRecord {
            inputs: vec![0, 1, 1],
            outputs: vec![0, 0, 0],
            win: false,
        };
        assert!(model.bind(&game, Some(&strategy)).is_ok());
        let source = two.bind(&game, Some(&strategy)).unwrap();
        assert!(matches!(
            source.observe(source.prior(), loss),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn psi_branch_average_tends_to_one() {
        let (game, strategy, psi) = mermin();
        let model = make_source(&SourceSpec::parse_shorthand("coinflip", Some(60)).unwrap(), Some(&psi)).unwrap();
        let source = model.bind(&game, Some(&strategy)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = source.start_in_branch(0).unwrap();
        let mut last = 0.0;
        for _ in 0..60 {
            let step = source.conditional_round(state, &mut rng).unwrap();
            assert!(step.record.win);
            assert!(step.success_probability >= last);
            last = step.success_probability;
            state = step.next;
        }
        let mean = source.history_average_success(&state.history).unwrap();
        assert!(mean > 0.95 && mean < 1.0);
        assert!(last > 1.0 - 1e-15);
        assert_eq!(source.branch_average_success(0).unwrap(), 1.0);
        assert_abs_diff_eq!(source.branch_average_success(1).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bernoulli_sources() {
        let (game, _, _) = mermin();
        let probs = [0.9, 0.95, 1.0, 0.95];
        let model = SourceModel::bernoulli(&probs).unwrap();
        let source = model.bind(&game, None).unwrap();
        assert_abs_diff_eq!(source.branch_average_success(0).unwrap(), 0.95, epsilon = 1e-15);
        for (j, &p) in probs.iter().enumerate() {
            assert_abs_diff_eq!(source.branch_round_success(0, j).unwrap(), p, epsilon = 1e-15);
        }
        assert!(SourceModel::bernoulli(&[1.2]).is_err());
        assert!(SourceModel::bernoulli(&[]).is_err());
    }

    #[test]
    fn bernoulli_records_are_consistent_with_scoring() {
        let (game, _, _) = mermin();
        let model = SourceModel::bernoulli(&[0.7; 400]).unwrap();
        let source = model.bind(&game, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = source.start(&mut rng);
        let mut wins = 0;
        for _ in 0..400 {
            let step = source.conditional_round(state, &mut rng).unwrap();
            let scored = crate::games::score_round(&game, &step.record.inputs, &step.record.outputs).unwrap();
            assert_eq!(scored == 1, step.record.win);
            wins += scored as usize;
            state = step.next;
        }
        // 400 draws at p=0.7: sd ≈ 9.2.
        assert!((wins as f64 - 280.0).abs() < 40.0);
    }

    #[test]
    fn quantum_source_without_strategy_fails() {
        let (game, _, psi) = mermin();
        let model = SourceModel::iid(RoundDevice::Quantum(psi.to_density()), 2).unwrap();
        assert!(model.bind(&game, None).is_err());
    }

    #[test]
    fn chained_conditionals_multiply() {
        let (game, strategy, psi) = mermin();
        let devices = vec![
            RoundDevice::Quantum(depolarize(&psi, 0.1).unwrap()),
            RoundDevice::Quantum(depolarize(&psi, 0.6).unwrap()),
            RoundDevice::Bernoulli(0.8),
        ];
        let model = SourceModel::mixture_of_repeats(vec![0.2, 0.5, 0.3], devices, 6).unwrap();
        let source = model.bind(&game, Some(&strategy)).unwrap();
        let win = RoundRecord {
            inputs: vec![1, 1, 0],
            outputs: vec![1, 1, 1],
            win: true,
        };
        let mut state = source.prior();
        let mut chained = 1.0;
        for _ in 0..6 {
            chained *= source.success_probability(&state).unwrap();
            // Only the win/loss bit matters for the update when every branch
            // spreads mass uniformly over winning answers.
            state = source.observe(state, win.clone()).unwrap();
        }
        let direct: f64 = [(0.2, 0.95f64), (0.5, 0.7), (0.3, 0.8)]
            .iter()
            .map(|(w, p)| w * p.powi(6))
            .sum();
        assert_abs_diff_eq!(chained, direct, epsilon = 1e-12);
        let total: f64 = state.posterior.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spec_json_and_validation() {
        let text = r#"{"kind":"mixture","weights":[0.5,0.5],
            "branches":[{"repeat":{"type":"target"}},{"repeat":{"type":"maximally_mixed"}}],"n":5}"#;
        let spec: SourceSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec, SourceSpec::parse_shorthand("coinflip", Some(5)).unwrap());
        let (_, _, psi) = mermin();
        assert_eq!(make_source(&spec, Some(&psi)).unwrap().copies(), 5);
        let bad: SourceSpec =
            serde_json::from_str(r#"{"kind":"mixture","weights":[0.7,0.7],"branches":[{"repeat":{"type":"target"}},{"repeat":{"type":"target"}}],"n":3}"#)
                .unwrap();
        assert!(make_source(&bad, Some(&psi)).is_err());
        let short: SourceSpec = serde_json::from_str(r#"{"kind":"bernoulli","probs":[0.9,0.9],"N":3}"#).unwrap();
        assert!(make_source(&short, None).is_err());
        assert!(SourceSpec::parse_shorthand("iid-target", Some(3)).is_err());
        assert!(matches!(
            SourceSpec::parse_shorthand("teleport", None),
            Err(Error::UnknownName(_))
        ));
        assert!(make_source(&SourceSpec::parse_shorthand("coinflip", Some(3)).unwrap(), None).is_err());
    }
}
