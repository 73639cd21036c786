//! Nonlocal games built from Bell inequalities.
//!
//! A game lists the input tuples it asks with their probabilities and, for
//! every input tuple, a truth table over output tuples saying which answers
//! win. Outputs are binary; an output tuple is packed into an integer with
//! party 1 as the most significant bit, matching the register order of
//! [`crate::linalg`].

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    born_probabilities, pauli, standard_state, tensor_product, BinaryMeasurement, ComplexMatrix, DensityOperator,
    StandardState, TOLERANCE,
};

/// Packs an output tuple (party 1 first) into its integer code.
pub fn encode_outputs(outputs: &[u8]) -> usize {
    outputs.iter().fold(0, |acc, &o| (acc << 1) | o as usize)
}

/// Inverse of [`encode_outputs`].
pub fn decode_outputs(code: usize, parties: usize) -> Vec<u8> {
    (0..parties).map(|k| ((code >> (parties - 1 - k)) & 1) as u8).collect()
}

/// Draws an index from a probability vector using one uniform variate.
pub(crate) fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack; take the last index with mass.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Affine relation `b = scale · p + offset` between win probability and Bell value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn apply(&self, p: f64) -> f64 {
        self.scale * p + self.offset
    }

    pub fn invert(&self, b: f64) -> f64 {
        (b - self.offset) / self.scale
    }
}

/// Bell functional of an XOR-type game: `b = Σᵢ wᵢ (2·P(win | i) − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    /// Per-input weights, aligned with the game's input list.
    pub weights: Vec<f64>,
    /// Win probability → Bell value, valid when weights are proportional to
    /// the input distribution.
    pub map: AffineMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GameRecord {
    name: String,
    parties: usize,
    inputs_per_party: usize,
    inputs: Vec<Vec<u8>>,
    distribution: Vec<f64>,
    predicate: Vec<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bell: Option<BellFunctional>,
}

/// A nonlocal game with binary outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameRecord", into = "GameRecord")]
pub struct NonlocalGame {
    name: String,
    parties: usize,
    inputs_per_party: usize,
    inputs: Vec<Vec<u8>>,
    distribution: Vec<f64>,
    predicate: Vec<Vec<bool>>,
    bell: Option<BellFunctional>,
}

impl TryFrom<GameRecord> for NonlocalGame {
    type Error = Error;

    fn try_from(r: GameRecord) -> Result<Self> {
        NonlocalGame::new(
            r.name,
            r.parties,
            r.inputs_per_party,
            r.inputs,
            r.distribution,
            r.predicate,
            r.bell,
        )
    }
}

impl From<NonlocalGame> for GameRecord {
    fn from(g: NonlocalGame) -> Self {
        GameRecord {
            name: g.name,
            parties: g.parties,
            inputs_per_party: g.inputs_per_party,
            inputs: g.inputs,
            distribution: g.distribution,
            predicate: g.predicate,
            bell: g.bell,
        }
    }
}

impl NonlocalGame {
    pub fn new(
        name: String,
        parties: usize,
        inputs_per_party: usize,
        inputs: Vec<Vec<u8>>,
        distribution: Vec<f64>,
        predicate: Vec<Vec<bool>>,
        bell: Option<BellFunctional>,
    ) -> Result<Self> {
        if parties == 0 || parties > 4 {
            return Err(Error::InvalidParameter(format!("{parties} parties unsupported")));
        }
        if inputs.is_empty() || inputs.len() != distribution.len() || inputs.len() != predicate.len() {
            return Err(Error::ShapeMismatch(
                "inputs, distribution and predicate must have equal non-zero length".into(),
            ));
        }
        for tuple in &inputs {
            if tuple.len() != parties || tuple.iter().any(|&i| i as usize >= inputs_per_party) {
                return Err(Error::ShapeMismatch(format!("bad input tuple {tuple:?}")));
            }
        }
        let total: f64 = distribution.iter().sum();
        if distribution.iter().any(|&q| q < 0.0) || (total - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidParameter("input distribution must sum to 1".into()));
        }
        if predicate.iter().any(|row| row.len() != 1 << parties) {
            return Err(Error::ShapeMismatch(
                "predicate rows must cover every output tuple".into(),
            ));
        }
        if let Some(b) = &bell {
            if b.weights.len() != inputs.len() {
                return Err(Error::ShapeMismatch("Bell weights per input".into()));
            }
        }
        Ok(Self {
            name,
            parties,
            inputs_per_party,
            inputs,
            distribution,
            predicate,
            bell,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn inputs_per_party(&self) -> usize {
        self.inputs_per_party
    }

    pub fn inputs(&self) -> &[Vec<u8>] {
        &self.inputs
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn bell_functional(&self) -> Option<&BellFunctional> {
        self.bell.as_ref()
    }

    pub fn output_count(&self) -> usize {
        1 << self.parties
    }

    pub fn input_index(&self, inputs: &[u8]) -> Option<usize> {
        self.inputs.iter().position(|t| t.as_slice() == inputs)
    }

    /// Whether the output code wins on the input at `input_idx`.
    pub fn wins(&self, input_idx: usize, output_code: usize) -> bool {
        self.predicate[input_idx][output_code]
    }

    pub fn winning_outputs(&self, input_idx: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.output_count()).filter(move |&o| self.predicate[input_idx][o])
    }

    pub fn losing_outputs(&self, input_idx: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.output_count()).filter(move |&o| !self.predicate[input_idx][o])
    }

    /// Average winning probability of an outcome table.
    pub fn win_probability_of(&self, table: &OutcomeTable) -> f64 {
        self.distribution
            .iter()
            .enumerate()
            .map(|(i, q)| q * self.win_given_input(table, i))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    fn win_given_input(&self, table: &OutcomeTable, input_idx: usize) -> f64 {
        self.winning_outputs(input_idx)
            .map(|o| table.probabilities[input_idx][o])
            .sum()
    }

    /// Bell value of an outcome table, when the game carries a functional.
    pub fn bell_value_of(&self, table: &OutcomeTable) -> Result<f64> {
        let bell = self
            .bell
            .as_ref()
            .ok_or_else(|| Error::UnknownName(format!("game {} has no Bell functional", self.name)))?;
        Ok(bell
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (2.0 * self.win_given_input(table, i) - 1.0))
            .sum())
    }
}

/// Which Mermin robustness constant to attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MerminConstant {
    /// c = 2 − √2 applied directly on the success-probability side.
    #[default]
    Success,
    /// c = (2 − √2)/4, from reading 2 − √2 as the violation-side slope.
    ViolationDerived,
}

impl MerminConstant {
    pub fn value(self) -> f64 {
        match self {
            MerminConstant::Success => 2.0 - SQRT_2,
            MerminConstant::ViolationDerived => (2.0 - SQRT_2) / 4.0,
        }
    }
}

/// Constants tying game score to extractability: a state with extractability
/// 1 − η wins with probability at most `p_qm − c·η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessModel {
    pub p_qm: f64,
    pub p_l: f64,
    pub b_q: f64,
    pub b_l: f64,
    pub c: Option<f64>,
    pub c_tilde: Option<f64>,
    pub algebraic: bool,
}

impl RobustnessModel {
    /// Sets `c` and the matching violation-side constant `c̃ = 1/(b_Q·c)`.
    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "robustness constant c={c} must be positive"
            )));
        }
        self.c = Some(c);
        self.c_tilde = Some(1.0 / (self.b_q * c));
        Ok(self)
    }

    /// Sets `c̃` and derives `c = 1/(b_Q·c̃)`.
    pub fn with_c_tilde(self, c_tilde: f64) -> Result<Self> {
        if !(c_tilde > 0.0 && c_tilde.is_finite()) {
            return Err(Error::InvalidParameter(format!("c_tilde={c_tilde} must be positive")));
        }
        self.with_c(1.0 / (self.b_q * c_tilde))
    }

    /// The robustness constant, required by every planner.
    pub fn c(&self) -> Result<f64> {
        self.c
            .ok_or_else(|| Error::MissingConstant("this game has no default c; pass one explicitly".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_l && self.p_l < self.p_qm && self.p_qm <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= p_L < p_QM <= 1, got p_L={} p_QM={}",
                self.p_l, self.p_qm
            )));
        }
        if let Some(c) = self.c {
            if c <= 0.0 {
                return Err(Error::InvalidParameter("c must be positive".into()));
            }
            if let Some(ct) = self.c_tilde {
                if (c * self.b_q * ct - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "c and c_tilde violate c = 1/(b_Q c_tilde)".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// How a Bell value is read as a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationConvention {
    /// p = b / b_Q.
    #[default]
    Ratio,
    /// The game's own correlator map b = scale·p + offset.
    Correlator,
}

/// Success probability implied by a Bell value under `convention`.
pub fn success_from_bell_value(
    game: &NonlocalGame,
    model: &RobustnessModel,
    bell_value: f64,
    convention: ViolationConvention,
) -> Result<f64> {
    match convention {
        ViolationConvention::Ratio => Ok(bell_value / model.b_q),
        ViolationConvention::Correlator => game
            .bell
            .as_ref()
            .map(|b| b.map.invert(bell_value))
            .ok_or_else(|| Error::UnknownName(format!("game {} has no Bell functional", game.name))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardGame {
    Mermin3,
    Chsh,
}

impl FromStr for StandardGame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mermin3" | "mermin" | "ghz" => Ok(StandardGame::Mermin3),
            "chsh" => Ok(StandardGame::Chsh),
            other => Err(Error::UnknownName(format!("game '{other}'"))),
        }
    }
}

impl fmt::Display for StandardGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StandardGame::Mermin3 => "mermin3",
            StandardGame::Chsh => "chsh",
        })
    }
}

fn xor_game(name: &str, parties: usize, inputs: Vec<Vec<u8>>, target_parity: impl Fn(&[u8]) -> u8) -> NonlocalGame {
    let n_in = inputs.len();
    let predicate = inputs
        .iter()
        .map(|i| {
            let want = target_parity(i);
            (0..1usize << parties)
                .map(|o| (o.count_ones() as u8 & 1) == want)
                .collect()
        })
        .collect();
    let weight = n_in as f64;
    NonlocalGame::new(
        name.into(),
        parties,
        2,
        inputs,
        vec![1.0 / weight; n_in],
        predicate,
        Some(BellFunctional {
            weights: vec![1.0; n_in],
            map: AffineMap {
                scale: 2.0 * weight,
                offset: -weight,
            },
        }),
    )
    .expect("standard game is well formed")
}

/// Game definition and robustness constants for a named game.
///
/// Mermin uses c = 2 − √2 (see [`standard_game_with`] for the alternative);
/// CHSH ships without a constant.
pub fn standard_game(name: StandardGame) -> (NonlocalGame, RobustnessModel) {
    standard_game_with(name, MerminConstant::default())
}

pub fn standard_game_with(name: StandardGame, mermin: MerminConstant) -> (NonlocalGame, RobustnessModel) {
    match name {
        StandardGame::Mermin3 => {
            let inputs = vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
            let game = xor_game("mermin3", 3, inputs, |i| i.iter().fold(0, |a, &b| a | b));
            let model = RobustnessModel {
                p_qm: 1.0,
                p_l: 0.75,
                b_q: 4.0,
                b_l: 2.0,
                c: None,
                c_tilde: None,
                algebraic: true,
            }
            .with_c(mermin.value())
            .expect("positive constant");
            (game, model)
        }
        StandardGame::Chsh => {
            let inputs = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
            let game = xor_game("chsh", 2, inputs, |i| i[0] & i[1]);
            let model = RobustnessModel {
                p_qm: (2.0 + SQRT_2) / 4.0,
                p_l: 0.75,
                b_q: 2.0 * SQRT_2,
                b_l: 2.0,
                c: None,
                c_tilde: None,
                algebraic: false,
            };
            (game, model)
        }
    }
}

/// Game definition file: the game plus its robustness constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDefinition {
    #[serde(flatten)]
    pub game: NonlocalGame,
    pub robustness: RobustnessModel,
}

/// Shared state plus, for every party and input, a binary measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    shared_state: DensityOperator,
    measurements: Vec<Vec<BinaryMeasurement>>,
}

impl QuantumStrategy {
    /// `measurements[party][input]`; the state must have one factor per party.
    pub fn new(shared_state: DensityOperator, measurements: Vec<Vec<BinaryMeasurement>>) -> Result<Self> {
        let dims = shared_state.dims();
        if dims.len() != measurements.len() {
            return Err(Error::ShapeMismatch(format!(
                "state has {} factors for {} parties",
                dims.len(),
                measurements.len()
            )));
        }
        for (party, (ms, &d)) in measurements.iter().zip(dims).enumerate() {
            if ms.is_empty() {
                return Err(Error::ShapeMismatch(format!("party {party} has no measurements")));
            }
            if let Some(bad) = ms.iter().find(|m| m.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.dim(),
                });
            }
        }
        Ok(Self {
            shared_state,
            measurements,
        })
    }

    pub fn shared_state(&self) -> &DensityOperator {
        &self.shared_state
    }

    pub fn measurements(&self) -> &[Vec<BinaryMeasurement>] {
        &self.measurements
    }

    /// Same measurements applied to another state on the same register.
    pub fn with_state(&self, state: DensityOperator) -> Result<Self> {
        Self::new(state, self.measurements.clone())
    }

    /// Joint effect ⊗ₖ M_{oₖ|iₖ}.
    pub fn joint_effect(&self, inputs: &[u8], outputs: &[u8]) -> Result<ComplexMatrix> {
        let mut acc: Option<ComplexMatrix> = None;
        for (party, (&i, &o)) in inputs.iter().zip(outputs).enumerate() {
            let m = self
                .measurements
                .get(party)
                .and_then(|ms| ms.get(i as usize))
                .ok_or_else(|| Error::ShapeMismatch(format!("party {party} has no input {i}")))?;
            let local = m.effect(o);
            acc = Some(match acc {
                None => local,
                Some(prev) => tensor_product(&prev, &local)?,
            });
        }
        acc.ok_or_else(|| Error::ShapeMismatch("empty input tuple".into()))
    }

    /// Born-rule distribution over output codes for every input of `game`.
    pub fn outcome_table(&self, game: &NonlocalGame) -> Result<OutcomeTable> {
        if game.parties() != self.measurements.len() {
            return Err(Error::ShapeMismatch(format!(
                "game has {} parties, strategy {}",
                game.parties(),
                self.measurements.len()
            )));
        }
        let probabilities = game
            .inputs()
            .iter()
            .map(|inputs| {
                let effects = (0..game.output_count())
                    .map(|code| self.joint_effect(inputs, &decode_outputs(code, game.parties())))
                    .collect::<Result<Vec<_>>>()?;
                born_probabilities(&self.shared_state, &effects)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OutcomeTable { probabilities })
    }
}

/// `probabilities[input_idx][output_code]` = p(o | i).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub probabilities: Vec<Vec<f64>>,
}

impl OutcomeTable {
    /// Draws inputs from the game distribution and outputs from this table.
    pub fn sample<R: Rng + ?Sized>(&self, game: &NonlocalGame, rng: &mut R) -> RoundRecord {
        let idx = sample_index(game.distribution(), rng.random());
        let code = sample_index(&self.probabilities[idx], rng.random());
        RoundRecord {
            inputs: game.inputs()[idx].clone(),
            outputs: decode_outputs(code, game.parties()),
            win: game.wins(idx, code),
        }
    }
}

/// One measured round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub inputs: Vec<u8>,
    pub outputs: Vec<u8>,
    pub win: bool,
}

/// Measurement assignment that reaches the quantum bound of a standard game.
///
/// Mermin: GHZ₃ with σ_x on input 0 and σ_y on input 1. CHSH: Bell state with
/// Alice measuring σ_z / σ_x and Bob (σ_z ± σ_x)/√2. Eigenvalue +1 is output 0.
pub fn optimal_strategy(name: StandardGame) -> Result<QuantumStrategy> {
    match name {
        StandardGame::Mermin3 => {
            let state = standard_state(StandardState::Ghz(3))?.into_density();
            let x = BinaryMeasurement::from_observable(&pauli::x())?;
            let y = BinaryMeasurement::from_observable(&pauli::y())?;
            QuantumStrategy::new(state, vec![vec![x.clone(), y.clone()]; 3])
        }
        StandardGame::Chsh => {
            let state = standard_state(StandardState::Bell)?.into_density();
            let (z, x) = (pauli::z(), pauli::x());
            let plus = (&z + &x).scale_real(FRAC_1_SQRT_2);
            let minus = (&z - &x).scale_real(FRAC_1_SQRT_2);
            let alice = vec![
                BinaryMeasurement::from_observable(&z)?,
                BinaryMeasurement::from_observable(&x)?,
            ];
            let bob = vec![
                BinaryMeasurement::from_observable(&plus)?,
                BinaryMeasurement::from_observable(&minus)?,
            ];
            QuantumStrategy::new(state, vec![alice, bob])
        }
    }
}

/// Target state of a standard game.
pub fn target_state(name: StandardGame) -> Result<crate::linalg::StateVector> {
    let s = match name {
        StandardGame::Mermin3 => StandardState::Ghz(3),
        StandardGame::Chsh => StandardState::Bell,
    };
    standard_state(s)?
        .pure()
        .ok_or_else(|| Error::InvalidState("target is not pure".into()))
}

pub fn win_probability(game: &NonlocalGame, strategy: &QuantumStrategy) -> Result<f64> {
    Ok(game.win_probability_of(&strategy.outcome_table(game)?))
}

pub fn bell_value(game: &NonlocalGame, strategy: &QuantumStrategy) -> Result<f64> {
    game.bell_value_of(&strategy.outcome_table(game)?)
}

/// 1 if the outputs win on the inputs, 0 otherwise.
pub fn score_round(game: &NonlocalGame, inputs: &[u8], outputs: &[u8]) -> Result<u8> {
    if outputs.len() != game.parties() || outputs.iter().any(|&o| o > 1) {
        return Err(Error::ShapeMismatch(format!("bad output tuple {outputs:?}")));
    }
    let idx = game
        .input_index(inputs)
        .ok_or_else(|| Error::ShapeMismatch(format!("input tuple {inputs:?} is not asked")))?;
    Ok(game.wins(idx, encode_outputs(outputs)) as u8)
}

/// Plays one round: inputs from the game distribution, outputs from the Born rule.
pub fn sample_round<R: Rng + ?Sized>(
    strategy: &QuantumStrategy,
    game: &NonlocalGame,
    rng: &mut R,
) -> Result<RoundRecord> {
    Ok(strategy.outcome_table(game)?.sample(game, rng))
}

/// Deterministic local strategy: `answers[party][input]` is that party's output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub answers: Vec<Vec<u8>>,
}

impl DeterministicStrategy {
    /// Outcome table with all mass on the deterministic answers.
    pub fn outcome_table(&self, game: &NonlocalGame) -> OutcomeTable {
        let probabilities = game
            .inputs()
            .iter()
            .map(|inputs| {
                let outs: Vec<u8> = inputs
                    .iter()
                    .enumerate()
                    .map(|(p, &i)| self.answers[p][i as usize])
                    .collect();
                let mut row = vec![0.0; game.output_count()];
                row[encode_outputs(&outs)] = 1.0;
                row
            })
            .collect();
        OutcomeTable { probabilities }
    }
}

/// Every deterministic local strategy of a binary-output game
/// (`2^(inputs_per_party · parties)` of them).
pub fn deterministic_strategies(game: &NonlocalGame) -> impl Iterator<Item = DeterministicStrategy> + '_ {
    let per_party = game.inputs_per_party();
    let bits = per_party * game.parties();
    (0u64..1 << bits).map(move |mask| DeterministicStrategy {
        answers: (0..game.parties())
            .map(|p| {
                (0..per_party)
                    .map(|i| ((mask >> (p * per_party + i)) & 1) as u8)
                    .collect()
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{depolarize, DensityOperator};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn output_codes_round_trip() {
        for code in 0..8 {
            assert_eq!(encode_outputs(&decode_outputs(code, 3)), code);
        }
        assert_eq!(decode_outputs(0b011, 3), vec![0, 1, 1]);
    }

    #[test]
    fn score_examples() {
        let (mermin, _) = standard_game(StandardGame::Mermin3);
        assert_eq!(score_round(&mermin, &[0, 0, 0], &[0, 0, 0]).unwrap(), 1);
        assert_eq!(score_round(&mermin, &[0, 1, 1], &[0, 0, 0]).unwrap(), 0);
        let (chsh, _) = standard_game(StandardGame::Chsh);
        assert_eq!(score_round(&chsh, &[1, 1], &[0, 1]).unwrap(), 1);
        assert!(score_round(&mermin, &[0, 0, 1], &[0, 0, 0]).is_err());
        assert!(score_round(&mermin, &[0, 0, 0], &[0, 2, 0]).is_err());
    }

    #[test]
    fn optimal_values() {
        let (mermin, model) = standard_game(StandardGame::Mermin3);
        let s = optimal_strategy(StandardGame::Mermin3).unwrap();
        assert_abs_diff_eq!(win_probability(&mermin, &s).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bell_value(&mermin, &s).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.c.unwrap(), 2.0 - SQRT_2);

        let (chsh, model) = standard_game(StandardGame::Chsh);
        let s = optimal_strategy(StandardGame::Chsh).unwrap();
        assert_abs_diff_eq!(win_probability(&chsh, &s).unwrap(), model.p_qm, epsilon = 1e-12);
        assert_abs_diff_eq!(bell_value(&chsh, &s).unwrap(), 2.0 * SQRT_2, epsilon = 1e-12);
        assert!(model.c().is_err());
    }

    #[test]
    fn depolarized_ghz_wins_one_minus_half_lambda() {
        let (game, _) = standard_game(StandardGame::Mermin3);
        let opt = optimal_strategy(StandardGame::Mermin3).unwrap();
        let ghz = target_state(StandardGame::Mermin3).unwrap();
        for lambda in [0.0, 0.1, 0.2, 0.5, 0.9, 1.0] {
            let s = opt.with_state(depolarize(&ghz, lambda).unwrap()).unwrap();
            assert_abs_diff_eq!(win_probability(&game, &s).unwrap(), 1.0 - lambda / 2.0, epsilon = 1e-12);
        }
        let mixed = opt
            .with_state(DensityOperator::maximally_mixed(vec![2, 2, 2]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(win_probability(&game, &mixed).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn local_bounds_by_brute_force() {
        for name in [StandardGame::Mermin3, StandardGame::Chsh] {
            let (game, model) = standard_game(name);
            let mut best_win: f64 = 0.0;
            let mut best_bell = f64::NEG_INFINITY;
            for d in deterministic_strategies(&game) {
                let t = d.outcome_table(&game);
                best_win = best_win.max(game.win_probability_of(&t));
                best_bell = best_bell.max(game.bell_value_of(&t).unwrap());
            }
            assert_abs_diff_eq!(best_win, model.p_l, epsilon = 1e-12);
            assert_abs_diff_eq!(best_bell, model.b_l, epsilon = 1e-12);
        }
        let (mermin, _) = standard_game(StandardGame::Mermin3);
        assert_eq!(deterministic_strategies(&mermin).count(), 64);
    }

    #[test]
    fn optimal_mermin_never_loses() {
        let (game, _) = standard_game(StandardGame::Mermin3);
        let s = optimal_strategy(StandardGame::Mermin3).unwrap();
        let table = s.outcome_table(&game).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| table.sample(&game, &mut rng).win));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let (game, _) = standard_game(StandardGame::Chsh);
        let s = optimal_strategy(StandardGame::Chsh).unwrap();
        let a = sample_round(&s, &game, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = sample_round(&s, &game, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(score_round(&game, &a.inputs, &a.outputs).unwrap() == 1, a.win);
    }

    #[test]
    fn constants_are_consistent() {
        for c in [MerminConstant::Success, MerminConstant::ViolationDerived] {
            let (_, model) = standard_game_with(StandardGame::Mermin3, c);
            model.validate().unwrap();
            assert_abs_diff_eq!(
                model.c.unwrap() * model.b_q * model.c_tilde.unwrap(),
                1.0,
                epsilon = 1e-12
            );
        }
        let (_, chsh) = standard_game(StandardGame::Chsh);
        let chsh = chsh.with_c_tilde(0.5).unwrap();
        assert_abs_diff_eq!(chsh.c.unwrap(), 1.0 / (2.0 * SQRT_2 * 0.5));
        assert!(chsh.with_c(0.0).is_err());
    }

    #[test]
    fn violation_conventions() {
        let (game, model) = standard_game(StandardGame::Mermin3);
        assert_abs_diff_eq!(
            success_from_bell_value(&game, &model, 4.0, ViolationConvention::Ratio).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            success_from_bell_value(&game, &model, 2.0, ViolationConvention::Correlator).unwrap(),
            0.75
        );
        assert_abs_diff_eq!(
            success_from_bell_value(&game, &model, 2.0, ViolationConvention::Ratio).unwrap(),
            0.5
        );
    }

    #[test]
    fn game_json_round_trip() {
        let (game, robustness) = standard_game(StandardGame::Mermin3);
        let def = GameDefinition { game, robustness };
        let text = serde_json::to_string(&def).unwrap();
        for key in [
            "\"name\"",
            "\"parties\"",
            "\"inputs\"",
            "\"distribution\"",
            "\"predicate\"",
            "\"robustness\"",
        ] {
            assert!(text.contains(key), "missing {key}");
        }
        let back: GameDefinition = serde_json::from_str(&text).unwrap();
        assert_eq!(back, def);
        let broken = text.replace("0.25", "0.3");
        assert!(serde_json::from_str::<GameDefinition>(&broken).is_err());
    }

    #[test]
    fn strategy_shape_checks() {
        let ghz = target_state(StandardGame::Mermin3).unwrap().to_density();
        let x = BinaryMeasurement::from_observable(&pauli::x()).unwrap();
        assert!(QuantumStrategy::new(ghz.clone(), vec![vec![x.clone()]; 2]).is_err());
        let s = QuantumStrategy::new(ghz, vec![vec![x]; 3]).unwrap();
        let (game, _) = standard_game(StandardGame::Mermin3);
        assert!(s.outcome_table(&game).is_err());
    }
}
