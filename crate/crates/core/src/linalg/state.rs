use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, MAX_DIMENSION, TOLERANCE};
use crate::error::{Error, Result};

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Normalized pure state on a register of subsystems. The first factor of
/// `dims` is the most significant tensor index (party 1 leftmost).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "state dimension {dim} is not a power of two"
            )));
        }
        if product(&dims) != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: product(&dims),
            });
        }
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionBudget {
                requested: dim,
                limit: MAX_DIMENSION,
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Qubit register state; the amplitude count fixes the number of qubits.
    pub fn qubits(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len().max(1).trailing_zeros() as usize;
        Self::new(amplitudes, vec![2; n])
    }

    /// Computational basis state |index⟩ on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::InvalidParameter(format!("basis index {index} out of range")))? =
            Complex64::new(1.0, 0.0);
        Self::qubits(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
            dims: self.dims.clone(),
        }
    }
}

/// Mixed state: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validating constructor.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let rho = Self { matrix, dims };
        rho.validate()?;
        Ok(rho)
    }

    /// Construction from operations that preserve validity by construction.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        Self { matrix, dims }
    }

    /// Checks Hermiticity, unit trace, positivity and factor bookkeeping at
    /// the global tolerance.
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::InvalidState("density matrix is not square".into()));
        }
        if product(&self.dims) != m.rows() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: product(&self.dims),
            });
        }
        if !m.is_hermitian(TOLERANCE) {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TOLERANCE || tr.im.abs() > TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = m.hermitian_eigenvalues()?.last().copied().unwrap_or(0.0);
        if min_eig < -TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d = product(&dims);
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionBudget {
                requested: d,
                limit: MAX_DIMENSION,
            });
        }
        Ok(Self {
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
            dims,
        })
    }

    /// ρ ⊗ σ with concatenated factor lists.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let matrix = tensor_product(&self.matrix, &other.matrix)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(Self { matrix, dims })
    }

    /// Convex combination Σ wᵢ ρᵢ of states on the same register.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidParameter(
                "mixture weights must be a probability vector".into(),
            ));
        }
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.dims != first.dims {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: rho.dim(),
                });
            }
            acc = &acc + &rho.matrix.scale_real(*w);
        }
        Ok(Self {
            matrix: acc,
            dims: first.dims.clone(),
        })
    }
}

/// Wire form `{dims, re[], im[]}` with row-major entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<DensityOperator> for MatrixRecord {
    fn from(rho: DensityOperator) -> Self {
        let entries = rho.matrix.as_slice();
        Self {
            dims: rho.dims,
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<MatrixRecord> for DensityOperator {
    type Error = Error;

    fn try_from(rec: MatrixRecord) -> Result<Self> {
        if rec.re.len() != rec.im.len() {
            return Err(Error::ShapeMismatch("re/im lengths differ".into()));
        }
        let d = product(&rec.dims);
        let data = rec
            .re
            .iter()
            .zip(&rec.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        DensityOperator::new(ComplexMatrix::from_row_major(d, d, data)?, rec.dims)
    }
}

/// Two-outcome measurement described by its outcome-1 effect.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMeasurement {
    effect: ComplexMatrix,
}

impl BinaryMeasurement {
    /// Requires a Hermitian effect with spectrum inside [0, 1].
    pub fn new(effect: ComplexMatrix) -> Result<Self> {
        let eig = effect
            .hermitian_eigenvalues()
            .map_err(|e| Error::InvalidMeasurement(e.to_string()))?;
        let (max, min) = (eig[0], eig[eig.len() - 1]);
        if min < -TOLERANCE || max > 1.0 + TOLERANCE {
            return Err(Error::InvalidMeasurement(format!(
                "effect spectrum [{min}, {max}] leaves [0, 1]"
            )));
        }
        Ok(Self { effect })
    }

    /// Projective measurement of a ±1 observable; outcome 0 ↔ eigenvalue +1.
    pub fn from_observable(observable: &ComplexMatrix) -> Result<Self> {
        let id = ComplexMatrix::identity(observable.rows());
        Self::new((&id - observable).scale_real(0.5))
    }

    pub fn dim(&self) -> usize {
        self.effect.rows()
    }

    /// Effect for outcome `o` ∈ {0, 1}.
    pub fn effect(&self, outcome: u8) -> ComplexMatrix {
        if outcome == 1 {
            self.effect.clone()
        } else {
            &ComplexMatrix::identity(self.dim()) - &self.effect
        }
    }

    pub fn outcome_one(&self) -> &ComplexMatrix {
        &self.effect
    }
}

/// Kronecker product with the global dimension budget.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.kron(b)
}

/// Partial trace of an arbitrary square operator over every factor not in `keep`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() || product(dims) != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: product(dims),
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidParameter("nothing to keep".into()));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::InvalidSubsystem {
                index: k,
                count: dims.len(),
            });
        }
        kept[k] = true;
    }
    let kept_dim: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced_dim = m.rows() / kept_dim;

    // Split every full index into (kept, traced) sub-indices.
    let split = |mut idx: usize| {
        let (mut k, mut t, mut kmul, mut tmul) = (0, 0, 1, 1);
        for (d, &is_kept) in dims.iter().zip(&kept).rev() {
            let digit = idx % d;
            idx /= d;
            if is_kept {
                k += digit * kmul;
                kmul *= d;
            } else {
                t += digit * tmul;
                tmul *= d;
            }
        }
        (k, t)
    };
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_dim); traced_dim];
    for i in 0..m.rows() {
        let (k, t) = split(i);
        groups[t].push((k, i));
    }
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(kr, ir) in group {
            for &(kc, ic) in group {
                out[(kr, kc)] += m[(ir, ic)];
            }
        }
    }
    Ok(out)
}

/// Reduced state on the subsystems listed in `keep` (in register order).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let matrix = partial_trace_matrix(&rho.matrix, &rho.dims, keep)?;
    let mut sorted: Vec<usize> = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let dims = sorted.iter().map(|&k| rho.dims[k]).collect();
    Ok(DensityOperator::from_parts_unchecked(matrix, dims))
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity_with_pure(rho: &DensityOperator, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let a = psi.amplitudes();
    let m = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..a.len() {
        for c in 0..a.len() {
            acc += a[r].conj() * m[(r, c)] * a[c];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Half the trace norm of ρ − σ.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let diff = rho.matrix() - sigma.matrix();
    let eig = diff.hermitian_eigenvalues()?;
    Ok((0.5 * eig.iter().map(|v| v.abs()).sum::<f64>()).min(1.0))
}

/// Born-rule outcome distribution of a POVM.
pub fn born_probabilities(rho: &DensityOperator, effects: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let d = rho.dim();
    let mut total = ComplexMatrix::zeros(d, d);
    for e in effects {
        if e.rows() != d || e.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: e.rows(),
            });
        }
        if !e.is_hermitian(TOLERANCE) {
            return Err(Error::InvalidMeasurement("effect is not Hermitian".into()));
        }
        total = &total + e;
    }
    if total.max_abs_diff(&ComplexMatrix::identity(d)) > TOLERANCE {
        return Err(Error::InvalidMeasurement("effects do not sum to identity".into()));
    }
    effects
        .iter()
        .map(|e| {
            let p = e.trace_product(rho.matrix())?.re;
            if p < -TOLERANCE {
                return Err(Error::InvalidMeasurement(format!("negative outcome probability {p}")));
            }
            Ok(p.max(0.0))
        })
        .collect()
}

/// Named textbook states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardState {
    /// (|0…0⟩ + |1…1⟩)/√2 on n ≤ 4 qubits.
    Ghz(usize),
    /// (|00⟩ + |11⟩)/√2.
    Bell,
    /// |+⟩.
    Plus,
    /// I/d.
    MaximallyMixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreparedState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl PreparedState {
    pub fn into_density(self) -> DensityOperator {
        match self {
            PreparedState::Pure(psi) => psi.to_density(),
            PreparedState::Mixed(rho) => rho,
        }
    }

    pub fn pure(self) -> Option<StateVector> {
        match self {
            PreparedState::Pure(psi) => Some(psi),
            PreparedState::Mixed(_) => None,
        }
    }
}

pub fn standard_state(name: StandardState) -> Result<PreparedState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        StandardState::Ghz(n) => {
            if !(2..=4).contains(&n) {
                return Err(Error::InvalidParameter(format!(
                    "GHZ state needs 2..=4 qubits, got {n}"
                )));
            }
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
            amps[0] = Complex64::new(h, 0.0);
            amps[(1 << n) - 1] = Complex64::new(h, 0.0);
            Ok(PreparedState::Pure(StateVector::qubits(amps)?))
        }
        StandardState::Bell => standard_state(StandardState::Ghz(2)),
        StandardState::Plus => Ok(PreparedState::Pure(StateVector::qubits(vec![
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
        ])?)),
        StandardState::MaximallyMixed(d) => {
            let dims = if d.is_power_of_two() && d > 1 {
                vec![2; d.trailing_zeros() as usize]
            } else {
                vec![d]
            };
            Ok(PreparedState::Mixed(DensityOperator::maximally_mixed(dims)?))
        }
    }
}

/// (1 − λ)|ψ⟩⟨ψ| + λ I/d.
pub fn depolarize(psi: &StateVector, lambda: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing strength {lambda} outside [0, 1]"
        )));
    }
    let d = psi.dim();
    let noise = ComplexMatrix::identity(d).scale_real(lambda / d as f64);
    let matrix = &psi.projector().scale_real(1.0 - lambda) + &noise;
    Ok(DensityOperator::from_parts_unchecked(matrix, psi.dims().to_vec()))
}

/// Gap between the two largest eigenvalues of Ω = Σ pᵢ M₁|ᵢ.
pub fn spectral_gap(strategy_effects: &[BinaryMeasurement], weights: &[f64]) -> Result<f64> {
    let first = strategy_effects
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty strategy".into()))?;
    if strategy_effects.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} effects but {} weights",
            strategy_effects.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > TOLERANCE {
        return Err(Error::InvalidParameter(
            "strategy weights must be a probability vector".into(),
        ));
    }
    let d = first.dim();
    let mut omega = ComplexMatrix::zeros(d, d);
    for (m, &w) in strategy_effects.iter().zip(weights) {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            });
        }
        omega = &omega + &m.outcome_one().scale_real(w);
    }
    let eig = omega.hermitian_eigenvalues()?;
    if eig[0] > 1.0 + TOLERANCE {
        return Err(Error::InvalidMeasurement(format!(
            "strategy operator eigenvalue {} exceeds 1",
            eig[0]
        )));
    }
    Ok(match eig.get(1) {
        Some(second) => (eig[0] - second).max(0.0),
        None => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use approx::assert_abs_diff_eq;

    fn ghz3() -> StateVector {
        standard_state(StandardState::Ghz(3)).unwrap().pure().unwrap()
    }

    #[test]
    fn ghz_amplitudes() {
        let psi = ghz3();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (i, a) in psi.amplitudes().iter().enumerate() {
            let expected = if i == 0 || i == 7 { h } else { 0.0 };
            assert_abs_diff_eq!(a.re, expected, epsilon = 1e-15);
        }
        assert!(standard_state(StandardState::Ghz(5)).is_err());
    }

    #[test]
    fn bell_and_mixed() {
        let bell = standard_state(StandardState::Bell).unwrap().pure().unwrap();
        assert_abs_diff_eq!(bell.amplitudes()[3].re, std::f64::consts::FRAC_1_SQRT_2);
        let mixed = standard_state(StandardState::MaximallyMixed(2)).unwrap().into_density();
        assert!(mixed.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn xxx_stabilizes_ghz() {
        let x = pauli::x();
        let xxx = tensor_product(&tensor_product(&x, &x).unwrap(), &x).unwrap();
        let psi = ghz3();
        let rho = psi.projector();
        assert!((&xxx * &rho).max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let zero_zero = StateVector::basis(2, 0).unwrap().to_density();
        let reduced = partial_trace(&zero_zero, &[0]).unwrap();
        assert!(reduced.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[1.0, 0.0])) < 1e-15);

        let bell = standard_state(StandardState::Bell).unwrap().into_density();
        let half = partial_trace(&bell, &[1]).unwrap();
        assert!(half.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[0.5, 0.5])) < 1e-15);

        let ghz = ghz3().to_density();
        for k in 0..3 {
            let r = partial_trace(&ghz, &[k]).unwrap();
            assert!(r.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[0.5, 0.5])) < 1e-15);
            r.validate().unwrap();
        }
        assert!(matches!(
            partial_trace(&ghz, &[3]),
            Err(Error::InvalidSubsystem { index: 3, .. })
        ));
        assert!(partial_trace(&ghz, &[]).is_err());
    }

    #[test]
    fn partial_trace_keeps_register_order() {
        // |0⟩⊗|1⟩⊗|+⟩ reduced to factors {2, 0} is |0⟩⟨0| ⊗ |+⟩⟨+|.
        let zero = StateVector::basis(1, 0).unwrap().to_density();
        let one = StateVector::basis(1, 1).unwrap().to_density();
        let plus = standard_state(StandardState::Plus).unwrap().into_density();
        let full = zero.tensor(&one).unwrap().tensor(&plus).unwrap();
        let reduced = partial_trace(&full, &[2, 0]).unwrap();
        let expected = zero.tensor(&plus).unwrap();
        assert!(reduced.matrix().max_abs_diff(expected.matrix()) < 1e-15);
        assert_eq!(reduced.dims(), &[2, 2]);
    }

    #[test]
    fn fidelity_examples() {
        let psi = ghz3();
        assert_abs_diff_eq!(
            fidelity_with_pure(&psi.to_density(), &psi).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let mixed = DensityOperator::maximally_mixed(vec![2, 2, 2]).unwrap();
        assert_abs_diff_eq!(fidelity_with_pure(&mixed, &psi).unwrap(), 0.125, epsilon = 1e-12);
        let half = depolarize(&psi, 0.5).unwrap();
        assert_abs_diff_eq!(fidelity_with_pure(&half, &psi).unwrap(), 0.5625, epsilon = 1e-12);
        let bell = standard_state(StandardState::Bell).unwrap().pure().unwrap();
        assert!(fidelity_with_pure(&mixed, &bell).is_err());
    }

    #[test]
    fn depolarize_endpoints() {
        let psi = ghz3();
        assert!(depolarize(&psi, 0.0).unwrap().matrix().max_abs_diff(&psi.projector()) < 1e-15);
        let full = depolarize(&psi, 1.0).unwrap();
        assert!(
            full.matrix()
                .max_abs_diff(DensityOperator::maximally_mixed(vec![2, 2, 2]).unwrap().matrix())
                < 1e-15
        );
        depolarize(&psi, 0.3).unwrap().validate().unwrap();
        assert!(depolarize(&psi, 1.5).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = StateVector::basis(1, 0).unwrap().to_density();
        let one = StateVector::basis(1, 1).unwrap().to_density();
        assert_abs_diff_eq!(trace_distance(&zero, &zero).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn born_examples() {
        let zero = StateVector::basis(1, 0).unwrap().to_density();
        let comp = [
            ComplexMatrix::diagonal(&[1.0, 0.0]),
            ComplexMatrix::diagonal(&[0.0, 1.0]),
        ];
        assert_eq!(born_probabilities(&zero, &comp).unwrap(), vec![1.0, 0.0]);
        let xm = BinaryMeasurement::from_observable(&pauli::x()).unwrap();
        let p = born_probabilities(&zero, &[xm.effect(0), xm.effect(1)]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
        assert!(born_probabilities(&zero, &comp[..1]).is_err());
    }

    #[test]
    fn spectral_gap_examples() {
        let psi = ghz3();
        let single = BinaryMeasurement::new(psi.projector()).unwrap();
        assert_abs_diff_eq!(spectral_gap(&[single], &[1.0]).unwrap(), 1.0, epsilon = 1e-12);
        let trivial = BinaryMeasurement::new(ComplexMatrix::identity(4)).unwrap();
        assert_abs_diff_eq!(spectral_gap(&[trivial], &[1.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert!(spectral_gap(&[], &[]).is_err());
    }

    #[test]
    fn density_validator_rejects_bad_input() {
        let not_unit = ComplexMatrix::diagonal(&[0.6, 0.6]);
        assert!(DensityOperator::new(not_unit, vec![2]).is_err());
        let negative = ComplexMatrix::diagonal(&[1.2, -0.2]);
        assert!(DensityOperator::new(negative, vec![2]).is_err());
        let wrong_dims = ComplexMatrix::diagonal(&[0.5, 0.5]);
        assert!(DensityOperator::new(wrong_dims, vec![3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rho = depolarize(&ghz3(), 0.25).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.contains("\"dims\":[2,2,2]"));
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let bad = r#"{"dims":[2],"re":[1.0,0.0,0.0,1.0],"im":[0,0,0,0]}"#;
        assert!(serde_json::from_str::<DensityOperator>(bad).is_err());
    }
}
