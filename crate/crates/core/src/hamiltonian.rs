//! Hamiltonian construction (Pauli sums, the two-spin NMR model) and
//! first-order Trotterized evolution.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    expm_hermitian_evolution, spectral_norm, tolerance, ComplexMatrix, HermitianSpectrum, I, ONE,
    ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let entries = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        ComplexMatrix::from_row_major(2, &entries).expect("2x2 Pauli")
    }
}

/// One weighted Pauli word `coefficient · P_1 ⊗ … ⊗ P_n`. Letter `k` acts on
/// qubit `k`, and qubit 0 is the most significant bit of a basis index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub word: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, word: &str) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::NonRealCoefficient(coefficient.to_string()));
        }
        let letters = word
            .trim()
            .chars()
            .map(|c| {
                Pauli::from_char(c).ok_or_else(|| Error::BadPauliLetter {
                    word: word.to_string(),
                    letter: c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coefficient, word: letters })
    }

    pub fn word_string(&self) -> String {
        self.word.iter().map(|p| p.as_char()).collect()
    }

    /// Unweighted tensor product of the word's Paulis.
    pub fn word_matrix(&self) -> ComplexMatrix {
        self.word
            .iter()
            .fold(ComplexMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.word_matrix().scale_real(self.coefficient)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {}", self.coefficient, self.word_string())
    }
}

/// Parses `"<coeff> * <WORD>"`, e.g. `"-0.5 * ZI"`.
impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (coeff, word) = s
            .split_once('*')
            .ok_or_else(|| Error::MalformedTerm(s.to_string()))?;
        let coeff = coeff.trim();
        let word = word.trim();
        if word.is_empty() || coeff.is_empty() {
            return Err(Error::MalformedTerm(s.to_string()));
        }
        let value: f64 = coeff
            .parse()
            .map_err(|_| Error::NonRealCoefficient(coeff.to_string()))?;
        PauliTerm::new(value, word)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianForm {
    Terms(Vec<PauliTerm>),
    Matrix(ComplexMatrix),
}

/// A Hamiltonian on `qubits` qubits given either as a Pauli sum or as an
/// explicit Hermitian matrix of dimension `2^qubits`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub qubits: usize,
    pub form: HamiltonianForm,
    pub label: String,
}

impl HamiltonianSpec {
    pub fn from_terms(qubits: usize, terms: Vec<PauliTerm>, label: impl Into<String>) -> Result<Self> {
        for term in &terms {
            if term.word.len() != qubits {
                return Err(Error::BadWordLength {
                    word: term.word_string(),
                    expected: qubits,
                    found: term.word.len(),
                });
            }
            if !term.coefficient.is_finite() {
                return Err(Error::NonRealCoefficient(term.coefficient.to_string()));
            }
        }
        if qubits == 0 {
            return Err(Error::DimensionMismatch { expected: 2, found: 1 });
        }
        Ok(Self {
            qubits,
            form: HamiltonianForm::Terms(terms),
            label: label.into(),
        })
    }

    /// Parse a list of `"<coeff> * <WORD>"` entries.
    pub fn parse_terms<S: AsRef<str>>(qubits: usize, terms: &[S], label: impl Into<String>) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<PauliTerm>>>()?;
        Self::from_terms(qubits, parsed, label)
    }

    pub fn from_matrix(matrix: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two().max(2),
                found: dim,
            });
        }
        let deviation = matrix.hermiticity_defect();
        if deviation > tolerance() {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            form: HamiltonianForm::Matrix(matrix),
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn terms(&self) -> Option<&[PauliTerm]> {
        match &self.form {
            HamiltonianForm::Terms(t) => Some(t),
            HamiltonianForm::Matrix(_) => None,
        }
    }

    /// Dense matrix of the Hamiltonian (Pauli sums are realized by Kronecker products).
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        match &self.form {
            HamiltonianForm::Terms(terms) => pauli_sum_to_matrix(self.qubits, terms),
            HamiltonianForm::Matrix(m) => Ok(m.clone()),
        }
    }

    pub fn realize(&self) -> Result<Hamiltonian> {
        Hamiltonian::new(self.clone())
    }
}

/// `Σ_k c_k · P_{k,1} ⊗ … ⊗ P_{k,n}`.
pub fn pauli_sum_to_matrix(qubits: usize, terms: &[PauliTerm]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::zeros(1 << qubits);
    for term in terms {
        if term.word.len() != qubits {
            return Err(Error::BadWordLength {
                word: term.word_string(),
                expected: qubits,
                found: term.word.len(),
            });
        }
        if !term.coefficient.is_finite() {
            return Err(Error::NonRealCoefficient(term.coefficient.to_string()));
        }
        acc = &acc + &term.matrix();
    }
    Ok(acc)
}

/// Two weakly J-coupled spins, `ω1 S1z + ω2 S2z + 2πJ S1z S2z` with
/// `S_z = −Z/2`, realized as `−(ω1/2) ZI − (ω2/2) IZ + (πJ/2) ZZ`.
/// Frequencies are angular, ħ = 1.
pub fn build_nmr_hamiltonian(omega1: f64, omega2: f64, j: f64) -> HamiltonianSpec {
    let terms = vec![
        PauliTerm { coefficient: -omega1 / 2.0, word: vec![Pauli::Z, Pauli::I] },
        PauliTerm { coefficient: -omega2 / 2.0, word: vec![Pauli::I, Pauli::Z] },
        PauliTerm { coefficient: PI * j / 2.0, word: vec![Pauli::Z, Pauli::Z] },
    ];
    HamiltonianSpec {
        qubits: 2,
        form: HamiltonianForm::Terms(terms),
        label: format!("nmr(omega1={omega1}, omega2={omega2}, J={j})"),
    }
}

/// The same NMR Hamiltonian written directly as its diagonal matrix in terms of
/// `ω_avg = (ω1+ω2)/2` and `Δω = ω2 − ω1`.
pub fn nmr_matrix(omega1: f64, omega2: f64, j: f64) -> ComplexMatrix {
    let avg = 0.5 * (omega1 + omega2);
    let delta = omega2 - omega1;
    let pj = PI * j;
    ComplexMatrix::from_real_diagonal(&[
        -avg + pj / 2.0,
        (delta - pj) / 2.0,
        -(delta + pj) / 2.0,
        avg + pj / 2.0,
    ])
}

/// A realized Hamiltonian: the spec, its dense matrix, and a lazily computed
/// eigendecomposition shared by every evolution time.
#[derive(Debug)]
pub struct Hamiltonian {
    spec: HamiltonianSpec,
    matrix: ComplexMatrix,
    spectrum: OnceLock<HermitianSpectrum>,
}

impl Hamiltonian {
    pub fn new(spec: HamiltonianSpec) -> Result<Self> {
        let matrix = spec.to_matrix()?;
        let deviation = matrix.hermiticity_defect();
        if deviation > tolerance() {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { spec, matrix, spectrum: OnceLock::new() })
    }

    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(HamiltonianSpec::from_matrix(matrix, "matrix")?)
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> Result<&HermitianSpectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let computed = HermitianSpectrum::new(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| computed))
    }

    /// e^{-iHt}.
    pub fn evolution(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.spectrum()?.evolution(t))
    }

    /// ‖H‖∞ (largest |eigenvalue|).
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self.spectrum()?.spectral_radius())
    }
}

impl Clone for Hamiltonian {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self { spec: self.spec.clone(), matrix: self.matrix.clone(), spectrum }
    }
}

/// First-order product formula with `steps` repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub steps: usize,
}

impl TrotterPlan {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInstance("Trotter step count must be at least 1".into()));
        }
        Ok(Self { steps })
    }

    pub const fn order(&self) -> usize {
        1
    }
}

/// `(∏_{i=1}^m e^{-i H_i t/r})^r`, factors in declaration order with term 1 leftmost.
pub fn trotter_evolution(spec: &HamiltonianSpec, t: f64, plan: TrotterPlan) -> Result<ComplexMatrix> {
    let terms = spec.terms().ok_or(Error::ExplicitMatrixUnsupported)?;
    if plan.steps == 0 {
        return Err(Error::InvalidInstance("Trotter step count must be at least 1".into()));
    }
    let dt = t / plan.steps as f64;
    let mut step = ComplexMatrix::identity(spec.dim());
    for term in terms {
        let factor = expm_hermitian_evolution(&term.matrix(), dt)?;
        step = &step * &factor;
    }
    Ok(matrix_power(&step, plan.steps))
}

/// ‖Trotterized − exact‖∞.
pub fn trotter_error(spec: &HamiltonianSpec, t: f64, plan: TrotterPlan) -> Result<f64> {
    let approx = trotter_evolution(spec, t, plan)?;
    let exact = expm_hermitian_evolution(&spec.to_matrix()?, t)?;
    spectral_norm(&(&approx - &exact))
}

fn matrix_power(m: &ComplexMatrix, mut exp: usize) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(m.dim());
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn diag_of(m: &ComplexMatrix) -> Vec<f64> {
        m.diagonal().iter().map(|z| z.re).collect()
    }

    #[test]
    fn single_z() {
        let spec = HamiltonianSpec::parse_terms(1, &["1.0 * Z"], "z").unwrap();
        let m = spec.to_matrix().unwrap();
        assert_eq!(m, ComplexMatrix::from_real_diagonal(&[1.0, -1.0]));
    }

    #[test]
    fn two_qubit_z_sum() {
        let spec = HamiltonianSpec::parse_terms(2, &["1.0 * ZI", "1.0 * IZ"], "zz").unwrap();
        let m = spec.to_matrix().unwrap();
        assert_eq!(m, ComplexMatrix::from_real_diagonal(&[2.0, 0.0, 0.0, -2.0]));
    }

    #[test]
    fn empty_term_list_is_zero() {
        let spec = HamiltonianSpec::from_terms(2, vec![], "empty").unwrap();
        assert_eq!(spec.to_matrix().unwrap(), ComplexMatrix::zeros(4));
    }

    #[test]
    fn word_length_checked() {
        let err = HamiltonianSpec::parse_terms(2, &["1.0 * ZIZ"], "bad").unwrap_err();
        assert!(matches!(err, Error::BadWordLength { expected: 2, found: 3, .. }));
    }

    #[test]
    fn term_parsing() {
        let t: PauliTerm = "-0.5 * ZI".parse().unwrap();
        assert_eq!(t.coefficient, -0.5);
        assert_eq!(t.word, vec![Pauli::Z, Pauli::I]);
        let t: PauliTerm = "2e-1*xy".parse().unwrap();
        assert_eq!(t.word_string(), "XY");
        assert!(matches!("1+2i * X".parse::<PauliTerm>(), Err(Error::NonRealCoefficient(_))));
        assert!(matches!("inf * X".parse::<PauliTerm>(), Err(Error::NonRealCoefficient(_))));
        assert!(matches!("0.5 X".parse::<PauliTerm>(), Err(Error::MalformedTerm(_))));
        assert!(matches!("0.5 * XQ".parse::<PauliTerm>(), Err(Error::BadPauliLetter { letter: 'Q', .. })));
    }

    #[test]
    fn nmr_zero_frequencies() {
        let j = 0.37;
        let m = build_nmr_hamiltonian(0.0, 0.0, j).to_matrix().unwrap();
        let pj = PI * j / 2.0;
        let expected = [pj, -pj, -pj, pj];
        for (a, b) in diag_of(&m).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn nmr_uncoupled() {
        let w = 1.7;
        let m = build_nmr_hamiltonian(w, w, 0.0).to_matrix().unwrap();
        let expected = [-w, 0.0, 0.0, w];
        for (a, b) in diag_of(&m).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn nmr_pauli_and_matrix_forms_agree() {
        let triples = [(1.0, 2.0, 0.1), (-3.2, 0.4, 1.5), (0.0, 5.0, -0.2), (10.0, 9.5, 0.03), (0.7, -0.7, 2.0)];
        for (w1, w2, j) in triples {
            let pauli = build_nmr_hamiltonian(w1, w2, j).to_matrix().unwrap();
            let direct = nmr_matrix(w1, w2, j);
            assert!(pauli.max_abs_diff(&direct) < 1e-12, "({w1}, {w2}, {j})");
        }
    }

    #[test]
    fn nmr_evolution_is_elementwise_phase() {
        let h = build_nmr_hamiltonian(1.0, 2.0, 0.1).realize().unwrap();
        let u = h.evolution(1.0).unwrap();
        let phases: Vec<Complex64> = diag_of(&nmr_matrix(1.0, 2.0, 0.1))
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -x))
            .collect();
        assert!(u.max_abs_diff(&ComplexMatrix::from_diagonal(&phases)) < 1e-13);
    }

    #[test]
    fn commuting_trotter_is_exact() {
        let spec = build_nmr_hamiltonian(1.0, 2.0, 0.1);
        for r in [1, 2, 7] {
            assert!(trotter_error(&spec, 1.3, TrotterPlan::new(r).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trotter_at_zero_time_is_identity() {
        let spec = HamiltonianSpec::parse_terms(2, &["1 * XI", "1 * ZZ"], "xz").unwrap();
        let u = trotter_evolution(&spec, 0.0, TrotterPlan::new(5).unwrap()).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!(trotter_error(&spec, 0.0, TrotterPlan::new(3).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn trotter_converges_for_many_steps() {
        let spec = HamiltonianSpec::parse_terms(2, &["1 * XI", "1 * ZZ"], "xz").unwrap();
        // Reference from an independent scipy expm computation. First order
        // leaves about t²‖[XI, ZZ]‖/(2r) here, so 1e-4 is out of reach at r=1024.
        let err = trotter_error(&spec, 0.5, TrotterPlan::new(1024).unwrap()).unwrap();
        assert!((err - 2.242_981_924_013e-4).abs() < 1e-12, "err = {err}");
        assert!(err < 0.25 * 2.0 / (2.0 * 1024.0));
    }

    #[test]
    fn trotter_refinement_is_monotone() {
        let spec = HamiltonianSpec::parse_terms(2, &["1 * XI", "1 * ZZ"], "xz").unwrap();
        for k in [1usize, 2, 4, 8, 16] {
            let coarse = trotter_error(&spec, 0.5, TrotterPlan::new(k).unwrap()).unwrap();
            let fine = trotter_error(&spec, 0.5, TrotterPlan::new(2 * k).unwrap()).unwrap();
            assert!(fine < coarse, "r = {k}: {fine} !< {coarse}");
        }
    }

    #[test]
    fn explicit_matrix_cannot_be_trotterized() {
        let spec = HamiltonianSpec::from_matrix(nmr_matrix(1.0, 2.0, 0.1), "m").unwrap();
        assert_eq!(
            trotter_evolution(&spec, 1.0, TrotterPlan::new(1).unwrap()),
            Err(Error::ExplicitMatrixUnsupported)
        );
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(TrotterPlan::new(0).is_err());
    }

    #[test]
    fn non_hermitian_matrix_rejected() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(HamiltonianSpec::from_matrix(m, "bad"), Err(Error::NotHermitian { .. })));
    }
}
