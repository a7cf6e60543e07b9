//! Statevector simulation of the two symmetry-test circuits and finite-shot
//! sampling of their accept/reject outcome.
//!
//! The control register is a single qudit of dimension |G| prepared directly
//! in the uniform superposition `|+⟩_C = |G|^{-1/2} Σ_g |g⟩`; acceptance is the
//! squared norm of the `⟨+|_C` projection. In Choi mode the system register is
//! the doubled space `R ⊗ A`. The evolution is applied whole on `A`; splitting
//! it across `R` and `A` with the transpose trick changes depth, not amplitudes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupRep;
use crate::hamiltonian::Hamiltonian;
use crate::numerics::{basis_state, vector_norm, ComplexMatrix, ZERO};
use crate::symcore::bounds::STATE_NORM_TOL;

/// Shots per independently seeded chunk. Part of the replay contract: chunk
/// `k` draws from `ChaCha8Rng::seed_from_u64(derive_seed(seed, k))`.
pub const SHOT_CHUNK: u64 = 4096;

/// Joint state of the control qudit (most significant) and the system register.
#[derive(Clone, Debug)]
pub struct RegisterState {
    control_dim: usize,
    system_dim: usize,
    amps: Vec<Complex64>,
}

impl RegisterState {
    /// `|+⟩_C ⊗ |system⟩`.
    pub fn uniform_control(control_dim: usize, system: &[Complex64]) -> Self {
        let w = 1.0 / (control_dim as f64).sqrt();
        let mut amps = Vec::with_capacity(control_dim * system.len());
        for _ in 0..control_dim {
            amps.extend(system.iter().map(|a| a * w));
        }
        Self { control_dim, system_dim: system.len(), amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.amps)
    }

    /// Apply `u` to the system register on every control branch.
    pub fn apply_system(&mut self, u: &ComplexMatrix) -> Result<()> {
        self.check_op(u)?;
        for block in self.amps.chunks_mut(self.system_dim) {
            let out = u.apply(block);
            block.copy_from_slice(&out);
        }
        Ok(())
    }

    /// Apply `ops[g]` to the system register on control branch `|g⟩`.
    pub fn apply_controlled(&mut self, ops: &[ComplexMatrix]) -> Result<()> {
        if ops.len() != self.control_dim {
            return Err(Error::DimensionMismatch { expected: self.control_dim, found: ops.len() });
        }
        for op in ops {
            self.check_op(op)?;
        }
        for (block, op) in self.amps.chunks_mut(self.system_dim).zip(ops) {
            let out = op.apply(block);
            block.copy_from_slice(&out);
        }
        Ok(())
    }

    /// Probability of the outcome `|+⟩⟨+|_C`.
    pub fn accept_probability(&self) -> f64 {
        let w = 1.0 / (self.control_dim as f64).sqrt();
        let mut projected = vec![ZERO; self.system_dim];
        for block in self.amps.chunks(self.system_dim) {
            for (acc, a) in projected.iter_mut().zip(block) {
                *acc += a * w;
            }
        }
        projected.iter().map(|z| z.norm_sqr()).sum()
    }

    fn check_op(&self, u: &ComplexMatrix) -> Result<()> {
        if u.dim() != self.system_dim {
            return Err(Error::DimensionMismatch { expected: self.system_dim, found: u.dim() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Maximally entangled input on `R ⊗ A`, controlled `conj(U(g)) ⊗ U(g)`.
    Choi,
    /// Input on `A` only, controlled `U†(g)`, evolution, controlled `U(g)`.
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    MaximallyMixed,
    Basis(usize),
    State(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct CircuitInstance<'a> {
    pub mode: Mode,
    pub hamiltonian: &'a Hamiltonian,
    pub rep: &'a GroupRep,
    pub t: f64,
    pub input: Input,
}

impl<'a> CircuitInstance<'a> {
    pub fn new(mode: Mode, hamiltonian: &'a Hamiltonian, rep: &'a GroupRep, t: f64, input: Input) -> Self {
        Self { mode, hamiltonian, rep, t, input }
    }

    fn validate(&self) -> Result<()> {
        let d = self.hamiltonian.dim();
        if self.rep.dim() != d {
            return Err(Error::DimensionMismatch { expected: self.rep.dim(), found: d });
        }
        match (&self.mode, &self.input) {
            (Mode::Choi, Input::MaximallyMixed) => Ok(()),
            (Mode::Choi, _) => Err(Error::InvalidInstance(
                "Choi mode prepares its own maximally entangled input".into(),
            )),
            (Mode::Mixed, Input::MaximallyMixed) => Ok(()),
            (Mode::Mixed, Input::Basis(x)) if *x < d => Ok(()),
            (Mode::Mixed, Input::Basis(x)) => Err(Error::InvalidInstance(format!(
                "basis index {x} out of range for dimension {d}"
            ))),
            (Mode::Mixed, Input::State(psi)) => {
                if psi.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
                }
                let norm = vector_norm(psi);
                if (norm - 1.0).abs() > STATE_NORM_TOL {
                    return Err(Error::UnnormalizedState { norm });
                }
                Ok(())
            }
        }
    }
}

/// Runs one pure-input branch, calling `observe` after state preparation and after
/// every gate.
fn run_pure(
    instance: &CircuitInstance<'_>,
    system: &[Complex64],
    observe: &mut dyn FnMut(&RegisterState),
) -> Result<f64> {
    let rep = instance.rep;
    let evolution = instance.hamiltonian.evolution(instance.t)?;
    let mut state = RegisterState::uniform_control(rep.order(), system);
    observe(&state);
    match instance.mode {
        Mode::Mixed => {
            let inverse: Vec<ComplexMatrix> = rep.elements().iter().map(|u| u.adjoint()).collect();
            state.apply_controlled(&inverse)?;
            observe(&state);
            state.apply_system(&evolution)?;
            observe(&state);
            state.apply_controlled(rep.elements())?;
            observe(&state);
        }
        Mode::Choi => {
            let d = instance.hamiltonian.dim();
            state.apply_system(&ComplexMatrix::identity(d).kron(&evolution))?;
            observe(&state);
            let doubled: Vec<ComplexMatrix> =
                rep.elements().iter().map(|u| u.conjugate().kron(u)).collect();
            state.apply_controlled(&doubled)?;
            observe(&state);
        }
    }
    Ok(state.accept_probability())
}

fn maximally_entangled(d: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; d * d];
    let w = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = Complex64::new(w, 0.0);
    }
    v
}

/// Per-branch acceptance probabilities: one per basis input for a maximally
/// mixed mixed-mode instance, otherwise a single value.
pub fn branch_acceptances(instance: &CircuitInstance<'_>) -> Result<Vec<f64>> {
    simulate_branches(instance, &mut |_| {})
}

fn simulate_branches(
    instance: &CircuitInstance<'_>,
    observe: &mut dyn FnMut(&RegisterState),
) -> Result<Vec<f64>> {
    instance.validate()?;
    let d = instance.hamiltonian.dim();
    match (&instance.mode, &instance.input) {
        (Mode::Choi, _) => Ok(vec![run_pure(instance, &maximally_entangled(d), observe)?]),
        (Mode::Mixed, Input::MaximallyMixed) => (0..d)
            .map(|x| run_pure(instance, &basis_state(d, x), observe))
            .collect(),
        (Mode::Mixed, Input::Basis(x)) => Ok(vec![run_pure(instance, &basis_state(d, *x), observe)?]),
        (Mode::Mixed, Input::State(psi)) => Ok(vec![run_pure(instance, psi, observe)?]),
    }
}

/// Exact acceptance probability of the circuit.
pub fn simulate_exact(instance: &CircuitInstance<'_>) -> Result<f64> {
    let branches = branch_acceptances(instance)?;
    Ok(branches.iter().sum::<f64>() / branches.len() as f64)
}

/// Like [`simulate_exact`], also returning the register norm after preparation
/// and after every gate.
pub fn simulate_exact_traced(instance: &CircuitInstance<'_>) -> Result<(f64, Vec<f64>)> {
    let mut norms = Vec::new();
    let branches = simulate_branches(instance, &mut |s| norms.push(s.norm()))?;
    Ok((branches.iter().sum::<f64>() / branches.len() as f64, norms))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShotRecord {
    pub shots: u64,
    pub accepts: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl ShotRecord {
    pub fn new(shots: u64, accepts: u64, seed: u64) -> Self {
        let estimate = accepts as f64 / shots as f64;
        Self {
            shots,
            accepts,
            estimate,
            std_error: (estimate * (1.0 - estimate) / shots as f64).sqrt(),
            seed,
        }
    }
}

/// SplitMix64 finalizer over `master + (index + 1)·γ`; sub-seed of chunk or
/// worker `index`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulate `shots` accept/reject outcomes. For a maximally mixed input each
/// shot first draws a uniform basis state `x`, then accepts with probability
/// `p_x`. Deterministic in `seed` regardless of thread count.
pub fn sample_shots(instance: &CircuitInstance<'_>, shots: u64, seed: u64) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::InvalidInstance("shot count must be at least 1".into()));
    }
    let probs: Vec<f64> = branch_acceptances(instance)?
        .into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .collect();
    let chunks = shots.div_ceil(SHOT_CHUNK);
    let accepts: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let n = SHOT_CHUNK.min(shots - k * SHOT_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
            sample_chunk(&probs, n, &mut rng)
        })
        .sum();
    Ok(ShotRecord::new(shots, accepts, seed))
}

fn sample_chunk(probs: &[f64], n: u64, rng: &mut ChaCha8Rng) -> u64 {
    let mut accepts = 0;
    for _ in 0..n {
        let p = if probs.len() == 1 {
            probs[0]
        } else {
            probs[rng.random_range(0..probs.len())]
        };
        if rng.random::<f64>() < p {
            accepts += 1;
        }
    }
    accepts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{close_generators, d3_example, z2_z2_example, Gate};
    use crate::hamiltonian::{build_nmr_hamiltonian, HamiltonianSpec};
    use crate::symcore::{acceptance_probability_choi, acceptance_probability_trace};

    fn nmr() -> Hamiltonian {
        build_nmr_hamiltonian(1.0, 2.0, 0.1).realize().unwrap()
    }

    #[test]
    fn symmetric_mixed_accepts() {
        let h = nmr();
        let rep = z2_z2_example().unwrap();
        for &t in &[0.4, 2.0, 5.5] {
            let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, t, Input::MaximallyMixed);
            assert!((simulate_exact(&inst).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_matches_trace_route() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, 1.0, Input::MaximallyMixed);
        let p = acceptance_probability_trace(&h, &rep, 1.0).unwrap().raw();
        assert!((simulate_exact(&inst).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn choi_matches_projector_route() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Choi, &h, &rep, 1.0, Input::MaximallyMixed);
        let p = acceptance_probability_choi(&h, &rep, 1.0).unwrap().raw();
        assert!((simulate_exact(&inst).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn norm_preserved_after_each_gate() {
        let h = nmr();
        let rep = d3_example().unwrap();
        for mode in [Mode::Mixed, Mode::Choi] {
            let inst = CircuitInstance::new(mode, &h, &rep, 0.8, Input::MaximallyMixed);
            let (_, norms) = simulate_exact_traced(&inst).unwrap();
            assert!(!norms.is_empty());
            for n in norms {
                assert!((n - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn choi_rejects_explicit_input() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Choi, &h, &rep, 1.0, Input::Basis(0));
        assert!(matches!(simulate_exact(&inst), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let h = HamiltonianSpec::parse_terms(1, &["1 * X"], "x").unwrap().realize().unwrap();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, 1.0, Input::MaximallyMixed);
        assert!(matches!(simulate_exact(&inst), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn certain_acceptance_gives_exact_estimate() {
        let h = nmr();
        let rep = z2_z2_example().unwrap();
        let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, 1.0, Input::MaximallyMixed);
        let rec = sample_shots(&inst, 12_345, 3).unwrap();
        assert_eq!(rec.estimate, 1.0);
        assert_eq!(rec.accepts, 12_345);
        assert_eq!(rec.std_error, 0.0);
    }

    #[test]
    fn certain_rejection_gives_zero_estimate() {
        // Twirling e^{-iZπ/2} = −iZ over {I, X} cancels exactly.
        let h = HamiltonianSpec::parse_terms(1, &["1 * Z"], "z").unwrap().realize().unwrap();
        let rep = close_generators(&[Gate::X(0).into()], 2, 4).unwrap();
        let inst = CircuitInstance::new(
            Mode::Mixed,
            &h,
            &rep,
            std::f64::consts::FRAC_PI_2,
            Input::MaximallyMixed,
        );
        assert!(simulate_exact(&inst).unwrap() < 1e-30);
        let rec = sample_shots(&inst, 10_000, 11).unwrap();
        assert_eq!(rec.accepts, 0);
        assert_eq!(rec.estimate, 0.0);
    }

    #[test]
    fn shots_concentrate_and_replay() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, 1.0, Input::MaximallyMixed);
        let exact = simulate_exact(&inst).unwrap();
        let rec = sample_shots(&inst, 100_000, 2024).unwrap();
        assert!((rec.estimate - exact).abs() < 4.0 * rec.std_error);
        assert_eq!(rec, sample_shots(&inst, 100_000, 2024).unwrap());
        assert_eq!(rec.seed, 2024);
    }

    #[test]
    fn zero_shots_rejected() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let inst = CircuitInstance::new(Mode::Mixed, &h, &rep, 1.0, Input::MaximallyMixed);
        assert!(sample_shots(&inst, 0, 1).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..8).map(|k| derive_seed(42, k)).collect();
        for i in 0..seeds.len() {
            for j in 0..i {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        // SplitMix64 reference value: first output for state 0 is 0xE220A8397B1DCDAF.
        assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }
}
