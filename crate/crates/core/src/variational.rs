//! Gradient ascent of the fixed-input acceptance probability over a layered
//! hardware-style ansatz.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupRep;
use crate::hamiltonian::Hamiltonian;
use crate::numerics::{basis_state, ComplexMatrix};
use crate::simulator::derive_seed;
use crate::symcore::bounds::{optimal_acceptance_exact, twirled_evolution};

/// Rate below which the line search gives up on an iteration.
const MIN_RATE: f64 = 1e-16;

/// Layer `l` applies `RZ(θ[2(l·n+q)+1]) RY(θ[2(l·n+q)])` to every qubit `q`, then
/// a ring of CZ gates. Two qubits get a single CZ, one qubit gets none.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ansatz {
    pub qubits: usize,
    pub layers: usize,
    pub theta: Vec<f64>,
}

impl Ansatz {
    pub fn new(qubits: usize, layers: usize, theta: Vec<f64>) -> Result<Self> {
        let ansatz = Self { qubits, layers, theta };
        ansatz.check()?;
        Ok(ansatz)
    }

    pub fn zeros(qubits: usize, layers: usize) -> Self {
        Self { qubits, layers, theta: vec![0.0; Self::parameter_count(qubits, layers)] }
    }

    pub fn parameter_count(qubits: usize, layers: usize) -> usize {
        2 * qubits * layers
    }

    fn check(&self) -> Result<()> {
        if self.qubits == 0 || self.layers == 0 {
            return Err(Error::InvalidInstance("ansatz needs at least one qubit and one layer".into()));
        }
        let expected = Self::parameter_count(self.qubits, self.layers);
        if self.theta.len() != expected {
            return Err(Error::BadParameterCount { expected, found: self.theta.len() });
        }
        Ok(())
    }

    fn entanglers(&self) -> Vec<(usize, usize)> {
        match self.qubits {
            1 => vec![],
            2 => vec![(0, 1)],
            n => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }
}

fn apply_single(state: &mut [Complex64], qubits: usize, q: usize, m: [[Complex64; 2]; 2]) {
    let stride = 1 << (qubits - 1 - q);
    for base in 0..state.len() {
        if base & stride != 0 {
            continue;
        }
        let (a, b) = (state[base], state[base | stride]);
        state[base] = m[0][0] * a + m[0][1] * b;
        state[base | stride] = m[1][0] * a + m[1][1] * b;
    }
}

fn apply_cz(state: &mut [Complex64], qubits: usize, a: usize, b: usize) {
    let mask = (1 << (qubits - 1 - a)) | (1 << (qubits - 1 - b));
    for (i, amp) in state.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

fn ry(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

/// Statevector produced from `|0…0⟩`.
pub fn ansatz_prepare(ansatz: &Ansatz) -> Result<Vec<Complex64>> {
    ansatz.check()?;
    let n = ansatz.qubits;
    let mut state = basis_state(1 << n, 0);
    let ring = ansatz.entanglers();
    for l in 0..ansatz.layers {
        for q in 0..n {
            let k = 2 * (l * n + q);
            apply_single(&mut state, n, q, ry(ansatz.theta[k]));
            apply_single(&mut state, n, q, rz(ansatz.theta[k + 1]));
        }
        for &(a, b) in &ring {
            apply_cz(&mut state, n, a, b);
        }
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_step: f64,
    pub init_rate: f64,
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iters: 500, grad_step: 1e-5, init_rate: 1.0, tol: 1e-7 }
    }
}

/// `θ ↦ ‖𝒯_G(e^{-iHt}) ψ(θ)‖²` with the twirled evolution computed once.
#[derive(Clone, Debug)]
pub struct Objective {
    twirled: ComplexMatrix,
    qubits: usize,
    layers: usize,
}

impl Objective {
    pub fn new(h: &Hamiltonian, rep: &GroupRep, t: f64, qubits: usize, layers: usize) -> Result<Self> {
        let twirled = twirled_evolution(h, rep, t)?;
        if twirled.dim() != 1 << qubits {
            return Err(Error::DimensionMismatch { expected: twirled.dim(), found: 1 << qubits });
        }
        Ok(Self { twirled, qubits, layers })
    }

    pub fn parameter_count(&self) -> usize {
        Ansatz::parameter_count(self.qubits, self.layers)
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        let ansatz = Ansatz::new(self.qubits, self.layers, theta.to_vec())?;
        let psi = ansatz_prepare(&ansatz)?;
        Ok(self.twirled.apply(&psi).iter().map(|z| z.norm_sqr()).sum())
    }

    /// Central differences with step `h`.
    pub fn gradient(&self, theta: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut probe = theta.to_vec();
        let mut grad = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            probe[k] = theta[k] + h;
            let up = self.value(&probe)?;
            probe[k] = theta[k] - h;
            let down = self.value(&probe)?;
            probe[k] = theta[k];
            grad.push((up - down) / (2.0 * h));
        }
        Ok(grad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalResult {
    pub final_value: f64,
    /// Accepted ascent steps.
    pub iterations: usize,
    /// Objective at the start and after each accepted step.
    pub trace: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub oracle_optimum: f64,
    pub gap: f64,
    /// Stopped on the gradient tolerance rather than the iteration cap or a stalled line search.
    pub converged: bool,
}

pub fn optimize_acceptance(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    ansatz: &Ansatz,
    config: &OptimizerConfig,
) -> Result<VariationalResult> {
    ansatz.check()?;
    let objective = Objective::new(h, rep, t, ansatz.qubits, ansatz.layers)?;
    let oracle = optimal_acceptance_exact(h, rep, t)?.value;
    ascend(&objective, ansatz.theta.clone(), config, oracle)
}

fn ascend(
    objective: &Objective,
    mut theta: Vec<f64>,
    config: &OptimizerConfig,
    oracle: f64,
) -> Result<VariationalResult> {
    let mut value = objective.value(&theta)?;
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let grad = objective.gradient(&theta, config.grad_step)?;
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < config.tol {
            converged = true;
            break;
        }
        let mut rate = config.init_rate;
        let mut accepted = None;
        while rate >= MIN_RATE {
            let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(x, g)| x + rate * g).collect();
            let v = objective.value(&candidate)?;
            if v >= value {
                accepted = Some((candidate, v));
                break;
            }
            rate *= 0.5;
        }
        let Some((next, v)) = accepted else { break };
        theta = next;
        value = v;
        trace.push(v);
        iterations += 1;
    }
    Ok(VariationalResult {
        final_value: value,
        iterations,
        trace,
        theta_final: theta,
        oracle_optimum: oracle,
        gap: oracle - value,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartSummary {
    pub best: VariationalResult,
    pub best_restart: usize,
    pub finals: Vec<f64>,
    pub seed: u64,
}

/// Independent ascents from `restarts` uniform starts in `[0, 2π)`. Restart `r`
/// draws its start from `ChaCha8Rng::seed_from_u64(derive_seed(seed, r))`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_with_restarts(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    qubits: usize,
    layers: usize,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<RestartSummary> {
    if restarts == 0 {
        return Err(Error::InvalidInstance("at least one restart is required".into()));
    }
    Ansatz::zeros(qubits, layers).check()?;
    let objective = Objective::new(h, rep, t, qubits, layers)?;
    let oracle = optimal_acceptance_exact(h, rep, t)?.value;
    let runs: Vec<VariationalResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let start = (0..objective.parameter_count()).map(|_| rng.random_range(0.0..TAU)).collect();
            ascend(&objective, start, config, oracle)
        })
        .collect::<Result<_>>()?;
    let mut best_restart = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.final_value > runs[best_restart].final_value {
            best_restart = i;
        }
    }
    Ok(RestartSummary {
        finals: runs.iter().map(|r| r.final_value).collect(),
        best: runs[best_restart].clone(),
        best_restart,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{d3_example, z2_z2_example};
    use crate::hamiltonian::build_nmr_hamiltonian;
    use crate::numerics::vector_norm;
    use std::f64::consts::PI;

    fn nmr() -> Hamiltonian {
        build_nmr_hamiltonian(1.0, 2.0, 0.1).realize().unwrap()
    }

    #[test]
    fn zero_angles_give_ground_state() {
        let psi = ansatz_prepare(&Ansatz::zeros(3, 2)).unwrap();
        assert!((psi[0].re - 1.0).abs() < 1e-15);
        assert!(psi[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn y_rotation_by_pi_flips() {
        let psi = ansatz_prepare(&Ansatz::new(1, 1, vec![PI, 0.0]).unwrap()).unwrap();
        assert!(psi[0].norm() < 1e-15);
        assert!((psi[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_parameter_count() {
        assert_eq!(
            Ansatz::new(2, 3, vec![0.0; 11]),
            Err(Error::BadParameterCount { expected: 12, found: 11 })
        );
    }

    #[test]
    fn prepared_states_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let theta = (0..2 * n * 3).map(|_| rng.random_range(0.0..TAU)).collect();
            let psi = ansatz_prepare(&Ansatz::new(n, 3, theta).unwrap()).unwrap();
            assert!((vector_norm(&psi) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_pair_stops_immediately() {
        let h = nmr();
        let rep = z2_z2_example().unwrap();
        let ansatz = Ansatz::new(2, 2, vec![0.3; 8]).unwrap();
        let res = optimize_acceptance(&h, &rep, 1.7, &ansatz, &OptimizerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!((res.final_value - 1.0).abs() < 1e-9);
        assert!(res.converged);
    }

    #[test]
    fn zero_time_is_certain() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let ansatz = Ansatz::new(2, 1, vec![1.0, 2.0, 0.5, 0.1]).unwrap();
        let res = optimize_acceptance(&h, &rep, 0.0, &ansatz, &OptimizerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!((res.final_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trace_is_monotone_and_bounded() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let ansatz = Ansatz::new(2, 3, (0..12).map(|k| 0.4 * k as f64).collect()).unwrap();
        let res = optimize_acceptance(&h, &rep, 1.0, &ansatz, &OptimizerConfig::default()).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(res.final_value <= res.oracle_optimum + 1e-9);
        assert_eq!(res.trace.len(), res.iterations + 1);
    }

    #[test]
    fn restarts_replay() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let cfg = OptimizerConfig { max_iters: 40, ..Default::default() };
        let a = optimize_with_restarts(&h, &rep, 1.0, 2, 2, 4, 17, &cfg).unwrap();
        let b = optimize_with_restarts(&h, &rep, 1.0, 2, 2, 4, 17, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
