//! Fixed-input acceptance `‖𝒯_G(e^{-iHt})|ψ⟩‖²`, its optimum over inputs, and
//! the commutator-based lower bounds on that optimum.

use num_complex::Complex64;
use serde::Serialize;

use super::{check_dims, RANGE_TOL};
use crate::error::{Error, Result};
use crate::group::{twirl, GroupRep};
use crate::hamiltonian::Hamiltonian;
use crate::numerics::{
    inner_product, nested_commutators, spectral_norm, top_singular_pair, vector_norm, ComplexMatrix,
};

/// Tolerance on `‖ψ‖ = 1` for input states.
pub const STATE_NORM_TOL: f64 = 1e-10;

fn check_state(psi: &[Complex64], dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi.len() });
    }
    let norm = vector_norm(psi);
    if (norm - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::UnnormalizedState { norm });
    }
    Ok(())
}

/// `𝒯_G(e^{-iHt})`.
pub fn twirled_evolution(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<ComplexMatrix> {
    check_dims(h, rep)?;
    twirl(rep, &h.evolution(t)?)
}

/// Acceptance probability for pure input `ψ`: `‖𝒯_G(e^{-iHt})ψ‖₂²`.
pub fn fixed_state_acceptance(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    psi: &[Complex64],
) -> Result<f64> {
    check_state(psi, h.dim())?;
    let m = twirled_evolution(h, rep, t)?;
    Ok(m.apply(psi).iter().map(|z| z.norm_sqr()).sum())
}

/// `⟨ψ| 𝒯_G(H²) − 𝒯_G(H)² |ψ⟩`, nonnegative by Kadison–Schwarz.
pub fn kadison_schwarz_deficit(h: &Hamiltonian, rep: &GroupRep, psi: &[Complex64]) -> Result<f64> {
    check_dims(h, rep)?;
    check_state(psi, h.dim())?;
    let hm = h.matrix();
    let twirled_sq = twirl(rep, &(hm * hm))?;
    let twirled = twirl(rep, hm)?;
    let gap = &twirled_sq - &(&twirled * &twirled);
    Ok(inner_product(psi, &gap.apply(psi)).re)
}

/// `1 − t²⟨𝒯_G(H²) − 𝒯_G(H)²⟩_ψ`, accurate to O(τ³).
pub fn fixed_state_second_order(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    psi: &[Complex64],
) -> Result<f64> {
    Ok(1.0 - t * t * kadison_schwarz_deficit(h, rep, psi)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalAcceptance {
    /// `‖𝒯_G(e^{-iHt})‖∞²`.
    pub value: f64,
    /// A unit input attaining it (top right singular vector).
    pub state: Vec<Complex64>,
}

/// Best fixed-input acceptance over all pure states.
pub fn optimal_acceptance_exact(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<OptimalAcceptance> {
    let m = twirled_evolution(h, rep, t)?;
    let (sigma, state) = top_singular_pair(&m)?;
    Ok(OptimalAcceptance { value: sigma * sigma, state })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmallTimeBound {
    pub value: f64,
    /// Only meaningful for τ = ‖H‖∞|t| < 1.
    pub valid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NestedBound {
    /// `(1 − S)²` with `S = partial_sum + tail`.
    pub value: f64,
    /// `S ≤ 1`; past that the squared form no longer bounds anything.
    pub valid: bool,
    pub order: usize,
    /// `Σ_{n=1}^{N} |t|^n/n! · (1/|G|) Σ_g ‖[(H)^n, U(g)]‖∞`.
    pub partial_sum: f64,
    /// Upper bound on the omitted terms from `‖[(H)^{n+1}, U]‖∞ ≤ 2‖H‖∞ ‖[(H)^n, U]‖∞`.
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundSet {
    pub t: f64,
    pub tau: f64,
    pub optimal_exact: f64,
    /// `1 − (2/|G|) Σ_g ‖[U(g), e^{-iHt}]‖∞`.
    pub unitary_commutator: f64,
    /// `1 − (2|t|/|G|) Σ_g ‖[U(g), H]‖∞ − 4τ²`.
    pub small_t: SmallTimeBound,
    pub nested: NestedBound,
    /// `optimal_exact ≥ every valid bound − 1e-9`.
    pub ordering_holds: bool,
}

impl BoundSet {
    /// Valid lower bounds, labelled.
    pub fn valid_bounds(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("unitary_commutator", self.unitary_commutator)];
        if self.small_t.valid {
            out.push(("small_t", self.small_t.value));
        }
        if self.nested.valid {
            out.push(("nested", self.nested.value));
        }
        out
    }
}

/// All lower bounds on `‖𝒯_G(e^{-iHt})‖∞²` together with the exact value.
pub fn variational_lower_bounds(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    order: usize,
) -> Result<BoundSet> {
    check_dims(h, rep)?;
    let g = rep.order() as f64;
    let abs_t = t.abs();
    let h_norm = h.spectral_norm()?;
    let tau = h_norm * abs_t;
    let evolution = h.evolution(t)?;

    let mut unitary_comm = 0.0;
    let mut first_comm = 0.0;
    let mut nested_norms = vec![0.0; order + 1];
    for u in rep.elements() {
        unitary_comm += spectral_norm(&u.commutator(&evolution))?;
        first_comm += spectral_norm(&u.commutator(h.matrix()))?;
        for (n, c) in nested_commutators(h.matrix(), u, order)?.iter().enumerate() {
            nested_norms[n] += spectral_norm(c)?;
        }
    }
    nested_norms.iter_mut().for_each(|x| *x /= g);

    let unitary_commutator = 1.0 - 2.0 * unitary_comm / g;
    let small_t = SmallTimeBound {
        value: 1.0 - 2.0 * abs_t * first_comm / g - 4.0 * tau * tau,
        valid: tau < 1.0,
    };

    let mut partial_sum = 0.0;
    let mut weight = 1.0; // |t|^n / n!
    for (n, &a) in nested_norms.iter().enumerate().skip(1) {
        weight *= abs_t / n as f64;
        partial_sum += weight * a;
    }
    let tail = nested_tail(abs_t, h_norm, order, nested_norms[order]);
    let s = partial_sum + tail;
    let nested = NestedBound {
        value: (1.0 - s) * (1.0 - s),
        valid: s.is_finite() && s <= 1.0,
        order,
        partial_sum,
        tail,
    };

    let optimal = optimal_acceptance_exact(h, rep, t)?.value;
    let mut set = BoundSet {
        t,
        tau,
        optimal_exact: optimal,
        unitary_commutator,
        small_t,
        nested,
        ordering_holds: true,
    };
    set.ordering_holds = set
        .valid_bounds()
        .iter()
        .all(|&(_, b)| optimal >= b - RANGE_TOL);
    Ok(set)
}

/// `Σ_{n>N} |t|^n/n! · (2‖H‖)^{n−N} · a_N`.
fn nested_tail(abs_t: f64, h_norm: f64, order: usize, a_order: f64) -> f64 {
    if a_order == 0.0 || abs_t == 0.0 {
        return 0.0;
    }
    let ratio = 2.0 * h_norm * abs_t;
    // q_N = a_N |t|^N / N!
    let mut q = a_order;
    for n in 1..=order {
        q *= abs_t / n as f64;
    }
    let mut sum = 0.0;
    let mut n = order;
    loop {
        q *= ratio / (n + 1) as f64;
        n += 1;
        sum += q;
        if !sum.is_finite() {
            return f64::INFINITY;
        }
        if (n as f64) > ratio && q <= 1e-17 * sum {
            break;
        }
        if n > order + 100_000 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{d3_example, z2_z2_example};
    use crate::hamiltonian::build_nmr_hamiltonian;
    use crate::numerics::{basis_state, ONE, ZERO};

    fn nmr() -> Hamiltonian {
        build_nmr_hamiltonian(1.0, 2.0, 0.1).realize().unwrap()
    }

    fn plus_state() -> Vec<Complex64> {
        vec![Complex64::new(0.5, 0.0); 4]
    }

    #[test]
    fn symmetric_pair_fixed_state_is_one() {
        let rep = z2_z2_example().unwrap();
        let p = fixed_state_acceptance(&nmr(), &rep, 1.3, &plus_state()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_time_fixed_state_is_one() {
        let rep = d3_example().unwrap();
        let p = fixed_state_acceptance(&nmr(), &rep, 0.0, &plus_state()).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let rep = d3_example().unwrap();
        let psi = vec![ONE, ONE, ZERO, ZERO];
        assert!(matches!(
            fixed_state_acceptance(&nmr(), &rep, 1.0, &psi),
            Err(Error::UnnormalizedState { .. })
        ));
    }

    #[test]
    fn basis_average_equals_trace_route() {
        let h = nmr();
        let rep = d3_example().unwrap();
        let avg: f64 = (0..4)
            .map(|x| fixed_state_acceptance(&h, &rep, 1.0, &basis_state(4, x)).unwrap())
            .sum::<f64>()
            / 4.0;
        let p = crate::symcore::acceptance_probability_trace(&h, &rep, 1.0).unwrap().raw();
        assert!((avg - p).abs() < 1e-10);
    }

    #[test]
    fn optimal_examples() {
        let h = nmr();
        let sym = optimal_acceptance_exact(&h, &z2_z2_example().unwrap(), 1.0).unwrap();
        assert!((sym.value - 1.0).abs() < 1e-12);
        let triv = optimal_acceptance_exact(&h, &GroupRep::trivial(4), 2.0).unwrap();
        assert!((triv.value - 1.0).abs() < 1e-12);
        let rep = d3_example().unwrap();
        let opt = optimal_acceptance_exact(&h, &rep, 1.0).unwrap();
        let at_state = fixed_state_acceptance(&h, &rep, 1.0, &opt.state).unwrap();
        assert!((at_state - opt.value).abs() < 1e-12);
    }

    #[test]
    fn symmetric_bounds() {
        let h = nmr();
        let b = variational_lower_bounds(&h, &z2_z2_example().unwrap(), 0.3, 12).unwrap();
        assert!((b.unitary_commutator - 1.0).abs() < 1e-12);
        assert_eq!(b.nested.value, 1.0);
        assert!(b.nested.valid);
        assert!((b.small_t.value - (1.0 - 4.0 * b.tau * b.tau)).abs() < 1e-12);
        assert!(b.ordering_holds);
    }

    #[test]
    fn zero_time_bounds() {
        let b = variational_lower_bounds(&nmr(), &d3_example().unwrap(), 0.0, 12).unwrap();
        assert!((b.unitary_commutator - 1.0).abs() < 1e-14);
        assert_eq!(b.nested.value, 1.0);
        assert!(b.ordering_holds);
    }

    #[test]
    fn asymmetric_bounds_below_optimum() {
        let b = variational_lower_bounds(&nmr(), &d3_example().unwrap(), 0.2, 12).unwrap();
        assert!(b.small_t.valid && b.nested.valid);
        for (name, value) in b.valid_bounds() {
            assert!(value <= b.optimal_exact + 1e-9, "{name}: {value} > {}", b.optimal_exact);
        }
        assert!(b.optimal_exact < 1.0);
    }

    #[test]
    fn tail_vanishes_for_zero_norm() {
        assert_eq!(nested_tail(1.0, 2.0, 5, 0.0), 0.0);
        // With N = 0 and a_0 = 1 the tail is e^{2τ} − 1.
        let tail = nested_tail(0.4, 1.5, 0, 1.0);
        assert!((tail - ((2.0f64 * 0.6).exp() - 1.0)).abs() < 1e-14);
    }
}
