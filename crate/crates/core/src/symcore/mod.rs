//! Closed-form acceptance probabilities of the symmetry tests.
//!
//! Two routes compute the same number for the maximally mixed / Choi test:
//! the normalized trace `(1/(d|G|)) Σ_g Tr[U†(g) e^{iHt} U(g) e^{-iHt}]` and
//! the projector expectation `Tr[Π^G Φ^t_RB]` on the doubled space. The
//! nested-commutator series in [`series`] is a third. [`bounds`] covers the
//! fixed-input (variational) test.

pub mod bounds;
pub mod series;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{group_projector, GroupRep};
use crate::hamiltonian::Hamiltonian;
use crate::numerics::{hs_norm_sq, ComplexMatrix};

pub use bounds::{
    fixed_state_acceptance, fixed_state_second_order, kadison_schwarz_deficit,
    optimal_acceptance_exact, twirled_evolution, variational_lower_bounds, BoundSet, NestedBound,
    OptimalAcceptance, SmallTimeBound,
};
pub use series::{
    acceptance_probability_series, series_coefficients, twirl_form_coefficient, SeriesValue,
    DEFAULT_SERIES_ORDER,
};

/// Probabilities may leave [0, 1] by at most this much before clipping.
pub const RANGE_TOL: f64 = 1e-9;
/// Imaginary residue of the trace formula above which the result is rejected.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;
/// `C` below this counts as an exact symmetry.
pub const SYMMETRIC_THRESHOLD: f64 = 1e-10;
/// Tolerance on `|P − 1|` for "accepted with certainty".
pub const CERTAINTY_TOL: f64 = 1e-9;

/// A probability reported both raw and clipped to [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probability {
    raw: f64,
}

impl Probability {
    /// Fails if `raw` lies outside `[−1e-9, 1 + 1e-9]`.
    pub fn new(raw: f64) -> Result<Self> {
        if !raw.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&raw) {
            return Err(Error::ProbabilityOutOfRange(raw));
        }
        Ok(Self { raw })
    }

    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn clipped(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Probability", 2)?;
        s.serialize_field("raw", &self.raw)?;
        s.serialize_field("clipped", &self.clipped())?;
        s.end()
    }
}

fn check_dims(h: &Hamiltonian, rep: &GroupRep) -> Result<()> {
    if h.dim() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), found: h.dim() });
    }
    Ok(())
}

/// The complex value of `(1/(d|G|)) Σ_g Tr[U†(g) e^{iHt} U(g) e^{-iHt}]`.
pub fn trace_formula(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<Complex64> {
    check_dims(h, rep)?;
    let forward = h.evolution(t)?;
    let backward = forward.adjoint();
    let sum: Complex64 = rep
        .elements()
        .iter()
        .map(|u| (&(&(&u.adjoint() * &backward) * u) * &forward).trace())
        .sum();
    Ok(sum / (h.dim() * rep.order()) as f64)
}

/// Acceptance probability of the maximally-mixed-input test via the trace formula.
pub fn acceptance_probability_trace(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<Probability> {
    let z = trace_formula(h, rep, t)?;
    if z.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NonRealProbability { residue: z.im.abs() });
    }
    Probability::new(z.re)
}

/// Choi state `(𝕀 ⊗ e^{-iHt}) Φ_RA (𝕀 ⊗ e^{iHt})` with `Φ_RA` the unit-trace
/// maximally entangled state; `R` is the more significant factor.
pub fn choi_state(h: &Hamiltonian, t: f64) -> Result<ComplexMatrix> {
    let v = choi_vector(h, t)?;
    let n = v.len();
    Ok(ComplexMatrix::from_fn(n, |i, j| v[i] * v[j].conj()))
}

/// `(1/√d) Σ_i |i⟩_R ⊗ e^{-iHt}|i⟩_B`.
pub fn choi_vector(h: &Hamiltonian, t: f64) -> Result<Vec<Complex64>> {
    let d = h.dim();
    let e = h.evolution(t)?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = e.get(j, i) * norm;
        }
    }
    Ok(v)
}

/// Acceptance probability of the Choi-state test, `Tr[Π^G Φ^t_RB]`.
pub fn acceptance_probability_choi(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<Probability> {
    check_dims(h, rep)?;
    let phi = choi_state(h, t)?;
    let projector = group_projector(rep);
    let z = (&projector * &phi).trace();
    if z.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NonRealProbability { residue: z.im.abs() });
    }
    Probability::new(z.re)
}

/// `‖[U(g), H]‖₂²` for every group element, in element order.
pub fn commutator_norms(h: &Hamiltonian, rep: &GroupRep) -> Result<Vec<f64>> {
    check_dims(h, rep)?;
    Ok(rep
        .elements()
        .iter()
        .map(|u| hs_norm_sq(&u.commutator(h.matrix())))
        .collect())
}

/// Normalized commutator norm `C = (1/(d|G|)) Σ_g ‖[U(g), H]‖₂²`.
pub fn normalized_commutator_norm(h: &Hamiltonian, rep: &GroupRep) -> Result<f64> {
    let norms = commutator_norms(h, rep)?;
    Ok(norms.iter().sum::<f64>() / (h.dim() * rep.order()) as f64)
}

/// Second-order approximation `1 − t²C/2`, returned with `C`.
pub fn second_order_acceptance(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<(f64, f64)> {
    let c = normalized_commutator_norm(h, rep)?;
    Ok((1.0 - 0.5 * t * t * c, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Symmetric,
    Asymmetric,
    /// Nonzero commutators, but the sampled time accepts with certainty
    /// (t = 0 or an exact revival), so this single point cannot tell.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Symmetric => "symmetric",
            Verdict::Asymmetric => "asymmetric",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Verdict from the commutator norm and the acceptance probability at one time.
pub fn verdict(commutator_norm: f64, acceptance: f64) -> Verdict {
    if commutator_norm < SYMMETRIC_THRESHOLD {
        Verdict::Symmetric
    } else if (1.0 - acceptance).abs() < CERTAINTY_TOL {
        Verdict::Inconclusive
    } else {
        Verdict::Asymmetric
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ElementNorm {
    pub element: usize,
    pub norm_sq: f64,
}

/// Which routes to evaluate for a [`SymmetryReport`].
#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    pub trace: bool,
    pub choi: bool,
    pub series_order: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { trace: true, choi: true, series_order: Some(DEFAULT_SERIES_ORDER) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub t: f64,
    pub tau: f64,
    pub p_trace: Option<Probability>,
    pub p_choi: Option<Probability>,
    pub p_series: Option<SeriesValue>,
    pub commutator_norm_c: f64,
    pub per_element_norms: Vec<ElementNorm>,
    pub verdict: Verdict,
}

impl SymmetryReport {
    pub fn evaluate(h: &Hamiltonian, rep: &GroupRep, t: f64, opts: &ReportOptions) -> Result<Self> {
        check_dims(h, rep)?;
        let norms = commutator_norms(h, rep)?;
        let c = norms.iter().sum::<f64>() / (h.dim() * rep.order()) as f64;
        let p_trace = opts
            .trace
            .then(|| acceptance_probability_trace(h, rep, t))
            .transpose()?;
        let p_choi = opts
            .choi
            .then(|| acceptance_probability_choi(h, rep, t))
            .transpose()?;
        let p_series = opts
            .series_order
            .map(|n| acceptance_probability_series(h, rep, t, n))
            .transpose()?;
        let reference = match (p_trace, p_choi) {
            (Some(p), _) | (None, Some(p)) => p.raw(),
            (None, None) => acceptance_probability_trace(h, rep, t)?.raw(),
        };
        Ok(Self {
            t,
            tau: h.spectral_norm()? * t.abs(),
            p_trace,
            p_choi,
            p_series,
            commutator_norm_c: c,
            per_element_norms: norms
                .into_iter()
                .enumerate()
                .map(|(element, norm_sq)| ElementNorm { element, norm_sq })
                .collect(),
            verdict: verdict(c, reference),
        })
    }
}

/// Both sides of `Tr[Π Φ] = 1 ⇔ Φ = Π Φ Π`, evaluated independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GentleCheck {
    pub p_is_one: bool,
    pub choi_fixed_by_projection: bool,
    pub acceptance: f64,
    /// `‖Φ − ΠΦΠ‖₂² / 2`, which equals `1 − P` to first order near `P = 1`.
    pub projection_defect: f64,
}

impl GentleCheck {
    pub fn agree(&self) -> bool {
        self.p_is_one == self.choi_fixed_by_projection
    }
}

pub fn gentle_measurement_check(h: &Hamiltonian, rep: &GroupRep, t: f64) -> Result<GentleCheck> {
    check_dims(h, rep)?;
    let phi = choi_state(h, t)?;
    let projector = group_projector(rep);
    let acceptance = (&projector * &phi).trace().re;
    let projected = &(&projector * &phi) * &projector;
    let projection_defect = 0.5 * hs_norm_sq(&(&phi - &projected));
    Ok(GentleCheck {
        p_is_one: (1.0 - acceptance).abs() < CERTAINTY_TOL,
        choi_fixed_by_projection: projection_defect < CERTAINTY_TOL,
        acceptance,
        projection_defect,
    })
}
