//! Even-power expansion of the acceptance probability in nested commutator norms:
//!
//! `P(t) = Σ_n (−1)^n t^{2n}/(2n)! · (1/(d|G|)) Σ_g ‖[(H)^n, U(g)]‖₂²`.

use serde::Serialize;

use super::check_dims;
use crate::error::Result;
use crate::group::{twirl, GroupRep};
use crate::hamiltonian::Hamiltonian;
use crate::numerics::{hs_norm_sq, nested_commutators, ComplexMatrix};

pub const DEFAULT_SERIES_ORDER: usize = 12;

/// Safety factor applied to the first omitted term.
const REMAINDER_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub remainder: f64,
    pub order: usize,
}

/// `c_n = (1/(d|G|)) Σ_g ‖[(H)^n, U(g)]‖₂²` for `n = 0..=max_order`.
pub fn series_coefficients(h: &Hamiltonian, rep: &GroupRep, max_order: usize) -> Result<Vec<f64>> {
    check_dims(h, rep)?;
    let mut coeffs = vec![0.0; max_order + 1];
    for u in rep.elements() {
        for (n, c) in nested_commutators(h.matrix(), u, max_order)?.iter().enumerate() {
            coeffs[n] += hs_norm_sq(c);
        }
    }
    let norm = (h.dim() * rep.order()) as f64;
    coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(coeffs)
}

/// Partial sum through `n = order` plus `2 × |term order+1|`.
pub fn acceptance_probability_series(
    h: &Hamiltonian,
    rep: &GroupRep,
    t: f64,
    order: usize,
) -> Result<SeriesValue> {
    let coeffs = series_coefficients(h, rep, order + 1)?;
    let t2 = t * t;
    let mut weight = 1.0; // t^{2n} / (2n)!
    let mut value = 0.0;
    let mut next_term = 0.0;
    for (n, &c) in coeffs.iter().enumerate() {
        if n > 0 {
            let k = 2.0 * n as f64;
            weight *= t2 / ((k - 1.0) * k);
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * weight * c;
        if n <= order {
            value += term;
        } else {
            next_term = term;
        }
    }
    Ok(SeriesValue {
        value,
        remainder: REMAINDER_FACTOR * next_term.abs(),
        order,
    })
}

/// Coefficient `c_n` computed instead from twirled powers of H:
/// `(1/d) Σ_{k=0}^{n} C(2n,k) (2 − δ_{k,n}) (−1)^k Tr[𝒯_G(H^{2n−k}) H^k]`.
/// Equal to `series_coefficients(..)[n]`; used as a cross-check.
pub fn twirl_form_coefficient(h: &Hamiltonian, rep: &GroupRep, n: usize) -> Result<f64> {
    check_dims(h, rep)?;
    let d = h.dim();
    let mut powers = vec![ComplexMatrix::identity(d)];
    for p in 1..=2 * n {
        let next = &powers[p - 1] * h.matrix();
        powers.push(next);
    }
    let mut total = 0.0;
    for k in 0..=n {
        let binom = binomial(2 * n, k);
        let mult = if k == n { 1.0 } else { 2.0 };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let twirled = twirl(rep, &powers[2 * n - k])?;
        total += binom * mult * sign * (&twirled * &powers[k]).trace().re;
    }
    Ok(total / d as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
