//! Finite groups of unitaries generated from gates, with the group projector
//! on the doubled space and the twirl superoperator.

use std::collections::VecDeque;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::Pauli;
use crate::numerics::{tolerance, ComplexMatrix, ONE};

/// Entrywise tolerance used to deduplicate group elements during closure.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;

/// Named gates. Qubit 0 is the most significant bit of a basis index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    I(usize),
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    /// Build from a name such as `"CNOT"` and its qubit list.
    pub fn from_name(name: &str, qubits: &[usize]) -> Result<Self> {
        let upper = name.trim().to_ascii_uppercase();
        let one = |f: fn(usize) -> Gate| -> Result<Gate> {
            match qubits {
                [q] => Ok(f(*q)),
                _ => Err(Error::InvalidInstance(format!(
                    "gate {upper} takes exactly one qubit, got {}",
                    qubits.len()
                ))),
            }
        };
        let two = |f: fn(usize, usize) -> Gate| -> Result<Gate> {
            match qubits {
                [a, b] => Ok(f(*a, *b)),
                _ => Err(Error::InvalidInstance(format!(
                    "gate {upper} takes exactly two qubits, got {}",
                    qubits.len()
                ))),
            }
        };
        match upper.as_str() {
            "I" | "ID" => one(Gate::I),
            "X" => one(Gate::X),
            "Y" => one(Gate::Y),
            "Z" => one(Gate::Z),
            "H" => one(Gate::H),
            "S" => one(Gate::S),
            "CNOT" | "CX" => two(|c, t| Gate::Cnot { control: c, target: t }),
            "SWAP" => two(Gate::Swap),
            "CZ" => two(Gate::Cz),
            _ => Err(Error::InvalidInstance(format!("unknown gate `{name}`"))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::I(_) => "I",
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::Cnot { .. } => "CNOT",
            Gate::Swap(..) => "SWAP",
            Gate::Cz(..) => "CZ",
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::I(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::H(q) | Gate::S(q) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    /// Full `2^qubits`-dimensional matrix.
    pub fn matrix(&self, qubits: usize) -> Result<ComplexMatrix> {
        let wires = self.qubits();
        for &q in &wires {
            if q >= qubits {
                return Err(Error::QubitOutOfRange { index: q, qubits });
            }
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(Error::RepeatedQubit { gate: self.name(), a: wires[0], b: wires[1] });
        }
        let dim = 1usize << qubits;
        let bit = |q: usize| 1usize << (qubits - 1 - q);
        let m = match *self {
            Gate::I(q) => embed_single(&Pauli::I.matrix(), q, qubits),
            Gate::X(q) => embed_single(&Pauli::X.matrix(), q, qubits),
            Gate::Y(q) => embed_single(&Pauli::Y.matrix(), q, qubits),
            Gate::Z(q) => embed_single(&Pauli::Z.matrix(), q, qubits),
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let h = ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])?;
                embed_single(&h, q, qubits)
            }
            Gate::S(q) => {
                let s = ComplexMatrix::from_diagonal(&[ONE, Complex64::new(0.0, 1.0)]);
                embed_single(&s, q, qubits)
            }
            Gate::Cnot { control, target } => permutation(dim, |x| {
                if x & bit(control) != 0 {
                    x ^ bit(target)
                } else {
                    x
                }
            }),
            Gate::Swap(a, b) => permutation(dim, |x| {
                let (ba, bb) = (x & bit(a) != 0, x & bit(b) != 0);
                if ba != bb {
                    x ^ bit(a) ^ bit(b)
                } else {
                    x
                }
            }),
            Gate::Cz(a, b) => {
                let diag: Vec<f64> = (0..dim)
                    .map(|x| if x & bit(a) != 0 && x & bit(b) != 0 { -1.0 } else { 1.0 })
                    .collect();
                ComplexMatrix::from_real_diagonal(&diag)
            }
        };
        Ok(m)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "{}({})", self.name(), qs.join(","))
    }
}

fn embed_single(gate: &ComplexMatrix, q: usize, qubits: usize) -> ComplexMatrix {
    (0..qubits).fold(ComplexMatrix::identity(1), |acc, k| {
        if k == q {
            acc.kron(gate)
        } else {
            acc.kron(&ComplexMatrix::identity(2))
        }
    })
}

/// Matrix sending basis state `|x⟩` to `|f(x)⟩`.
fn permutation(dim: usize, f: impl Fn(usize) -> usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for x in 0..dim {
        m.set(f(x), x, ONE);
    }
    m
}

/// A group generator: a named gate or an explicit unitary.
#[derive(Clone, Debug, PartialEq)]
pub enum GateSpec {
    Named(Gate),
    Matrix(ComplexMatrix),
}

impl GateSpec {
    /// Realize on a `dim`-dimensional space and check unitarity.
    pub fn realize(&self, dim: usize) -> Result<ComplexMatrix> {
        let m = match self {
            GateSpec::Named(g) => {
                if !dim.is_power_of_two() || dim < 2 {
                    return Err(Error::InvalidInstance(format!(
                        "named gate {g} needs a qubit register, got dimension {dim}"
                    )));
                }
                g.matrix(dim.trailing_zeros() as usize)?
            }
            GateSpec::Matrix(m) => {
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
                }
                m.clone()
            }
        };
        let deviation = m.unitarity_defect();
        if deviation > tolerance() {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(m)
    }
}

impl From<Gate> for GateSpec {
    fn from(g: Gate) -> Self {
        GateSpec::Named(g)
    }
}

/// A finite group of `dim × dim` unitaries closed under multiplication, with the
/// identity first and the remaining elements in breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct GroupRep {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    closure_tol: f64,
    phase_exact: bool,
}

impl GroupRep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn closure_tol(&self) -> f64 {
        self.closure_tol
    }

    /// False when two elements differ only by a global phase, i.e. the set is a
    /// lift of a projective representation carrying nontrivial central phases.
    pub fn phase_exact(&self) -> bool {
        self.phase_exact
    }

    /// Index of the element matching `m` within the closure tolerance.
    pub fn find(&self, m: &ComplexMatrix) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.max_abs_diff(m) < self.closure_tol)
    }

    /// Every pairwise product is again an element.
    pub fn verify_closure(&self) -> bool {
        self.elements
            .iter()
            .all(|a| self.elements.iter().all(|b| self.find(&(a * b)).is_some()))
    }

    pub fn verify_inverses(&self) -> bool {
        self.elements.iter().all(|a| self.find(&a.adjoint()).is_some())
    }

    pub fn verify_unitarity(&self) -> bool {
        self.elements.iter().all(|a| a.is_unitary(self.closure_tol))
    }

    /// The trivial group `{I}` on `dim` dimensions.
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            elements: vec![ComplexMatrix::identity(dim)],
            closure_tol: DEFAULT_CLOSURE_TOL,
            phase_exact: true,
        }
    }
}

/// Multiplicative closure of the generators and the identity.
pub fn close_generators(gens: &[GateSpec], dim: usize, max_order: usize) -> Result<GroupRep> {
    close_generators_with_tol(gens, dim, max_order, DEFAULT_CLOSURE_TOL)
}

pub fn close_generators_with_tol(
    gens: &[GateSpec],
    dim: usize,
    max_order: usize,
    closure_tol: f64,
) -> Result<GroupRep> {
    let gens = gens
        .iter()
        .map(|g| g.realize(dim))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = GroupRep {
        dim,
        elements: vec![ComplexMatrix::identity(dim)],
        closure_tol,
        phase_exact: true,
    };
    if max_order == 0 {
        return Err(Error::ClosureExceeded { max_order });
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in &gens {
            let product = g * &rep.elements[idx];
            if rep.find(&product).is_none() {
                if rep.elements.len() == max_order {
                    return Err(Error::ClosureExceeded { max_order });
                }
                rep.elements.push(product);
                queue.push_back(rep.elements.len() - 1);
            }
        }
    }
    rep.phase_exact = !rep.elements.iter().skip(1).any(|e| is_scalar(e, closure_tol));
    Ok(rep)
}

fn is_scalar(m: &ComplexMatrix, tol: f64) -> bool {
    let c = m.get(0, 0);
    if c.norm() < tol {
        return false;
    }
    m.max_abs_diff(&ComplexMatrix::identity(m.dim()).scale(c)) < tol
}

/// `(1/|G|) Σ_g conj(U(g)) ⊗ U(g)` on the doubled space `R ⊗ B`.
pub fn group_projector(rep: &GroupRep) -> ComplexMatrix {
    let d2 = rep.dim * rep.dim;
    let sum = rep
        .elements
        .iter()
        .fold(ComplexMatrix::zeros(d2), |acc, u| &acc + &u.conjugate().kron(u));
    sum.scale_real(1.0 / rep.order() as f64)
}

/// `(1/|G|) Σ_g U(g)·X·U(g)†`.
pub fn twirl(rep: &GroupRep, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.dim() != rep.dim {
        return Err(Error::DimensionMismatch { expected: rep.dim, found: x.dim() });
    }
    let sum = rep.elements.iter().fold(ComplexMatrix::zeros(rep.dim), |acc, u| {
        &acc + &(&(u * x) * &u.adjoint())
    });
    Ok(sum.scale_real(1.0 / rep.order() as f64))
}

/// Numerical rank of a (near-)projector: the rounded trace.
pub fn projector_rank(p: &ComplexMatrix) -> usize {
    p.trace().re.round().max(0.0) as usize
}

/// ℤ2 × ℤ2 generated by Z on each of two qubits.
pub fn z2_z2_example() -> Result<GroupRep> {
    close_generators(&[Gate::Z(0).into(), Gate::Z(1).into()], 4, 64)
}

/// D3 generated by CNOT(0,1) and SWAP(0,1).
pub fn d3_example() -> Result<GroupRep> {
    close_generators(
        &[Gate::Cnot { control: 0, target: 1 }.into(), Gate::Swap(0, 1).into()],
        4,
        64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_generators_give_trivial_group() {
        let rep = close_generators(&[], 4, 10).unwrap();
        assert_eq!(rep.order(), 1);
        assert_eq!(rep.elements()[0], ComplexMatrix::identity(4));
    }

    #[test]
    fn z_generators_give_klein_group() {
        let rep = z2_z2_example().unwrap();
        assert_eq!(rep.order(), 4);
        assert!(rep.phase_exact());
        assert!(rep.verify_closure());
        assert!(rep.verify_inverses());
    }

    #[test]
    fn cnot_swap_give_order_six() {
        let rep = d3_example().unwrap();
        assert_eq!(rep.order(), 6);
        assert!(rep.verify_closure());
        assert!(rep.verify_inverses());
        assert_eq!(rep.elements()[0], ComplexMatrix::identity(4));
    }

    #[test]
    fn closure_is_deterministic() {
        let a = d3_example().unwrap();
        let b = d3_example().unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn closure_limit_enforced() {
        let err = close_generators(&[Gate::H(0).into(), Gate::S(0).into()], 2, 20).unwrap_err();
        assert_eq!(err, Error::ClosureExceeded { max_order: 20 });
    }

    #[test]
    fn paulis_carry_phases() {
        let rep = close_generators(&[Gate::X(0).into(), Gate::Z(0).into()], 2, 64).unwrap();
        // {±I, ±X, ±Z, ±XZ}: −I is a nontrivial central phase.
        assert_eq!(rep.order(), 8);
        assert!(!rep.phase_exact());
        assert!(rep.verify_closure());
    }

    #[test]
    fn non_unitary_generator_rejected() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.001]]).unwrap();
        assert!(matches!(
            close_generators(&[GateSpec::Matrix(m)], 2, 8),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn gate_qubit_checks() {
        assert_eq!(
            Gate::X(2).matrix(2).unwrap_err(),
            Error::QubitOutOfRange { index: 2, qubits: 2 }
        );
        assert!(matches!(Gate::Swap(1, 1).matrix(2), Err(Error::RepeatedQubit { .. })));
        assert!(Gate::from_name("cnot", &[0]).is_err());
        assert_eq!(
            Gate::from_name("cx", &[1, 0]).unwrap(),
            Gate::Cnot { control: 1, target: 0 }
        );
    }

    #[test]
    fn cnot_acts_on_msb_control() {
        let m = Gate::Cnot { control: 0, target: 1 }.matrix(2).unwrap();
        // |10⟩ (index 2) ↔ |11⟩ (index 3)
        assert_eq!(m.get(3, 2), ONE);
        assert_eq!(m.get(2, 3), ONE);
        assert_eq!(m.get(0, 0), ONE);
        assert_eq!(m.get(1, 1), ONE);
    }

    #[test]
    fn trivial_projector_is_identity() {
        let p = group_projector(&GroupRep::trivial(3));
        assert!(p.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-15);
    }

    #[test]
    fn klein_projector_is_idempotent_hermitian() {
        let p = group_projector(&z2_z2_example().unwrap());
        assert!((&p * &p).max_abs_diff(&p) < 1e-10);
        assert!(p.is_hermitian(1e-10));
        // Each basis state carries a distinct character, so the commutant is
        // the four diagonal matrices.
        assert_eq!(projector_rank(&p), 4);
    }

    #[test]
    fn d3_projector_rank() {
        let p = group_projector(&d3_example().unwrap());
        assert!((&p * &p).max_abs_diff(&p) < 1e-10);
        assert!(p.is_hermitian(1e-10));
        // Permutation rep of S3 on 4 points = 2·trivial + standard; commutant dim 5.
        assert_eq!(projector_rank(&p), 5);
    }

    #[test]
    fn twirl_examples() {
        let rep = z2_z2_example().unwrap();
        let x_i = Gate::X(0).matrix(2).unwrap();
        assert!(twirl(&rep, &x_i).unwrap().max_abs() < 1e-15);
        let id = ComplexMatrix::identity(4);
        assert!(twirl(&rep, &id).unwrap().max_abs_diff(&id) < 1e-15);
        let trivial = GroupRep::trivial(4);
        assert!(twirl(&trivial, &x_i).unwrap().max_abs_diff(&x_i) < 1e-15);
        assert!(matches!(
            twirl(&rep, &ComplexMatrix::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
