//! Operators and states on the truncated magnon Fock space, the qubit, and
//! their tensor product.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * composite space is `magnon ⊗ qubit`, magnon index slowest, so basis
//!   state `|n, s⟩` sits at index `2n + s`;
//! * qubit basis order is `(|g⟩, |e⟩)`, so `σ_z = diag(−1, +1)`,
//!   `σ₊ = |e⟩⟨g|` and `σ₋ = |g⟩⟨e|`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, C64, I, ONE};

/// Index of `|g⟩` in the qubit basis.
pub const GROUND: usize = 0;
/// Index of `|e⟩` in the qubit basis.
pub const EXCITED: usize = 1;

/// Extra Fock levels used when building displacement operators for Wigner
/// evaluation; the result is projected back onto the working truncation.
pub const DISPLACEMENT_PAD: usize = 20;

/// Largest tail weight a truncated thermal state may discard.
pub const THERMAL_TAIL_TOL: f64 = 1e-10;

/// Shape of the simulated Hilbert space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    fock_dim: usize,
    qubit_present: bool,
}

impl HilbertSpec {
    pub fn new(fock_dim: usize, qubit_present: bool) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "magnon truncation must be at least 2, got {fock_dim}"
            )));
        }
        Ok(HilbertSpec {
            fock_dim,
            qubit_present,
        })
    }

    pub fn magnon_qubit(fock_dim: usize) -> Result<Self> {
        Self::new(fock_dim, true)
    }

    pub fn magnon_only(fock_dim: usize) -> Result<Self> {
        Self::new(fock_dim, false)
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn qubit_present(&self) -> bool {
        self.qubit_present
    }

    pub fn dim(&self) -> usize {
        if self.qubit_present {
            2 * self.fock_dim
        } else {
            self.fock_dim
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Magnon,
    Qubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Pauli::X),
            "y" => Ok(Pauli::Y),
            "z" => Ok(Pauli::Z),
            "plus" | "+" => Ok(Pauli::Plus),
            "minus" | "-" => Ok(Pauli::Minus),
            other => Err(Error::InvalidArgument(format!(
                "unknown Pauli label `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
            Pauli::Plus => "plus",
            Pauli::Minus => "minus",
        };
        f.write_str(s)
    }
}

fn require_fock(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Fock truncation must be at least 2, got {n}"
        )));
    }
    Ok(())
}

/// Truncated annihilation operator: `⟨n−1|m|n⟩ = √n`.
pub fn annihilation(n: usize) -> Result<ComplexMatrix> {
    require_fock(n)?;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = c64((k as f64).sqrt(), 0.0);
    }
    Ok(m)
}

pub fn creation(n: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(n)?.adjoint())
}

/// `m†m = diag(0, 1, …, n−1)`.
pub fn number(n: usize) -> Result<ComplexMatrix> {
    require_fock(n)?;
    let diag: Vec<f64> = (0..n).map(|k| k as f64).collect();
    Ok(ComplexMatrix::from_real_diag(&diag))
}

/// Pauli matrices in the `(|g⟩, |e⟩)` basis.
pub fn pauli(label: Pauli) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(2, 2);
    match label {
        Pauli::Z => {
            s[(GROUND, GROUND)] = -ONE;
            s[(EXCITED, EXCITED)] = ONE;
        }
        Pauli::Plus => s[(EXCITED, GROUND)] = ONE,
        Pauli::Minus => s[(GROUND, EXCITED)] = ONE,
        Pauli::X => {
            s[(EXCITED, GROUND)] = ONE;
            s[(GROUND, EXCITED)] = ONE;
        }
        // σ_y = −i(σ₊ − σ₋)
        Pauli::Y => {
            s[(EXCITED, GROUND)] = -I;
            s[(GROUND, EXCITED)] = I;
        }
    }
    s
}

/// Lifts a single-factor operator into the full space, identity elsewhere.
pub fn embed(op: &ComplexMatrix, slot: Slot, spec: &HilbertSpec) -> Result<ComplexMatrix> {
    let expected = match slot {
        Slot::Magnon => spec.fock_dim,
        Slot::Qubit => 2,
    };
    if op.shape() != (expected, expected) {
        return Err(Error::DimensionMismatch {
            op: "embed",
            left: op.shape(),
            right: (expected, expected),
        });
    }
    match (slot, spec.qubit_present) {
        (Slot::Magnon, false) => Ok(op.clone()),
        (Slot::Magnon, true) => Ok(op.kron(&ComplexMatrix::identity(2))),
        (Slot::Qubit, true) => Ok(ComplexMatrix::identity(spec.fock_dim).kron(op)),
        (Slot::Qubit, false) => Err(Error::InvalidArgument(
            "cannot embed a qubit operator in a magnon-only space".into(),
        )),
    }
}

/// `D(α) = exp(α m† − α* m)` in an `n`-level truncation.
pub fn displacement(alpha: C64, n: usize) -> Result<ComplexMatrix> {
    let a = annihilation(n)?;
    let generator = &a.adjoint().scale(alpha) - &a.scale(alpha.conj());
    generator.expm()
}

/// Displacement built in `n + pad` levels and cut back to the leading
/// `n × n` block, which keeps it close to unitary on the working space.
pub fn displacement_padded(alpha: C64, n: usize, pad: usize) -> Result<ComplexMatrix> {
    Ok(displacement(alpha, n + pad)?.block(0, 0, n, n))
}

/// Photon-number parity `e^{iπ m†m} = diag((−1)^n)`.
pub fn parity(n: usize) -> Result<ComplexMatrix> {
    require_fock(n)?;
    let diag: Vec<f64> = (0..n)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    Ok(ComplexMatrix::from_real_diag(&diag))
}

/// Bose-Einstein thermal state, renormalized over `n` levels.
///
/// Fails when the discarded tail `(n̄/(n̄+1))^n` exceeds [`THERMAL_TAIL_TOL`].
pub fn thermal_state(nbar: f64, n: usize) -> Result<ComplexMatrix> {
    require_fock(n)?;
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "thermal occupation must be finite and non-negative, got {nbar}"
        )));
    }
    let ratio = nbar / (nbar + 1.0);
    let tail = ratio.powi(n as i32);
    if tail > THERMAL_TAIL_TOL {
        return Err(Error::Truncation(format!(
            "thermal state with n̄ = {nbar} discards weight {tail:.2e} beyond {n} levels"
        )));
    }
    let weights: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let z: f64 = weights.iter().sum();
    let diag: Vec<f64> = weights.iter().map(|w| w / z).collect();
    Ok(ComplexMatrix::from_real_diag(&diag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Fock(usize),
    QubitGround,
    QubitExcited,
}

/// Rank-one projector onto a basis vector of one factor.
///
/// Fock states live on the `spec.fock_dim()` magnon space, qubit states on
/// the two-level space.
pub fn basis_state(kind: BasisKind, spec: &HilbertSpec) -> Result<ComplexMatrix> {
    let (dim, idx) = match kind {
        BasisKind::Fock(n) => {
            if n >= spec.fock_dim {
                return Err(Error::InvalidArgument(format!(
                    "Fock state |{n}⟩ outside a {}-level truncation",
                    spec.fock_dim
                )));
            }
            (spec.fock_dim, n)
        }
        BasisKind::QubitGround => (2, GROUND),
        BasisKind::QubitExcited => (2, EXCITED),
    };
    let mut rho = ComplexMatrix::zeros(dim, dim);
    rho[(idx, idx)] = ONE;
    Ok(rho)
}

/// `ρ_m ⊗ ρ_q` when the spec has a qubit, `ρ_m` otherwise.
pub fn product_state(
    magnon: &ComplexMatrix,
    qubit: Option<&ComplexMatrix>,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix> {
    let n = spec.fock_dim;
    if magnon.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            op: "product_state",
            left: magnon.shape(),
            right: (n, n),
        });
    }
    match (spec.qubit_present, qubit) {
        (true, Some(q)) => {
            if q.shape() != (2, 2) {
                return Err(Error::DimensionMismatch {
                    op: "product_state",
                    left: q.shape(),
                    right: (2, 2),
                });
            }
            Ok(magnon.kron(q))
        }
        (false, None) => Ok(magnon.clone()),
        (true, None) => Err(Error::InvalidArgument("missing qubit state".into())),
        (false, Some(_)) => Err(Error::InvalidArgument(
            "qubit state given for a magnon-only space".into(),
        )),
    }
}
