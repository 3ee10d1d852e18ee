use crate::error::Result;
use crate::hamiltonian::Coefficient;
use crate::linalg::sparse::SparseMatrix;
use crate::linalg::{c64, ComplexMatrix, C64, ONE, ZERO};

use super::LindbladModel;

/// Right-hand side prepared for repeated evaluation.
///
/// With `H_eff = H − (i/2)Σ r_k o_k†o_k` the Lindblad form becomes
/// `Y + Y† + Σ r_k o_k ρ o_k†` where `Y = −i H_eff ρ`.
pub struct CompiledModel {
    dim: usize,
    h_eff: SparseMatrix,
    drives: Vec<(SparseMatrix, Coefficient)>,
    jumps: Vec<(SparseMatrix, f64)>,
    scratch_y: Vec<C64>,
    scratch_z: Vec<C64>,
    jump_sign: f64,
}

impl CompiledModel {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        let dim = model.dim();
        let mut h_eff = model.hamiltonian.static_part.clone();
        let mut jumps = Vec::new();
        for c in &model.collapse {
            if c.rate == 0.0 {
                continue;
            }
            let odo = c.operator.adjoint().matmul(&c.operator)?;
            h_eff -= &odo.scale(c64(0.0, c.rate / 2.0));
            jumps.push((SparseMatrix::from_dense(&c.operator), c.rate));
        }
        let drives = model
            .hamiltonian
            .drive_terms
            .iter()
            .map(|d| (SparseMatrix::from_dense(&d.matrix), d.coefficient))
            .collect();
        Ok(CompiledModel {
            dim,
            h_eff: SparseMatrix::from_dense(&h_eff),
            drives,
            jumps,
            scratch_y: vec![ZERO; dim * dim],
            scratch_z: vec![ZERO; dim * dim],
            jump_sign: 1.0,
        })
    }

    /// Fault injection for the validation harness: negates the sandwich
    /// term `r·oρo†` only, which breaks trace preservation.
    pub(crate) fn flip_jump_sign(&mut self) {
        self.jump_sign = -self.jump_sign;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes dρ/dt at time `t` (µs) into `out`.
    pub fn eval(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let minus_i = c64(0.0, -1.0);
        let y = &mut self.scratch_y;
        y.fill(ZERO);
        self.h_eff.mul_dense_acc(minus_i, rho, d, y);
        for (m, coef) in &self.drives {
            m.mul_dense_acc(minus_i * coef.eval(t), rho, d, y);
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = y[i * d + j] + y[j * d + i].conj();
            }
        }
        for (o, rate) in &self.jumps {
            let z = &mut self.scratch_z;
            z.fill(ZERO);
            o.mul_dense_acc(ONE, rho, d, z);
            o.dense_mul_adjoint_acc(c64(self.jump_sign * rate, 0.0), z, d, out);
        }
    }

    pub fn eval_matrix(&mut self, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = vec![ZERO; self.dim * self.dim];
        self.eval(t, rho.as_slice(), &mut out);
        ComplexMatrix::from_vec(self.dim, self.dim, out).expect("dimension fixed at compile time")
    }
}
