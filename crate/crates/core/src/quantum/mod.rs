//! Dense state-vector and density-matrix simulation.
//!
//! Density matrices are the runtime representation: the link noise is
//! non-unitary, so every circuit evaluation works on `rho`. State vectors
//! exist for encoding and are promoted with [`DensityMatrix::from_pure`].
//! Qubit 0 is the most significant bit of a computational-basis index.

mod fidelity;
pub(crate) mod kernels;

pub use fidelity::{fidelity, fidelity_ensemble, fidelity_general, fidelity_pure};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 12;

const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(invalid(format!("length {len} is not a power of two >= 2")));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(invalid(format!("{n} qubits exceeds the {MAX_QUBITS}-qubit limit")));
    }
    Ok(n)
}

fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(invalid("empty qubit list"));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(invalid(format!("qubit {t} out of range for {num_qubits}-qubit register")));
        }
        if targets[..i].contains(&t) {
            return Err(invalid(format!("qubit {t} listed twice")));
        }
    }
    Ok(())
}

/// A normalized pure state over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    num_qubits: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm^2 {norm} is not 1")));
        }
        Ok(Self { amplitudes, num_qubits })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(invalid(format!("unsupported register size {num_qubits}")));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes, num_qubits })
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>, num_qubits: usize) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        Self { amplitudes, num_qubits }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Returns `U|psi>` with `U` lifted to the register.
    pub fn apply(&self, gate: &Gate) -> Result<StateVector> {
        check_targets(&gate.targets, self.num_qubits)?;
        let mut amps = self.amplitudes.clone();
        if gate.arity() == 1 {
            kernels::vec_apply_1q(&mut amps, self.num_qubits, gate.targets[0], &gate.as_2x2());
        } else if let Some(diag) = gate.diagonal() {
            let (offsets, all) = kernels::local_offsets(self.num_qubits, &gate.targets);
            for base in (0..amps.len()).filter(|i| i & all == 0) {
                for (s, off) in offsets.iter().enumerate() {
                    amps[base | off] *= diag[s];
                }
            }
        } else {
            kernels::apply_strided(&mut amps, self.num_qubits, &gate.targets, &gate.matrix, 0, 1, false);
        }
        Ok(Self::from_raw(amps, self.num_qubits))
    }

    pub(crate) fn apply_in_place_1q(&mut self, qubit: usize, u: &[C64; 4]) {
        kernels::vec_apply_1q(&mut self.amplitudes, self.num_qubits, qubit, u);
    }

    pub(crate) fn apply_in_place_cnot(&mut self, control: usize, target: usize) {
        kernels::vec_apply_cnot(&mut self.amplitudes, self.num_qubits, control, target);
    }
}

/// Kronecker product `a ⊗ b`; amplitude `(i * 2^{n_b} + j)` is `a_i * b_j`.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amps.push(x * y);
        }
    }
    StateVector::from_raw(amps, a.num_qubits + b.num_qubits)
}

/// A `2^n x 2^n` density operator stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: Vec<C64>,
    num_qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace. Positivity is checked by
    /// [`DensityMatrix::validate`], which needs an eigensolve.
    pub fn new(num_qubits: usize, elements: Vec<C64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(invalid(format!("unsupported register size {num_qubits}")));
        }
        let dim = 1usize << num_qubits;
        if elements.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} elements for {num_qubits} qubits, got {}",
                dim * dim,
                elements.len()
            )));
        }
        let rho = Self { elements, num_qubits };
        let herm = rho.hermiticity_error();
        if !herm.is_finite() || herm > HERMITIAN_TOL {
            return Err(invalid(format!("matrix is not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(invalid(format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(num_qubits: usize, elements: Vec<C64>) -> Self {
        debug_assert_eq!(elements.len(), 1 << (2 * num_qubits));
        Self { elements, num_qubits }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let mut elements = vec![ZERO; dim * dim];
        for (i, a) in psi.amplitudes.iter().enumerate() {
            for (j, b) in psi.amplitudes.iter().enumerate() {
                elements[i * dim + j] = a * b.conj();
            }
        }
        Self { elements, num_qubits: psi.num_qubits }
    }

    /// `I / 2^n`
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(invalid(format!("unsupported register size {num_qubits}")));
        }
        let dim = 1usize << num_qubits;
        let mut elements = vec![ZERO; dim * dim];
        for i in 0..dim {
            elements[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { elements, num_qubits })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        Ok(Self::from_pure(&StateVector::basis(num_qubits, index)?))
    }

    /// Convex combination `w * a + (1 - w) * b`.
    pub fn mix(w: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if a.num_qubits != b.num_qubits {
            return Err(invalid("mixing density matrices of different size"));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(invalid(format!("mixture weight {w} outside [0, 1]")));
        }
        let elements = a
            .elements
            .iter()
            .zip(&b.elements)
            .map(|(x, y)| x * w + y * (1.0 - w))
            .collect();
        Ok(Self { elements, num_qubits: a.num_qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    pub(crate) fn elements_mut(&mut self) -> &mut [C64] {
        &mut self.elements
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.elements[row * self.dim() + col]
    }

    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        (0..dim).map(|i| self.elements[i * dim + i].re).sum()
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        kernels::trace_product(&self.elements, &self.elements, self.dim()).re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.elements[i * dim + i].re).collect()
    }

    /// `max |rho - rho^dagger|` over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let d = (self.elements[i * dim + j] - self.elements[j * dim + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let dim = self.dim();
        DMatrix::from_row_slice(dim, dim, &self.elements)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let mut vals: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Full check: Hermitian, unit trace and positive semidefinite.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(invalid(format!("matrix is not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(invalid(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(invalid(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

/// A unitary acting on an ordered list of target qubits. The first target
/// is the most significant bit of the gate's local index.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    matrix: Vec<C64>,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(matrix: Vec<C64>, targets: Vec<usize>) -> Result<Self> {
        let k = targets.len();
        if k == 0 || k > MAX_QUBITS {
            return Err(invalid(format!("gate arity {k} unsupported")));
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(invalid(format!("gate target {t} listed twice")));
            }
        }
        let dim = 1usize << k;
        if matrix.len() != dim * dim {
            return Err(invalid(format!(
                "{k}-qubit gate needs {} entries, got {}",
                dim * dim,
                matrix.len()
            )));
        }
        let gate = Self { matrix, targets };
        let err = gate.unitarity_error();
        if !err.is_finite() || err > UNITARY_TOL {
            return Err(invalid(format!("gate is not unitary (deviation {err:e})")));
        }
        Ok(gate)
    }

    pub fn identity(target: usize) -> Self {
        Self { matrix: vec![ONE, ZERO, ZERO, ONE], targets: vec![target] }
    }

    pub fn pauli_x(target: usize) -> Self {
        Self { matrix: vec![ZERO, ONE, ONE, ZERO], targets: vec![target] }
    }

    pub fn pauli_y(target: usize) -> Self {
        let i = C64::new(0.0, 1.0);
        Self { matrix: vec![ZERO, -i, i, ZERO], targets: vec![target] }
    }

    pub fn pauli_z(target: usize) -> Self {
        Self { matrix: vec![ONE, ZERO, ZERO, -ONE], targets: vec![target] }
    }

    /// `[[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]`
    pub fn ry(theta: f64, target: usize) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid(format!("rotation angle {theta} is not finite")));
        }
        Ok(Self { matrix: ry_matrix(theta).to_vec(), targets: vec![target] })
    }

    /// `diag(e^{-i t/2}, e^{i t/2})`
    pub fn rz(theta: f64, target: usize) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid(format!("rotation angle {theta} is not finite")));
        }
        Ok(Self { matrix: rz_matrix(theta).to_vec(), targets: vec![target] })
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(
            vec![
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO, //
                ZERO, ZERO, ZERO, ONE, //
                ZERO, ZERO, ONE, ZERO,
            ],
            vec![control, target],
        )
    }

    /// Product of `R_z(phases[k])` on qubit `k`, as one register-wide gate.
    pub fn rz_product(phases: &[f64]) -> Result<Self> {
        if phases.is_empty() || phases.len() > MAX_QUBITS {
            return Err(invalid("phase list must cover 1..=12 qubits"));
        }
        if let Some(bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(invalid(format!("phase {bad} is not finite")));
        }
        let n = phases.len();
        let dim = 1usize << n;
        let mut matrix = vec![ZERO; dim * dim];
        for i in 0..dim {
            let mut phase = 0.0;
            for (k, phi) in phases.iter().enumerate() {
                let bit = (i >> (n - 1 - k)) & 1;
                phase += if bit == 1 { phi / 2.0 } else { -phi / 2.0 };
            }
            matrix[i * dim + i] = C64::from_polar(1.0, phase);
        }
        Ok(Self { matrix, targets: (0..n).collect() })
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    pub fn local_dim(&self) -> usize {
        1 << self.arity()
    }

    /// Same matrix on a different set of targets.
    pub fn on(&self, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != self.targets.len() {
            return Err(invalid("retargeting must preserve gate arity"));
        }
        Self::new(self.matrix.clone(), targets)
    }

    /// `max |U U^dagger - I|`
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.local_dim();
        let prod = kernels::matmul(&self.matrix, &kernels::adjoint(&self.matrix, dim), dim);
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[i * dim + j] - expect).norm());
            }
        }
        worst
    }

    pub(crate) fn as_2x2(&self) -> [C64; 4] {
        [self.matrix[0], self.matrix[1], self.matrix[2], self.matrix[3]]
    }

    /// Diagonal entries when the matrix is exactly diagonal.
    pub(crate) fn diagonal(&self) -> Option<Vec<C64>> {
        let dim = self.local_dim();
        for i in 0..dim {
            for j in 0..dim {
                if i != j && self.matrix[i * dim + j] != ZERO {
                    return None;
                }
            }
        }
        Some((0..dim).map(|i| self.matrix[i * dim + i]).collect())
    }

    /// The gate padded with identities to a full `2^n x 2^n` matrix.
    pub fn lifted_matrix(&self, num_qubits: usize) -> Result<Vec<C64>> {
        check_targets(&self.targets, num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut full = vec![ZERO; dim * dim];
        for i in 0..dim {
            full[i * dim + i] = ONE;
        }
        for col in 0..dim {
            kernels::apply_strided(&mut full, num_qubits, &self.targets, &self.matrix, col, dim, false);
        }
        Ok(full)
    }
}

pub(crate) fn ry_matrix(theta: f64) -> [C64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
}

pub(crate) fn rz_matrix(theta: f64) -> [C64; 4] {
    [C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0)]
}

/// Single-qubit `R_y(theta)` targeting qubit 0.
pub fn ry_gate(theta: f64) -> Result<Gate> {
    Gate::ry(theta, 0)
}

/// `U rho U^dagger` with the gate lifted to the full register.
pub fn apply_gate(state: &DensityMatrix, gate: &Gate) -> Result<DensityMatrix> {
    check_targets(&gate.targets, state.num_qubits)?;
    let n = state.num_qubits;
    let dim = state.dim();
    let mut out = state.elements.clone();
    if gate.arity() == 1 {
        kernels::dm_apply_1q(&mut out, n, gate.targets[0], &gate.as_2x2());
    } else if let Some(diag) = gate.diagonal() {
        let (offsets, all) = kernels::local_offsets(n, &gate.targets);
        let mut phase = vec![ZERO; dim];
        for base in (0..dim).filter(|i| i & all == 0) {
            for (s, off) in offsets.iter().enumerate() {
                phase[base | off] = diag[s];
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] *= phase[i] * phase[j].conj();
            }
        }
    } else {
        for col in 0..dim {
            kernels::apply_strided(&mut out, n, &gate.targets, &gate.matrix, col, dim, false);
        }
        for row in 0..dim {
            kernels::apply_strided(&mut out, n, &gate.targets, &gate.matrix, row * dim, 1, true);
        }
    }
    Ok(DensityMatrix::from_raw(n, out))
}

/// Marginal computational-basis distribution over `qubits`; the first
/// listed qubit is the most significant bit of the outcome index.
pub fn measure_probabilities(state: &DensityMatrix, qubits: &[usize]) -> Result<Vec<f64>> {
    check_targets(qubits, state.num_qubits)?;
    let n = state.num_qubits;
    let k = qubits.len();
    let mut probs = vec![0.0; 1 << k];
    for (i, p) in state.diagonal().into_iter().enumerate() {
        let outcome = qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1));
        probs[outcome] += p;
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_product_basis_states() {
        let zero = StateVector::basis(1, 0).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let zz = tensor_product(&zero, &zero);
        assert_eq!(zz.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let oz = tensor_product(&one, &zero);
        assert_eq!(oz.amplitudes(), &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert_eq!(oz.num_qubits(), 2);
    }

    #[test]
    fn tensor_product_plus_with_one() {
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let out = tensor_product(&plus, &one);
        let expect = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, e) in out.amplitudes().iter().zip(expect) {
            assert!((a - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn state_vector_rejects_bad_input() {
        assert!(StateVector::from_real(&[1.0, 1.0]).is_err());
        assert!(StateVector::from_real(&[1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::basis(2, 4).is_err());
    }

    #[test]
    fn pauli_x_flips_zero() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let out = apply_gate(&rho, &Gate::pauli_x(0)).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(1, 1).unwrap()) < 1e-15);
    }

    #[test]
    fn pauli_z_fixes_zero() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let out = apply_gate(&rho, &Gate::pauli_z(0)).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn ry_half_pi_gives_uniform_matrix() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let out = apply_gate(&rho, &ry_gate(PI / 2.0).unwrap()).unwrap();
        for e in out.elements() {
            assert!((e - c(0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn ry_gate_values() {
        let id = ry_gate(0.0).unwrap();
        assert_eq!(id.matrix(), &[c(1.0), c(0.0), c(0.0), c(1.0)]);
        let zero = StateVector::basis(1, 0).unwrap();
        let flipped = zero.apply(&ry_gate(PI).unwrap()).unwrap();
        assert!((flipped.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
        assert!(flipped.amplitudes()[0].norm() < 1e-12);
        let half = zero.apply(&ry_gate(PI / 2.0).unwrap()).unwrap();
        for a in half.amplitudes() {
            assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-12);
        }
        assert!(ry_gate(f64::NAN).is_err());
        assert!(ry_gate(f64::INFINITY).is_err());
    }

    #[test]
    fn apply_gate_rejects_bad_targets() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(apply_gate(&rho, &Gate::pauli_x(2)).is_err());
        assert!(Gate::cnot(1, 1).is_err());
    }

    #[test]
    fn non_unitary_gate_rejected() {
        assert!(Gate::new(vec![c(1.0), c(1.0), c(0.0), c(1.0)], vec![0]).is_err());
    }

    #[test]
    fn cnot_matches_dense_lift() {
        // |+>|0> -> Bell state
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let psi = tensor_product(&plus, &StateVector::basis(1, 0).unwrap());
        let bell = psi.apply(&Gate::cnot(0, 1).unwrap()).unwrap();
        let expect = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (a, e) in bell.amplitudes().iter().zip(expect) {
            assert!((a - c(e)).norm() < 1e-15);
        }
        let rho = apply_gate(&DensityMatrix::from_pure(&psi), &Gate::cnot(0, 1).unwrap()).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::from_pure(&bell)) < 1e-15);
    }

    #[test]
    fn measure_probabilities_examples() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        assert_eq!(measure_probabilities(&zero, &[0]).unwrap(), vec![1.0, 0.0]);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert_eq!(measure_probabilities(&mixed, &[0]).unwrap(), vec![0.5, 0.5]);
        let bell = StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        let p = measure_probabilities(&DensityMatrix::from_pure(&bell), &[0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(measure_probabilities(&zero, &[]).is_err());
        assert!(measure_probabilities(&zero, &[1]).is_err());
    }

    #[test]
    fn measurement_order_follows_qubit_list() {
        // |01>: qubit 0 = 0, qubit 1 = 1
        let rho = DensityMatrix::basis(2, 1).unwrap();
        assert_eq!(measure_probabilities(&rho, &[0, 1]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(measure_probabilities(&rho, &[1, 0]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(1, vec![c(0.5), c(0.0), c(0.0), c(0.4)]).is_err());
        assert!(DensityMatrix::new(1, vec![c(0.5), c(0.1), c(0.2), c(0.5)]).is_err());
        let neg = DensityMatrix::new(1, vec![c(1.5), c(0.0), c(0.0), c(-0.5)]).unwrap();
        assert!(neg.validate().is_err());
    }

    #[test]
    fn rz_product_is_diagonal_phase() {
        let g = Gate::rz_product(&[PI / 4.0, PI / 4.0]).unwrap();
        let psi = StateVector::basis(2, 3).unwrap().apply(&g).unwrap();
        assert!((psi.amplitudes()[3] - C64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        let lifted = Gate::rz(PI / 4.0, 0).unwrap().lifted_matrix(2).unwrap();
        let lifted1 = Gate::rz(PI / 4.0, 1).unwrap().lifted_matrix(2).unwrap();
        let dense = kernels::matmul(&lifted, &lifted1, 4);
        for (a, b) in dense.iter().zip(g.matrix()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
