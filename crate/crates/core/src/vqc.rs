//! The six-qubit variational classifier and its three-class readout.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{effective_state, NoiseModel};
use crate::encoding::{HybridInput, NUM_QUBITS};
use crate::error::{invalid, Error, Result};
use crate::quantum::kernels;
use crate::quantum::{
    fidelity_ensemble, measure_probabilities, rz_matrix, ry_matrix, DensityMatrix, StateVector, ZERO,
};

/// Qubits whose joint outcome selects the class.
pub const READOUT_QUBITS: [usize; 2] = [4, 5];
/// Below this total mass over the three class outcomes the readout is uniform.
const READOUT_FLOOR: f64 = 1e-9;

/// Ternary link status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Absent,
    Blocked,
    Unblocked,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Absent, Label::Blocked, Label::Unblocked];

    /// `-1`, `0`, `1`
    pub fn value(&self) -> i8 {
        match self {
            Label::Absent => -1,
            Label::Blocked => 0,
            Label::Unblocked => 1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Label::Absent),
            0 => Ok(Label::Blocked),
            1 => Ok(Label::Unblocked),
            other => Err(invalid(format!("label {other} not in {{-1, 0, 1}}"))),
        }
    }

    /// Position in the probability vector.
    pub fn class_index(&self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_class_index(i: usize) -> Result<Self> {
        Self::from_value(i as i64 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    Y,
    Z,
}

/// Entangling pattern closing each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entangler {
    /// CNOT from qubit `k` to `k + 1 mod n`, for `k = 0..n`.
    Ring,
}

/// One primitive of the compiled circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Rotation { axis: RotationAxis, qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

/// Layered ansatz: per qubit `R_y` then `R_z`, then a CNOT ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    num_layers: usize,
    rotation_axes: Vec<RotationAxis>,
    entangler: Entangler,
    ops: Vec<Op>,
}

pub fn build_ansatz(num_layers: usize) -> Result<Ansatz> {
    if num_layers < 1 {
        return Err(invalid("ansatz needs at least one layer"));
    }
    let rotation_axes = vec![RotationAxis::Y, RotationAxis::Z];
    let mut ops = Vec::new();
    let mut param = 0;
    for _ in 0..num_layers {
        for qubit in 0..NUM_QUBITS {
            for &axis in &rotation_axes {
                ops.push(Op::Rotation { axis, qubit, param });
                param += 1;
            }
        }
        for k in 0..NUM_QUBITS {
            ops.push(Op::Cnot { control: k, target: (k + 1) % NUM_QUBITS });
        }
    }
    Ok(Ansatz { num_layers, rotation_axes, entangler: Entangler::Ring, ops })
}

impl Ansatz {
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_params(&self) -> usize {
        self.num_layers * NUM_QUBITS * self.rotation_axes.len()
    }

    pub fn rotation_axes(&self) -> &[RotationAxis] {
        &self.rotation_axes
    }

    pub fn entangler(&self) -> Entangler {
        self.entangler
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    fn check_params(&self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.num_params() {
            return Err(invalid(format!(
                "ansatz expects {} parameters, got {}",
                self.num_params(),
                thetas.len()
            )));
        }
        Ok(())
    }

    /// `U(Gamma) |psi>`
    pub fn apply_to_state(&self, psi: &StateVector, thetas: &[f64]) -> Result<StateVector> {
        self.check_params(thetas)?;
        check_register(psi.num_qubits())?;
        let mut out = psi.clone();
        for op in &self.ops {
            match *op {
                Op::Rotation { axis, qubit, param } => {
                    out.apply_in_place_1q(qubit, &rotation(axis, thetas[param]))
                }
                Op::Cnot { control, target } => out.apply_in_place_cnot(control, target),
            }
        }
        Ok(out)
    }

    /// `U(Gamma) rho U(Gamma)^dagger`
    pub fn apply_to_density(&self, rho: &DensityMatrix, thetas: &[f64]) -> Result<DensityMatrix> {
        self.check_params(thetas)?;
        check_register(rho.num_qubits())?;
        let mut out = rho.clone();
        for op in &self.ops {
            apply_op(out.elements_mut(), op, thetas, false);
        }
        Ok(out)
    }

    /// Dense circuit unitary, column by column.
    pub fn unitary(&self, thetas: &[f64]) -> Result<Vec<C64>> {
        self.check_params(thetas)?;
        let dim = 1usize << NUM_QUBITS;
        let mut full = vec![ZERO; dim * dim];
        for col in 0..dim {
            let out = self.apply_to_state(&StateVector::basis(NUM_QUBITS, col)?, thetas)?;
            for (row, a) in out.amplitudes().iter().enumerate() {
                full[row * dim + col] = *a;
            }
        }
        Ok(full)
    }
}

fn check_register(n: usize) -> Result<()> {
    if n != NUM_QUBITS {
        return Err(invalid(format!("classifier expects {NUM_QUBITS} qubits, got {n}")));
    }
    Ok(())
}

fn rotation(axis: RotationAxis, theta: f64) -> [C64; 4] {
    match axis {
        RotationAxis::Y => ry_matrix(theta),
        RotationAxis::Z => rz_matrix(theta),
    }
}

fn conjugate_rotation(m: &mut [C64], axis: RotationAxis, qubit: usize, theta: f64) {
    match axis {
        RotationAxis::Y => kernels::dm_apply_1q(m, NUM_QUBITS, qubit, &ry_matrix(theta)),
        RotationAxis::Z => {
            let u = rz_matrix(theta);
            kernels::dm_apply_diag_1q(m, NUM_QUBITS, qubit, u[0], u[3]);
        }
    }
}

/// Conjugates `m` by one op, or by its inverse when `inverse` is set.
fn apply_op(m: &mut [C64], op: &Op, thetas: &[f64], inverse: bool) {
    match *op {
        Op::Rotation { axis, qubit, param } => {
            let theta = if inverse { -thetas[param] } else { thetas[param] };
            conjugate_rotation(m, axis, qubit, theta);
        }
        Op::Cnot { control, target } => kernels::dm_apply_cnot(m, NUM_QUBITS, control, target),
    }
}

/// Trainable state: damping coefficient and rotation angles.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcParams {
    pub gamma: f64,
    pub thetas: Vec<f64>,
}

impl VqcParams {
    pub fn new(gamma: f64, thetas: Vec<f64>, gamma_max: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= gamma_max) {
            return Err(Error::ConstraintViolation(format!(
                "damping coefficient {gamma} outside (0, {gamma_max}]"
            )));
        }
        if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
            return Err(invalid(format!("non-finite rotation angle {bad}")));
        }
        Ok(Self { gamma, thetas })
    }
}

const PARAMS_MAGIC: &str = "qris-params";
pub const PARAMS_VERSION: u32 = 1;

/// Line-oriented parameter file: a versioned header, the layer count,
/// `gamma`, then one `theta` per line in shortest round-trip decimal.
pub fn write_params<W: Write>(mut out: W, params: &VqcParams, ansatz: &Ansatz) -> Result<()> {
    if params.thetas.len() != ansatz.num_params() {
        return Err(invalid("parameter count does not match ansatz"));
    }
    writeln!(out, "{PARAMS_MAGIC} {PARAMS_VERSION}")?;
    writeln!(out, "layers {}", ansatz.num_layers())?;
    writeln!(out, "gamma {}", params.gamma)?;
    for t in &params.thetas {
        writeln!(out, "theta {t}")?;
    }
    Ok(())
}

/// Inverse of [`write_params`]; returns the parameters and layer count.
pub fn read_params<R: BufRead>(input: R) -> Result<(VqcParams, usize)> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(Error::Parse { line: 0, message: format!("missing {what}") }),
        }
    };
    let (ln, header) = next("header")?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(PARAMS_MAGIC) {
        return Err(Error::Parse { line: ln, message: "not a parameter file".into() });
    }
    let version: u32 = parse_field(parts.next(), ln, "version")?;
    if version != PARAMS_VERSION {
        return Err(Error::Version { found: version, expected: PARAMS_VERSION });
    }
    let (ln, line) = next("layer count")?;
    let layers: usize = parse_keyed(&line, "layers", ln)?;
    let (ln, line) = next("gamma")?;
    let gamma: f64 = parse_keyed(&line, "gamma", ln)?;
    let mut thetas = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        thetas.push(parse_keyed::<f64>(&line, "theta", i + 1)?);
    }
    let expected = layers * NUM_QUBITS * 2;
    if thetas.len() != expected {
        return Err(Error::Parse {
            line: 0,
            message: format!("{layers} layers need {expected} angles, file has {}", thetas.len()),
        });
    }
    if !(gamma > 0.0 && gamma < 1.0) || thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::Parse { line: 0, message: "parameter values out of range".into() });
    }
    Ok((VqcParams { gamma, thetas }, layers))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Parse { line, message: format!("bad {what}") })
}

fn parse_keyed<T: std::str::FromStr>(line: &str, key: &str, ln: usize) -> Result<T> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Parse { line: ln, message: format!("expected '{key}'") });
    }
    let value = parse_field(parts.next(), ln, key)?;
    if parts.next().is_some() {
        return Err(Error::Parse { line: ln, message: "trailing data".into() });
    }
    Ok(value)
}

/// Outputs of one noisy circuit evaluation.
#[derive(Debug, Clone)]
pub struct ForwardResult {
    /// Class probabilities ordered as labels `(-1, 0, 1)`.
    pub probs: [f64; 3],
    pub rho_ideal: DensityMatrix,
    pub rho_noisy: DensityMatrix,
    pub fidelity: f64,
}

/// The link channel acts on the encoded input, then the ansatz runs.
///
/// The ideal reference is the same routing with noise-free links, so with
/// `p = q = 0` the two states coincide for any `alpha` and surface unitary.
pub fn forward(
    input: &HybridInput,
    params: &VqcParams,
    noise: &NoiseModel,
    ansatz: &Ansatz,
) -> Result<ForwardResult> {
    check_register(input.state.num_qubits())?;
    ansatz.check_params(&params.thetas)?;
    let rho0 = DensityMatrix::from_pure(&input.state);
    let rho_eff = effective_state(&rho0, noise)?;
    let rho_noisy = ansatz.apply_to_density(&rho_eff, &params.thetas)?;
    let probs = class_readout(&rho_noisy);

    let direct = ansatz.apply_to_state(&input.state, &params.thetas)?;
    let reflected = ansatz.apply_to_state(&input.state.apply(&noise.u_qris)?, &params.thetas)?;
    let components = [(noise.alpha, &direct), (1.0 - noise.alpha, &reflected)];
    let fidelity = fidelity_ensemble(&components, &rho_noisy)?;
    let rho_ideal = ensemble_density(&components);
    Ok(ForwardResult { probs, rho_ideal, rho_noisy, fidelity })
}

fn ensemble_density(components: &[(f64, &StateVector)]) -> DensityMatrix {
    let first = components[0].1;
    let dim = first.dim();
    let mut elements = vec![ZERO; dim * dim];
    for (w, psi) in components {
        if *w == 0.0 {
            continue;
        }
        let a = psi.amplitudes();
        for i in 0..dim {
            for j in 0..dim {
                elements[i * dim + j] += a[i] * a[j].conj() * *w;
            }
        }
    }
    DensityMatrix::from_raw(first.num_qubits(), elements)
}

/// Noise-free reference fidelity computed before the ansatz. The ansatz is
/// unitary and fidelity is unitarily invariant, so this equals the fidelity
/// between the ideal and noisy circuit outputs.
pub(crate) fn input_fidelity(input: &StateVector, rho_eff: &DensityMatrix, noise: &NoiseModel) -> Result<f64> {
    let reflected = input.apply(&noise.u_qris)?;
    fidelity_ensemble(&[(noise.alpha, input), (1.0 - noise.alpha, &reflected)], rho_eff)
}

/// Joint distribution of the readout qubits, outcome index `2 * q4 + q5`.
pub fn readout_marginal(rho: &DensityMatrix) -> [f64; 4] {
    let p = measure_probabilities(rho, &READOUT_QUBITS).expect("readout qubits exist on a 6-qubit register");
    [p[0], p[1], p[2], p[3]]
}

/// Maps outcomes `00, 01, 10` to labels `-1, 0, 1` and renormalizes; the
/// `11` outcome is discarded.
pub fn class_readout_from_marginal(m: &[f64; 4]) -> [f64; 3] {
    let mass = m[0] + m[1] + m[2];
    if mass < READOUT_FLOOR {
        return [1.0 / 3.0; 3];
    }
    [m[0] / mass, m[1] / mass, m[2] / mass]
}

pub fn class_readout(rho: &DensityMatrix) -> [f64; 3] {
    class_readout_from_marginal(&readout_marginal(rho))
}

/// Index of the most probable class; ties go to the lower index.
pub fn predict(probs: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    best
}

/// Readout marginal plus parameter-shift derivatives of a weighted readout.
pub(crate) struct ShiftEvaluation {
    pub marginal: [f64; 4],
    pub grads: Vec<f64>,
}

/// Runs the ansatz on `rho_in`, then evaluates the shift rule for every angle
/// against the observable `sum_k w_k P_k`, where `P_k` projects the readout
/// qubits onto outcome `k` and `w = weights(marginal)`.
///
/// Each shifted circuit shares its prefix and suffix with the unshifted one,
/// so the state before each rotation is cached on the way forward and the
/// observable is carried backward through the suffix. Every derivative is
/// still `(f(theta + pi/2) - f(theta - pi/2)) / 2` for the exact expectation
/// `f` of that shifted circuit.
pub(crate) fn shift_evaluation<F>(
    rho_in: &DensityMatrix,
    thetas: &[f64],
    ansatz: &Ansatz,
    weights: F,
) -> Result<ShiftEvaluation>
where
    F: FnOnce(&[f64; 4]) -> [f64; 4],
{
    ansatz.check_params(thetas)?;
    check_register(rho_in.num_qubits())?;
    let dim = rho_in.dim();
    let mut rho = rho_in.elements().to_vec();
    let mut cache: Vec<Vec<C64>> = Vec::with_capacity(ansatz.num_params());
    for op in ansatz.ops() {
        if matches!(op, Op::Rotation { .. }) {
            cache.push(rho.clone());
        }
        apply_op(&mut rho, op, thetas, false);
    }
    let marginal = readout_marginal(&DensityMatrix::from_raw(NUM_QUBITS, rho));
    let w = weights(&marginal);

    let mut obs = vec![ZERO; dim * dim];
    for i in 0..dim {
        let outcome = ((i >> 1) & 1) << 1 | (i & 1);
        obs[i * dim + i] = C64::new(w[outcome], 0.0);
    }
    let mut grads = vec![0.0; ansatz.num_params()];
    let mut scratch = vec![ZERO; dim * dim];
    for op in ansatz.ops().iter().rev() {
        if let Op::Rotation { axis, qubit, param } = *op {
            let before = cache.pop().expect("one cached state per rotation");
            let mut value = [0.0; 2];
            for (v, shift) in value.iter_mut().zip([FRAC_PI_2, -FRAC_PI_2]) {
                scratch.copy_from_slice(&before);
                conjugate_rotation(&mut scratch, axis, qubit, thetas[param] + shift);
                *v = kernels::hermitian_trace_product(&obs, &scratch);
            }
            grads[param] = 0.5 * (value[0] - value[1]);
        }
        apply_op(&mut obs, op, thetas, true);
    }
    Ok(ShiftEvaluation { marginal, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::default_qris_unitary;
    use crate::encoding::{hybrid_encode, normalize_image, RateObservation, FEATURE_DIM};
    use crate::quantum::{apply_gate, Gate};

    fn sample_input() -> HybridInput {
        let raw: Vec<f64> = (0..FEATURE_DIM).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let x = normalize_image(&raw, FEATURE_DIM).unwrap();
        hybrid_encode(&x, &RateObservation::new(3.0, 0.0, 10.0).unwrap(), 0.8, 0.85).unwrap()
    }

    fn thetas(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.3 * (i as f64 * 1.3).cos()).collect()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build_ansatz(1).unwrap().num_params(), 12);
        assert_eq!(build_ansatz(2).unwrap().num_params(), 24);
        assert!(build_ansatz(0).is_err());
    }

    #[test]
    fn zero_angles_leave_only_the_cnot_ring() {
        let ansatz = build_ansatz(2).unwrap();
        let u = ansatz.unitary(&[0.0; 24]).unwrap();
        let dim = 64;
        let mut ring = vec![ZERO; dim * dim];
        for i in 0..dim {
            ring[i * dim + i] = C64::new(1.0, 0.0);
        }
        for _ in 0..2 {
            for k in 0..NUM_QUBITS {
                let g = Gate::cnot(k, (k + 1) % NUM_QUBITS).unwrap().lifted_matrix(NUM_QUBITS).unwrap();
                ring = kernels::matmul(&g, &ring, dim);
            }
        }
        for (a, b) in u.iter().zip(&ring) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn density_and_state_paths_agree() {
        let ansatz = build_ansatz(2).unwrap();
        let th = thetas(24);
        let input = sample_input();
        let via_state = DensityMatrix::from_pure(&ansatz.apply_to_state(&input.state, &th).unwrap());
        let via_rho = ansatz.apply_to_density(&DensityMatrix::from_pure(&input.state), &th).unwrap();
        assert!(via_state.max_abs_diff(&via_rho) < 1e-13);
    }

    #[test]
    fn readout_examples() {
        let third = 1.0 / 3.0;
        assert_eq!(class_readout_from_marginal(&[0.25; 4]), [third; 3]);
        let p = class_readout_from_marginal(&[0.5, 0.3, 0.2, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15 && (p[2] - 0.2).abs() < 1e-15);
        let p = class_readout_from_marginal(&[0.4, 0.2, 0.2, 0.2]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15 && (p[2] - 0.25).abs() < 1e-15);
        assert_eq!(class_readout_from_marginal(&[0.0, 0.0, 0.0, 1.0]), [third; 3]);
    }

    #[test]
    fn readout_outcome_ordering() {
        // basis index with q4 = 1, q5 = 0 is outcome 10 -> label 1
        let rho = DensityMatrix::basis(NUM_QUBITS, 0b000010).unwrap();
        assert_eq!(class_readout(&rho), [0.0, 0.0, 1.0]);
        let rho = DensityMatrix::basis(NUM_QUBITS, 0b000001).unwrap();
        assert_eq!(class_readout(&rho), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn readout_relabeling_permutes_classes() {
        let input = sample_input();
        let ansatz = build_ansatz(1).unwrap();
        let rho = ansatz
            .apply_to_density(&DensityMatrix::from_pure(&input.state), &thetas(12))
            .unwrap();
        let m = readout_marginal(&rho);
        // X on qubit 5 swaps outcomes 00<->01 and 10<->11
        let flipped = readout_marginal(&apply_gate(&rho, &Gate::pauli_x(5)).unwrap());
        assert!((flipped[0] - m[1]).abs() < 1e-14 && (flipped[1] - m[0]).abs() < 1e-14);
        assert!((flipped[2] - m[3]).abs() < 1e-14 && (flipped[3] - m[2]).abs() < 1e-14);
    }

    #[test]
    fn noiseless_forward_has_unit_fidelity() {
        let ansatz = build_ansatz(2).unwrap();
        let params = VqcParams::new(0.8, thetas(24), 0.85).unwrap();
        let u = default_qris_unitary(NUM_QUBITS).unwrap();
        for alpha in [1.0, 0.5, 0.0] {
            let noise = NoiseModel::new(0.0, 0.0, alpha, u.clone()).unwrap();
            let fw = forward(&sample_input(), &params, &noise, &ansatz).unwrap();
            assert!((fw.fidelity - 1.0).abs() < 1e-10, "alpha {alpha}: {}", fw.fidelity);
            assert!(fw.rho_ideal.max_abs_diff(&fw.rho_noisy) < 1e-12);
        }
    }

    #[test]
    fn forward_is_deterministic_and_valid() {
        let ansatz = build_ansatz(2).unwrap();
        let params = VqcParams::new(0.85, thetas(24), 0.85).unwrap();
        let noise = NoiseModel::new(0.05, 0.03, 0.4, default_qris_unitary(NUM_QUBITS).unwrap()).unwrap();
        let a = forward(&sample_input(), &params, &noise, &ansatz).unwrap();
        let b = forward(&sample_input(), &params, &noise, &ansatz).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(a.fidelity < 1.0 && a.fidelity > 0.0);
        assert!((a.rho_noisy.trace() - 1.0).abs() < 1e-10);
        assert!(a.rho_noisy.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn forward_rejects_wrong_shapes() {
        let ansatz = build_ansatz(2).unwrap();
        let params = VqcParams::new(0.85, thetas(12), 0.85).unwrap();
        let noise = NoiseModel::new(0.0, 0.0, 1.0, Gate::identity(0)).unwrap();
        assert!(forward(&sample_input(), &params, &noise, &ansatz).is_err());
        assert!(VqcParams::new(0.9, thetas(24), 0.85).is_err());
        assert!(VqcParams::new(0.5, vec![f64::NAN], 0.85).is_err());
    }

    #[test]
    fn input_fidelity_matches_output_fidelity() {
        let ansatz = build_ansatz(2).unwrap();
        let params = VqcParams::new(0.7, thetas(24), 0.85).unwrap();
        let noise = NoiseModel::new(0.08, 0.05, 0.3, default_qris_unitary(NUM_QUBITS).unwrap()).unwrap();
        let input = sample_input();
        let fw = forward(&input, &params, &noise, &ansatz).unwrap();
        let rho_eff = effective_state(&DensityMatrix::from_pure(&input.state), &noise).unwrap();
        let pre = input_fidelity(&input.state, &rho_eff, &noise).unwrap();
        assert!((fw.fidelity - pre).abs() < 1e-12);
    }

    #[test]
    fn params_file_round_trip_and_errors() {
        let ansatz = build_ansatz(2).unwrap();
        let params = VqcParams::new(0.8123456789012345, thetas(24), 0.85).unwrap();
        let mut buf = Vec::new();
        write_params(&mut buf, &params, &ansatz).unwrap();
        let (back, layers) = read_params(buf.as_slice()).unwrap();
        assert_eq!(layers, 2);
        assert_eq!(back, params);

        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_params(truncated.as_bytes()), Err(Error::Parse { .. })));
        let bumped = text.replacen("qris-params 1", "qris-params 9", 1);
        assert!(matches!(read_params(bumped.as_bytes()), Err(Error::Version { found: 9, .. })));
        let garbled = text.replacen("theta", "theat", 1);
        assert!(matches!(read_params(garbled.as_bytes()), Err(Error::Parse { line: 4, .. })));
    }
}
