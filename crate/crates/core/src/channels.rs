//! Kraus-operator channels for the direct and surface-reflected links.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::quantum::kernels;
use crate::quantum::{apply_gate, DensityMatrix, Gate, ONE, ZERO};

const COMPLETENESS_TOL: f64 = 1e-10;

/// A completely positive trace-preserving map `rho -> sum_m K_m rho K_m^dagger`.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus_ops: Vec<Vec<C64>>,
    arity: usize,
    label: String,
}

impl QuantumChannel {
    pub fn new(kraus_ops: Vec<Vec<C64>>, arity: usize, label: impl Into<String>) -> Result<Self> {
        if arity == 0 || arity > crate::quantum::MAX_QUBITS {
            return Err(invalid(format!("channel arity {arity} unsupported")));
        }
        if kraus_ops.is_empty() {
            return Err(invalid("channel needs at least one Kraus operator"));
        }
        let dim = 1usize << arity;
        if let Some(bad) = kraus_ops.iter().find(|k| k.len() != dim * dim) {
            return Err(invalid(format!(
                "Kraus operator has {} entries, expected {}",
                bad.len(),
                dim * dim
            )));
        }
        let channel = Self { kraus_ops, arity, label: label.into() };
        let err = channel.completeness_error();
        if !err.is_finite() || err > COMPLETENESS_TOL {
            return Err(invalid(format!("Kraus set is not trace preserving (deviation {err:e})")));
        }
        Ok(channel)
    }

    pub fn identity(arity: usize) -> Result<Self> {
        let dim = 1usize << arity;
        let mut id = vec![ZERO; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = ONE;
        }
        Self::new(vec![id], arity, "identity")
    }

    pub fn kraus_ops(&self) -> &[Vec<C64>] {
        &self.kraus_ops
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `max |sum_m K_m^dagger K_m - I|`
    pub fn completeness_error(&self) -> f64 {
        let dim = 1usize << self.arity;
        let mut sum = vec![ZERO; dim * dim];
        for k in &self.kraus_ops {
            let kdk = kernels::matmul(&kernels::adjoint(k, dim), k, dim);
            for (s, x) in sum.iter_mut().zip(kdk) {
                *s += x;
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((sum[i * dim + j] - expect).norm());
            }
        }
        worst
    }

    /// Dense Kraus sum on a register of exactly `arity` qubits.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.num_qubits() != self.arity {
            return Err(invalid(format!(
                "{}-qubit channel applied to {}-qubit state",
                self.arity,
                rho.num_qubits()
            )));
        }
        let dim = rho.dim();
        let mut out = vec![ZERO; dim * dim];
        for k in &self.kraus_ops {
            let left = kernels::matmul(k, rho.elements(), dim);
            let term = kernels::matmul(&left, &kernels::adjoint(k, dim), dim);
            for (o, t) in out.iter_mut().zip(term) {
                *o += t;
            }
        }
        Ok(DensityMatrix::from_raw(rho.num_qubits(), out))
    }

    /// Applies a single-qubit channel to qubit `target` of a larger register
    /// without materializing the padded Kraus operators.
    pub fn apply_to_qubit(&self, rho: &DensityMatrix, target: usize) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        self.apply_to_qubit_in_place(&mut out, target)?;
        Ok(out)
    }

    pub(crate) fn apply_to_qubit_in_place(&self, rho: &mut DensityMatrix, target: usize) -> Result<()> {
        if self.arity != 1 {
            return Err(invalid("local application needs a single-qubit channel"));
        }
        if target >= rho.num_qubits() {
            return Err(invalid(format!("target qubit {target} out of range")));
        }
        let n = rho.num_qubits();
        let s = kernels::superoperator_1q(&self.kraus_ops);
        kernels::dm_apply_superop_1q(rho.elements_mut(), n, target, &s);
        Ok(())
    }

    /// The same single-qubit channel on every qubit independently.
    pub fn apply_to_each_qubit(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        for q in 0..rho.num_qubits() {
            self.apply_to_qubit_in_place(&mut out, q)?;
        }
        Ok(out)
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

fn scaled(gate: &Gate, s: f64) -> Vec<C64> {
    gate.matrix().iter().map(|x| x * s).collect()
}

/// `(1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)`
pub fn depolarizing_channel(p: f64) -> Result<QuantumChannel> {
    check_probability("depolarizing probability", p)?;
    let w = (p / 3.0).sqrt();
    QuantumChannel::new(
        vec![
            scaled(&Gate::identity(0), (1.0 - p).sqrt()),
            scaled(&Gate::pauli_x(0), w),
            scaled(&Gate::pauli_y(0), w),
            scaled(&Gate::pauli_z(0), w),
        ],
        1,
        format!("depolarizing(p={p})"),
    )
}

/// `(1-q) rho + q Z rho Z`
pub fn dephasing_channel(q: f64) -> Result<QuantumChannel> {
    check_probability("dephasing probability", q)?;
    QuantumChannel::new(
        vec![scaled(&Gate::identity(0), (1.0 - q).sqrt()), scaled(&Gate::pauli_z(0), q.sqrt())],
        1,
        format!("dephasing(q={q})"),
    )
}

/// `outer ∘ inner`: Kraus set `{K_outer_i K_inner_j}`.
pub fn compose(outer: &QuantumChannel, inner: &QuantumChannel) -> Result<QuantumChannel> {
    if outer.arity != inner.arity {
        return Err(invalid(format!(
            "cannot compose {}-qubit and {}-qubit channels",
            outer.arity, inner.arity
        )));
    }
    let dim = 1usize << outer.arity;
    let mut ops = Vec::with_capacity(outer.kraus_ops.len() * inner.kraus_ops.len());
    for a in &outer.kraus_ops {
        for b in &inner.kraus_ops {
            ops.push(kernels::matmul(a, b, dim));
        }
    }
    QuantumChannel::new(ops, outer.arity, format!("{} ∘ {}", outer.label, inner.label))
}

/// Pads every Kraus operator of a single-qubit channel to act on qubit
/// `target` of an `n`-qubit register.
pub fn lift_to_register(channel: &QuantumChannel, target: usize, n: usize) -> Result<QuantumChannel> {
    if channel.arity != 1 {
        return Err(invalid("only single-qubit channels can be lifted"));
    }
    if target >= n {
        return Err(invalid(format!("target qubit {target} out of range for {n} qubits")));
    }
    let ops = channel
        .kraus_ops
        .iter()
        .map(|k| lift_operator(k, target, n))
        .collect();
    QuantumChannel::new(ops, n, format!("{}@q{target}", channel.label))
}

fn lift_operator(k: &[C64], target: usize, n: usize) -> Vec<C64> {
    let dim = 1usize << n;
    let mut full = vec![ZERO; dim * dim];
    for i in 0..dim {
        full[i * dim + i] = ONE;
    }
    for col in 0..dim {
        kernels::apply_strided(&mut full, n, &[target], k, col, dim, false);
    }
    full
}

/// Depolarizing and dephasing strengths of one propagation link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkNoise {
    pub p: f64,
    pub q: f64,
}

impl LinkNoise {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(Self { p, q })
    }

    pub fn noiseless() -> Self {
        Self { p: 0.0, q: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0 && self.q == 0.0
    }

    /// `E_phase(q) ∘ E_dep(p)`
    pub fn channel(&self) -> Result<QuantumChannel> {
        compose(&dephasing_channel(self.q)?, &depolarizing_channel(self.p)?)
    }
}

/// Noise on the direct link, noise on the reflected link, the direct-path
/// weight `alpha` and the surface unitary.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub direct: LinkNoise,
    pub reflected: LinkNoise,
    pub alpha: f64,
    pub u_qris: Gate,
}

impl NoiseModel {
    /// Both links share `(p, q)`.
    pub fn new(p: f64, q: f64, alpha: f64, u_qris: Gate) -> Result<Self> {
        let link = LinkNoise::new(p, q)?;
        Self::with_links(link, link, alpha, u_qris)
    }

    pub fn with_links(direct: LinkNoise, reflected: LinkNoise, alpha: f64, u_qris: Gate) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("direct p", direct.p)?;
        check_probability("direct q", direct.q)?;
        check_probability("reflected p", reflected.p)?;
        check_probability("reflected q", reflected.q)?;
        Ok(Self { direct, reflected, alpha, u_qris })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        Ok(Self { alpha, ..self.clone() })
    }

    /// Same routing with both links noise-free.
    pub fn noiseless(&self) -> Self {
        Self {
            direct: LinkNoise::noiseless(),
            reflected: LinkNoise::noiseless(),
            ..self.clone()
        }
    }
}

/// Product of `R_z(pi/4)` on every qubit of the register.
pub fn default_qris_unitary(num_qubits: usize) -> Result<Gate> {
    Gate::rz_product(&vec![FRAC_PI_4; num_qubits])
}

/// `alpha E_BQ(rho0) + (1 - alpha) E_RQ(U rho0 U^dagger)`, each link channel
/// acting independently on every qubit.
pub fn effective_state(rho0: &DensityMatrix, model: &NoiseModel) -> Result<DensityMatrix> {
    let direct = if model.alpha > 0.0 {
        Some(propagate(rho0.clone(), &model.direct)?)
    } else {
        None
    };
    let reflected = if model.alpha < 1.0 {
        Some(propagate(apply_gate(rho0, &model.u_qris)?, &model.reflected)?)
    } else {
        None
    };
    match (direct, reflected) {
        (Some(d), Some(r)) => DensityMatrix::mix(model.alpha, &d, &r),
        (Some(d), None) => Ok(d),
        (None, Some(r)) => Ok(r),
        (None, None) => unreachable!("alpha is either > 0 or < 1"),
    }
}

fn propagate(mut rho: DensityMatrix, link: &LinkNoise) -> Result<DensityMatrix> {
    if link.is_noiseless() {
        return Ok(rho);
    }
    let channel = link.channel()?;
    for q in 0..rho.num_qubits() {
        channel.apply_to_qubit_in_place(&mut rho, q)?;
    }
    Ok(rho)
}
