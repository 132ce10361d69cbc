//! Classical-to-quantum state preparation.
//!
//! The image register holds 5 qubits: 16 feature amplitudes scaled by the
//! damping coefficient `gamma`, plus one reserved sink index (16) carrying
//! the residual amplitude `sqrt(1 - gamma^2)` so the state stays normalized.
//! A sixth qubit carries the rate as `R_y(theta)|0>`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{ry_gate, tensor_product, StateVector};

/// Feature amplitudes per image.
pub const FEATURE_DIM: usize = 16;
/// Qubits of the damped image register (features plus sink).
pub const IMAGE_QUBITS: usize = 5;
/// Full classifier register.
pub const NUM_QUBITS: usize = IMAGE_QUBITS + 1;
/// Index of the rate-encoding qubit.
pub const CHANNEL_QUBIT: usize = NUM_QUBITS - 1;

const NORM_TOL: f64 = 1e-10;

/// A unit-norm, power-of-two length image vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeature {
    values: Vec<f64>,
    source_dims: Option<(usize, usize, usize)>,
}

impl ImageFeature {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(H, W, C)` of the source image, when known.
    pub fn source_dims(&self) -> Option<(usize, usize, usize)> {
        self.source_dims
    }

    pub fn with_source_dims(mut self, h: usize, w: usize, c: usize) -> Self {
        self.source_dims = Some((h, w, c));
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Average-pools (or zero-pads) `raw` to `target_dim` entries and scales the
/// result to unit Euclidean norm.
pub fn normalize_image(raw: &[f64], target_dim: usize) -> Result<ImageFeature> {
    if raw.is_empty() {
        return Err(invalid("empty image"));
    }
    if target_dim == 0 || !target_dim.is_power_of_two() {
        return Err(invalid(format!("target dimension {target_dim} is not a power of two")));
    }
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite pixel value {bad}")));
    }
    let pooled: Vec<f64> = if raw.len() > target_dim {
        let n = raw.len();
        (0..target_dim)
            .map(|i| {
                let lo = i * n / target_dim;
                let hi = ((i + 1) * n / target_dim).max(lo + 1);
                raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    } else {
        let mut v = raw.to_vec();
        v.resize(target_dim, 0.0);
        v
    };
    let norm = pooled.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateInput("image has zero norm after pooling".into()));
    }
    Ok(ImageFeature { values: pooled.iter().map(|v| v / norm).collect(), source_dims: None })
}

/// An observed rate together with the dataset-wide bounds used to scale it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateObservation {
    rate: f64,
    min: f64,
    max: f64,
}

impl RateObservation {
    pub fn new(rate: f64, min: f64, max: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(invalid(format!("rate {rate} is not finite")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(invalid(format!("invalid rate bounds ({min}, {max})")));
        }
        Ok(Self { rate, min, max })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min, self.max)
    }
}

/// `pi * clamp((rate - min) / (max - min), 0, 1)`
pub fn rate_to_theta(obs: &RateObservation) -> f64 {
    PI * ((obs.rate - obs.min) / (obs.max - obs.min)).clamp(0.0, 1.0)
}

/// Damped amplitude encoding: amplitudes `gamma * x_i` on the first `2^m`
/// indices and `sqrt(1 - gamma^2)` on the sink index `2^m`, over `m + 1`
/// qubits.
pub fn amplitude_encode_damped(feature: &ImageFeature, gamma: f64, gamma_max: f64) -> Result<StateVector> {
    if !(gamma_max > 0.0 && gamma_max < 1.0) {
        return Err(invalid(format!("gamma_max = {gamma_max} must lie in (0, 1)")));
    }
    if !(gamma > 0.0 && gamma <= gamma_max) {
        return Err(Error::ConstraintViolation(format!(
            "damping coefficient {gamma} outside (0, {gamma_max}]"
        )));
    }
    let dim = feature.dim();
    if !dim.is_power_of_two() {
        return Err(invalid(format!("feature length {dim} is not a power of two")));
    }
    let norm: f64 = feature.values.iter().map(|v| v * v).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(invalid(format!("feature norm^2 {norm} is not 1")));
    }
    let mut amps = vec![0.0; 2 * dim];
    for (a, x) in amps.iter_mut().zip(&feature.values) {
        *a = gamma * x;
    }
    amps[dim] = (1.0 - gamma * gamma).sqrt();
    StateVector::from_real(&amps)
}

/// `R_y(theta)|0> = (cos(theta/2), sin(theta/2))` for `theta` in `[0, pi]`.
pub fn encode_channel_state(theta: f64) -> Result<StateVector> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("channel angle {theta} outside [0, pi]")));
    }
    StateVector::basis(1, 0)?.apply(&ry_gate(theta)?)
}

/// Which classical inputs reach the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Damped image register and rate qubit.
    Hybrid,
    /// Rate qubit held at `|0>`.
    ImageOnly,
    /// Image register held at `|0...0>`.
    ChannelOnly,
    /// No surface path and no image: rate qubit only with `alpha = 1`.
    NoQrisBaseline,
}

impl InputMode {
    pub const ALL: [InputMode; 4] = [
        InputMode::Hybrid,
        InputMode::ImageOnly,
        InputMode::ChannelOnly,
        InputMode::NoQrisBaseline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InputMode::Hybrid => "hybrid",
            InputMode::ImageOnly => "image-only",
            InputMode::ChannelOnly => "channel-only",
            InputMode::NoQrisBaseline => "no-qris-baseline",
        }
    }

    pub fn uses_image(&self) -> bool {
        matches!(self, InputMode::Hybrid | InputMode::ImageOnly)
    }

    pub fn uses_rate(&self) -> bool {
        !matches!(self, InputMode::ImageOnly)
    }

    pub fn uses_surface(&self) -> bool {
        !matches!(self, InputMode::NoQrisBaseline)
    }
}

impl std::fmt::Display for InputMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InputMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown input configuration '{s}'")))
    }
}

/// The composed 6-qubit input `|psi_X~> ⊗ |phi_u>`.
#[derive(Debug, Clone)]
pub struct HybridInput {
    pub state: StateVector,
    pub gamma_used: f64,
    pub theta_used: f64,
    /// Index of the originating sample, when encoded from a dataset.
    pub source: Option<usize>,
}

pub fn hybrid_encode(
    feature: &ImageFeature,
    obs: &RateObservation,
    gamma: f64,
    gamma_max: f64,
) -> Result<HybridInput> {
    encode_input(InputMode::Hybrid, feature, obs, gamma, gamma_max)
}

/// Encodes one sample for the given input configuration.
pub fn encode_input(
    mode: InputMode,
    feature: &ImageFeature,
    obs: &RateObservation,
    gamma: f64,
    gamma_max: f64,
) -> Result<HybridInput> {
    let image = if mode.uses_image() {
        amplitude_encode_damped(feature, gamma, gamma_max)?
    } else {
        StateVector::basis(IMAGE_QUBITS, 0)?
    };
    if image.num_qubits() != IMAGE_QUBITS {
        return Err(invalid(format!(
            "image register has {} qubits, expected {IMAGE_QUBITS}",
            image.num_qubits()
        )));
    }
    let theta = if mode.uses_rate() { rate_to_theta(obs) } else { 0.0 };
    let state = tensor_product(&image, &encode_channel_state(theta)?);
    Ok(HybridInput { state, gamma_used: gamma, theta_used: theta, source: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn unit(values: &[f64]) -> ImageFeature {
        normalize_image(values, values.len()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_image(&[3.0, 4.0], 2).unwrap().values(), &[0.6, 0.8]);
        assert_eq!(normalize_image(&[1.0, 0.0, 0.0, 0.0], 4).unwrap().values(), &[1.0, 0.0, 0.0, 0.0]);
        let pooled = normalize_image(&[1.0; 8], 4).unwrap();
        for v in pooled.values() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let padded = normalize_image(&[2.0], 4).unwrap();
        assert_eq!(padded.values(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_image_is_degenerate() {
        assert!(matches!(normalize_image(&[0.0; 4], 4), Err(Error::DegenerateInput(_))));
        assert!(normalize_image(&[], 4).is_err());
        assert!(normalize_image(&[1.0], 3).is_err());
    }

    #[test]
    fn damped_encoding_examples() {
        let gamma_max = 0.85;
        let e0 = unit(&[1.0, 0.0]);
        let psi = amplitude_encode_damped(&e0, 0.85, gamma_max).unwrap();
        let residual = (1.0f64 - 0.7225).sqrt();
        let expect = [0.85, 0.0, residual, 0.0];
        for (a, e) in psi.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-12 && a.im == 0.0);
        }
        assert!((residual - 0.5268).abs() < 1e-4);

        let x = unit(&[0.6, 0.8]);
        let psi = amplitude_encode_damped(&x, 0.85, gamma_max).unwrap();
        let expect = [0.51, 0.68, residual, 0.0];
        for (a, e) in psi.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-12);
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);

        // gamma near its ceiling leaves residual at most sqrt(1 - gamma_max^2)
        let psi = amplitude_encode_damped(&e0, 0.999, 0.999).unwrap();
        assert!((psi.amplitudes()[0].re - 0.999).abs() < 1e-15);
        assert!(psi.amplitudes()[2].re <= (1.0f64 - 0.999 * 0.999).sqrt() + 1e-15);
    }

    #[test]
    fn damped_encoding_rejects_gamma_outside_range() {
        let x = unit(&[1.0, 0.0]);
        assert!(matches!(amplitude_encode_damped(&x, 0.0, 0.85), Err(Error::ConstraintViolation(_))));
        assert!(matches!(amplitude_encode_damped(&x, 0.9, 0.85), Err(Error::ConstraintViolation(_))));
        assert!(amplitude_encode_damped(&x, 0.5, 1.0).is_err());
    }

    #[test]
    fn rate_to_theta_edges() {
        let t = |r| rate_to_theta(&RateObservation::new(r, 2.0, 6.0).unwrap());
        assert_eq!(t(2.0), 0.0);
        assert!((t(6.0) - PI).abs() < 1e-15);
        assert!((t(4.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(t(-10.0), 0.0);
        assert!((t(100.0) - PI).abs() < 1e-15);
        assert!(RateObservation::new(f64::NAN, 0.0, 1.0).is_err());
        assert!(RateObservation::new(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn channel_state_examples() {
        let s = encode_channel_state(0.0).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
        let s = encode_channel_state(PI).unwrap();
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-15);
        let s = encode_channel_state(PI / 2.0).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(encode_channel_state(-0.1).is_err());
        assert!(encode_channel_state(3.5).is_err());
    }

    #[test]
    fn hybrid_index_arithmetic() {
        let mut e0 = vec![0.0; FEATURE_DIM];
        e0[0] = 1.0;
        let x = unit(&e0);
        let obs = RateObservation::new(1.0, 0.0, 1.0).unwrap();
        let h = hybrid_encode(&x, &obs, 0.85, 0.85).unwrap();
        assert_eq!(h.state.num_qubits(), NUM_QUBITS);
        let amps = h.state.amplitudes();
        assert!((amps[1].re - 0.85).abs() < 1e-12);
        assert!((amps[16 * 2 + 1].re - (1.0f64 - 0.7225).sqrt()).abs() < 1e-12);
        assert!((h.state.norm_sqr() - 1.0).abs() < 1e-10);

        let zero_rate = RateObservation::new(0.0, 0.0, 1.0).unwrap();
        let h = hybrid_encode(&x, &zero_rate, 0.999, 0.999).unwrap();
        assert!((h.state.amplitudes()[0].re - 0.999).abs() < 1e-12);
    }

    #[test]
    fn modes_mask_inputs() {
        let x = unit(&[1.0; FEATURE_DIM]);
        let obs = RateObservation::new(0.7, 0.0, 1.0).unwrap();
        let img = encode_input(InputMode::ImageOnly, &x, &obs, 0.85, 0.85).unwrap();
        assert_eq!(img.theta_used, 0.0);
        // channel qubit is |0>: odd indices empty
        assert!(img.state.amplitudes().iter().skip(1).step_by(2).all(|a| a.norm() == 0.0));

        let ch = encode_input(InputMode::ChannelOnly, &x, &obs, 0.85, 0.85).unwrap();
        assert!(ch.state.amplitudes()[2..].iter().all(|a| a.norm() == 0.0));

        let base = encode_input(InputMode::NoQrisBaseline, &x, &obs, 0.85, 0.85).unwrap();
        assert_eq!(base.state, ch.state);
        assert_eq!("image-only".parse::<InputMode>().unwrap(), InputMode::ImageOnly);
        assert!("both".parse::<InputMode>().is_err());
    }
}
