//! Fidelity-regularized training: losses, gradients, Adam with projection,
//! and the adaptive penalty weight.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{effective_state, LinkNoise, NoiseModel};
use crate::dataset::Sample;
use crate::encoding::{encode_input, normalize_image, ImageFeature, InputMode, RateObservation, FEATURE_DIM, NUM_QUBITS};
use crate::error::{invalid, Result};
use crate::quantum::{DensityMatrix, Gate};
use crate::vqc::{
    build_ansatz, class_readout, class_readout_from_marginal, input_fidelity, predict, shift_evaluation, Ansatz,
    Label, VqcParams,
};

/// Floor applied to the true-class probability inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;
/// Step of the damping-coefficient finite difference.
pub const GAMMA_STEP: f64 = 1e-4;
/// Smallest step used before falling back to a one-sided difference.
const MIN_GAMMA_STEP: f64 = 1e-6;
/// Lower clamp of the damping coefficient after each update.
pub const GAMMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub ce: f64,
    pub fid_penalty: f64,
    pub lambda: f64,
    pub total: f64,
}

/// `-ln max(b_true, 1e-12)`
pub fn cross_entropy(probs: &[f64; 3], label: Label) -> f64 {
    -probs[label.class_index()].max(PROB_FLOOR).ln()
}

/// `ce + lambda (1 - fidelity)`
pub fn total_loss(probs: &[f64; 3], fidelity: f64, label: Label, lambda: f64) -> Result<LossBreakdown> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("penalty weight {lambda} must be finite and non-negative")));
    }
    let ce = cross_entropy(probs, label);
    let fid_penalty = (1.0 - fidelity).max(0.0);
    Ok(LossBreakdown { ce, fid_penalty, lambda, total: ce + lambda * fid_penalty })
}

/// `(L(theta_i + pi/2) - L(theta_i - pi/2)) / 2`
pub fn param_shift_grad<F>(mut loss_fn: F, thetas: &[f64], index: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if index >= thetas.len() {
        return Err(invalid(format!("parameter index {index} out of range for {} angles", thetas.len())));
    }
    let mut shifted = thetas.to_vec();
    shifted[index] = thetas[index] + FRAC_PI_2;
    let plus = loss_fn(&shifted)?;
    shifted[index] = thetas[index] - FRAC_PI_2;
    let minus = loss_fn(&shifted)?;
    Ok(0.5 * (plus - minus))
}

/// Central difference in `gamma` with step `1e-4`, shrunk so both points stay
/// in `(0, gamma_max]`. At the boundary itself it becomes one-sided.
pub fn gamma_grad<F>(mut loss_fn: F, gamma: f64, gamma_max: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(gamma > 0.0 && gamma <= gamma_max) {
        return Err(invalid(format!("damping coefficient {gamma} outside (0, {gamma_max}]")));
    }
    let h = GAMMA_STEP.min(gamma_max - gamma).min(0.5 * gamma);
    if h >= MIN_GAMMA_STEP {
        return Ok((loss_fn(gamma + h)? - loss_fn(gamma - h)?) / (2.0 * h));
    }
    let center = loss_fn(gamma)?;
    if gamma_max - gamma < MIN_GAMMA_STEP {
        let h = GAMMA_STEP.min(0.5 * gamma);
        Ok((center - loss_fn(gamma - h)?) / h)
    } else {
        let h = GAMMA_STEP.min(gamma_max - gamma);
        Ok((loss_fn(gamma + h)? - center) / h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 coefficient added to the angle gradients only.
    pub weight_decay: f64,
    pub gamma_max: f64,
}

impl AdamSettings {
    pub fn new(learning_rate: f64, weight_decay: f64, gamma_max: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay, gamma_max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    m_gamma: f64,
    v_gamma: f64,
    t: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self { m: vec![0.0; num_params], v: vec![0.0; num_params], m_gamma: 0.0, v_gamma: 0.0, t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam update of all angles and `gamma`, then `gamma` is clamped to
/// `[1e-3, gamma_max]`.
pub fn adam_step(
    params: &mut VqcParams,
    grad_thetas: &[f64],
    grad_gamma: f64,
    state: &mut AdamState,
    settings: &AdamSettings,
) -> Result<()> {
    let n = params.thetas.len();
    if grad_thetas.len() != n || state.m.len() != n {
        return Err(invalid(format!(
            "dimension mismatch: {n} angles, {} gradients, optimizer sized {}",
            grad_thetas.len(),
            state.m.len()
        )));
    }
    let AdamSettings { learning_rate: lr, beta1: b1, beta2: b2, epsilon: eps, weight_decay, gamma_max } = *settings;
    state.t += 1;
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..n {
        let g = grad_thetas[i] + weight_decay * params.thetas[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        params.thetas[i] -= lr * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + eps);
    }
    state.m_gamma = b1 * state.m_gamma + (1.0 - b1) * grad_gamma;
    state.v_gamma = b2 * state.v_gamma + (1.0 - b2) * grad_gamma * grad_gamma;
    let step = lr * (state.m_gamma / c1) / ((state.v_gamma / c2).sqrt() + eps);
    params.gamma = (params.gamma - step).clamp(GAMMA_FLOOR, gamma_max);
    Ok(())
}

/// Multiplies `lambda` by `growth` (capped) when `mean_fidelity < f_min`.
pub fn lambda_update(lambda: f64, mean_fidelity: f64, f_min: f64, growth: f64, cap: f64) -> f64 {
    if mean_fidelity < f_min {
        (lambda * growth).min(cap)
    } else {
        lambda
    }
}

/// When the penalty weight is reconsidered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSchedule {
    /// Once per batch, against the batch-mean fidelity.
    #[default]
    PerBatch,
    /// After every sample, against that sample's fidelity.
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub lambda_init: f64,
    pub lambda_growth: f64,
    /// Defaults to `100 * lambda_init`.
    pub lambda_cap: Option<f64>,
    pub lambda_schedule: LambdaSchedule,
    pub f_min: f64,
    pub gamma_max: f64,
    pub gamma_init: f64,
    pub p: f64,
    pub q: f64,
    /// Per-sample `p` and `q` are drawn uniformly in `nominal * (1 ± jitter)`.
    pub noise_jitter: f64,
    pub layers: usize,
    pub input_mode: InputMode,
    /// Phase of every `R_z` factor of the surface unitary.
    pub surface_phase: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 50,
            learning_rate: 1e-3,
            weight_decay: 2e-3,
            lambda_init: 1.0,
            lambda_growth: 1.1,
            lambda_cap: None,
            lambda_schedule: LambdaSchedule::PerBatch,
            f_min: 0.95,
            gamma_max: 0.85,
            gamma_init: 0.85,
            p: 0.05,
            q: 0.03,
            noise_jitter: 0.5,
            layers: 2,
            input_mode: InputMode::Hybrid,
            surface_phase: std::f64::consts::FRAC_PI_4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap.unwrap_or(100.0 * self.lambda_init)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(invalid(msg.to_string())) };
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check(self.batch_size >= 1, "batch size must be at least 1")?;
        check(self.learning_rate > 0.0 && self.learning_rate.is_finite(), "learning rate must be positive")?;
        check(self.weight_decay >= 0.0 && self.weight_decay.is_finite(), "weight decay must be non-negative")?;
        check(self.lambda_init >= 0.0 && self.lambda_init.is_finite(), "lambda must be non-negative")?;
        check(self.lambda_growth > 1.0 && self.lambda_growth.is_finite(), "lambda growth must exceed 1")?;
        check(self.lambda_cap() >= self.lambda_init && self.lambda_cap().is_finite(), "lambda cap below lambda")?;
        check(self.f_min > 0.0 && self.f_min < 1.0, "f_min must lie in (0, 1)")?;
        check(self.gamma_max > 0.0 && self.gamma_max < 1.0, "gamma_max must lie in (0, 1)")?;
        check(self.gamma_init > 0.0 && self.gamma_init <= self.gamma_max, "gamma_init must lie in (0, gamma_max]")?;
        check((0.0..=1.0).contains(&self.p), "p must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.q), "q must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.noise_jitter), "noise jitter must lie in [0, 1]")?;
        check(self.layers >= 1, "at least one ansatz layer")?;
        check(self.surface_phase.is_finite(), "surface phase must be finite")?;
        Ok(())
    }

    pub fn adam(&self) -> AdamSettings {
        AdamSettings::new(self.learning_rate, self.weight_decay, self.gamma_max)
    }

    pub fn nominal_noise(&self) -> Result<LinkNoise> {
        LinkNoise::new(self.p, self.q)
    }
}

/// A sample with its image pooled and its rate bounded, ready to encode.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub feature: ImageFeature,
    pub rate: RateObservation,
    pub label: Label,
    pub alpha: f64,
}

impl PreparedSample {
    pub fn new(sample: &Sample, rate_bounds: (f64, f64)) -> Result<Self> {
        Ok(Self {
            feature: normalize_image(&sample.image, FEATURE_DIM)?,
            rate: RateObservation::new(sample.rate, rate_bounds.0, rate_bounds.1)?,
            label: sample.label,
            alpha: sample.alpha,
        })
    }
}

pub fn prepare(samples: &[Sample], rate_bounds: (f64, f64)) -> Result<Vec<PreparedSample>> {
    samples.iter().map(|s| PreparedSample::new(s, rate_bounds)).collect()
}

/// Loss and readout of one sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleEval {
    pub loss: LossBreakdown,
    pub probs: [f64; 3],
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct SampleGradient {
    pub eval: SampleEval,
    pub thetas: Vec<f64>,
    pub gamma: f64,
}

/// Everything that maps (sample, parameters, link noise, lambda) to a loss.
#[derive(Debug, Clone)]
pub struct Objective {
    pub mode: InputMode,
    pub ansatz: Ansatz,
    pub gamma_max: f64,
    pub u_qris: Gate,
}

impl Objective {
    pub fn new(mode: InputMode, layers: usize, gamma_max: f64, surface_phase: f64) -> Result<Self> {
        Ok(Self {
            mode,
            ansatz: build_ansatz(layers)?,
            gamma_max,
            u_qris: Gate::rz_product(&[surface_phase; NUM_QUBITS])?,
        })
    }

    pub fn from_config(config: &TrainConfig) -> Result<Self> {
        Self::new(config.input_mode, config.layers, config.gamma_max, config.surface_phase)
    }

    /// The no-surface baseline always takes the direct link alone.
    pub fn noise_model(&self, sample: &PreparedSample, link: LinkNoise) -> Result<NoiseModel> {
        let alpha = if self.mode.uses_surface() { sample.alpha } else { 1.0 };
        NoiseModel::with_links(link, link, alpha, self.u_qris.clone())
    }

    fn propagate(&self, sample: &PreparedSample, gamma: f64, link: LinkNoise) -> Result<(DensityMatrix, f64)> {
        let input = encode_input(self.mode, &sample.feature, &sample.rate, gamma, self.gamma_max)?;
        let noise = self.noise_model(sample, link)?;
        let rho_eff = effective_state(&DensityMatrix::from_pure(&input.state), &noise)?;
        let fidelity = input_fidelity(&input.state, &rho_eff, &noise)?;
        Ok((rho_eff, fidelity))
    }

    /// Full noisy evaluation.
    pub fn evaluate(&self, sample: &PreparedSample, params: &VqcParams, link: LinkNoise, lambda: f64) -> Result<SampleEval> {
        let (rho_eff, fidelity) = self.propagate(sample, params.gamma, link)?;
        let probs = class_readout(&self.ansatz.apply_to_density(&rho_eff, &params.thetas)?);
        let loss = total_loss(&probs, fidelity, sample.label, lambda)?;
        Ok(SampleEval { loss, probs, fidelity })
    }

    /// Exact angle gradients by the shift rule and a finite-difference
    /// `gamma` gradient, both of the total loss. The fidelity term does not
    /// depend on the angles, because the noise acts before the ansatz.
    pub fn gradient(&self, sample: &PreparedSample, params: &VqcParams, link: LinkNoise, lambda: f64) -> Result<SampleGradient> {
        let (rho_eff, fidelity) = self.propagate(sample, params.gamma, link)?;
        let t = sample.label.class_index();
        let shift = shift_evaluation(&rho_eff, &params.thetas, &self.ansatz, |m| ce_weights(m, t))?;
        let probs = class_readout_from_marginal(&shift.marginal);
        let loss = total_loss(&probs, fidelity, sample.label, lambda)?;
        let gamma = if self.mode.uses_image() {
            gamma_grad(
                |g| {
                    let trial = VqcParams { gamma: g, thetas: params.thetas.clone() };
                    Ok(self.evaluate(sample, &trial, link, lambda)?.loss.total)
                },
                params.gamma,
                self.gamma_max,
            )?
        } else {
            0.0
        };
        Ok(SampleGradient { eval: SampleEval { loss, probs, fidelity }, thetas: shift.grads, gamma })
    }
}

/// Derivative of the cross-entropy with respect to each readout outcome
/// probability `m_k`, given `b_t = m_t / (m_0 + m_1 + m_2)`.
fn ce_weights(m: &[f64; 4], t: usize) -> [f64; 4] {
    let mass = m[0] + m[1] + m[2];
    if mass < 1e-9 || m[t] / mass < PROB_FLOOR {
        return [0.0; 4];
    }
    let mut w = [1.0 / mass, 1.0 / mass, 1.0 / mass, 0.0];
    w[t] -= 1.0 / m[t];
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub mean_total_loss: f64,
    pub mean_ce: f64,
    /// Mean training fidelity under the jittered noise of each step.
    pub mean_fidelity: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_mean_fidelity: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// State after each optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub fidelity: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_fidelity: f64,
    pub mean_ce: f64,
    /// Rows are true classes, columns predictions, ordered `-1, 0, 1`.
    pub confusion: [[usize; 3]; 3],
}

impl Evaluation {
    pub fn count(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

/// Scores samples at fixed link noise; no jitter.
pub fn evaluate(
    objective: &Objective,
    samples: &[PreparedSample],
    params: &VqcParams,
    link: LinkNoise,
) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(invalid("cannot evaluate an empty sample set"));
    }
    let mut confusion = [[0usize; 3]; 3];
    let (mut fid, mut ce) = (0.0, 0.0);
    for s in samples {
        let e = objective.evaluate(s, params, link, 0.0)?;
        confusion[s.label.class_index()][predict(&e.probs)] += 1;
        fid += e.fidelity;
        ce += e.loss.ce;
    }
    let n = samples.len() as f64;
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    Ok(Evaluation { accuracy: correct as f64 / n, mean_fidelity: fid / n, mean_ce: ce / n, confusion })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: VqcParams,
    pub history: Vec<EpochMetrics>,
    pub final_lambda: f64,
}

pub fn train(train_set: &[Sample], test_set: &[Sample], rate_bounds: (f64, f64), config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(train_set, test_set, rate_bounds, config, |_| {})
}

/// Runs the training loop, calling `observer` after every optimizer step.
///
/// Each sample is encoded with the current `gamma`, sent through links whose
/// `(p, q)` are jittered around the nominal values, and followed by one Adam
/// step. `lambda` grows after every batch (or sample, per the schedule) whose
/// fidelity falls short of `f_min`. Test metrics use the nominal noise.
pub fn train_with_observer<O>(
    train_set: &[Sample],
    test_set: &[Sample],
    rate_bounds: (f64, f64),
    config: &TrainConfig,
    mut observer: O,
) -> Result<TrainOutcome>
where
    O: FnMut(&StepRecord),
{
    config.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(invalid("training needs non-empty train and test splits"));
    }
    let train_prepared = prepare(train_set, rate_bounds)?;
    let test_prepared = prepare(test_set, rate_bounds)?;
    let objective = Objective::from_config(config)?;
    let nominal = config.nominal_noise()?;
    let adam = config.adam();
    let cap = config.lambda_cap();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let thetas = (0..objective.ansatz.num_params()).map(|_| rng.random_range(-FRAC_PI_8..FRAC_PI_8)).collect();
    let mut params = VqcParams::new(config.gamma_init, thetas, config.gamma_max)?;
    let mut state = AdamState::new(objective.ansatz.num_params());
    let mut lambda = config.lambda_init;
    let mut order: Vec<usize> = (0..train_prepared.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut sum_total, mut sum_ce, mut sum_fid, mut correct) = (0.0, 0.0, 0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut batch_fid = 0.0;
            for &i in batch {
                let sample = &train_prepared[i];
                let link = jittered(&mut rng, config)?;
                let g = objective.gradient(sample, &params, link, lambda)?;
                adam_step(&mut params, &g.thetas, g.gamma, &mut state, &adam)?;
                step += 1;

                sum_total += g.eval.loss.total;
                sum_ce += g.eval.loss.ce;
                sum_fid += g.eval.fidelity;
                batch_fid += g.eval.fidelity;
                if predict(&g.eval.probs) == sample.label.class_index() {
                    correct += 1;
                }
                if config.lambda_schedule == LambdaSchedule::PerSample {
                    lambda = lambda_update(lambda, g.eval.fidelity, config.f_min, config.lambda_growth, cap);
                }
                observer(&StepRecord { epoch, step, gamma: params.gamma, lambda, fidelity: g.eval.fidelity, loss: g.eval.loss });
            }
            if config.lambda_schedule == LambdaSchedule::PerBatch {
                let mean = batch_fid / batch.len() as f64;
                lambda = lambda_update(lambda, mean, config.f_min, config.lambda_growth, cap);
            }
        }
        let n = train_prepared.len() as f64;
        let test = evaluate(&objective, &test_prepared, &params, nominal)?;
        history.push(EpochMetrics {
            epoch,
            mean_total_loss: sum_total / n,
            mean_ce: sum_ce / n,
            mean_fidelity: sum_fid / n,
            train_accuracy: correct as f64 / n,
            test_accuracy: test.accuracy,
            test_mean_fidelity: test.mean_fidelity,
            lambda,
            gamma: params.gamma,
        });
    }
    Ok(TrainOutcome { params, history, final_lambda: lambda })
}

fn jittered(rng: &mut ChaCha8Rng, config: &TrainConfig) -> Result<LinkNoise> {
    let j = config.noise_jitter;
    let p = (config.p * rng.random_range(1.0 - j..=1.0 + j)).min(1.0);
    let q = (config.q * rng.random_range(1.0 - j..=1.0 + j)).min(1.0);
    LinkNoise::new(p, q)
}
