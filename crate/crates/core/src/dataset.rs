//! Synthetic camera-plus-rate samples, stratified splitting, and the dataset
//! file format.
//!
//! A dataset file is UTF-8 text. The first line is a JSON object holding
//! [`DatasetMeta`]. Every following line is one record:
//!
//! ```text
//! v0,v1,...,v{feature_dim-1},rate,label,alpha
//! ```
//!
//! Reals are written in shortest round-trip decimal and labels as `-1`, `0`
//! or `1`. Training records come first, followed by the test records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoding::FEATURE_DIM;
use crate::error::{invalid, Error, Result};
use crate::vqc::Label;

pub const FORMAT_NAME: &str = "qris-dataset";
pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Raw pixel intensities before pooling and normalization.
    pub image: Vec<f64>,
    pub rate: f64,
    pub label: Label,
    /// Direct-path weight of the link mixture.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub feature_dim: usize,
    pub count: usize,
    /// Per class, ordered as labels `-1, 0, 1`.
    pub class_counts: [usize; 3],
    pub sigma: f64,
    pub train_count: usize,
    pub test_count: usize,
}

/// Class structure of the generator.
///
/// Images are 4x4 intensity maps. An unblocked link shows a bright upper
/// half (clear line of sight), a blocked one a bright lower half (the
/// obstacle), each with per-pixel Gaussian spread `sigma`. An absent user
/// leaves a scene whose mean is a random blend of the two patterns, spread by
/// `absent_spread`, so it overlaps both other classes. Rates and the
/// direct-path weight `alpha` are uniform on per-class intervals; a blocked
/// direct path leaves most of the power on the surface-reflected link.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub sigma: f64,
    pub absent_spread: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    /// Rate interval per class, ordered as labels `-1, 0, 1`.
    pub rate_ranges: [(f64, f64); 3],
    /// `alpha` interval per class, ordered as labels `-1, 0, 1`.
    pub alpha_ranges: [(f64, f64); 3],
}

impl Default for ClassParams {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            absent_spread: 0.1,
            rate_min: 0.0,
            rate_max: 10.0,
            rate_ranges: [(0.0, 1.5), (1.0, 7.0), (4.0, 10.0)],
            alpha_ranges: [(0.0, 1.0), (0.0, 0.4), (0.6, 1.0)],
        }
    }
}

impl ClassParams {
    pub fn with_sigma(sigma: f64) -> Self {
        Self { sigma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma {} must be finite and non-negative", self.sigma)));
        }
        if !(self.absent_spread >= 0.0 && self.absent_spread.is_finite()) {
            return Err(invalid("absent spread must be finite and non-negative"));
        }
        if !(self.rate_min.is_finite() && self.rate_max.is_finite() && self.rate_min < self.rate_max) {
            return Err(invalid("rate bounds must be finite with min < max"));
        }
        for (lo, hi) in self.rate_ranges {
            if !(lo < hi && lo >= self.rate_min && hi <= self.rate_max) {
                return Err(invalid(format!(
                    "rate range [{lo}, {hi}] must be non-empty and inside [{}, {}]",
                    self.rate_min, self.rate_max
                )));
            }
        }
        for (lo, hi) in self.alpha_ranges {
            if !(lo <= hi && lo >= 0.0 && hi <= 1.0) {
                return Err(invalid(format!("alpha range [{lo}, {hi}] must lie inside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `blend` weights the unblocked pattern against the blocked one.
    fn image_mean(blend: f64) -> [f64; FEATURE_DIM] {
        let (bright, dark) = (0.9, 0.1);
        let top = blend * bright + (1.0 - blend) * dark;
        let bottom = blend * dark + (1.0 - blend) * bright;
        std::array::from_fn(|i| if i < FEATURE_DIM / 2 { top } else { bottom })
    }

    fn image_spread(&self, label: Label) -> f64 {
        match label {
            Label::Absent => self.absent_spread.max(self.sigma),
            _ => self.sigma,
        }
    }
}

/// Draws `n` samples with classes balanced to within one.
pub fn generate(n: usize, seed: u64, params: &ClassParams) -> Result<(Vec<Sample>, DatasetMeta)> {
    if n < 3 {
        return Err(invalid(format!("need at least 3 samples, got {n}")));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Label> = (0..n).map(|i| Label::ALL[i % 3]).collect();
    labels.shuffle(&mut rng);

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(n);
    let mut class_counts = [0usize; 3];
    for label in labels {
        class_counts[label.class_index()] += 1;
        let blend = match label {
            Label::Unblocked => 1.0,
            Label::Blocked => 0.0,
            Label::Absent => rng.random_range(0.0..=1.0),
        };
        let mean = ClassParams::image_mean(blend);
        let spread = params.image_spread(label);
        let image = loop {
            let img: Vec<f64> = mean
                .iter()
                .map(|m| (m + spread * unit.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            if img.iter().any(|v| *v > 0.0) {
                break img;
            }
        };
        let (lo, hi) = params.rate_ranges[label.class_index()];
        let rate = rng.random_range(lo..=hi);
        let (lo, hi) = params.alpha_ranges[label.class_index()];
        let alpha = rng.random_range(lo..=hi);
        samples.push(Sample { image, rate, label, alpha });
    }
    let meta = DatasetMeta {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        seed,
        rate_min: params.rate_min,
        rate_max: params.rate_max,
        feature_dim: FEATURE_DIM,
        count: n,
        class_counts,
        sigma: params.sigma,
        train_count: n,
        test_count: 0,
    };
    Ok((samples, meta))
}

/// Stratified seeded split. The training side gets `round(fraction * n)`
/// samples, allotted across classes by largest remainder.
pub fn split(samples: &[Sample], fraction: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = samples.len();
    let target = (fraction * n as f64).round() as usize;
    if target == 0 || target == n {
        return Err(invalid(format!("split of {n} samples at {fraction} leaves one side empty")));
    }
    let mut by_class: [Vec<usize>; 3] = Default::default();
    for (i, s) in samples.iter().enumerate() {
        by_class[s.label.class_index()].push(i);
    }
    let exact: Vec<f64> = by_class.iter().map(|c| fraction * c.len() as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(3 * 3) {
        if missing == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(n - target);
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let (a, b) = members.split_at(quota[c]);
        train.extend(a.iter().copied());
        test.extend(b.iter().copied());
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((
        train.into_iter().map(|i| samples[i].clone()).collect(),
        test.into_iter().map(|i| samples[i].clone()).collect(),
    ))
}

/// Samples plus metadata; records `..train_count` form the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Generates `n` samples and splits them with the same seed.
    pub fn synthesize(n: usize, seed: u64, params: &ClassParams, fraction: f64) -> Result<Self> {
        let (samples, mut meta) = generate(n, seed, params)?;
        let (train, test) = split(&samples, fraction, seed)?;
        meta.train_count = train.len();
        meta.test_count = test.len();
        let mut samples = train;
        samples.extend(test);
        Ok(Self { meta, samples })
    }

    pub fn train(&self) -> &[Sample] {
        &self.samples[..self.meta.train_count]
    }

    pub fn test(&self) -> &[Sample] {
        &self.samples[self.meta.train_count..]
    }

    pub fn rate_bounds(&self) -> (f64, f64) {
        (self.meta.rate_min, self.meta.rate_max)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = serde_json::to_string(&self.meta).map_err(|e| invalid(e.to_string()))?;
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            for v in &s.image {
                line.push_str(&format!("{v},"));
            }
            line.push_str(&format!("{},{},{}", s.rate, s.label.value(), s.alpha));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
        };
        let value: serde_json::Value = serde_json::from_str(&header)
            .map_err(|e| Error::Parse { line: 1, message: format!("header: {e}") })?;
        if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
            return Err(Error::Parse { line: 1, message: "not a dataset file".into() });
        }
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != FORMAT_VERSION {
            return Err(Error::Version { found: version, expected: FORMAT_VERSION });
        }
        let meta: DatasetMeta = serde_json::from_value(value)
            .map_err(|e| Error::Parse { line: 1, message: format!("header: {e}") })?;
        if meta.train_count + meta.test_count != meta.count {
            return Err(Error::Parse { line: 1, message: "split counts do not add up".into() });
        }

        let fields = meta.feature_dim + 3;
        let mut samples = Vec::with_capacity(meta.count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let ln = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != fields {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected {fields} fields, found {}", parts.len()),
                });
            }
            let real = |j: usize, what: &str| -> Result<f64> {
                parts[j]
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line: ln, message: format!("bad {what} '{}'", parts[j]) })
            };
            let mut image = Vec::with_capacity(meta.feature_dim);
            for j in 0..meta.feature_dim {
                image.push(real(j, "feature")?);
            }
            let rate = real(meta.feature_dim, "rate")?;
            let label_text = parts[meta.feature_dim + 1].trim();
            let label_value: i64 = label_text
                .parse()
                .map_err(|_| Error::Parse { line: ln, message: format!("bad label '{label_text}'") })?;
            let index = samples.len();
            let label = Label::from_value(label_value)
                .map_err(|_| Error::Validation { index, message: format!("label {label_value} not in {{-1, 0, 1}}") })?;
            let alpha = real(meta.feature_dim + 2, "alpha")?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Validation { index, message: format!("alpha {alpha} outside [0, 1]") });
            }
            if !(meta.rate_min..=meta.rate_max).contains(&rate) {
                return Err(Error::Validation { index, message: format!("rate {rate} outside declared bounds") });
            }
            samples.push(Sample { image, rate, label, alpha });
        }
        if samples.len() != meta.count {
            return Err(Error::Parse {
                line: samples.len() + 2,
                message: format!("header declares {} records, found {}", meta.count, samples.len()),
            });
        }
        Ok(Self { meta, samples })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
