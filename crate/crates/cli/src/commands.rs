use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, Context};
use qris_core::dataset::{split, ClassParams, Dataset, DEFAULT_TRAIN_FRACTION};
use qris_core::encoding::InputMode;
use qris_core::training::{self, evaluate, prepare, EpochMetrics, Evaluation, Objective, TrainConfig};
use qris_core::vqc::{read_params, write_params, VqcParams};
use qris_core::Error;

use crate::config::resolve;
use crate::{CliError, EvalArgs, GenDataArgs, SweepArgs, SweepKind, TrainArgs};

/// Bumped whenever a CSV column is added, removed or renamed.
pub const CSV_SCHEMA_VERSION: u32 = 1;

const CLASS_NAMES: [&str; 3] = ["absent", "blocked", "unblocked"];
const DEFAULT_NOISE_GRID: [f64; 4] = [0.0, 0.05, 0.1, 0.2];
const DEFAULT_DAMPING_GRID: [f64; 4] = [0.5, 0.65, 0.8, 0.95];

fn usage_on_invalid(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(msg) | Error::ConstraintViolation(msg) => CliError::Usage(msg),
        other => CliError::Runtime(other.into()),
    }
}

pub fn gen_data(args: &GenDataArgs) -> Result<(), CliError> {
    if args.n < 3 {
        return Err(CliError::Usage(format!("--n must be at least 3, got {}", args.n)));
    }
    let ds = Dataset::synthesize(args.n, args.seed, &ClassParams::with_sigma(args.sigma), args.train_fraction)
        .map_err(usage_on_invalid)?;
    ds.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} samples ({} train, {} test) to {}",
        ds.meta.count,
        ds.meta.train_count,
        ds.meta.test_count,
        args.out.display()
    );
    Ok(())
}

/// Loads a dataset; files without a recorded split are split 70/30 with `seed`.
fn load_dataset(path: &Path, seed: u64) -> Result<Dataset, CliError> {
    let mut ds = Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))?;
    if ds.meta.test_count == 0 {
        let (train, test) = split(&ds.samples, DEFAULT_TRAIN_FRACTION, seed)?;
        ds.meta.train_count = train.len();
        ds.meta.test_count = test.len();
        ds.samples = train.into_iter().chain(test).collect();
    }
    Ok(ds)
}

fn confusion_headers() -> Vec<String> {
    let mut h = Vec::new();
    for t in CLASS_NAMES {
        for p in CLASS_NAMES {
            h.push(format!("true_{t}_pred_{p}"));
        }
    }
    h
}

fn confusion_fields(e: &Evaluation) -> Vec<String> {
    e.confusion.iter().flatten().map(|c| c.to_string()).collect()
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn epoch_row(m: &EpochMetrics) -> Vec<String> {
    vec![
        CSV_SCHEMA_VERSION.to_string(),
        m.epoch.to_string(),
        m.mean_total_loss.to_string(),
        m.mean_ce.to_string(),
        m.mean_fidelity.to_string(),
        m.train_accuracy.to_string(),
        m.test_accuracy.to_string(),
        m.test_mean_fidelity.to_string(),
        m.lambda.to_string(),
        m.gamma.to_string(),
    ]
}

const EPOCH_HEADER: [&str; 10] = [
    "schema_version",
    "epoch",
    "mean_total_loss",
    "mean_ce",
    "mean_fidelity",
    "train_accuracy",
    "test_accuracy",
    "test_mean_fidelity",
    "lambda",
    "gamma",
];

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = resolve(&args.flags)?;
    let ds = load_dataset(&args.data, cfg.seed)?;
    let outcome = training::train(ds.train(), ds.test(), ds.rate_bounds(), &cfg)?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let rows: Vec<Vec<String>> = outcome.history.iter().map(epoch_row).collect();
    write_csv(&args.out_dir.join("metrics.csv"), &strings(&EPOCH_HEADER), &rows)?;
    let objective = Objective::from_config(&cfg)?;
    let mut params_file = File::create(args.out_dir.join("params.txt"))?;
    write_params(&mut params_file, &outcome.params, &objective.ansatz)?;
    fs::write(args.out_dir.join("config.toml"), toml::to_string(&cfg)?)?;

    let last = outcome.history.last().expect("at least one epoch");
    println!(
        "{} epochs: test accuracy {:.4}, test fidelity {:.6}, gamma {:.6}, lambda {:.6}",
        last.epoch, last.test_accuracy, last.test_mean_fidelity, last.gamma, last.lambda
    );
    Ok(())
}

fn print_confusion(e: &Evaluation) {
    println!("confusion (rows true, columns predicted):");
    println!("{:>10} {:>8} {:>8} {:>9}", "", CLASS_NAMES[0], CLASS_NAMES[1], CLASS_NAMES[2]);
    for (name, row) in CLASS_NAMES.iter().zip(&e.confusion) {
        println!("{name:>10} {:>8} {:>8} {:>9}", row[0], row[1], row[2]);
    }
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let cfg = resolve(&args.flags)?;
    let file = File::open(&args.params).with_context(|| format!("opening {}", args.params.display()))?;
    let (params, layers) = read_params(BufReader::new(file))?;
    if layers != cfg.layers {
        return Err(CliError::Runtime(anyhow!(
            "parameter file has {layers} layers but the configuration expects {}",
            cfg.layers
        )));
    }
    let params = VqcParams::new(params.gamma, params.thetas, cfg.gamma_max)?;
    let ds = load_dataset(&args.data, cfg.seed)?;
    let objective = Objective::from_config(&cfg)?;
    let test = prepare(ds.test(), ds.rate_bounds())?;
    let e = evaluate(&objective, &test, &params, cfg.nominal_noise()?)?;

    println!("accuracy {:.4} over {} test samples, mean fidelity {:.6}", e.accuracy, e.count(), e.mean_fidelity);
    print_confusion(&e);
    let mut header = strings(&["schema_version", "input_mode", "p", "q", "count", "accuracy", "mean_fidelity", "mean_ce"]);
    header.extend(confusion_headers());
    let mut row = vec![
        CSV_SCHEMA_VERSION.to_string(),
        cfg.input_mode.to_string(),
        cfg.p.to_string(),
        cfg.q.to_string(),
        e.count().to_string(),
        e.accuracy.to_string(),
        e.mean_fidelity.to_string(),
        e.mean_ce.to_string(),
    ];
    row.extend(confusion_fields(&e));
    write_csv(&args.out, &header, &[row])
}

/// Cell settings for one sweep point. In a noise sweep `q` keeps its ratio to
/// `p` from the base configuration, so `p = 0` is a noiseless cell.
fn sweep_cell(base: &TrainConfig, kind: SweepKind, value: f64, mode: InputMode) -> TrainConfig {
    let mut cfg = base.clone();
    cfg.input_mode = mode;
    match kind {
        SweepKind::Noise => {
            cfg.q = if base.p > 0.0 { base.q * value / base.p } else { base.q };
            cfg.p = value;
        }
        SweepKind::Damping => {
            cfg.gamma_max = value;
            cfg.gamma_init = value;
        }
    }
    cfg
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = resolve(&args.flags)?;
    let grid = match (&args.grid, args.kind) {
        (Some(g), _) => g.clone(),
        (None, SweepKind::Noise) => DEFAULT_NOISE_GRID.to_vec(),
        (None, SweepKind::Damping) => DEFAULT_DAMPING_GRID.to_vec(),
    };
    if grid.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    let selectors = args.selectors.clone().unwrap_or_else(|| InputMode::ALL.to_vec());
    if selectors.is_empty() {
        return Err(CliError::Usage("no input configurations selected".into()));
    }
    let cells: Vec<TrainConfig> = grid
        .iter()
        .flat_map(|&v| selectors.iter().map(move |&m| (v, m)))
        .map(|(v, m)| sweep_cell(&base, args.kind, v, m))
        .collect();
    for cfg in &cells {
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }

    let ds = load_dataset(&args.data, base.seed)?;
    let test = prepare(ds.test(), ds.rate_bounds())?;
    let kind = match args.kind {
        SweepKind::Noise => "noise",
        SweepKind::Damping => "damping",
    };
    let mut header = strings(&[
        "schema_version",
        "kind",
        "cell",
        "input_mode",
        "p",
        "q",
        "gamma_max",
        "seed",
        "accuracy",
        "mean_fidelity",
        "final_gamma",
        "final_lambda",
    ]);
    header.extend(confusion_headers());
    let mut rows = Vec::with_capacity(cells.len());
    for (i, cfg) in cells.iter().enumerate() {
        let outcome = training::train(ds.train(), ds.test(), ds.rate_bounds(), cfg)?;
        let objective = Objective::from_config(cfg)?;
        let e = evaluate(&objective, &test, &outcome.params, cfg.nominal_noise()?)?;
        println!(
            "cell {i}: {} p {} gamma_max {} -> accuracy {:.4}, fidelity {:.6}",
            cfg.input_mode, cfg.p, cfg.gamma_max, e.accuracy, e.mean_fidelity
        );
        let mut row = vec![
            CSV_SCHEMA_VERSION.to_string(),
            kind.to_string(),
            i.to_string(),
            cfg.input_mode.to_string(),
            cfg.p.to_string(),
            cfg.q.to_string(),
            cfg.gamma_max.to_string(),
            cfg.seed.to_string(),
            e.accuracy.to_string(),
            e.mean_fidelity.to_string(),
            outcome.params.gamma.to_string(),
            outcome.final_lambda.to_string(),
        ];
        row.extend(confusion_fields(&e));
        rows.push(row);
    }
    write_csv(&args.out, &header, &rows)
}
