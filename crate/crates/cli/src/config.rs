use std::fs;

use anyhow::Context;
use qris_core::training::TrainConfig;

use crate::{CliError, TrainFlags};

/// Built-in defaults, overridden by the config file, overridden by flags.
pub fn resolve(flags: &TrainFlags) -> Result<TrainConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<TrainConfig>(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($flag:ident => $field:ident) => {
            if let Some(v) = flags.$flag {
                cfg.$field = v.into();
            }
        };
    }
    set!(epochs => epochs);
    set!(batch => batch_size);
    set!(lr => learning_rate);
    set!(weight_decay => weight_decay);
    set!(p => p);
    set!(q => q);
    set!(jitter => noise_jitter);
    set!(gamma_max => gamma_max);
    set!(gamma_init => gamma_init);
    set!(fmin => f_min);
    set!(lambda => lambda_init);
    set!(lambda_schedule => lambda_schedule);
    set!(layers => layers);
    set!(config_selector => input_mode);
    set!(seed => seed);
    if let Some(cap) = flags.lambda_cap {
        cfg.lambda_cap = Some(cap);
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qris_core::encoding::InputMode;
    use std::io::Write;

    #[test]
    fn precedence_defaults_file_flags() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "epochs = 4\nbatch_size = 20\ninput_mode = \"image-only\"").unwrap();
        let flags = TrainFlags { config: Some(file.path().into()), epochs: Some(7), ..Default::default() };
        let cfg = resolve(&flags).unwrap();
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.batch_size, 20);
        assert_eq!(cfg.input_mode, InputMode::ImageOnly);
        assert_eq!(cfg.learning_rate, 1e-3);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let flags = TrainFlags { fmin: Some(1.5), ..Default::default() };
        assert!(matches!(resolve(&flags), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "epoch = 4").unwrap();
        let flags = TrainFlags { config: Some(file.path().into()), ..Default::default() };
        assert!(matches!(resolve(&flags), Err(CliError::Usage(_))));
    }
}
