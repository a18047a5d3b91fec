//! TOML run configuration.
//!
//! ```toml
//! [switch]      # v_pi (V), pulse_width (s), delay_length (m), group_index,
//!               # mzs_phase_kl (rad), loop_loss_db (dB), short_arm_transit (s),
//!               # d1_loss_db / d2_loss_db (dB), redraw_kl_per_repetition
//! [source]      # heralded_pair_rate (1/s), trigger_rate (1/s)
//! [detector]    # efficiency, dark_rate (1/s), gate_width (s), paired_with_trigger
//! [plan]        # voltages (V), repetitions, integration_time (s), seed,
//!               # pulse_delay (s), pulse_jitter (s)
//! ```
//!
//! Missing keys take the library defaults; unknown keys are rejected.

use std::path::Path;

use anyhow::{Context, Result};
use sagnac_core::experiment::{DetectorModel, RunPlan, SourceModel};
use sagnac_core::SwitchConfig64;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "SAGNAC_SEED";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub switch: SwitchConfig64,
    pub source: SourceModel,
    pub detector: DetectorModel,
    pub plan: RunPlan,
}

impl RunConfigFile {
    /// Parses and validates. `env_seed` applies when the file sets no seed.
    pub fn from_toml(text: &str, env_seed: Option<&str>) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        let explicit_seed = table
            .get("plan")
            .and_then(|p| p.as_table())
            .is_some_and(|p| p.contains_key("seed"));
        let mut cfg: RunConfigFile = table.try_into()?;
        if !explicit_seed {
            cfg.apply_env_seed(env_seed)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults(env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_env_seed(env_seed)?;
        Ok(cfg)
    }

    /// Reads `path`, or the defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let env = std::env::var(SEED_ENV).ok();
        match path {
            None => Self::defaults(env.as_deref()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config `{}`", p.display()))?;
                Self::from_toml(&text, env.as_deref())
                    .with_context(|| format!("invalid config `{}`", p.display()))
            }
        }
    }

    fn apply_env_seed(&mut self, env_seed: Option<&str>) -> Result<()> {
        if let Some(s) = env_seed {
            self.plan.seed = s
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}=`{s}` is not an unsigned 64-bit integer"))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.switch.validate()?;
        self.source.validate()?;
        self.detector.validate()?;
        self.plan.validate()?;
        Ok(())
    }
}
