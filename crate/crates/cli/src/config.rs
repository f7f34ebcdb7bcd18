//! TOML run configuration. Section and field names mirror the library's
//! parameter types, so a `[params]` table deserializes straight into the
//! matching struct.

use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use boucwen::fracdiff::Memory;
use boucwen::identify::DeConfig;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Simulate,
    Identify,
    Compensate,
    Fracdiff,
    Normalize,
    Metrics,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Simulate => "simulate",
            CommandName::Identify => "identify",
            CommandName::Compensate => "compensate",
            CommandName::Fracdiff => "fracdiff",
            CommandName::Normalize => "normalize",
            CommandName::Metrics => "metrics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Cbw,
    CbwAux,
    Nbw,
    Anbw,
    Fonbw,
    Zhu,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Cbw => "cbw",
            ModelName::CbwAux => "cbw_aux",
            ModelName::Nbw => "nbw",
            ModelName::Anbw => "anbw",
            ModelName::Fonbw => "fonbw",
            ModelName::Zhu => "zhu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorName {
    SineOffset,
    DecayingSweep,
    Multifreq,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub generator: Option<GeneratorName>,
    pub csv: Option<PathBuf>,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<(), AppError> {
        match (&self.generator, &self.csv) {
            (Some(_), Some(_)) => {
                return Err(AppError::Config(
                    "[signal] must name either a generator or a csv file, not both".into(),
                ))
            }
            (None, None) => {
                return Err(AppError::Config(
                    "[signal] must name a generator or a csv file".into(),
                ))
            }
            (Some(gen), None) => {
                let need = |name: &str, v: Option<f64>| {
                    v.ok_or_else(|| {
                        AppError::Config(format!("[signal] {name} is required for this generator"))
                    })
                    .map(|_| ())
                };
                let forbid = |name: &str, v: Option<f64>| {
                    if v.is_some() {
                        Err(AppError::Config(format!(
                            "[signal] {name} does not apply to this generator"
                        )))
                    } else {
                        Ok(())
                    }
                };
                need("duration", self.duration)?;
                need("dt", self.dt)?;
                match gen {
                    GeneratorName::SineOffset => {
                        need("amplitude", self.amplitude)?;
                        need("frequency", self.frequency)?;
                    }
                    GeneratorName::DecayingSweep | GeneratorName::Multifreq => {
                        forbid("amplitude", self.amplitude)?;
                        forbid("frequency", self.frequency)?;
                    }
                }
            }
            (None, Some(path)) => {
                for (name, v) in [
                    ("amplitude", self.amplitude),
                    ("frequency", self.frequency),
                    ("duration", self.duration),
                    ("dt", self.dt),
                ] {
                    if v.is_some() {
                        return Err(AppError::Config(format!(
                            "[signal] {name} does not apply to a csv source"
                        )));
                    }
                }
                if !path.exists() {
                    return Err(AppError::Config(format!(
                        "[signal] csv file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MemoryDoc {
    Count(usize),
    Text(String),
}

impl MemoryDoc {
    pub fn to_memory(&self) -> Result<Memory, AppError> {
        let text = match self {
            MemoryDoc::Count(n) => n.to_string(),
            MemoryDoc::Text(s) => s.clone(),
        };
        text.parse::<Memory>()
            .map_err(|e| AppError::Config(format!("[solver] memory: {e}")))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub memory: Option<MemoryDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySpec {
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub bounds: Vec<[f64; 2]>,
    pub target_objective: Option<f64>,
    pub f_init: Option<f64>,
    pub cr_init: Option<f64>,
    pub f_lo: Option<f64>,
    pub f_hi: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

impl IdentifySpec {
    pub fn to_de_config(&self, seed_override: Option<u64>) -> DeConfig {
        let seed = seed_override.unwrap_or(self.seed);
        let mut cfg = DeConfig::new(self.population, self.generations, self.bounds.clone(), seed);
        cfg.target_objective = self.target_objective;
        if let Some(v) = self.f_init {
            cfg.f_init = v;
        }
        if let Some(v) = self.cr_init {
            cfg.cr_init = v;
        }
        if let Some(v) = self.f_lo {
            cfg.f_lo = v;
        }
        if let Some(v) = self.f_hi {
            cfg.f_hi = v;
        }
        if let Some(v) = self.tau1 {
            cfg.tau1 = v;
        }
        if let Some(v) = self.tau2 {
            cfg.tau2 = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensateMode {
    Delay,
    FixedPoint,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensateSpec {
    pub mode: Option<CompensateMode>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracdiffSpec {
    pub lambda: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSpec {
    #[serde(default)]
    pub loops: bool,
    pub grid_points: Option<usize>,
}

/// Asymmetric normalized model document: polynomial input gain plus the
/// normalized state constants.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnbwDoc {
    pub poly: Vec<f64>,
    pub k_h: f64,
    pub rho: f64,
    pub sigma: f64,
    pub n: f64,
    #[serde(default)]
    pub hbar_init: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub model: Option<ModelName>,
    pub out_dir: Option<PathBuf>,
    pub params: Option<toml::Value>,
    pub signal: Option<SignalSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub identify: Option<IdentifySpec>,
    pub compensate: Option<CompensateSpec>,
    pub fracdiff: Option<FracdiffSpec>,
    #[serde(default)]
    pub export: ExportSpec,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        if let Some(signal) = &cfg.signal {
            signal.validate()?;
        }
        Ok(cfg)
    }

    /// Deserializes the `[params]` table into the model's parameter struct.
    pub fn typed_params<T: serde::de::DeserializeOwned>(&self) -> Result<T, AppError> {
        let table = self
            .params
            .clone()
            .ok_or_else(|| AppError::Config("missing [params] table".into()))?;
        table
            .try_into()
            .map_err(|e| AppError::Config(format!("[params]: {e}")))
    }

    pub fn required_model(&self) -> Result<ModelName, AppError> {
        self.model
            .ok_or_else(|| AppError::Config("missing model field".into()))
    }

    pub fn required_signal(&self) -> Result<&SignalSpec, AppError> {
        self.signal
            .as_ref()
            .ok_or_else(|| AppError::Config("missing [signal] section".into()))
    }
}
