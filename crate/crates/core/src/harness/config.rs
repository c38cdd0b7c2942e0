use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBankConfig;
use crate::loop_algebra::{TfCoefficients, TransferFunction};
use crate::network::NetworkConfig;
use crate::plant::{
    spread, SensorGeometry, SensorRow, SteeringConfig, Track, TrackSpec, DEFAULT_OFF_TRACK_LIMIT,
};

pub const DEFAULT_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// One row of 16 ground sensors, 8 predictors, 40 inputs, layers 12-6-1.
    #[serde(rename = "sim16")]
    Sim16,
    /// 6 x 16 intensity grid, 48 predictors, 240 inputs, 11 hidden layers of
    /// 11 neurons and a 3-neuron head.
    #[serde(rename = "cam6x16")]
    Cam6x16,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Sim16 => "sim16",
            Preset::Cam6x16 => "cam6x16",
        }
    }

    pub fn config(self) -> PresetConfig {
        match self {
            Preset::Sim16 => PresetConfig {
                plant: PlantConfig::default(),
                filter: FilterBankConfig::default(),
                network: NetworkConfig::default(),
            },
            Preset::Cam6x16 => {
                let plant = PlantConfig {
                    sensors: SensorGeometry {
                        rows: (0..6)
                            .map(|r| SensorRow {
                                lookahead: 3.0 + 0.9 * r as f64,
                                offsets: spread(8, 0.74, 4.45),
                            })
                            .collect(),
                        ..PlantConfig::default().sensors
                    },
                    ..PlantConfig::default()
                };
                PresetConfig {
                    plant,
                    filter: FilterBankConfig {
                        peak_min: 5,
                        peak_max: 10,
                        ..FilterBankConfig::default()
                    },
                    network: NetworkConfig {
                        layers: [vec![11; 11], vec![3]].concat(),
                        init_range: 1.7,
                        ..NetworkConfig::default()
                    },
                }
            }
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim16" => Ok(Preset::Sim16),
            "cam6x16" => Ok(Preset::Cam6x16),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected sim16 or cam6x16)"
            ))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical setup of the line follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub track: TrackSpec,
    pub wheelbase: f64,
    pub sensors: SensorGeometry,
    pub steering: SteeringConfig,
    pub dt: f64,
    pub off_track_limit: usize,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            track: Track::default_spec(),
            wheelbase: 9.75,
            sensors: SensorGeometry {
                ground_forward: 1.23,
                ground_lateral: 0.6,
                rows: vec![SensorRow {
                    lookahead: 4.75,
                    offsets: spread(8, 0.74, 4.45),
                }],
            },
            steering: SteeringConfig::default(),
            dt: 0.01,
            off_track_limit: DEFAULT_OFF_TRACK_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetConfig {
    pub plant: PlantConfig,
    pub filter: FilterBankConfig,
    pub network: NetworkConfig,
}

/// One trial. Preset sections can be replaced wholesale by the optional
/// overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub preset: Preset,
    pub eta: f64,
    pub seed: u64,
    pub n_steps: usize,
    pub reflex_only: bool,
    /// Reflex-loop transfer function on the learning path.
    pub t_r: TfCoefficients,
    pub error_gain_sign: f64,
    pub plant: Option<PlantConfig>,
    pub filter: Option<FilterBankConfig>,
    pub network: Option<NetworkConfig>,
    pub steering: Option<SteeringConfig>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Sim16,
            eta: 1e-2,
            seed: 0,
            n_steps: DEFAULT_STEPS,
            reflex_only: false,
            t_r: TfCoefficients {
                num: vec![1.0],
                den: vec![1.0],
            },
            error_gain_sign: 1.0,
            plant: None,
            filter: None,
            network: None,
            steering: None,
        }
    }
}

impl TrialConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!(
                "eta must be a non-negative number, got {}",
                self.eta
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if self.error_gain_sign != 1.0 && self.error_gain_sign != -1.0 {
            return Err(Error::Config(format!(
                "error_gain_sign must be +1 or -1, got {}",
                self.error_gain_sign
            )));
        }
        self.transfer_function()?;
        Ok(())
    }

    pub fn transfer_function(&self) -> Result<TransferFunction> {
        TransferFunction::new(self.t_r.num.clone(), self.t_r.den.clone())
            .map_err(|e| Error::Config(format!("t_r: {e}")))
    }

    /// Preset values with the overrides applied.
    pub fn resolve(&self) -> PresetConfig {
        let mut out = self.preset.config();
        if let Some(p) = &self.plant {
            out.plant = p.clone();
        }
        if let Some(f) = self.filter {
            out.filter = f;
        }
        if let Some(n) = &self.network {
            out.network = n.clone();
        }
        if let Some(s) = self.steering {
            out.plant.steering = s;
        }
        out
    }
}
