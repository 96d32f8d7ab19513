//! Scenario description shared by the single-scenario commands.

use std::path::Path;

use complab::classical::VERDICT_TOLERANCE;
use complab::sampling::DEFAULT_CONFIDENCE_SIGMA;
use complab::young::YoungSetting;
use complab::{BlochState, Direction, MeasurementModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub state: [f64; 3],
    pub model: ModelSpec,
    #[serde(default)]
    pub options: Options,
}

/// Externally tagged, so a file naming both models is rejected by the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Explicit {
        gamma_x: f64,
        gamma_z: f64,
        gamma_xz: f64,
        #[serde(default = "default_direction")]
        n: [f64; 3],
    },
    Young {
        theta: f64,
        phi: f64,
    },
}

fn default_direction() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub verdict_tolerance: f64,
    pub confidence_sigma: f64,
    /// Young angles are given in degrees.
    pub degrees: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            verdict_tolerance: VERDICT_TOLERANCE,
            confidence_sigma: DEFAULT_CONFIDENCE_SIGMA,
            degrees: false,
        }
    }
}

pub struct Scenario {
    pub state: BlochState,
    pub model: MeasurementModel,
    pub young: Option<YoungSetting>,
    pub options: Options,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is plain data")
    }

    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let [x, y, z] = self.state;
        let state = BlochState::new(x, y, z)?;
        let (model, young) = match self.model {
            ModelSpec::Explicit {
                gamma_x,
                gamma_z,
                gamma_xz,
                n,
            } => {
                let n = Direction::new(n[0], n[1], n[2])?;
                (MeasurementModel::new(gamma_x, gamma_z, gamma_xz, n)?, None)
            }
            ModelSpec::Young { theta, phi } => {
                let (theta, phi) = if self.options.degrees {
                    (theta.to_radians(), phi.to_radians())
                } else {
                    (theta, phi)
                };
                let y = YoungSetting::unrestricted(theta, phi)?;
                (complab::young::gammas_from_angles(&y), Some(y))
            }
        };
        if !(self.options.verdict_tolerance >= 0.0) {
            return Err(CliError::Input("verdict_tolerance must be nonnegative".into()));
        }
        if !(self.options.confidence_sigma > 0.0) {
            return Err(CliError::Input("confidence_sigma must be positive".into()));
        }
        Ok(Scenario {
            state,
            model,
            young,
            options: self.options.clone(),
        })
    }
}

/// Parse `"a,b,c"` into three numbers.
pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
    }
    Ok(out)
}
