//! Run configuration files.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use custctl_core::{
    paper_preset, Objective, Preset, Scenario, SweepParameter, SweepSettings, SweepSpec,
};
use serde::{Deserialize, Serialize};

/// Where the scenario comes from: a named preset or a full inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioSource {
    Preset(String),
    Inline(Box<Scenario>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub param: SweepParameter,
    /// Defaults to the parameter's standard sample points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    /// Overrides the scenario's own objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub settings: SweepSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            scenario: ScenarioSource::Preset(preset.key().to_string()),
            objective: None,
            settings: SweepSettings::default(),
            experiment: None,
            output: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("invalid field '{path}': {}", e.into_inner())
        })
    }

    /// The scenario this config describes, validated.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.scenario {
            ScenarioSource::Preset(key) => paper_preset(Preset::from_str(key)?),
            ScenarioSource::Inline(s) => (**s).clone(),
        };
        if let Some(objective) = self.objective {
            s.objective = objective;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let exp = self
            .experiment
            .as_ref()
            .context("a sweep needs a parameter (--param or experiment.param)")?;
        let mut spec = SweepSpec::new(exp.param, self.scenario()?);
        if let Some(values) = &exp.values {
            spec.values = values.clone();
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn output(&self) -> OutputConfig {
        self.output.clone().unwrap_or_default()
    }

    /// Copy for echoing into artifacts: the objective and grid are made
    /// explicit and the output location is dropped, so the echo reproduces
    /// the run wherever it is written.
    pub fn resolved(&self) -> Result<Self> {
        let scenario = self.scenario()?;
        let mut settings = self.settings;
        if settings.intervals.is_none()
            && self
                .experiment
                .as_ref()
                .is_none_or(|e| e.param != SweepParameter::Horizon)
        {
            settings.intervals = Some(settings.grid_for(scenario.t_f)?.n);
        }
        Ok(Self {
            scenario: self.scenario.clone(),
            objective: Some(scenario.objective),
            settings,
            experiment: self.experiment.clone(),
            output: None,
        })
    }
}
