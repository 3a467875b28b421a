//! Run configuration and named presets.
//!
//! Configs are TOML documents. Every table rejects unknown keys.
//!
//! ```toml
//! format = "csv"
//!
//! [model]
//! n_qubits = 4
//! lambda = 0.006
//! stark_u = -0.5
//!
//! [scan]
//! window = [1.9, 2.3]
//! points = 801
//!
//! [[scan.runs]]
//! initial = { k = 0, n = 0 }
//! reference = { order = "first", kind = "anti_tc", n0 = 0, k0 = 0 }
//! ```

use serde::{Deserialize, Serialize};

use crate::effective::{Channel, Order, ResonanceTarget};
use crate::error::{Error, Result};
use crate::model::{default_cutoff, ModelParams};
use crate::protocol::{Cell, DurationRule, ProtocolSpec, StepSpec, Term};
use crate::scan::DEFAULT_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_qubits: usize,
    #[serde(default = "one")]
    pub omega_r: f64,
    /// Working point for `effective` and `validate`; scans and protocols set
    /// their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_q: Option<f64>,
    pub lambda: f64,
    pub stark_u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    /// Parameters with the cutoff defaulted from the largest initial photon number.
    pub fn params(&self, max_initial_photons: usize) -> Result<ModelParams> {
        ModelParams::new(
            self.n_qubits,
            self.omega_r,
            self.omega_q.unwrap_or(self.omega_r),
            self.lambda,
            self.stark_u,
            self.n_max
                .unwrap_or_else(|| default_cutoff(self.n_qubits, max_initial_photons)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRun {
    pub initial: Cell,
    /// Transition whose coupling sets the duration and the predicted peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ResonanceTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_rule: Option<DurationRule>,
}

impl ScanRun {
    pub fn label(&self) -> String {
        format!("k{}_n{}", self.initial.k, self.initial.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub window: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub duration_rule: DurationRule,
    /// Minimum rise of `<N_q>` above its initial value for a peak.
    #[serde(default = "default_min_height")]
    pub min_height: f64,
    pub runs: Vec<ScanRun>,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_min_height() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// `dicke_ladder_4` or `ghz_4`. Mutually exclusive with `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepSpec>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    crate::dynamics::DEFAULT_SAMPLES
}

impl ProtocolSection {
    pub fn spec(&self, model: &ModelSection) -> Result<ProtocolSpec> {
        let initial = self.initial.unwrap_or(Cell::new(0, 0));
        let max_photons = self
            .target
            .iter()
            .flatten()
            .map(|t| t.n)
            .chain(std::iter::once(initial.n))
            .max()
            .unwrap_or(0);
        let params = model.params(max_photons)?;
        let mut spec = match (self.preset.as_deref(), self.steps.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config(
                    "protocol: give either `preset` or `steps`, not both".into(),
                ))
            }
            (Some("dicke_ladder_4"), true) => ProtocolSpec::dicke_ladder(&params, 4)?,
            (Some("ghz_4"), true) => ProtocolSpec::ghz4(&params)?,
            (Some(other), true) => {
                return Err(Error::Config(format!("unknown protocol preset `{other}`")))
            }
            (None, true) => return Err(Error::Config("protocol: no steps given".into())),
            (None, false) => ProtocolSpec {
                n_qubits: params.n_qubits,
                lambda: params.lambda,
                stark_u: params.stark_u,
                omega_r: params.omega_r,
                n_max: Some(params.n_max),
                initial,
                target: None,
                steps: self.steps.clone(),
            },
        };
        if let Some(i) = self.initial {
            spec.initial = i;
        }
        if self.target.is_some() {
            spec.target = self.target.clone();
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveSection {
    /// Cell for the coefficient table.
    #[serde(default = "origin")]
    pub cell: Cell,
    /// Channel to solve for and check selectivity of.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ResonanceTarget>,
}

fn origin() -> Cell {
    Cell::new(0, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            draws: default_draws(),
            seed: default_seed(),
        }
    }
}

fn default_draws() -> usize {
    100
}

fn default_seed() -> u64 {
    20_241_015
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<&ModelSection> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config("missing [model] section".into()))
    }
}

/// Model used by the first-order figures.
pub fn first_order_model() -> ModelSection {
    ModelSection {
        n_qubits: 4,
        omega_r: 1.0,
        omega_q: None,
        lambda: 0.006,
        stark_u: -0.5,
        n_max: None,
    }
}

/// Model used by the second-order figures.
pub fn second_order_model() -> ModelSection {
    ModelSection {
        lambda: 0.1,
        stark_u: -16.0,
        ..first_order_model()
    }
}

pub const SCAN_PRESETS: [&str; 8] = [
    "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8",
];
pub const PROTOCOL_PRESETS: [&str; 2] = ["dicke_ladder_4", "ghz_4"];

fn scan_config(model: ModelSection, window: [f64; 2], points: usize, runs: Vec<ScanRun>) -> RunConfig {
    RunConfig {
        format: None,
        model: Some(model),
        scan: Some(ScanSection {
            window,
            points,
            duration_rule: DurationRule::Transfer,
            min_height: default_min_height(),
            runs,
        }),
        protocol: None,
        effective: None,
        validate: None,
    }
}

fn run(order: Order, kind: Channel, initial: (usize, usize), k0: usize) -> ScanRun {
    ScanRun {
        initial: Cell::new(initial.0, initial.1),
        reference: Some(ResonanceTarget {
            order,
            kind,
            n0: 0,
            k0,
        }),
        duration_rule: None,
    }
}

fn protocol_config(model: ModelSection, name: &str) -> RunConfig {
    RunConfig {
        format: None,
        model: Some(model),
        scan: None,
        protocol: Some(ProtocolSection {
            preset: Some(name.to_string()),
            initial: None,
            target: None,
            steps: Vec::new(),
            samples: default_samples(),
        }),
        effective: None,
        validate: None,
    }
}

/// Named configuration. Scan presets reproduce the figure panels; the
/// protocol presets run the state-preparation sequences.
pub fn preset(name: &str) -> Result<RunConfig> {
    use Channel::{AntiTc, Tc};
    use Order::{First, Second};
    let first = first_order_model();
    let second = second_order_model();
    let cfg = match name {
        "fig2a" => scan_config(
            first,
            [-0.45, 0.35],
            1601,
            (0..4).map(|k| run(First, Tc, (k, 1), k)).collect(),
        ),
        "fig2b" => scan_config(
            first,
            [1.65, 2.25],
            1201,
            (0..4).map(|k| run(First, AntiTc, (k, 0), k)).collect(),
        ),
        "fig3" => scan_config(first, [1.9, 2.3], DEFAULT_POINTS, vec![run(First, AntiTc, (0, 0), 0)]),
        "fig4" => scan_config(first, [-0.3, 0.1], DEFAULT_POINTS, vec![run(First, Tc, (1, 1), 1)]),
        "fig5" => scan_config(first, [1.7, 2.1], DEFAULT_POINTS, vec![run(First, AntiTc, (2, 0), 2)]),
        "fig6" => scan_config(first, [-0.1, 0.3], DEFAULT_POINTS, vec![run(First, Tc, (3, 1), 3)]),
        "fig7" => scan_config(second, [1.8, 2.2], DEFAULT_POINTS, vec![run(Second, AntiTc, (0, 0), 0)]),
        "fig8" => scan_config(second, [-0.2, 0.2], DEFAULT_POINTS, vec![run(Second, Tc, (2, 2), 2)]),
        "dicke_ladder_4" => protocol_config(first, name),
        "ghz_4" => protocol_config(second, name),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}, {}",
                SCAN_PRESETS.join(", "),
                PROTOCOL_PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in SCAN_PRESETS.iter().chain(PROTOCOL_PRESETS.iter()) {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{name}");
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[model]\nn_qubits = 4\nlambda = 0.1\nstark_u = -1.0\ncolour = 3\n";
        assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[model]\nn_qubits = 4\nlambda = 0.1\nstark_u = -1.0\n").is_ok());
        assert!(RunConfig::from_toml("bogus = true").is_err());
    }

    #[test]
    fn doc_example_parses() {
        let text = "format = \"csv\"\n[model]\nn_qubits = 4\nlambda = 0.006\nstark_u = -0.5\n\
                    [scan]\nwindow = [1.9, 2.3]\npoints = 801\n[[scan.runs]]\ninitial = { k = 0, n = 0 }\n\
                    reference = { order = \"first\", kind = \"anti_tc\", n0 = 0, k0 = 0 }\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg, preset("fig3").map(|c| RunConfig { format: Some(OutputFormat::Csv), ..c }).unwrap());
    }

    #[test]
    fn protocol_section_needs_one_source() {
        let model = second_order_model();
        let mut section = ProtocolSection {
            preset: None,
            initial: None,
            target: None,
            steps: Vec::new(),
            samples: 10,
        };
        assert!(section.spec(&model).is_err());
        section.preset = Some("ghz_4".into());
        assert_eq!(section.spec(&model).unwrap().steps.len(), 2);
        section.preset = Some("nope".into());
        assert!(section.spec(&model).is_err());
    }
}
