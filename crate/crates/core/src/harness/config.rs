//! Experiment configuration, read from TOML and overridable from the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distortion::{Budgets, DistortionParams};
use crate::number_theory::ConstantTypeIrrational;
use crate::twist_map::{Potential, TwistMap};
use crate::variational::required_window;
use crate::{Error, Result};

/// Rotation number: a named preset or a repeating period of partial quotients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Preset(String),
    Quotients(Vec<u64>),
}

impl AlphaSpec {
    pub fn build(&self, depth: usize) -> Result<ConstantTypeIrrational> {
        match self {
            AlphaSpec::Preset(name) => ConstantTypeIrrational::preset(name, depth),
            AlphaSpec::Quotients(q) => ConstantTypeIrrational::from_partial_quotients(q, depth),
        }
    }
}

/// Full description of one run; everything random derives from `seeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: AlphaSpec,
    pub depth: usize,
    /// Map level `n`; the potential oscillates at frequency `q_n`.
    pub level: usize,
    pub eps: f64,
    /// Cosine modes `(k, c)` of the potential `sum c cos(2 pi k x)`.
    pub potential: Vec<(u32, f64)>,
    pub amplitude: f64,
    pub kappa_min: i64,
    pub kappa_max: i64,
    /// Window convergent index `M`.
    pub window: usize,
    /// Required `q_M / q_{N-(kappa_max)}`.
    pub margin: f64,
    pub budgets: Budgets,
    pub mixed_fraction: f64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// The golden acceptance setting: `q_n = 89`, `q_M = 46368`, kappa in `[6, 10]`.
    fn default() -> Self {
        Self {
            alpha: AlphaSpec::Preset("golden".into()),
            depth: 24,
            level: 10,
            eps: 0.5,
            potential: Potential::standard().modes().to_vec(),
            amplitude: 1.0,
            kappa_min: 6,
            kappa_max: 10,
            window: 23,
            margin: 1.0,
            budgets: Budgets::default(),
            mixed_fraction: crate::chords::MIXED_FRACTION,
            seeds: vec![1, 2, 3],
            store: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// JSON of the fields that determine the computation; output paths are excluded.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.store = None;
        c.out_dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn alpha(&self) -> Result<ConstantTypeIrrational> {
        self.alpha.build(self.depth)
    }

    pub fn map(&self) -> Result<TwistMap> {
        let potential = Potential::new(self.potential.clone())?.scaled(self.amplitude);
        TwistMap::new(self.alpha()?, self.level, self.eps, potential)
    }

    pub fn params(&self, seed: u64) -> DistortionParams {
        DistortionParams { budgets: self.budgets, seed, mixed_fraction: self.mixed_fraction }
    }

    /// Structural checks and the window feasibility rule, before any solve.
    pub fn validate(&self) -> Result<()> {
        if self.kappa_max < self.kappa_min {
            return Err(Error::InvalidInput(format!("empty kappa range [{}, {}]", self.kappa_min, self.kappa_max)));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("at least one seed is required".into()));
        }
        let b = self.budgets;
        if b.chords == 0 || b.pairs == 0 || b.quadruples == 0 {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mixed_fraction) {
            return Err(Error::InvalidInput(format!("mixed fraction {} outside [0, 1]", self.mixed_fraction)));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidInput(format!("amplitude {} must be finite and >= 0", self.amplitude)));
        }
        if !(self.margin > 0.0) {
            return Err(Error::InvalidInput(format!("margin {} must be positive", self.margin)));
        }
        let map = self.map()?;
        let alpha = map.alpha();
        if self.window >= alpha.depth() {
            return Err(Error::OutOfRange { index: self.window, depth: alpha.depth() });
        }
        let need = required_window(alpha, self.kappa_max, self.margin)?;
        if self.window < need {
            return Err(Error::Infeasible(format!(
                "kappa up to {} requires window index M >= {need}, got M = {}",
                self.kappa_max, self.window
            )));
        }
        Ok(())
    }
}

/// Cartesian grid over a base configuration; an empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub level: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub kappa_max: Vec<i64>,
}

impl SweepGrid {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Grid points in row-major order: amplitude outermost, kappa_max innermost.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let b = &self.base;
        let mut out = Vec::new();
        for &amplitude in &axis(&self.amplitude, b.amplitude) {
            for &level in &axis(&self.level, b.level) {
                for &eps in &axis(&self.eps, b.eps) {
                    for &kappa_max in &axis(&self.kappa_max, b.kappa_max) {
                        out.push(ExperimentConfig { amplitude, level, eps, kappa_max, ..b.clone() });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_feasible_and_round_trips() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_paths_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.store = Some("x.jsonl".into());
        assert_eq!(a.hash(), b.hash());
        b.amplitude = 0.5;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn infeasible_window_rejected() {
        let c = ExperimentConfig { window: 20, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Infeasible(_))));
        let c = ExperimentConfig { kappa_min: 9, kappa_max: 8, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn toml_file_form() {
        let text = r#"
            alpha = { quotients = [2] }
            depth = 20
            level = 6
            eps = 0.5
            potential = [[1, 0.025330295910584444]]
            amplitude = 1.0
            kappa_min = 6
            kappa_max = 7
            window = 14
            margin = 1.0
            budgets = { chords = 8, pairs = 4, quadruples = 2 }
            mixed_fraction = 0.25
            seeds = [4]
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.alpha, AlphaSpec::Quotients(vec![2]));
        assert!(ExperimentConfig::from_toml("depth = 3\nbogus = 1").is_err());
    }

    #[test]
    fn grid_expands_row_major() {
        let g = SweepGrid {
            base: ExperimentConfig::default(),
            amplitude: vec![0.0, 1.0],
            level: vec![],
            eps: vec![0.25, 0.5, 0.75],
            kappa_max: vec![],
        };
        let pts = g.expand();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].amplitude, pts[0].eps), (0.0, 0.25));
        assert_eq!((pts[1].amplitude, pts[1].eps), (0.0, 0.5));
        assert_eq!((pts[5].amplitude, pts[5].eps), (1.0, 0.75));
        assert!(pts.iter().all(|c| c.level == 10));
        let text = toml::to_string(&g).unwrap();
        assert_eq!(SweepGrid::from_toml(&text).unwrap(), g);
    }
}
