//! Declarative experiment configuration.
//!
//! A config is one TOML document: a `[metric]` table, an optional `[grid]`
//! table (each experiment has its own default grid), a seed and an
//! `[experiment]` table selected by `name`. Every table rejects unknown keys
//! and falls back to the defaults below for keys it omits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabError;
use crate::grid_calculus::{SpacetimeGrid, WindowSpec};
use crate::hamilton_flow::{CertifyOptions, EscapeOptions};
use crate::metric_symbols::{DecayLattice, MetricSpec, WeightSpec};
use crate::resolvent_lab::{PowerOptions, RadiationSpec};
use crate::scattering::{ComparisonSpec, FitWindow};

/// Square `[−L, L]²` box with `n` points per axis, or `nt` in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
}

impl GridSpec {
    pub const fn square(half_width: f64, n: usize) -> Self {
        Self { half_width, n, nt: None }
    }

    pub fn build(&self) -> Result<SpacetimeGrid, LabError> {
        SpacetimeGrid::new(self.half_width, self.half_width, self.nt.unwrap_or(self.n), self.n).map_err(|e| LabError::Config(format!("grid: {e}")))
    }
}

/// Absorbing collar with its onset given as a fraction of the inner radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapConfig {
    pub onset_fraction: f64,
    pub strength: f64,
    pub exponent: f64,
}

impl Default for CapConfig {
    fn default() -> Self {
        Self { onset_fraction: 0.7, strength: 1.0, exponent: 2.0 }
    }
}

impl CapConfig {
    pub fn spec(&self, grid: &SpacetimeGrid) -> crate::resolvent_lab::CapSpec {
        crate::resolvent_lab::CapSpec { onset: self.onset_fraction * grid.inner_radius(), strength: self.strength, exponent: self.exponent }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricValidateParams {
    /// Decay order to verify; the field's own `μ` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub lattice: DecayLattice,
    pub accposi_eps: f64,
    pub accposi_radius: f64,
    pub samples: usize,
}

impl Default for MetricValidateParams {
    fn default() -> Self {
        Self { mu: None, lattice: DecayLattice::default(), accposi_eps: 0.1, accposi_radius: 10.0, samples: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowCertifyParams {
    pub radius: f64,
    pub options: CertifyOptions,
}

impl Default for FlowCertifyParams {
    fn default() -> Self {
        Self { radius: 10.0, options: CertifyOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeVerifyParams {
    pub radius: f64,
    pub delta: f64,
    pub calibration: usize,
    pub samples: usize,
    pub certify: CertifyOptions,
    pub options: EscapeOptions,
}

impl Default for EscapeVerifyParams {
    fn default() -> Self {
        Self { radius: 10.0, delta: 0.5, calibration: 10_000, samples: 100_000, certify: CertifyOptions::default(), options: EscapeOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolsAppendixParams {
    pub samples: usize,
    /// Weight for the upper and incoming bounds; needs `l > −½` and
    /// `2l + 1 > 2κ`.
    pub weight: WeightSpec,
    /// Weight for the outgoing bound; needs `l < −½`.
    pub outgoing_weight: WeightSpec,
    /// Width of the incoming/outgoing bands.
    pub eps: f64,
    pub r: f64,
    pub big_r: f64,
    /// `β₁ < β₂` of the mid cutoff.
    pub mid: [f64; 2],
    pub accposi_eps: f64,
    pub ellipticity_eps: f64,
    pub m0: f64,
}

impl Default for SymbolsAppendixParams {
    fn default() -> Self {
        Self {
            samples: 100_000,
            weight: WeightSpec::new(0.5, 0.25, 0.3, 1.0, 0.4),
            outgoing_weight: WeightSpec::new(0.5, -1.0, 0.3, 1.0, 0.4),
            eps: 0.1,
            r: 1.0,
            big_r: 10.0,
            mid: [-0.5, 0.5],
            accposi_eps: 0.1,
            ellipticity_eps: 0.05,
            m0: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MourreParams {
    pub window: WindowSpec,
    /// Points per axis of the refined grid.
    pub refined_n: usize,
}

impl Default for MourreParams {
    fn default() -> Self {
        Self { window: WindowSpec::band(0.5, 1.5, 0.25), refined_n: 48 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LapParams {
    pub lambda: f64,
    pub s: f64,
    /// Weight exponent of the control sweep, expected not to settle.
    pub control_s: f64,
    pub eps: Vec<f64>,
    /// Allowed relative distance to the lattice oracle (flat field only).
    pub oracle_tol: f64,
    pub cap: CapConfig,
    pub power: PowerOptions,
}

impl Default for LapParams {
    fn default() -> Self {
        Self { lambda: 1.0, s: 0.6, control_s: 0.3, eps: vec![1e-1, 1e-2, 1e-3, 1e-4], oracle_tol: 0.1, cap: CapConfig::default(), power: PowerOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubellipticParams {
    /// `z = re + i·im`.
    pub z: [f64; 2],
    pub k: f64,
    pub l: f64,
    pub trials: usize,
}

impl Default for SubellipticParams {
    fn default() -> Self {
        Self { z: [0.0, 1.0], k: 0.0, l: 0.0, trials: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalCompactnessParams {
    pub delta: f64,
    /// `δ` of the control fit, expected to grow.
    pub control_delta: f64,
    pub trials: usize,
}

impl Default for LocalCompactnessParams {
    fn default() -> Self {
        Self { delta: 0.5, control_delta: 0.0, trials: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchwartzParams {
    pub z: [f64; 2],
    pub orders: Vec<f64>,
    /// Source `exp(−|x|²/width²)`.
    pub source_width: f64,
    pub cap: CapConfig,
}

impl Default for SchwartzParams {
    fn default() -> Self {
        Self { z: [0.0, 1.0], orders: vec![0.0, 1.0, 2.0], source_width: 1.0, cap: CapConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationParams {
    pub spec: RadiationSpec,
    pub cap: CapConfig,
    /// The source `exp(−|x|²/4.5)·cos(ω t)·cos(k y)` with `ω² = k² + m₀²`.
    pub source_wavenumber: f64,
}

impl Default for RadiationParams {
    fn default() -> Self {
        Self {
            spec: RadiationSpec::default(),
            cap: CapConfig::default(),
            source_wavenumber: 2.0,
        }
    }
}

/// Remainder-rate check attached to a Feynman comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemainderParams {
    /// `γ ∈ (½, 1)`; the default for the field's `μ` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub window: FitWindow,
    /// Slack added to `1 − 2γ`.
    pub slack: f64,
}

impl Default for RemainderParams {
    fn default() -> Self {
        Self { gamma: None, window: FitWindow { start: 8.0, doublings: 5 }, slack: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeynmanCompareParams {
    pub m0: f64,
    pub comparison: ComparisonSpec,
    pub cap: CapConfig,
    /// Window for the asymptotic amplitudes `g_{±,±}`.
    pub window: FitWindow,
    /// Limit on `‖g_{+,+}‖` and `‖g_{−,−}‖` relative to their side.
    pub amplitude_limit: f64,
    /// Source `ψ(t/width)·exp(−y²/2)` with `ψ` a smooth bump on `(−1, 1)`.
    pub source_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remainder: Option<RemainderParams>,
}

impl Default for FeynmanCompareParams {
    fn default() -> Self {
        Self {
            m0: 1.0,
            comparison: ComparisonSpec::default(),
            cap: CapConfig { onset_fraction: 0.5, strength: 2.0, exponent: 2.0 },
            window: FitWindow { start: 8.0, doublings: 2 },
            amplitude_limit: 5e-2,
            source_width: 3.0,
            remainder: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Experiment {
    MetricValidate(MetricValidateParams),
    FlowCertify(FlowCertifyParams),
    EscapeVerify(EscapeVerifyParams),
    SymbolsAppendix(SymbolsAppendixParams),
    Mourre(MourreParams),
    Lap(LapParams),
    Subelliptic(SubellipticParams),
    LocalCompactness(LocalCompactnessParams),
    Schwartz(SchwartzParams),
    Radiation(RadiationParams),
    FeynmanCompare(FeynmanCompareParams),
}

pub const EXPERIMENT_NAMES: [&str; 11] = [
    "metric-validate",
    "flow-certify",
    "escape-verify",
    "symbols-appendix",
    "mourre",
    "lap",
    "subelliptic",
    "local-compactness",
    "schwartz",
    "radiation",
    "feynman-compare",
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::MetricValidate(_) => "metric-validate",
            Experiment::FlowCertify(_) => "flow-certify",
            Experiment::EscapeVerify(_) => "escape-verify",
            Experiment::SymbolsAppendix(_) => "symbols-appendix",
            Experiment::Mourre(_) => "mourre",
            Experiment::Lap(_) => "lap",
            Experiment::Subelliptic(_) => "subelliptic",
            Experiment::LocalCompactness(_) => "local-compactness",
            Experiment::Schwartz(_) => "schwartz",
            Experiment::Radiation(_) => "radiation",
            Experiment::FeynmanCompare(_) => "feynman-compare",
        }
    }

    /// The experiment with all parameters at their defaults.
    pub fn default_named(name: &str) -> Result<Self, LabError> {
        Ok(match name {
            "metric-validate" => Experiment::MetricValidate(Default::default()),
            "flow-certify" => Experiment::FlowCertify(Default::default()),
            "escape-verify" => Experiment::EscapeVerify(Default::default()),
            "symbols-appendix" => Experiment::SymbolsAppendix(Default::default()),
            "mourre" => Experiment::Mourre(Default::default()),
            "lap" => Experiment::Lap(Default::default()),
            "subelliptic" => Experiment::Subelliptic(Default::default()),
            "local-compactness" => Experiment::LocalCompactness(Default::default()),
            "schwartz" => Experiment::Schwartz(Default::default()),
            "radiation" => Experiment::Radiation(Default::default()),
            "feynman-compare" => Experiment::FeynmanCompare(Default::default()),
            other => return Err(LabError::Config(format!("unknown experiment {other:?}; expected one of {}", EXPERIMENT_NAMES.join(", ")))),
        })
    }

    /// Grid used when the config has no `[grid]` table.
    pub fn default_grid(&self) -> GridSpec {
        match self {
            Experiment::Mourre(_) => GridSpec::square(6.0, 32),
            Experiment::Subelliptic(_) | Experiment::LocalCompactness(_) | Experiment::Schwartz(_) => GridSpec::square(8.0, 32),
            Experiment::FeynmanCompare(_) => GridSpec { half_width: 16.0, n: 128, nt: Some(160) },
            _ => GridSpec::square(16.0, 128),
        }
    }
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Directory for the report and CSV series; nothing is written when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads for this run; 0 keeps the global pool.
    #[serde(default)]
    pub threads: usize,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { metric: MetricSpec::default(), grid: None, seed: default_seed(), out: None, threads: 0, experiment }
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| self.experiment.default_grid())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, LabError> {
        let c: Self = toml::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let s = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String, LabError> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Range checks that do not need the experiment to run.
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed {} does not fit a TOML integer (max {})", self.seed, i64::MAX));
        }
        let g = self.grid_spec();
        if !(g.half_width > 0.0 && g.half_width.is_finite()) || g.n < 8 || g.nt.is_some_and(|n| n < 8) {
            return bad(format!("grid needs half_width > 0 and at least 8 points per axis, got {g:?}"));
        }
        let m = &self.metric;
        if !(m.bump_amplitude.abs() < 1.0 && m.bump_width > 0.0 && m.decay > 0.0) {
            return bad("metric needs |bump_amplitude| < 1, bump_width > 0, decay > 0".into());
        }
        let positive = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(LabError::Config(format!("{name} must be positive, got {v}"))) };
        let decreasing = |name: &str, v: &[f64]| {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) || v.windows(2).any(|w| w[1] >= w[0]) {
                Err(LabError::Config(format!("{name} must be positive and strictly decreasing")))
            } else {
                Ok(())
            }
        };
        match &self.experiment {
            Experiment::MetricValidate(p) => {
                positive("accposi_radius", p.accposi_radius)?;
                if !(p.accposi_eps > 0.0 && p.accposi_eps < 1.0) {
                    return bad("accposi_eps must lie in (0, 1)".into());
                }
            }
            Experiment::FlowCertify(p) => positive("radius", p.radius)?,
            Experiment::EscapeVerify(p) => {
                positive("radius", p.radius)?;
                if !(p.delta > 0.0 && p.delta < 0.75) {
                    return bad("delta must lie in (0, 3/4)".into());
                }
            }
            Experiment::SymbolsAppendix(p) => {
                if !(p.eps > 0.0 && p.eps < 0.25) || !(p.mid[0] < p.mid[1]) {
                    return bad("need 0 < eps < 1/4 and mid[0] < mid[1]".into());
                }
                let w = &p.weight;
                if !(w.l > -0.5 && 2.0 * w.l + 1.0 > 2.0 * w.kappa) {
                    return bad("weight needs l > -1/2 and 2l + 1 > 2 kappa".into());
                }
                if !(p.outgoing_weight.l < -0.5) {
                    return bad("outgoing_weight needs l < -1/2".into());
                }
                positive("m0", p.m0)?;
            }
            Experiment::Mourre(p) => {
                if p.refined_n <= g.n {
                    return bad("refined_n must exceed the grid size".into());
                }
            }
            Experiment::Lap(p) => {
                decreasing("eps", &p.eps)?;
                if p.eps.len() < 3 {
                    return bad("lap needs at least three ε".into());
                }
                if p.lambda == 0.0 || !(p.s > 0.5) || !(p.control_s > 0.0 && p.control_s <= 0.5) {
                    return bad("lap needs lambda ≠ 0, s > 1/2 and 0 < control_s ≤ 1/2".into());
                }
            }
            Experiment::Subelliptic(p) => {
                if p.z[1] == 0.0 || p.trials == 0 {
                    return bad("subelliptic needs Im z ≠ 0 and at least one trial".into());
                }
            }
            Experiment::LocalCompactness(p) => {
                if p.trials == 0 {
                    return bad("local-compactness needs at least one trial".into());
                }
            }
            Experiment::Schwartz(p) => {
                positive("source_width", p.source_width)?;
                if p.z[1] == 0.0 {
                    return bad("schwartz needs Im z ≠ 0".into());
                }
            }
            Experiment::Radiation(p) => {
                positive("m0", p.spec.m0)?;
                if p.spec.radii.windows(2).any(|w| w[1] <= w[0]) || p.spec.radii.is_empty() {
                    return bad("radii must increase".into());
                }
            }
            Experiment::FeynmanCompare(p) => {
                positive("m0", p.m0)?;
                positive("t_max", p.comparison.t_max)?;
                decreasing("comparison.eps", &p.comparison.eps)?;
                if p.remainder.as_ref().is_some_and(|r| r.gamma.is_some_and(|g| !(g > 0.5 && g < 1.0))) {
                    return bad("remainder.gamma must lie in (1/2, 1)".into());
                }
            }
        }
        Ok(())
    }
}

/// A set of configs run together.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub runs: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, LabError> {
        let c: Self = toml::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        for r in &c.runs {
            r.validate()?;
        }
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let s = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }
}
