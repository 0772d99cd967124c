//! Scenario configuration read from TOML.

use std::path::{Path, PathBuf};

use endotomo::sampling::Binning;
use endotomo::tomography::{BackProjection, MarginalOptions};
use endotomo::StateSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    InPhase,
    OutOfPhase,
    Weak,
    Tomography,
    QndAudit,
    IdentityChecks,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::InPhase => "in_phase",
            Scenario::OutOfPhase => "out_of_phase",
            Scenario::Weak => "weak",
            Scenario::Tomography => "tomography",
            Scenario::QndAudit => "qnd_audit",
            Scenario::IdentityChecks => "identity_checks",
        }
    }

    pub fn samples(self, cfg: &ScenarioConfig) -> bool {
        match self {
            Scenario::Weak => true,
            Scenario::Tomography => !cfg.tomography.exact,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomodyneRule {
    InPhase,
    OutOfPhase,
}

/// Homodyne angle as a rule relative to the pump phase or an absolute angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Homodyne {
    Rule(HomodyneRule),
    Angle(f64),
}

/// Which axis a squeezed meter is locked to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterAxis {
    /// Narrow along the homodyne quadrature.
    Measured,
    /// Broad along the homodyne quadrature.
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionSection {
    pub kappa: f64,
    pub pump_phase: f64,
    pub homodyne: Option<Homodyne>,
    /// Overrides the meter's squeezing phase so that its axis follows `θ`.
    pub meter_axis: Option<MeterAxis>,
}

impl Default for InteractionSection {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            pump_phase: 0.0,
            homodyne: None,
            meter_axis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditioningSection {
    pub outcomes: Vec<f64>,
}

impl Default for ConditioningSection {
    fn default() -> Self {
        Self {
            outcomes: vec![0.0, 0.5, -1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakSection {
    pub shots: usize,
}

impl Default for WeakSection {
    fn default() -> Self {
        Self { shots: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub phases: usize,
    pub shots: usize,
    pub squeezing: f64,
    /// Use exact meter densities instead of samples.
    pub exact: bool,
    pub binning: Binning,
    pub deconvolve: bool,
    pub back_projection: BackProjection,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            phases: 32,
            shots: 100_000,
            squeezing: 2.5,
            exact: false,
            binning: Binning::default(),
            deconvolve: false,
            back_projection: BackProjection::default(),
        }
    }
}

impl TomographySection {
    pub fn marginal_options(&self) -> MarginalOptions {
        MarginalOptions {
            binning: self.binning,
            deconvolve: self.deconvolve,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    /// Fock dimension of the operator-level check.
    pub fock_dim: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self { fock_dim: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    /// Meter grid; chosen from the meter state when absent.
    #[serde(default)]
    pub meter_grid: Option<GridConfig>,
    #[serde(default = "default_signal")]
    pub signal: StateSpec<f64>,
    #[serde(default)]
    pub meter: Option<StateSpec<f64>>,
    #[serde(default)]
    pub interaction: InteractionSection,
    #[serde(default)]
    pub conditioning: ConditioningSection,
    #[serde(default)]
    pub weak: WeakSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub audit: AuditSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_signal() -> StateSpec<f64> {
    StateSpec::Vacuum
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub phases: Option<usize>,
    pub shots: Option<usize>,
}

/// Line of the first `key =` assignment or `[key]` header in `text`.
pub(crate) fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        let header = t.trim_start_matches('[').trim_end_matches(']');
        t.strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false)
            || (t.starts_with('[') && header.rsplit('.').next() == Some(key))
    })
    .map(|k| k + 1)
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        cfg.validate(text, origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Range checks that the TOML schema cannot express.
    fn validate(&self, text: &str, origin: &str) -> Result<(), CliError> {
        let fail = |key: &str, reason: &str| {
            let at = line_of(text, key).map(|l| format!(" (line {l})")).unwrap_or_default();
            Err(CliError::Config(format!("{origin}{at}: `{key}` {reason}")))
        };
        for (name, g) in std::iter::once(("grid", &self.grid)).chain(self.meter_grid.as_ref().map(|g| ("meter_grid", g))) {
            if !(g.half_width > 0.0) || !g.half_width.is_finite() {
                return fail("half_width", &format!("in [{name}] must be positive"));
            }
            if g.points < 16 {
                return fail("points", &format!("in [{name}] must be at least 16"));
            }
        }
        let i = &self.interaction;
        if !(i.kappa >= 0.0) || !i.kappa.is_finite() {
            return fail("kappa", "must be finite and nonnegative");
        }
        if !i.pump_phase.is_finite() {
            return fail("pump_phase", "must be finite");
        }
        if let Some(Homodyne::Angle(a)) = i.homodyne {
            if !a.is_finite() {
                return fail("homodyne", "must be finite");
            }
        }
        if self.weak.shots < 2 {
            return fail("shots", "in [weak] must be at least 2");
        }
        let t = &self.tomography;
        if t.phases == 0 {
            return fail("phases", "must be at least 1");
        }
        if !t.exact && t.shots < 2 {
            return fail("shots", "in [tomography] must be at least 2");
        }
        if !(t.squeezing >= 0.0) || !t.squeezing.is_finite() {
            return fail("squeezing", "must be finite and nonnegative");
        }
        if self.audit.fock_dim < 2 || self.audit.fock_dim > 40 {
            return fail("fock_dim", "must lie in [2, 40]");
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(out) = &o.out {
            self.output = out.clone();
        }
        if let Some(p) = o.phases {
            self.tomography.phases = p;
        }
        if let Some(n) = o.shots {
            self.weak.shots = n;
            self.tomography.shots = n;
        }
    }

    /// Seed for sampling scenarios, which must have one.
    pub fn require_seed(&self) -> Result<Option<u64>, CliError> {
        if self.scenario.samples(self) && self.seed.is_none() {
            return Err(CliError::Config(format!(
                "scenario `{}` draws samples: `seed` is required (in the file or via --seed)",
                self.scenario.name()
            )));
        }
        Ok(self.seed)
    }
}
