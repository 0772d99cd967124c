//! Scenario runner: reads a TOML scenario, runs it and writes CSV/JSON
//! artifacts plus a run manifest.

pub mod config;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use endotomo::audit::{bayes_identity_residual, no_information_audit, qnd_condition_check, AuditReport};
use endotomo::checks::{identity_suite, CheckOutcome};
use endotomo::fock::FockVector;
use endotomo::io::{write_csv, write_json, write_marginal_csv, write_wigner_csv};
use endotomo::qnd::{condition_on_outcome, entangle, meter_distribution, total_variation, weak_measurement_estimate, InteractionConfig};
use endotomo::tomography::{
    reconstruct_exact_marginals, reconstruct_marginals, reconstruct_wigner, ExactMarginals, MarginalEstimate, TomographyDataset,
    TomographyPlan,
};
use endotomo::wigner::{convolution_identity_check, wigner_on};
use endotomo::{make_state, Error, Grid, StateSpec, Wave};
use serde::Serialize;

pub use config::{GridConfig, Homodyne, HomodyneRule, MeterAxis, Overrides, Scenario, ScenarioConfig};

/// Axis of the Wigner grids written by the in-phase and out-of-phase scenarios.
const WIGNER_HALF_WIDTH: f64 = 5.0;
const WIGNER_POINTS: usize = 101;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation failed: {source}\nhint: {hint}")]
    Simulation { source: Error, hint: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation { .. } => 3,
        }
    }
}

fn hint_for(e: &Error) -> String {
    match e {
        Error::UnderResolved { hint, .. } => format!("{hint}; raise `points` in [grid] or [meter_grid]"),
        Error::ShiftOverflow { needed_min, needed_max, .. } => {
            format!("widen [meter_grid] to cover [{needed_min:.2}, {needed_max:.2}] or lower `kappa`")
        }
        Error::EnvelopeOverflow(_) => "raise `half_width` in [grid] or [meter_grid]".into(),
        Error::InvalidGrid(_) => "check `half_width` and `points`".into(),
        Error::TruncationLeakage { .. } => "raise `fock_dim` in [audit]".into(),
        Error::TooFewPhases { required, .. } => format!("set `phases` in [tomography] to at least {required}"),
        Error::OutcomeTooRare { .. } => "choose outcomes in [conditioning] nearer the bulk of the meter density".into(),
        Error::Io(_) => "check that the output directory is writable".into(),
        _ => "check the parameters of the scenario".into(),
    }
}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        let hint = hint_for(&source);
        CliError::Simulation { source, hint }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    /// The configuration after defaults, overrides and meter resolution.
    pub config: ScenarioConfig,
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<String>,
    /// `false` only when a run reports failed checks.
    pub passed: bool,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_owned());
        self.dir.join(name)
    }
}

fn grid_of(g: &GridConfig) -> Result<Grid, CliError> {
    Ok(Grid::symmetric(g.half_width, g.points)?)
}

fn config_error(text: Option<&str>, key: &str, reason: &str) -> CliError {
    let at = text
        .and_then(|t| config::line_of(t, key))
        .map(|l| format!(" (line {l})"))
        .unwrap_or_default();
    CliError::Config(format!("`{key}`{at} {reason}"))
}

/// Fills in the scenario defaults for homodyne angle, meter and meter grid.
fn resolve(cfg: &mut ScenarioConfig, text: Option<&str>) -> Result<(), CliError> {
    let i = &mut cfg.interaction;
    let default_rule = match cfg.scenario {
        Scenario::InPhase | Scenario::QndAudit | Scenario::IdentityChecks => HomodyneRule::InPhase,
        Scenario::OutOfPhase | Scenario::Weak | Scenario::Tomography => HomodyneRule::OutOfPhase,
    };
    let homodyne = *i.homodyne.get_or_insert(Homodyne::Rule(default_rule));
    let theta = match homodyne {
        Homodyne::Rule(HomodyneRule::InPhase) => i.pump_phase,
        Homodyne::Rule(HomodyneRule::OutOfPhase) => i.pump_phase + PI / 2.0,
        Homodyne::Angle(a) => a,
    };
    if cfg.scenario == Scenario::Tomography {
        if cfg.meter.is_some() {
            return Err(config_error(text, "meter", "is set by `squeezing` in [tomography]"));
        }
        if homodyne != Homodyne::Rule(HomodyneRule::OutOfPhase) {
            return Err(config_error(text, "homodyne", "must be \"out_of_phase\" for tomography"));
        }
        return Ok(());
    }
    if cfg.meter.is_none() {
        cfg.meter = Some(if cfg.scenario == Scenario::Weak {
            i.meter_axis.get_or_insert(MeterAxis::Conjugate);
            StateSpec::Squeezed {
                r: 1.5,
                epsilon: 0.0,
                displacement: Default::default(),
            }
        } else {
            StateSpec::Vacuum
        });
    }
    if let Some(axis) = i.meter_axis {
        match cfg.meter.as_mut() {
            Some(StateSpec::Squeezed { epsilon, .. }) => {
                *epsilon = match axis {
                    MeterAxis::Measured => 2.0 * theta,
                    MeterAxis::Conjugate => 2.0 * theta + PI,
                };
            }
            _ => return Err(config_error(text, "meter_axis", "applies only to a squeezed meter")),
        }
    }
    if cfg.meter_grid.is_none() {
        cfg.meter_grid = Some(if cfg.scenario == Scenario::Weak {
            GridConfig {
                half_width: 24.0,
                points: 1024,
            }
        } else {
            cfg.grid
        });
    }
    Ok(())
}

fn interaction(cfg: &ScenarioConfig) -> Result<InteractionConfig<f64>, CliError> {
    let i = &cfg.interaction;
    let c = match i.homodyne.expect("resolved") {
        Homodyne::Rule(HomodyneRule::InPhase) => InteractionConfig::in_phase(i.kappa, i.pump_phase),
        Homodyne::Rule(HomodyneRule::OutOfPhase) => InteractionConfig::out_of_phase(i.kappa, i.pump_phase),
        Homodyne::Angle(a) => InteractionConfig::new(i.kappa, i.pump_phase, a),
    }?;
    Ok(c)
}

fn states(cfg: &ScenarioConfig, ic: &InteractionConfig<f64>) -> Result<(Wave, Wave), CliError> {
    let signal = make_state(grid_of(&cfg.grid)?, ic.signal_angle(), &cfg.signal)?;
    let meter = make_state(
        grid_of(cfg.meter_grid.as_ref().expect("resolved"))?,
        ic.homodyne_angle(),
        cfg.meter.as_ref().expect("resolved"),
    )?;
    Ok((signal, meter))
}

fn wigner_axis() -> Grid {
    Grid::symmetric(WIGNER_HALF_WIDTH, WIGNER_POINTS).expect("valid axis")
}

fn coupling_run(cfg: &ScenarioConfig, out: &mut Outputs, metrics: &mut BTreeMap<String, f64>) -> Result<(), CliError> {
    let ic = interaction(cfg)?;
    let (signal, meter) = states(cfg, &ic)?;
    let state = entangle(&signal, &meter, &ic)?;
    let w = meter_distribution(&state);
    let input = meter.marginal();
    let xm = meter.grid().points();
    metrics.insert("meter_marginal_max_diff".into(), w.iter().zip(&input).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    write_marginal_csv(out.path("meter_marginal.csv"), &xm, &w)?;
    write_marginal_csv(out.path("input_meter_marginal.csv"), &xm, &input)?;
    write_marginal_csv(out.path("signal_marginal.csv"), &signal.grid().points(), &signal.marginal())?;
    let axis = wigner_axis();
    write_wigner_csv(out.path("signal_wigner.csv"), &wigner_on(&signal, &axis, &axis))?;
    for (k, &x) in cfg.conditioning.outcomes.iter().enumerate() {
        let cond = condition_on_outcome(&state, x)?;
        let rho = cond.wavefunction.marginal();
        write_marginal_csv(out.path(&format!("conditional_marginal_{k}.csv")), &signal.grid().points(), &rho)?;
        write_wigner_csv(out.path(&format!("conditional_wigner_{k}.csv")), &wigner_on(&cond.wavefunction, &axis, &axis))?;
        let check = convolution_identity_check(&signal, &meter, &ic, x)?;
        let tag = format!("outcome_{k}");
        metrics.insert(format!("{tag}.x_m"), x);
        metrics.insert(format!("{tag}.density"), cond.probability_density);
        metrics.insert(format!("{tag}.conditional_tv"), total_variation(&rho, &signal.marginal(), signal.grid().spacing()));
        metrics.insert(format!("{tag}.convolution_residual"), check.residual);
        metrics.insert(format!("{tag}.filter_agreement"), check.filter_agreement);
    }
    Ok(())
}

fn weak_run(cfg: &ScenarioConfig, out: &mut Outputs, metrics: &mut BTreeMap<String, f64>) -> Result<(), CliError> {
    let ic = interaction(cfg)?;
    let (signal, meter) = states(cfg, &ic)?;
    let seed = cfg.seed.expect("checked before running");
    let est = weak_measurement_estimate(&signal, &meter, &ic, cfg.weak.shots, seed)?;
    let truth = signal.mean_and_variance().0;
    let state = entangle(&signal, &meter, &ic)?;
    write_marginal_csv(out.path("meter_marginal.csv"), &meter.grid().points(), &meter_distribution(&state))?;
    write_json(out.path("weak.json"), &est)?;
    metrics.insert("estimate".into(), est.estimate);
    metrics.insert("standard_error".into(), est.standard_error);
    metrics.insert("truth".into(), truth);
    metrics.insert("z_score".into(), (est.estimate - truth) / est.standard_error);
    metrics.insert("mean_fidelity".into(), est.mean_fidelity);
    metrics.insert("weakness_ratio".into(), est.weakness_ratio);
    Ok(())
}

fn write_marginals(path: PathBuf, marginals: &[MarginalEstimate]) -> Result<(), CliError> {
    write_csv(
        path,
        &["phase [rad]", "x [quadrature units]", "density [1/quadrature unit]"],
        marginals
            .iter()
            .flat_map(|m| m.x.iter().zip(&m.density).map(move |(&x, &d)| vec![m.phase, x, d])),
    )?;
    Ok(())
}

fn tomography_run(cfg: &ScenarioConfig, out: &mut Outputs, metrics: &mut BTreeMap<String, f64>) -> Result<(), CliError> {
    let t = &cfg.tomography;
    let mut plan = TomographyPlan::uniform(t.phases, t.shots, t.squeezing, cfg.interaction.kappa, cfg.seed.unwrap_or(0))?;
    if let Some(g) = &cfg.meter_grid {
        plan = plan.with_meter_grid(grid_of(g)?);
    }
    let signal = make_state(grid_of(&cfg.grid)?, 0.0, &cfg.signal)?;
    let marginals = if t.exact {
        reconstruct_exact_marginals(&ExactMarginals::compute(&signal, &plan)?, &t.marginal_options())?
    } else {
        let data = TomographyDataset::acquire(&signal, &plan)?;
        let (csv, json) = data.write(&out.dir, "samples")?;
        for p in [csv, json] {
            out.files.push(p.file_name().expect("file").to_string_lossy().into_owned());
        }
        reconstruct_marginals(&data, &t.marginal_options())?
    };
    write_marginals(out.path("marginals.csv"), &marginals)?;
    let w = reconstruct_wigner(&marginals, &t.back_projection)?;
    let truth = wigner_on(&signal, w.x_axis(), w.p_axis());
    write_wigner_csv(out.path("wigner.csv"), &w)?;
    write_wigner_csv(out.path("wigner_true.csv"), &truth)?;
    let (min, x, p) = w.minimum();
    metrics.insert("wigner_min".into(), min);
    metrics.insert("wigner_min_x".into(), x);
    metrics.insert("wigner_min_p".into(), p);
    metrics.insert("wigner_true_min".into(), truth.minimum().0);
    metrics.insert("wigner_sup_error".into(), w.sup_distance(&truth)?);
    metrics.insert("wigner_integral".into(), w.integral());
    Ok(())
}

#[derive(Serialize)]
struct AuditFile<'a> {
    report: &'a AuditReport,
    condition_residual: f64,
    fock_dim: usize,
    bayes_residuals: Vec<(f64, f64)>,
}

fn audit_run(cfg: &ScenarioConfig, out: &mut Outputs, metrics: &mut BTreeMap<String, f64>) -> Result<bool, CliError> {
    let ic = interaction(cfg)?;
    let (signal, meter) = states(cfg, &ic)?;
    let report = no_information_audit(&signal, &meter, &ic)?;
    let fock_meter = FockVector::from_spec(cfg.audit.fock_dim, cfg.meter.as_ref().expect("resolved"))?;
    let condition = qnd_condition_check(&ic, &fock_meter);
    let bayes = cfg
        .conditioning
        .outcomes
        .iter()
        .map(|&x| bayes_identity_residual(&signal, &meter, &ic, x).map(|r| (x, r)))
        .collect::<Result<Vec<_>, _>>()?;
    metrics.insert("information_gained".into(), report.information_gained);
    metrics.insert("max_total_variation".into(), report.max_total_variation);
    metrics.insert("mean_total_variation".into(), report.mean_total_variation);
    metrics.insert("distribution_preserved".into(), f64::from(u8::from(report.distribution_preserved)));
    metrics.insert("condition_residual".into(), condition);
    metrics.insert("bayes_residual_max".into(), bayes.iter().map(|b| b.1).fold(0.0, f64::max));
    write_json(
        out.path("audit.json"),
        &AuditFile {
            report: &report,
            condition_residual: condition,
            fock_dim: cfg.audit.fock_dim,
            bayes_residuals: bayes,
        },
    )?;
    Ok(report.consistent)
}

fn checks_run(out: &mut Outputs, metrics: &mut BTreeMap<String, f64>) -> Result<bool, CliError> {
    let outcomes = check()?;
    for c in &outcomes {
        metrics.insert(c.name.clone(), c.value);
    }
    write_json(out.path("checks.json"), &outcomes)?;
    Ok(outcomes.iter().all(|c| c.passed))
}

/// Runs the identity suite.
pub fn check() -> Result<Vec<CheckOutcome>, CliError> {
    Ok(identity_suite()?)
}

/// Runs `cfg` and writes its artifacts and `manifest.json` into its output
/// directory. `text` is the source of the config for line numbers.
pub fn run(mut cfg: ScenarioConfig, text: Option<&str>) -> Result<Manifest, CliError> {
    cfg.require_seed()?;
    resolve(&mut cfg, text)?;
    std::fs::create_dir_all(&cfg.output)?;
    let mut out = Outputs {
        dir: cfg.output.clone(),
        files: Vec::new(),
    };
    let mut metrics = BTreeMap::new();
    let mut passed = true;
    match cfg.scenario {
        Scenario::InPhase | Scenario::OutOfPhase => coupling_run(&cfg, &mut out, &mut metrics)?,
        Scenario::Weak => weak_run(&cfg, &mut out, &mut metrics)?,
        Scenario::Tomography => tomography_run(&cfg, &mut out, &mut metrics)?,
        Scenario::QndAudit => passed = audit_run(&cfg, &mut out, &mut metrics)?,
        Scenario::IdentityChecks => passed = checks_run(&mut out, &mut metrics)?,
    }
    let manifest = Manifest {
        scenario: cfg.scenario,
        seed: cfg.seed,
        metrics,
        files: out.files.clone(),
        passed,
        config: cfg,
    };
    write_json(out.dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Loads `path`, applies `overrides` and runs it.
pub fn run_file(path: &Path, overrides: &Overrides) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::parse(&text, &path.display().to_string())?;
    cfg.apply(overrides);
    run(cfg, Some(&text))
}
