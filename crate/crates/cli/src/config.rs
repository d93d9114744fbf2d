//! Run configuration: a single TOML file with nested sections, plus
//! command-line overrides that always win over the file.
//!
//! # Canonical schema
//!
//! ```toml
//! # Which model drives the expansion coefficients. Optional when `preset`
//! # is given (presets are rough Bergomi); required otherwise.
//! model = "rough-bergomi"            # or "regular-sv"
//!
//! # One of the bundled parameter sets: "fig1-left", "fig1-right",
//! # "fig2-left", "fig2-right". A preset fixes (h, eta, rho) and a flat
//! # forward-variance curve at 0.04, so it conflicts with [rough_bergomi],
//! # [regular_sv], [[curve]] and curve_csv.
//! preset = "fig1-left"
//!
//! # Maturities in years. Optional; defaults to the bundled palette
//! # [0.02, 0.05, 0.1, 0.2, 0.3, 0.6]. Must be nonempty and positive.
//! theta_list = [0.02, 0.1]
//!
//! # Moneyness grid in z units (log-moneyness k = sqrt(theta) * z).
//! # Optional; defaults to 21 equispaced points on [-2, 2]. Must be
//! # nonempty when a smile command runs.
//! z_grid = [-1.0, 0.0, 1.0]
//!
//! # Evaluation grid for the `density` command (normalized log-return
//! # units). No default: `density` exits with a usage error without it.
//! x_grid = [-3.0, 0.0, 3.0]
//!
//! # Forward-variance curve as a CSV file with a mandatory header and
//! # rows (t_break, v0); breakpoints must start at 0 and strictly
//! # increase. Alternative to [[curve]]; giving both is an error.
//! curve_csv = "curve.csv"
//!
//! [rough_bergomi]                    # required iff model = "rough-bergomi"
//! h = 0.07                           # Hurst exponent, 0 < h <= 1/2
//! eta = 0.9                          # vol-of-vol
//! rho = -0.9                         # spot-vol correlation
//!
//! [regular_sv]                       # required iff model = "regular-sv"
//! kind = "lognormal-sabr"            # or "heston-like"
//! alpha0 = 0.2                       # lognormal-sabr: spot volatility
//! nu = 0.9                           # lognormal-sabr: variance vol-of-vol
//! # v0 = 0.04                        # heston-like: spot variance
//! # lambda = 1.0                     # heston-like: mean-reversion speed
//! # mu = 0.04                        # heston-like: mean-reversion level
//! # xi = 0.5                         # heston-like: vol-of-vol
//! rho = -0.25                        # spot-vol correlation (both kinds)
//!
//! [mc]                               # Monte Carlo engine settings
//! paths = 200000                     # default 200000
//! steps = 256                        # time steps, default 256
//! seed = 42                          # default 42
//! estimator = "conditional-gaussian" # or "euler"; default conditional-gaussian
//! antithetic = true                  # default true (requires even paths)
//!
//! [output]
//! path = "out.csv"                   # default: stdout
//! format = "csv"                     # or "json"; default csv
//!
//! [appendix]                         # kernel for `check-appendix`
//! kernel = "unit"                    # "unit" | "zero" | "fractional-power"
//! # h = 0.07                         # required iff kernel = "fractional-power"
//!
//! # Inline forward-variance curve: one [[curve]] record per piece,
//! # breakpoints starting at 0 and strictly increasing.
//! [[curve]]
//! t = 0.0
//! v = 0.04
//! ```
//!
//! Parsing is strict: unknown fields are rejected with the offending line
//! and field named. Parse -> serialize -> parse is the identity on this
//! schema (optional fields stay optional; nothing is silently filled in).

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use voltex::coeffs_rbergomi::{ForwardVarianceCurve, RoughBergomiParams};
use voltex::coeffs_regular::{RegularPreset, RegularSVInputs};
use voltex::expansion::ExpansionCoefficients;
use voltex::mc::{Estimator, KernelChoice, MCConfig};
use voltex::presets::{default_z_grid, FigurePreset, THETA_PALETTE};

/// A usage or configuration error; the process exits with code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<voltex::Error> for CliError {
    fn from(e: voltex::Error) -> Self {
        CliError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError(msg.into()))
}

// ---------------------------------------------------------------------------
// enums shared by the TOML schema and the command line

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    RoughBergomi,
    RegularSv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegularKind {
    LognormalSabr,
    HestonLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    ConditionalGaussian,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatKind {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Unit,
    Zero,
    FractionalPower,
}

// ---------------------------------------------------------------------------
// the TOML schema

/// The typed image of the configuration file. Every field is optional so
/// that serialization reproduces exactly what was parsed; defaults are
/// applied only during [`resolve`]. Scalar fields come before tables so
/// the canonical serialization is valid TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rough_bergomi: Option<RoughBergomiSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regular_sv: Option<RegularSvSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub appendix: Option<AppendixSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<CurvePoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughBergomiSection {
    pub h: f64,
    pub eta: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularSvSection {
    pub kind: RegularKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AppendixSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub t: f64,
    pub v: f64,
}

impl FileConfig {
    /// Parse the canonical TOML schema; errors carry the offending line
    /// and field.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError(format!("config error: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Serialize back to TOML. Together with [`FileConfig::parse`] this is
    /// an identity on the canonical schema (held by the round-trip test).
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError(format!("cannot serialize config: {e}")))
    }
}

// ---------------------------------------------------------------------------
// command-line overrides

/// Values given as flags; each one replaces the corresponding file field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub theta: Vec<f64>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub steps: Option<usize>,
    pub estimator: Option<EstimatorKind>,
    pub antithetic: Option<bool>,
    pub format: Option<FormatKind>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut FileConfig) {
        if let Some(p) = &self.preset {
            cfg.preset = Some(p.clone());
        }
        if !self.theta.is_empty() {
            cfg.theta_list = Some(self.theta.clone());
        }
        let mc_flags = self.seed.is_some()
            || self.paths.is_some()
            || self.steps.is_some()
            || self.estimator.is_some()
            || self.antithetic.is_some();
        if mc_flags {
            let mc = cfg.mc.get_or_insert_with(McSection::default);
            if let Some(s) = self.seed {
                mc.seed = Some(s);
            }
            if let Some(p) = self.paths {
                mc.paths = Some(p);
            }
            if let Some(s) = self.steps {
                mc.steps = Some(s);
            }
            if let Some(e) = self.estimator {
                mc.estimator = Some(e);
            }
            if let Some(a) = self.antithetic {
                mc.antithetic = Some(a);
            }
        }
        if self.format.is_some() || self.output.is_some() {
            let out = cfg.output.get_or_insert_with(OutputSection::default);
            if let Some(f) = self.format {
                out.format = Some(f);
            }
            if let Some(p) = &self.output {
                out.path = Some(p.clone());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// resolution: file + flags -> validated run inputs

/// The model with its parameters fully constructed.
#[derive(Debug)]
pub enum ModelSpec {
    Rough(RoughBergomiParams),
    Regular(RegularSVInputs),
}

impl ModelSpec {
    /// Expansion coefficients at one maturity, together with the
    /// regime diagnostics: `eta * theta^h` (rough Bergomi only) and
    /// whether that product is at or above one.
    pub fn coefficients(&self, theta: f64) -> Result<(ExpansionCoefficients, Option<f64>, bool)> {
        match self {
            ModelSpec::Rough(params) => {
                let rb = params.coefficients(theta)?;
                Ok((rb.coefficients, Some(rb.eta_theta_h), rb.regime_warning))
            }
            ModelSpec::Regular(inputs) => {
                let kappa2 = inputs.kappa2(theta)?;
                let sigma0 = kappa2 * theta.sqrt();
                let c = ExpansionCoefficients::new(
                    theta,
                    0.5,
                    sigma0,
                    inputs.kappa3(),
                    inputs.kappa4(),
                )?;
                Ok((c, None, false))
            }
        }
    }

    /// The rough Bergomi parameters, or a usage error for commands that
    /// simulate (the Monte Carlo engine covers rough Bergomi only).
    pub fn rough(&self, command: &str) -> Result<&RoughBergomiParams> {
        match self {
            ModelSpec::Rough(p) => Ok(p),
            ModelSpec::Regular(_) => err(format!(
                "config error: `{command}` needs Monte Carlo, which supports model = \
                 \"rough-bergomi\" only"
            )),
        }
    }
}

/// Everything a command needs, with defaults applied and parameters
/// validated. The model is `None` when the configuration names none;
/// only `check-appendix` can run that way (its identities depend on the
/// kernel alone), so commands fetch it through [`Resolved::model`].
#[derive(Debug)]
pub struct Resolved {
    model: Option<ModelSpec>,
    pub thetas: Vec<f64>,
    pub z_grid: Vec<f64>,
    pub x_grid: Option<Vec<f64>>,
    pub mc: MCConfig,
    pub kernel: KernelChoice,
    pub out_path: Option<PathBuf>,
    pub format: FormatKind,
}

impl Resolved {
    pub fn model(&self) -> Result<&ModelSpec> {
        self.model.as_ref().ok_or_else(|| {
            CliError(
                "config error: no model configured; set model = \"rough-bergomi\" or \
                 \"regular-sv\" (or pick a preset)"
                    .into(),
            )
        })
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return err(format!("config error: {name} must be nonempty"));
    }
    for &v in grid {
        if !v.is_finite() {
            return err(format!("config error: {name} contains a non-finite value {v}"));
        }
    }
    Ok(())
}

fn resolve_model(cfg: &FileConfig) -> Result<Option<ModelSpec>> {
    if let Some(name) = &cfg.preset {
        let preset = FigurePreset::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = FigurePreset::ALL.iter().map(|p| p.name()).collect();
            CliError(format!(
                "config error: unknown preset \"{name}\"; bundled presets are {}",
                known.join(", ")
            ))
        })?;
        if cfg.model == Some(ModelKind::RegularSv) {
            return err("config error: preset conflicts with model = \"regular-sv\"");
        }
        for (given, field) in [
            (cfg.rough_bergomi.is_some(), "[rough_bergomi]"),
            (cfg.regular_sv.is_some(), "[regular_sv]"),
            (cfg.curve.is_some(), "[[curve]]"),
            (cfg.curve_csv.is_some(), "curve_csv"),
        ] {
            if given {
                return err(format!(
                    "config error: preset \"{name}\" fixes the model parameters; remove {field}"
                ));
            }
        }
        return Ok(Some(ModelSpec::Rough(preset.params())));
    }

    match cfg.model {
        None => {
            for (given, field) in [
                (cfg.rough_bergomi.is_some(), "[rough_bergomi]"),
                (cfg.regular_sv.is_some(), "[regular_sv]"),
                (cfg.curve.is_some(), "[[curve]]"),
                (cfg.curve_csv.is_some(), "curve_csv"),
            ] {
                if given {
                    return err(format!(
                        "config error: {field} is set but no model is named; set model = \
                         \"rough-bergomi\" or \"regular-sv\""
                    ));
                }
            }
            Ok(None)
        }
        Some(ModelKind::RoughBergomi) => {
            if cfg.regular_sv.is_some() {
                return err(
                    "config error: [regular_sv] conflicts with model = \"rough-bergomi\"",
                );
            }
            let section = cfg.rough_bergomi.as_ref().ok_or_else(|| {
                CliError("config error: model = \"rough-bergomi\" needs a [rough_bergomi] \
                          section with h, eta, rho".into())
            })?;
            let curve = resolve_curve(cfg)?;
            let params = RoughBergomiParams::new(section.h, section.eta, section.rho, curve)
                .map_err(|e| CliError(format!("config error: [rough_bergomi] {e}")))?;
            Ok(Some(ModelSpec::Rough(params)))
        }
        Some(ModelKind::RegularSv) => {
            for (given, field) in [
                (cfg.rough_bergomi.is_some(), "[rough_bergomi]"),
                (cfg.curve.is_some(), "[[curve]]"),
                (cfg.curve_csv.is_some(), "curve_csv"),
            ] {
                if given {
                    return err(format!(
                        "config error: {field} conflicts with model = \"regular-sv\""
                    ));
                }
            }
            let section = cfg.regular_sv.as_ref().ok_or_else(|| {
                CliError("config error: model = \"regular-sv\" needs a [regular_sv] \
                          section".into())
            })?;
            let inputs = regular_inputs(section)?;
            Ok(Some(ModelSpec::Regular(inputs)))
        }
    }
}

fn regular_inputs(section: &RegularSvSection) -> Result<RegularSVInputs> {
    let require = |opt: Option<f64>, field: &str, kind: &str| {
        opt.ok_or_else(|| {
            CliError(format!(
                "config error: [regular_sv] kind = \"{kind}\" needs the field `{field}`"
            ))
        })
    };
    let forbid = |opt: Option<f64>, field: &str, kind: &str| {
        if opt.is_some() {
            err(format!(
                "config error: [regular_sv] field `{field}` does not apply to kind = \"{kind}\""
            ))
        } else {
            Ok(())
        }
    };
    let preset = match section.kind {
        RegularKind::LognormalSabr => {
            let kind = "lognormal-sabr";
            forbid(section.v0, "v0", kind)?;
            forbid(section.lambda, "lambda", kind)?;
            forbid(section.mu, "mu", kind)?;
            forbid(section.xi, "xi", kind)?;
            RegularPreset::LognormalSabr {
                alpha0: require(section.alpha0, "alpha0", kind)?,
                nu: require(section.nu, "nu", kind)?,
                rho: section.rho,
            }
        }
        RegularKind::HestonLike => {
            let kind = "heston-like";
            forbid(section.alpha0, "alpha0", kind)?;
            forbid(section.nu, "nu", kind)?;
            RegularPreset::HestonLike {
                v0: require(section.v0, "v0", kind)?,
                lambda: require(section.lambda, "lambda", kind)?,
                mu: require(section.mu, "mu", kind)?,
                xi: require(section.xi, "xi", kind)?,
                rho: section.rho,
            }
        }
    };
    preset
        .inputs()
        .map_err(|e| CliError(format!("config error: [regular_sv] {e}")))
}

fn resolve_curve(cfg: &FileConfig) -> Result<ForwardVarianceCurve> {
    match (&cfg.curve, &cfg.curve_csv) {
        (Some(_), Some(_)) => err(
            "config error: give the forward-variance curve once: either [[curve]] records \
             or curve_csv, not both",
        ),
        (Some(points), None) => {
            let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.v)).collect();
            ForwardVarianceCurve::piecewise(&pairs)
                .map_err(|e| CliError(format!("config error: [[curve]] {e}")))
        }
        (None, Some(path)) => load_curve_csv(path),
        (None, None) => err(
            "config error: model = \"rough-bergomi\" needs a forward-variance curve; add \
             [[curve]] records or curve_csv",
        ),
    }
}

/// Load a curve from a two-column CSV of (t_break, v0). The header line is
/// mandatory; breakpoints must start at 0 and strictly increase.
fn load_curve_csv(path: &std::path::Path) -> Result<ForwardVarianceCurve> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read curve_csv {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| {
        CliError(format!("config error: curve_csv {} is empty", path.display()))
    })?;
    if header.split(',').count() != 2 || header.split(',').any(|f| f.trim().parse::<f64>().is_ok())
    {
        return err(format!(
            "config error: curve_csv {} line 1: expected a two-column header such as \
             \"t_break,v0\", got \"{header}\"",
            path.display()
        ));
    }
    let mut pairs = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return err(format!(
                "config error: curve_csv {} line {}: expected two comma-separated fields, \
                 got {}",
                path.display(),
                idx + 1,
                fields.len()
            ));
        }
        let mut nums = [0.0f64; 2];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.trim().parse().map_err(|_| {
                CliError(format!(
                    "config error: curve_csv {} line {}: \"{field}\" is not a number",
                    path.display(),
                    idx + 1
                ))
            })?;
        }
        pairs.push((nums[0], nums[1]));
    }
    ForwardVarianceCurve::piecewise(&pairs)
        .map_err(|e| CliError(format!("config error: curve_csv {}: {e}", path.display())))
}

fn resolve_mc(cfg: &FileConfig) -> MCConfig {
    let mc = cfg.mc.unwrap_or_default();
    MCConfig {
        n_paths: mc.paths.unwrap_or(200_000),
        n_steps: mc.steps.unwrap_or(256),
        seed: mc.seed.unwrap_or(42),
        estimator: match mc.estimator.unwrap_or(EstimatorKind::ConditionalGaussian) {
            EstimatorKind::ConditionalGaussian => Estimator::ConditionalGaussian,
            EstimatorKind::Euler => Estimator::Euler,
        },
        antithetic: mc.antithetic.unwrap_or(true),
    }
}

fn resolve_kernel(cfg: &FileConfig) -> Result<KernelChoice> {
    let section = cfg.appendix.unwrap_or_default();
    let kind = section.kernel.unwrap_or(KernelKind::Unit);
    match kind {
        KernelKind::FractionalPower => {
            let h = section.h.ok_or_else(|| {
                CliError(
                    "config error: [appendix] kernel = \"fractional-power\" needs the \
                     exponent field `h`"
                        .into(),
                )
            })?;
            Ok(KernelChoice::FractionalPower { h })
        }
        other => {
            if section.h.is_some() {
                return err(
                    "config error: [appendix] field `h` applies only to kernel = \
                     \"fractional-power\"",
                );
            }
            Ok(match other {
                KernelKind::Unit => KernelChoice::Unit,
                KernelKind::Zero => KernelChoice::Zero,
                KernelKind::FractionalPower => unreachable!(),
            })
        }
    }
}

/// Merge the file with the flag overrides, validate, and construct the
/// run inputs.
pub fn resolve(mut cfg: FileConfig, overrides: &Overrides) -> Result<Resolved> {
    overrides.apply(&mut cfg);

    let thetas = cfg.theta_list.clone().unwrap_or_else(|| THETA_PALETTE.to_vec());
    check_grid("theta_list", &thetas)?;
    for &t in &thetas {
        if !(t > 0.0) {
            return err(format!("config error: theta_list values must be positive, got {t}"));
        }
    }

    let z_grid = cfg.z_grid.clone().unwrap_or_else(default_z_grid);
    check_grid("z_grid", &z_grid)?;

    let x_grid = match &cfg.x_grid {
        Some(grid) => {
            check_grid("x_grid", grid)?;
            Some(grid.clone())
        }
        None => None,
    };

    let model = resolve_model(&cfg)?;
    let mc = resolve_mc(&cfg);
    let kernel = resolve_kernel(&cfg)?;
    let out = cfg.output.clone().unwrap_or_default();

    Ok(Resolved {
        model,
        thetas,
        z_grid,
        x_grid,
        mc,
        kernel,
        out_path: out.path,
        format: out.format.unwrap_or(FormatKind::Csv),
    })
}
