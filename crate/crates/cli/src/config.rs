//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use cvqkd_core::{Complex64, OptimizerSettings, PowerBudget, PowerConvention, Scenario};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    SweepLoss,
    XiRegion,
    OptimizePower,
    SinglePoint,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Command as ValueEnum>::from_str(s, false)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

/// Key rate simulator for 2x2 MIMO continuous-variable QKD.
///
/// Every flag may also be given in the `--config` file as `key = value`,
/// with dashes written as underscores (`loss_min = 5`). Flags win.
#[derive(Debug, Default, Parser)]
#[command(name = "cvqkd", version)]
pub struct Cli {
    /// What to compute; may instead be set by `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Flat key=value configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output CSV path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Channel transmissivity in (0, 1] [default: 0.1].
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    /// First loss value of a sweep in dB [default: 0].
    #[arg(long)]
    pub loss_min: Option<f64>,
    /// Last loss value of a sweep in dB [default: 35].
    #[arg(long)]
    pub loss_max: Option<f64>,
    /// Loss step in dB [default: 1].
    #[arg(long)]
    pub loss_step: Option<f64>,
    /// Excess noise at receiver 1 in SNU [default: 0.001].
    #[arg(long)]
    pub xi_b1: Option<f64>,
    /// Excess noise at receiver 2 in SNU [default: 0.001].
    #[arg(long)]
    pub xi_b2: Option<f64>,
    /// Real part of the correlated receiver noise [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub xi_b1b2_re: Option<f64>,
    /// Imaginary part of the correlated receiver noise [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub xi_b1b2_im: Option<f64>,
    /// Reconciliation efficiency in (0, 1] [default: 0.95].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Total transmit power of both modes [default: 9.4].
    #[arg(long)]
    pub total_power: Option<f64>,
    /// Optional power cap per mode.
    #[arg(long)]
    pub per_mode_cap: Option<f64>,
    /// How power maps to modulation variance: variance or variance_minus_one [default: variance].
    #[arg(long)]
    pub power_convention: Option<String>,
    /// Points per axis of the correlated-noise scan [default: 41].
    #[arg(long)]
    pub grid: Option<usize>,
    /// Coarse grid of the power optimizer [default: 64].
    #[arg(long)]
    pub opt_grid: Option<usize>,
    /// Final step of the power optimizer's refinement [default: 1e-4].
    #[arg(long)]
    pub min_step: Option<f64>,
    /// Modulation variance of transmitter 1 for single-point [default: equal split].
    #[arg(long)]
    pub v_a1: Option<f64>,
    /// Modulation variance of transmitter 2 for single-point [default: equal split].
    #[arg(long)]
    pub v_a2: Option<f64>,
    /// Scenario for optimize-power: selection, multiplexed or full_mimo [default: full_mimo].
    #[arg(long)]
    pub scenario: Option<String>,
}

const KEYS: &[&str] = &[
    "command",
    "out",
    "T",
    "loss_min",
    "loss_max",
    "loss_step",
    "xi_b1",
    "xi_b2",
    "xi_b1b2_re",
    "xi_b1b2_im",
    "beta",
    "total_power",
    "per_mode_cap",
    "power_convention",
    "grid",
    "opt_grid",
    "min_step",
    "v_a1",
    "v_a2",
    "scenario",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!(
                "config line {}: unknown key `{key}`",
                n + 1
            )));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::usage(format!(
                "config line {}: duplicate key `{key}`",
                n + 1
            )));
        }
    }
    Ok(map)
}

fn parsed<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    file.get(key)
        .map(|v| {
            v.parse().map_err(|e| {
                CliError::usage(format!("config key `{key}`: cannot parse `{v}`: {e}"))
            })
        })
        .transpose()
}

impl Cli {
    /// Fills every flag left unset from the config file.
    pub fn overlay_file(mut self, file: &BTreeMap<String, String>) -> Result<Self, CliError> {
        macro_rules! fill {
            ($field:ident, $key:literal) => {
                if self.$field.is_none() {
                    self.$field = parsed(file, $key)?;
                }
            };
        }
        fill!(command, "command");
        fill!(out, "out");
        fill!(t, "T");
        fill!(loss_min, "loss_min");
        fill!(loss_max, "loss_max");
        fill!(loss_step, "loss_step");
        fill!(xi_b1, "xi_b1");
        fill!(xi_b2, "xi_b2");
        fill!(xi_b1b2_re, "xi_b1b2_re");
        fill!(xi_b1b2_im, "xi_b1b2_im");
        fill!(beta, "beta");
        fill!(total_power, "total_power");
        fill!(per_mode_cap, "per_mode_cap");
        fill!(power_convention, "power_convention");
        fill!(grid, "grid");
        fill!(opt_grid, "opt_grid");
        fill!(min_step, "min_step");
        fill!(v_a1, "v_a1");
        fill!(v_a2, "v_a2");
        fill!(scenario, "scenario");
        Ok(self)
    }
}

/// Validated parameters of one run, with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: Option<PathBuf>,
    pub transmissivity: f64,
    pub loss_min: f64,
    pub loss_max: f64,
    pub loss_step: f64,
    pub xi_b1: f64,
    pub xi_b2: f64,
    /// Explicitly configured correlated noise, if any.
    pub xi_b1b2: Option<Complex64>,
    pub beta: f64,
    pub budget: PowerBudget,
    pub grid: usize,
    pub settings: OptimizerSettings,
    pub v_a1: Option<f64>,
    pub v_a2: Option<f64>,
    pub scenario: Scenario,
}

fn check(ok: bool, name: &str, value: impl fmt::Display, rule: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("invalid {name} = {value}: {rule}")))
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(path) => parse_file(&read(path)?)?,
            None => BTreeMap::new(),
        };
        Self::resolve(cli.overlay_file(&file)?)
    }

    fn resolve(c: Cli) -> Result<Self, CliError> {
        let command = c.command.ok_or_else(|| {
            CliError::usage(
                "no command given (sweep-loss, xi-region, optimize-power, single-point)",
            )
        })?;

        let t = c.t.unwrap_or(0.1);
        check(t > 0.0 && t <= 1.0, "T", t, "must lie in (0, 1]")?;
        let loss_min = c.loss_min.unwrap_or(0.0);
        let loss_max = c.loss_max.unwrap_or(35.0);
        let loss_step = c.loss_step.unwrap_or(1.0);
        check(
            (0.0..=60.0).contains(&loss_min),
            "loss_min",
            loss_min,
            "must lie in [0, 60] dB",
        )?;
        check(
            (0.0..=60.0).contains(&loss_max),
            "loss_max",
            loss_max,
            "must lie in [0, 60] dB",
        )?;
        check(
            loss_max >= loss_min,
            "loss_max",
            loss_max,
            "must not be below loss_min",
        )?;
        check(
            loss_step > 0.0 && loss_step.is_finite(),
            "loss_step",
            loss_step,
            "must be positive",
        )?;

        let xi_b1 = c.xi_b1.unwrap_or(0.001);
        let xi_b2 = c.xi_b2.unwrap_or(0.001);
        check(
            xi_b1 >= 0.0 && xi_b1.is_finite(),
            "xi_b1",
            xi_b1,
            "must be non-negative",
        )?;
        check(
            xi_b2 >= 0.0 && xi_b2.is_finite(),
            "xi_b2",
            xi_b2,
            "must be non-negative",
        )?;
        let xi_b1b2 = match (c.xi_b1b2_re, c.xi_b1b2_im) {
            (None, None) => None,
            (re, im) => Some(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        };
        if let Some(x) = xi_b1b2 {
            check(
                x.re.is_finite() && x.im.is_finite(),
                "xi_b1b2",
                x,
                "must be finite",
            )?;
        }

        let beta = c.beta.unwrap_or(0.95);
        check(
            beta > 0.0 && beta <= 1.0,
            "beta",
            beta,
            "must lie in (0, 1]",
        )?;

        let convention = match c.power_convention.as_deref() {
            Some(s) => s.parse::<PowerConvention>().map_err(CliError::usage)?,
            None => PowerConvention::default(),
        };
        let budget = PowerBudget::new(c.total_power.unwrap_or(9.4), c.per_mode_cap, convention)
            .map_err(|e| CliError::usage(e.to_string()))?;
        budget
            .equal_allocation()
            .map_err(|e| CliError::usage(format!("power budget: {e}")))?;

        let grid = c.grid.unwrap_or(41);
        check(grid >= 3, "grid", grid, "must be at least 3")?;
        let settings = OptimizerSettings {
            grid: c.opt_grid.unwrap_or(OptimizerSettings::default().grid),
            min_step: c.min_step.unwrap_or(OptimizerSettings::default().min_step),
        };
        check(
            settings.grid >= 2,
            "opt_grid",
            settings.grid,
            "must be at least 2",
        )?;
        check(
            settings.min_step > 0.0 && settings.min_step.is_finite(),
            "min_step",
            settings.min_step,
            "must be positive",
        )?;

        for (name, v) in [("v_a1", c.v_a1), ("v_a2", c.v_a2)] {
            if let Some(v) = v {
                check(
                    v >= 1.0 && v.is_finite(),
                    name,
                    v,
                    "modulation variance must be at least 1",
                )?;
            }
        }
        let scenario = match c.scenario.as_deref() {
            Some(s) => s.parse::<Scenario>().map_err(CliError::usage)?,
            None => Scenario::FullMimo,
        };

        Ok(RunConfig {
            command,
            out: c.out,
            transmissivity: t,
            loss_min,
            loss_max,
            loss_step,
            xi_b1,
            xi_b2,
            xi_b1b2,
            beta,
            budget,
            grid,
            settings,
            v_a1: c.v_a1,
            v_a2: c.v_a2,
            scenario,
        })
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}
