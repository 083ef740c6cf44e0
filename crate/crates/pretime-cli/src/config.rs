//! Experiment configuration: a flat, line-oriented `key = value` file with
//! `#` comments. The four reproduction presets are compiled in as config
//! text and go through the same parser as user files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pretime::dynamics::Disturbance;
use pretime::params::{
    FirstOrderControlParams, PredefinedParams, SecondOrderParams, SystemParams,
};
use pretime::System;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Fixed,
    Predefined,
    FirstOrder,
    SecondOrder,
    BoundsSweep,
}

impl SystemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::Predefined => "predefined",
            Self::FirstOrder => "first_order",
            Self::SecondOrder => "second_order",
            Self::BoundsSweep => "bounds_sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DisturbanceSpec {
    Zero,
    Sinusoid { amplitude: f64, period: f64 },
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: SystemKind,
    pub params: BTreeMap<String, f64>,
    pub initial_conditions: Vec<Vec<f64>>,
    pub disturbance: DisturbanceSpec,
    pub horizon: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub settle_band: Option<f64>,
}

/// Numeric keys accepted in the flat map.
const NUMERIC_KEYS: &[&str] = &[
    "alpha", "beta", "p", "q", "k", "t_c", "zeta", "delta", "alpha1", "beta1", "alpha2",
    "beta2", "t_c1", "t_c2", "rho_min", "rho_max", "points",
];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, CliError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("{key}: not a number: {raw:?}")))
}

fn parse_state_vector(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|v| parse_f64("initial_conditions", v))
        .collect()
}

fn parse_disturbance(raw: &str) -> Result<DisturbanceSpec, CliError> {
    let raw = raw.trim();
    if raw == "zero" {
        return Ok(DisturbanceSpec::Zero);
    }
    if let Some(inner) = raw.strip_prefix("sinusoid(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(invalid(format!("disturbance: expected sinusoid(amplitude, period), got {raw:?}")));
        }
        return Ok(DisturbanceSpec::Sinusoid {
            amplitude: parse_f64("disturbance amplitude", parts[0])?,
            period: parse_f64("disturbance period", parts[1])?,
        });
    }
    if let Some(inner) = raw.strip_prefix("table(").and_then(|s| s.strip_suffix(')')) {
        let mut points = Vec::new();
        for knot in inner.split(';') {
            let (t, v) = knot
                .split_once(':')
                .ok_or_else(|| invalid(format!("disturbance table knot {knot:?}: expected t:value")))?;
            points.push((parse_f64("table t", t)?, parse_f64("table value", v)?));
        }
        return Ok(DisturbanceSpec::Table(points));
    }
    Err(invalid(format!("disturbance: unknown kind {raw:?}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut name = None;
        let mut system = None;
        let mut params = BTreeMap::new();
        let mut initial_conditions = Vec::new();
        let mut disturbance = DisturbanceSpec::Zero;
        let mut horizon = None;
        let mut output_dir = None;
        let mut tol = None;
        let mut settle_band = None;

        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "name" => name = Some(value.to_string()),
                "system" => {
                    system = Some(match value {
                        "fixed" => SystemKind::Fixed,
                        "predefined" => SystemKind::Predefined,
                        "first_order" => SystemKind::FirstOrder,
                        "second_order" => SystemKind::SecondOrder,
                        "bounds_sweep" => SystemKind::BoundsSweep,
                        other => {
                            return Err(invalid(format!("system: unknown kind {other:?}")))
                        }
                    })
                }
                "initial_conditions" => {
                    initial_conditions = value
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(parse_state_vector)
                        .collect::<Result<_, _>>()?;
                }
                "disturbance" => disturbance = parse_disturbance(value)?,
                "horizon" => horizon = Some(parse_f64(key, value)?),
                "output_dir" => output_dir = Some(PathBuf::from(value)),
                "tol" => tol = Some(parse_f64(key, value)?),
                "settle_band" => settle_band = Some(parse_f64(key, value)?),
                k if NUMERIC_KEYS.contains(&k) => {
                    params.insert(k.to_string(), parse_f64(k, value)?);
                }
                other => return Err(invalid(format!("unknown config key {other:?}"))),
            }
        }

        let system = system.ok_or_else(|| invalid("missing required key: system"))?;
        let cfg = Self {
            name: name.unwrap_or_else(|| "experiment".to_string()),
            system,
            params,
            initial_conditions,
            disturbance,
            horizon,
            output_dir,
            tol,
            settle_band,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn require(&self, key: &str) -> Result<f64, CliError> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| invalid(format!("missing required key: {key}")))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.system != SystemKind::BoundsSweep {
            if self.initial_conditions.is_empty() {
                return Err(invalid("initial_conditions must be nonempty for simulation experiments"));
            }
            let dim = if self.system == SystemKind::SecondOrder { 2 } else { 1 };
            for ic in &self.initial_conditions {
                if ic.len() != dim {
                    return Err(invalid(format!(
                        "initial condition {ic:?} has dimension {}, expected {dim}",
                        ic.len()
                    )));
                }
            }
        }
        // Building the system exercises every parameter constraint.
        if self.system != SystemKind::BoundsSweep {
            self.build_system()?;
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(
            self.require("alpha")?,
            self.require("beta")?,
            self.require("p")?,
            self.require("q")?,
            self.require("k")?,
        )?)
    }

    fn build_disturbance(&self) -> Result<Disturbance, CliError> {
        let delta = self.params.get("delta").copied().unwrap_or(0.0);
        Ok(match &self.disturbance {
            DisturbanceSpec::Zero => Disturbance::zero(),
            DisturbanceSpec::Sinusoid { amplitude, period } => {
                Disturbance::sinusoid(*amplitude, *period, delta)
                    .map_err(|e| invalid(e.to_string()))?
            }
            DisturbanceSpec::Table(points) => Disturbance::table(points.clone(), delta)
                .map_err(|e| invalid(e.to_string()))?,
        })
    }

    pub fn build_system(&self) -> Result<System, CliError> {
        Ok(match self.system {
            SystemKind::Fixed => System::Fixed(self.plant()?),
            SystemKind::Predefined => {
                System::Predefined(PredefinedParams::new(self.plant()?, self.require("t_c")?)?)
            }
            SystemKind::FirstOrder => {
                let pre = PredefinedParams::new(self.plant()?, self.require("t_c")?)?;
                let fp = FirstOrderControlParams::new(
                    pre,
                    self.require("zeta")?,
                    self.params.get("delta").copied().unwrap_or(0.0),
                )?;
                System::FirstOrder(fp, self.build_disturbance()?)
            }
            SystemKind::SecondOrder => {
                let outer = SystemParams::new(
                    self.require("alpha2")?,
                    self.require("beta2")?,
                    self.require("p")?,
                    self.require("q")?,
                    self.require("k")?,
                )?;
                let sop = SecondOrderParams::new(
                    self.require("alpha1")?,
                    self.require("beta1")?,
                    outer,
                    self.require("t_c1")?,
                    self.require("t_c2")?,
                    self.require("zeta")?,
                    self.params.get("delta").copied().unwrap_or(0.0),
                )?;
                System::SecondOrder(sop, self.build_disturbance()?)
            }
            SystemKind::BoundsSweep => {
                return Err(invalid("bounds_sweep configs do not build a dynamical system"))
            }
        })
    }

    /// Horizon default: 1.2x the prescribed time budget.
    pub fn horizon_or_default(&self) -> f64 {
        if let Some(h) = self.horizon {
            return h;
        }
        let budget = match self.system {
            SystemKind::SecondOrder => {
                self.params.get("t_c1").copied().unwrap_or(0.5)
                    + self.params.get("t_c2").copied().unwrap_or(0.5)
            }
            _ => self.params.get("t_c").copied().unwrap_or(1.0),
        };
        1.2 * budget
    }
}

pub const PRESET_FIG1: &str = "\
# Gained plant, three initial conditions spanning 21 decades.
name = fig1
system = predefined
alpha = 4
beta = 0.25
p = 0.5
q = 3
k = 1.5
t_c = 1
initial_conditions = 0.1; 1; 1e20
disturbance = zero
horizon = 1.2
";

pub const PRESET_FIG2: &str = "\
# Classical-bound sweep against the gain ratio.
name = fig2
system = bounds_sweep
p = 0.5
q = 3
k = 1.5
t_c = 1
rho_min = 1e-2
rho_max = 1e2
points = 201
";

pub const PRESET_FIG3: &str = "\
# First-order robust loop under the bounded sinusoidal disturbance.
name = fig3
system = first_order
alpha = 4
beta = 0.25
p = 0.5
q = 3
k = 1.5
t_c = 1
zeta = 1
delta = 1
disturbance = sinusoid(1, 5)
initial_conditions = 0.1; 1; 1e20
horizon = 1.2
";

pub const PRESET_FIG4: &str = "\
# Second-order sliding loop, diagonal initial conditions.
name = fig4
system = second_order
alpha1 = 4
beta1 = 0.25
alpha2 = 4
beta2 = 0.25
p = 0.5
q = 3
k = 1.5
t_c1 = 0.5
t_c2 = 0.5
zeta = 1
delta = 1
disturbance = sinusoid(1, 5)
initial_conditions = 0.1, 0.1; 1, 1; 100, 100
horizon = 1.2
";

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(PRESET_FIG1),
        "fig2" => Some(PRESET_FIG2),
        "fig3" => Some(PRESET_FIG3),
        "fig4" => Some(PRESET_FIG4),
        _ => None,
    }
}
