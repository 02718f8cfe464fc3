//! JSON run configuration.
//!
//! Every key is optional; absent keys take the default problem values.
//! Unknown keys are rejected.
//!
//! ```json
//! {
//!   "shift": { "lambda_minus": 0, "lambda_plus": 4, "rate": 0.05 },
//!   "coupling": { "kind": "linear", "a": 0, "b": 1 },
//!   "epsilon": 0.05,
//!   "w": 1.8,
//!   "solver": { "rel_tol": 1e-9 },
//!   "classify": { "tol_time": 1e-6 },
//!   "grids": { "b": { "min": 0.3, "max": 6, "count": 60 } }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tipping_cascade::classify::ClassifyOptions;
use tipping_cascade::regimes::{
    default_b_range, linear_grid, log_grid, DEFAULT_B_SAMPLES, DEFAULT_EPS_RANGE, DEFAULT_EPS_SAMPLES,
};
use tipping_cascade::{CascadeConfig, ConfigError, Coupling, ParameterShift, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    #[default]
    Linear,
    Localised,
}

impl CouplingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingKind::Linear => "linear",
            CouplingKind::Localised => "localised",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftSection {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub rate: f64,
}

impl Default for ShiftSection {
    fn default() -> Self {
        let s = ParameterShift::default();
        ShiftSection { lambda_minus: s.lambda_minus, lambda_plus: s.lambda_plus, rate: s.rate }
    }
}

/// Coefficients left out take the family defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    pub kind: CouplingKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => log_grid(self.min, self.max, self.count),
            Spacing::Linear => linear_grid(self.min, self.max, self.count),
        }
    }

    fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) || self.count < 2 {
            return Err(ConfigError::invalid(key, "needs finite min < max and count >= 2"));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(ConfigError::invalid(key, "log spacing needs min > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Defaults depend on the coupling family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<GridSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shift: ShiftSection,
    pub coupling: CouplingSection,
    pub epsilon: f64,
    pub w: f64,
    pub solver: SolverSettings,
    pub classify: ClassifyOptions,
    pub grids: GridSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CascadeConfig::default();
        RunConfig {
            shift: ShiftSection::default(),
            coupling: CouplingSection::default(),
            epsilon: c.epsilon,
            w: c.offset_threshold_w,
            solver: SolverSettings::default(),
            classify: ClassifyOptions::default(),
            grids: GridSection::default(),
        }
    }
}

/// Bare override keys and the paths they stand for.
const ALIASES: &[(&str, &str)] = &[
    ("lambda_minus", "shift.lambda_minus"),
    ("lambda_plus", "shift.lambda_plus"),
    ("rate", "shift.rate"),
    ("kind", "coupling.kind"),
    ("a", "coupling.a"),
    ("b", "coupling.b"),
    ("c", "coupling.c"),
    ("d", "coupling.d"),
    ("rel_tol", "solver.rel_tol"),
    ("abs_tol", "solver.abs_tol"),
    ("max_step", "solver.max_step"),
    ("event_time_tol", "solver.event_time_tol"),
    ("burn_in_s", "solver.burn_in_s"),
    ("max_steps", "solver.max_steps"),
    ("settle_tol", "solver.tail.settle_tol"),
    ("horizon_factor", "solver.tail.horizon_factor"),
    ("tol_time", "classify.tol_time"),
    ("intermediate_delta", "classify.intermediate_delta"),
];

/// A raw JSON document plus `key=value` edits, parsed into a [`RunConfig`]
/// once all edits are in.
#[derive(Debug, Clone, Default)]
pub struct ConfigDocument {
    root: Map<String, Value>,
}

impl ConfigDocument {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::invalid("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        match serde_json::from_str(text) {
            Ok(Value::Object(root)) => Ok(ConfigDocument { root }),
            Ok(_) => Err(ConfigError::invalid("config", "top level must be a JSON object")),
            Err(e) => Err(ConfigError::invalid("config", format!("invalid JSON: {e}"))),
        }
    }

    /// Sets a value at a dotted path, creating sections as needed. Bare
    /// leaf names such as `lambda_plus` resolve through a fixed alias table.
    pub fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        let path = ALIASES.iter().find(|(alias, _)| *alias == key).map(|(_, p)| *p).unwrap_or(key);
        let mut parts: Vec<&str> = path.split('.').collect();
        let leaf = parts.pop().filter(|p| !p.is_empty()).ok_or_else(|| ConfigError::invalid(key, "empty key"))?;
        let mut node = &mut self.root;
        for part in parts {
            let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node =
                entry.as_object_mut().ok_or_else(|| ConfigError::invalid(key, format!("`{part}` is not a section")))?;
        }
        node.insert(leaf.to_string(), value);
        Ok(())
    }

    /// Applies `key=value`; the value is read as JSON, or as a string if it
    /// does not parse.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid("--override", format!("expected key=value, got `{assignment}`")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set(key.trim(), value)
    }

    pub fn parse(&self) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = serde_json::from_value(Value::Object(self.root.clone()))
            .map_err(|e| ConfigError::invalid("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.coupling.kind == CouplingKind::Linear {
            for (key, v) in [("coupling.c", self.coupling.c), ("coupling.d", self.coupling.d)] {
                if v.is_some() {
                    return Err(ConfigError::invalid(key, "only the localised coupling has this coefficient"));
                }
            }
        }
        if let Some(g) = &self.grids.b {
            g.validate("grids.b")?;
        }
        if let Some(g) = &self.grids.epsilon {
            g.validate("grids.epsilon")?;
        }
        self.cascade()?.validate()
    }

    pub fn coupling(&self) -> Result<Coupling, ConfigError> {
        let shift = self.parameter_shift()?;
        let c = &self.coupling;
        match c.kind {
            CouplingKind::Linear => {
                let Coupling::Linear { a, b, .. } = Coupling::default_linear() else { unreachable!() };
                Coupling::linear(c.a.unwrap_or(a), c.b.unwrap_or(b), &shift)
            }
            CouplingKind::Localised => {
                let Coupling::Localised { a, b, c: w, d } = Coupling::default_localised() else { unreachable!() };
                Coupling::localised(c.a.unwrap_or(a), c.b.unwrap_or(b), c.c.unwrap_or(w), c.d.unwrap_or(d))
            }
        }
    }

    pub fn parameter_shift(&self) -> Result<ParameterShift, ConfigError> {
        ParameterShift::new(self.shift.lambda_minus, self.shift.lambda_plus, self.shift.rate)
    }

    pub fn cascade(&self) -> Result<CascadeConfig, ConfigError> {
        Ok(CascadeConfig {
            shift: self.parameter_shift()?,
            coupling: self.coupling()?,
            epsilon: self.epsilon,
            offset_threshold_w: self.w,
            solver: self.solver,
            ..Default::default()
        })
    }

    pub fn b_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let spec = match self.grids.b {
            Some(spec) => spec,
            None => {
                let (min, max) = default_b_range(&self.cascade()?);
                GridSpec { min, max, count: DEFAULT_B_SAMPLES, spacing: Spacing::Log }
            }
        };
        Ok(spec.values())
    }

    pub fn eps_grid(&self) -> Vec<f64> {
        let (min, max) = DEFAULT_EPS_RANGE;
        self.grids.epsilon.unwrap_or(GridSpec { min, max, count: DEFAULT_EPS_SAMPLES, spacing: Spacing::Log }).values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let config = ConfigDocument::from_json("{}").unwrap().parse().unwrap();
        assert_eq!(config.cascade().unwrap(), CascadeConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ConfigDocument::from_json(r#"{"shift": {"lambda_pluss": 3}}"#).unwrap().parse().unwrap_err();
        assert!(err.to_string().contains("lambda_pluss"));
        assert!(ConfigDocument::from_json(r#"{"colour": 1}"#).unwrap().parse().is_err());
    }

    #[test]
    fn overrides_by_alias_and_path() {
        let mut doc = ConfigDocument::default();
        doc.apply_override("lambda_plus=1").unwrap();
        doc.apply_override("coupling.kind=localised").unwrap();
        doc.apply_override("solver.tail.settle_tol=1e-8").unwrap();
        let config = doc.parse().unwrap();
        assert_eq!(config.shift.lambda_plus, 1.0);
        assert_eq!(config.coupling.kind, CouplingKind::Localised);
        assert_eq!(config.solver.tail.settle_tol, 1e-8);
        assert!(doc.apply_override("novalue").is_err());
    }

    #[test]
    fn linear_rejects_shape_coefficients() {
        let err = ConfigDocument::from_json(r#"{"coupling": {"c": 2}}"#).unwrap().parse().unwrap_err();
        assert_eq!(err.key, "coupling.c");
    }

    #[test]
    fn family_default_grids() {
        let mut config = RunConfig::default();
        assert_eq!(config.b_grid().unwrap().len(), 60);
        assert_eq!(config.b_grid().unwrap()[0], 0.3);
        config.coupling.kind = CouplingKind::Localised;
        assert_eq!(config.b_grid().unwrap()[0], 1.5);
        assert_eq!(config.eps_grid().len(), 40);
    }
}
