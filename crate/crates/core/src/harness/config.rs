//! Scenario files: one `[[scenario]]` table per scenario.
//!
//! ```toml
//! [[scenario]]
//! id = "iid-pareto"
//! kind = "deviation_scan"
//! seed = 1
//! marginal = "centered(pareto(alpha=2, scale=1))"
//! n_list = [20, 50, 100]
//! ```
//!
//! Distribution-valued fields use the textual call syntax of the distribution types.
//! Defaults are filled in by [`parse_config`], so a parsed config
//! serializes with every knob spelled out.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue, ValueDeserializer};

use crate::counting::{CountingSpec, DEFAULT_LAMBDA_REPLICATIONS};
use crate::dependence::DependenceSpec;
use crate::deviation::{Method, Tolerances};
use crate::diagnostics::DEFAULT_Y_GRID;
use crate::marginals::MarginalSpec;
use crate::risk::{Functional, RiskModelSpec, TauSpec};

pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_X_MULTIPLIERS: [f64; 3] = [2.0, 4.0, 8.0];
pub const DEFAULT_DELTA: f64 = 0.5;
/// Scaled sample counts never drop below this.
pub const MIN_SCALED_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DeviationScan,
    RandomSumScan,
    ReinsuranceScan,
    Ruin,
    RandomTimeRuin,
    Diagnostics,
    DominatingEstimate,
    ConditionCheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::DeviationScan,
        ScenarioKind::RandomSumScan,
        ScenarioKind::ReinsuranceScan,
        ScenarioKind::Ruin,
        ScenarioKind::RandomTimeRuin,
        ScenarioKind::Diagnostics,
        ScenarioKind::DominatingEstimate,
        ScenarioKind::ConditionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::DeviationScan => "deviation_scan",
            ScenarioKind::RandomSumScan => "random_sum_scan",
            ScenarioKind::ReinsuranceScan => "reinsurance_scan",
            ScenarioKind::Ruin => "ruin",
            ScenarioKind::RandomTimeRuin => "random_time_ruin",
            ScenarioKind::Diagnostics => "diagnostics",
            ScenarioKind::DominatingEstimate => "dominating_estimate",
            ScenarioKind::ConditionCheck => "condition_check",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// What a `condition_check` scenario examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionCheck {
    /// Concentration and truncated moments of `N(t)`.
    Counting,
    /// `P(N(tau) > x) = o(G(x))`.
    RandomTime,
    /// `F(-x) = o(F(x))`.
    LeftTail,
    /// `g_U(n) n F(n) -> 0` with the certified coefficients.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<ConditionCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<MarginalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<DependenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_multipliers: Option<Vec<f64>>,
    /// Explicit thresholds or capitals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_replications: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskModelSpec>,
}

/// Field names as they appear in config files.
const FIELDS: [&str; 20] = [
    "check",
    "marginal",
    "dependence",
    "counting",
    "tau",
    "functional",
    "gamma",
    "n_list",
    "t_list",
    "x_multipliers",
    "x_list",
    "y_grid",
    "q_exponents",
    "delta",
    "samples",
    "lambda_replications",
    "method",
    "tolerances",
    "risk",
    "id",
];

/// A config problem with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, when known.
    pub line: Option<usize>,
    /// Dotted path such as `scenario[2].seed`.
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.reason),
            None => write!(f, "{}: {}", self.field, self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// First backquoted word of a serde message, e.g. the field in
/// "missing field `seed`".
fn quoted(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

/// Parses and validates a scenario file, collecting every error found.
pub fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>, ConfigErrors> {
    let root = DeTable::parse(text).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            field: "<document>".into(),
            reason: e.message().trim().to_string(),
        }])
    })?;
    let mut errors = Vec::new();
    let mut out = Vec::new();
    let mut items = None;
    for (key, value) in root.get_ref() {
        match (key.get_ref().as_ref(), value.get_ref()) {
            ("scenario", DeValue::Array(a)) => items = Some(a),
            (k, _) => errors.push(ConfigError {
                line: Some(line_of(text, key.span().start)),
                field: k.to_string(),
                reason: "unknown top-level key; scenarios go in [[scenario]] tables".into(),
            }),
        }
    }
    for (i, item) in items.into_iter().flatten().enumerate() {
        let line = line_of(text, item.span().start);
        let path = format!("scenario[{i}]");
        match ScenarioConfig::deserialize(ValueDeserializer::from(item.clone())) {
            Ok(mut cfg) => {
                let label = format!("scenario[{i}] ({})", cfg.id);
                cfg.fill_defaults();
                for (field, reason) in cfg.problems() {
                    errors.push(ConfigError {
                        line: Some(line),
                        field: format!("{label}.{field}"),
                        reason,
                    });
                }
                out.push((line, cfg));
            }
            Err(e) => {
                let msg = e.message().trim().to_string();
                let by_span = e.span().and_then(|span| match item.get_ref() {
                    DeValue::Table(t) => t
                        .iter()
                        .find(|(_, v)| v.span().contains(&span.start))
                        .map(|(k, _)| k.get_ref().to_string()),
                    _ => None,
                });
                let by_name = quoted(&msg)
                    .filter(|f| FIELDS.contains(f) || ["seed", "kind"].contains(f))
                    .map(str::to_string);
                let field = by_span.or(by_name).map_or(path.clone(), |f| format!("{path}.{f}"));
                errors.push(ConfigError {
                    line: Some(e.span().map_or(line, |s| line_of(text, s.start))),
                    field,
                    reason: msg,
                });
            }
        }
    }
    let mut seen = BTreeSet::new();
    for (i, (line, cfg)) in out.iter().enumerate() {
        if !seen.insert(cfg.id.as_str()) {
            errors.push(ConfigError {
                line: Some(*line),
                field: format!("scenario[{i}].id"),
                reason: format!("duplicate scenario id `{}`", cfg.id),
            });
        }
    }
    if errors.is_empty() {
        Ok(out.into_iter().map(|(_, c)| c).collect())
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Serializes configs in the form [`parse_config`] reads.
pub fn to_config_text(configs: &[ScenarioConfig]) -> String {
    #[derive(Serialize)]
    struct File<'a> {
        scenario: &'a [ScenarioConfig],
    }
    toml::to_string(&File { scenario: configs }).expect("scenario configs serialize")
}

impl ScenarioConfig {
    /// Bare config of the given kind; set fields, then call [`Self::finalize`].
    pub fn new(id: impl Into<String>, kind: ScenarioKind, seed: u64) -> Self {
        Self {
            id: id.into(),
            kind,
            seed,
            check: None,
            marginal: None,
            dependence: None,
            counting: None,
            tau: None,
            functional: None,
            gamma: None,
            n_list: None,
            t_list: None,
            x_multipliers: None,
            x_list: None,
            y_grid: None,
            q_exponents: None,
            delta: None,
            samples: None,
            lambda_replications: None,
            method: None,
            tolerances: None,
            risk: None,
        }
    }

    /// Fills defaults and validates, as parsing does.
    pub fn finalize(mut self) -> Result<Self, ConfigErrors> {
        self.fill_defaults();
        let errors: Vec<ConfigError> = self
            .problems()
            .into_iter()
            .map(|(field, reason)| ConfigError {
                line: None,
                field: format!("{}.{field}", self.id),
                reason,
            })
            .collect();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// Fields the kind reads (besides `id`, `kind`, `seed`).
    fn used_fields(&self) -> &'static [&'static str] {
        use self::ConditionCheck as Check;
        use ScenarioKind::*;
        match (self.kind, self.check) {
            (DeviationScan, _) => &["marginal", "dependence", "gamma", "n_list", "x_multipliers", "samples", "method", "tolerances"],
            (RandomSumScan, _) => &["marginal", "dependence", "counting", "gamma", "t_list", "x_multipliers", "samples", "lambda_replications", "tolerances"],
            (ReinsuranceScan, _) => &["risk", "functional", "gamma", "t_list", "x_multipliers", "samples", "lambda_replications", "tolerances"],
            (Ruin, _) => &["risk", "gamma", "t_list", "x_multipliers", "x_list", "samples", "lambda_replications", "tolerances"],
            (RandomTimeRuin, _) => &["risk", "tau", "gamma", "x_multipliers", "x_list", "samples", "lambda_replications", "tolerances"],
            (Diagnostics, _) => &["marginal", "y_grid", "x_list", "samples"],
            (DominatingEstimate, _) => &["marginal", "dependence", "n_list", "x_list", "samples"],
            (ConditionCheck, Some(Check::Counting)) => &["check", "counting", "t_list", "q_exponents", "delta", "samples", "lambda_replications"],
            (ConditionCheck, Some(Check::RandomTime)) => &["check", "risk", "tau", "x_list", "samples"],
            (ConditionCheck, Some(Check::LeftTail)) => &["check", "marginal", "x_list", "samples"],
            (ConditionCheck, Some(Check::Growth)) => &["check", "marginal", "dependence", "n_list"],
            (ConditionCheck, None) => &["check"],
        }
    }

    fn uses(&self, field: &str) -> bool {
        self.used_fields().contains(&field)
    }

    fn fill_defaults(&mut self) {
        if self.uses("dependence") && self.dependence.is_none() {
            self.dependence = Some(DependenceSpec::independent());
        }
        if self.uses("gamma") && self.gamma.is_none() {
            self.gamma = Some(1.0);
        }
        // Explicit capitals replace multipliers for ruin kinds.
        if self.uses("x_multipliers") && self.x_multipliers.is_none() && self.x_list.is_none() {
            self.x_multipliers = Some(DEFAULT_X_MULTIPLIERS.to_vec());
        }
        let samples_default = !matches!(self.kind, ScenarioKind::Diagnostics)
            && !matches!(self.check, Some(ConditionCheck::Growth));
        if samples_default && self.uses("samples") && self.samples.is_none() {
            self.samples = Some(DEFAULT_SAMPLES);
        }
        if self.uses("lambda_replications") && self.lambda_replications.is_none() {
            self.lambda_replications = Some(DEFAULT_LAMBDA_REPLICATIONS);
        }
        if self.uses("method") && self.method.is_none() {
            self.method = Some(Method::CrudeMc);
        }
        if self.uses("tolerances") && self.tolerances.is_none() {
            self.tolerances = Some(Tolerances::default());
        }
        if self.uses("y_grid") && self.y_grid.is_none() {
            self.y_grid = Some(DEFAULT_Y_GRID.to_vec());
        }
        if self.uses("q_exponents") && self.q_exponents.is_none() {
            self.q_exponents = Some(vec![1.0]);
        }
        if self.uses("delta") && self.delta.is_none() {
            self.delta = Some(DEFAULT_DELTA);
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let mut p = Vec::new();
        let mut mark = |name, set: bool| {
            if set {
                p.push(name);
            }
        };
        mark("check", self.check.is_some());
        mark("marginal", self.marginal.is_some());
        mark("dependence", self.dependence.is_some());
        mark("counting", self.counting.is_some());
        mark("tau", self.tau.is_some());
        mark("functional", self.functional.is_some());
        mark("gamma", self.gamma.is_some());
        mark("n_list", self.n_list.is_some());
        mark("t_list", self.t_list.is_some());
        mark("x_multipliers", self.x_multipliers.is_some());
        mark("x_list", self.x_list.is_some());
        mark("y_grid", self.y_grid.is_some());
        mark("q_exponents", self.q_exponents.is_some());
        mark("delta", self.delta.is_some());
        mark("samples", self.samples.is_some());
        mark("lambda_replications", self.lambda_replications.is_some());
        mark("method", self.method.is_some());
        mark("tolerances", self.tolerances.is_some());
        mark("risk", self.risk.is_some());
        p
    }

    fn required_fields(&self) -> &'static [&'static str] {
        use self::ConditionCheck as Check;
        use ScenarioKind::*;
        match (self.kind, self.check) {
            (DeviationScan, _) => &["marginal", "n_list"],
            (RandomSumScan, _) => &["marginal", "counting", "t_list"],
            (ReinsuranceScan, _) => &["risk", "functional", "t_list"],
            (Ruin, _) => &["risk", "t_list"],
            (RandomTimeRuin, _) => &["risk", "tau"],
            (Diagnostics, _) => &["marginal"],
            (DominatingEstimate, _) => &["marginal", "n_list", "x_list", "samples"],
            (ConditionCheck, Some(Check::Counting)) => &["counting", "t_list"],
            (ConditionCheck, Some(Check::RandomTime)) => &["risk", "tau", "x_list"],
            (ConditionCheck, Some(Check::LeftTail)) => &["marginal", "x_list"],
            (ConditionCheck, Some(Check::Growth)) => &["marginal", "n_list"],
            (ConditionCheck, None) => &["check"],
        }
    }

    /// Every `(field, reason)` that makes this config unusable.
    fn problems(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut bad = |f: &str, r: String| out.push((f.to_string(), r));
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            bad("id", format!("`{}` must be nonempty ASCII letters, digits, `-` or `_`", self.id));
        }
        for f in self.required_fields() {
            if !self.present().contains(f) {
                bad(f, format!("required by kind {}", self.kind));
            }
        }
        for f in self.present() {
            if !self.uses(f) {
                bad(f, format!("not used by kind {}", self.kind));
            }
        }
        let positive_list = |v: &Option<Vec<f64>>| v.as_ref().is_some_and(|v| v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())));
        for (name, list) in [
            ("t_list", &self.t_list),
            ("x_multipliers", &self.x_multipliers),
            ("x_list", &self.x_list),
            ("q_exponents", &self.q_exponents),
        ] {
            if positive_list(list) {
                bad(name, "must be a nonempty list of positive numbers".into());
            }
        }
        if let Some(x) = &self.x_list {
            if x.windows(2).any(|w| w[0] >= w[1]) {
                bad("x_list", "must be increasing".into());
            }
        }
        if let Some(n) = &self.n_list {
            if n.is_empty() || n.contains(&0) {
                bad("n_list", "must be a nonempty list of positive integers".into());
            }
        }
        if let Some(y) = &self.y_grid {
            if y.is_empty() || y[0] <= 1.0 || y.windows(2).any(|w| w[0] >= w[1]) || *y.last().unwrap() < 16.0 {
                bad("y_grid", "must increase inside (1, inf) and reach 16".into());
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                bad("gamma", format!("must be positive, got {g}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                bad("delta", format!("must lie in (0, 1), got {d}"));
            }
        }
        if let Some(s) = self.samples {
            if s < MIN_SCALED_SAMPLES && !matches!(self.kind, ScenarioKind::DominatingEstimate) {
                bad("samples", format!("must be at least {MIN_SCALED_SAMPLES}, got {s}"));
            }
        }
        if let Some(r) = &self.risk {
            if let Err(e) = r.validate() {
                bad("risk", e.to_string());
            }
        }
        if let Some(t) = &self.tau {
            if let Err(e) = t.validate() {
                bad("tau", e.to_string());
            }
        }
        out
    }

    /// Multiplies sample and replication counts by `factor`, keeping at
    /// least [`MIN_SCALED_SAMPLES`].
    pub fn scaled(mut self, factor: f64) -> Self {
        let scale = |v: u64| ((v as f64 * factor).round() as u64).max(MIN_SCALED_SAMPLES);
        self.samples = self.samples.map(scale);
        self.lambda_replications = self.lambda_replications.map(scale);
        self
    }
}
