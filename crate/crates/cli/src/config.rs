//! JSON experiment configs: schema, parsing, and conversion to library types.
//!
//! Every error carries a JSON pointer into the offending document.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use ambiguity_core::attitudes::{
    AbsoluteAttitude, CoefficientKind, CoefficientMethod, RelativeAttitude,
};
use ambiguity_core::duality::{DualProperty, ExtensionKind};
use ambiguity_core::models::{
    Aggregator, AmbiguityFunction, ConfidenceOO, DualSelfMax, MultiplierOO, PreferenceModel,
    SecondOrderRM, Smooth, VariationalMenu,
};
use ambiguity_core::risksharing::{Agent, Allocation, Economy};
use ambiguity_core::{Act, Belief, UtilityInterval};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

impl ConfigError {
    pub fn schema(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::Schema {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }

    pub fn pointer(&self) -> Option<&str> {
        match self {
            Self::Schema { pointer, .. } => Some(pointer),
            Self::Io { .. } => None,
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Eval,
    Audit,
    Dualize,
    Share,
    Repro,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Eval => "eval",
            Self::Audit => "audit",
            Self::Dualize => "dualize",
            Self::Share => "share",
            Self::Repro => "repro",
        }
    }

    /// Commands that draw random samples and so need a seed.
    pub fn samples(self) -> bool {
        matches!(self, Self::Audit | Self::Dualize | Self::Share)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub interval: Option<IntervalSpec>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub acts: Vec<Vec<f64>>,
    #[serde(default)]
    pub audit: Option<AuditSpec>,
    #[serde(default)]
    pub dual: Option<DualSpec>,
    #[serde(default)]
    pub economy: Option<EconomySpec>,
    #[serde(default)]
    pub share: Option<ShareSpec>,
}

/// `lo`/`hi` default to unbounded; endpoints are closed unless stated.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default = "yes")]
    pub lo_closed: bool,
    #[serde(default = "yes")]
    pub hi_closed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    DualSelfMax {
        aggregators: Vec<AggregatorSpec>,
    },
    #[serde(rename = "multiplier_oo")]
    MultiplierOO {
        q_set: Vec<Vec<f64>>,
        theta: f64,
        lambda: f64,
    },
    #[serde(rename = "confidence_oo")]
    ConfidenceOO {
        q_set: Vec<Vec<f64>>,
        theta: f64,
    },
    #[serde(rename = "second_order_rm")]
    SecondOrderRM {
        q_set: Vec<Vec<f64>>,
        phi: PhiSpec,
    },
    Smooth {
        priors: Vec<Vec<f64>>,
        mu: Vec<f64>,
        phi: PhiSpec,
    },
    VariationalMenu {
        entries: Vec<MenuEntry>,
    },
    Maxmin {
        beliefs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregatorSpec {
    Affine {
        belief: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    LogSumExp {
        lambda: f64,
        weights: Vec<f64>,
        beliefs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Sqrt,
    SqrtPlusLinear,
    Log,
    ExpCapped,
    Power { rho: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenuEntry {
    pub belief: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub samples: usize,
    #[serde(default)]
    pub dim: Option<usize>,
    /// Sampling box `[lo, hi]` inside the interval.
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub expect: Option<ExpectSpec>,
    #[serde(default)]
    pub coefficients: Vec<CoefficientSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectSpec {
    #[serde(default)]
    pub absolute: Option<AbsoluteAttitude>,
    #[serde(default)]
    pub relative: Option<RelativeAttitude>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub phi: PhiSpec,
    pub kind: CoefficientKind,
    pub grid: Vec<f64>,
    #[serde(default = "analytic")]
    pub method: CoefficientMethod,
}

fn analytic() -> CoefficientMethod {
    CoefficientMethod::Analytic
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    pub t_grid: Vec<f64>,
    /// Explicit beliefs; otherwise `belief_count` evenly spaced two-state beliefs.
    #[serde(default)]
    pub beliefs: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub belief_count: Option<usize>,
    #[serde(default = "monotone_only")]
    pub properties: Vec<DualProperty>,
    #[serde(default)]
    pub extensions: Vec<ExtensionSpec>,
    #[serde(default)]
    pub envelope: Option<EnvelopeCheckSpec>,
}

fn monotone_only() -> Vec<DualProperty> {
    vec![DualProperty::Monotone]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    pub kind: ExtensionKind,
    pub psi: Vec<f64>,
    #[serde(default = "default_extension_samples")]
    pub samples: usize,
}

fn default_extension_samples() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeCheckSpec {
    pub phi: Vec<f64>,
    pub xi_samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomySpec {
    pub agents: Vec<AgentSpec>,
    pub endowments: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub interval: Option<IntervalSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareSpec {
    /// Allocation to test; the endowments when absent.
    #[serde(default)]
    pub allocation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub search: Option<SearchSpec>,
    #[serde(default)]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub belief_tolerance: Option<f64>,
    #[serde(default)]
    pub equilibrium: Option<EquilibriumSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default)]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSpec {
    pub prices: Vec<f64>,
    pub transfers: Vec<f64>,
    pub samples: usize,
}

/// JSON pointer for a `serde_path_to_error` path. Missing-field errors
/// are reported at the parent, so the field name is appended.
fn pointer_of(path: &serde_path_to_error::Path, message: &str) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            out.push('/');
            out.push_str(field);
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let message = e.inner().to_string();
        ConfigError::schema(pointer_of(e.path(), &message), message)
    })?;
    if cfg.version != SCHEMA_VERSION {
        return Err(ConfigError::schema(
            "/version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                cfg.version
            ),
        ));
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

impl ExperimentConfig {
    /// A config with nothing but the version, for commands that need none.
    pub fn empty() -> Self {
        parse_str(&format!("{{\"version\": {SCHEMA_VERSION}}}")).expect("minimal config parses")
    }

    /// Checks the config against the command it is run with.
    pub fn check_command(&self, command: CommandName, seed_override: Option<u64>) -> Result<()> {
        if let Some(declared) = self.command {
            if declared != command {
                return Err(ConfigError::schema(
                    "/command",
                    format!(
                        "config is for `{}`, not `{}`",
                        declared.as_str(),
                        command.as_str()
                    ),
                ));
            }
        }
        if command.samples() && self.seed.is_none() && seed_override.is_none() {
            return Err(ConfigError::schema(
                "/seed",
                format!("a seed is required for `{}`", command.as_str()),
            ));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::schema(
                    "/tolerance",
                    "tolerance must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn required<'a, T>(value: &'a Option<T>, pointer: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| ConfigError::schema(pointer, "required field is missing"))
    }

    /// The model and its utility interval, defaulting to the model's domain
    /// or the real line.
    pub fn bound_model(&self) -> Result<(PreferenceModel, UtilityInterval)> {
        let spec = Self::required(&self.model, "/model")?;
        let model = spec.build("/model")?;
        let k = interval_for(&model, self.interval.as_ref(), "/interval")?;
        Ok((model, k))
    }

    pub fn economy(&self, tol: f64) -> Result<Economy> {
        let spec = Self::required(&self.economy, "/economy")?;
        let mut agents = Vec::with_capacity(spec.agents.len());
        for (i, a) in spec.agents.iter().enumerate() {
            let at = format!("/economy/agents/{i}");
            let model = a.model.build(&format!("{at}/model"))?;
            let k = interval_for(&model, a.interval.as_ref(), &format!("{at}/interval"))?;
            agents.push(Agent::new(a.name.clone(), Arc::new(model.bind(k, tol))));
        }
        let endowments = acts(&spec.endowments, "/economy/endowments")?;
        Economy::new(agents, endowments).map_err(|e| ConfigError::schema("/economy", e))
    }

    pub fn allocation(&self, e: &Economy) -> Result<Allocation> {
        match self.share.as_ref().and_then(|s| s.allocation.as_ref()) {
            Some(bundles) => Ok(Allocation::new(acts(bundles, "/share/allocation")?)),
            None => Ok(e.endowment_allocation()),
        }
    }
}

fn interval_for(
    model: &PreferenceModel,
    spec: Option<&IntervalSpec>,
    at: &str,
) -> Result<UtilityInterval> {
    match spec {
        Some(s) => s.build(at),
        // models with no restriction of their own act on the whole line
        None => Ok(model.domain().unwrap_or_else(UtilityInterval::real_line)),
    }
}

impl IntervalSpec {
    pub fn build(&self, at: &str) -> Result<UtilityInterval> {
        UtilityInterval::new(
            self.lo.unwrap_or(f64::NEG_INFINITY),
            self.hi.unwrap_or(f64::INFINITY),
            self.lo_closed && self.lo.is_some(),
            self.hi_closed && self.hi.is_some(),
        )
        .map_err(|e| ConfigError::schema(at, e))
    }
}

pub fn belief(w: &[f64], at: &str) -> Result<Belief> {
    Belief::new(w.to_vec()).map_err(|e| ConfigError::schema(at, e))
}

fn beliefs(ws: &[Vec<f64>], at: &str) -> Result<Vec<Belief>> {
    ws.iter()
        .enumerate()
        .map(|(i, w)| belief(w, &format!("{at}/{i}")))
        .collect()
}

pub fn act(v: &[f64], at: &str) -> Result<Act> {
    Act::new(v.to_vec()).map_err(|e| ConfigError::schema(at, e))
}

pub fn acts(vs: &[Vec<f64>], at: &str) -> Result<Vec<Act>> {
    vs.iter()
        .enumerate()
        .map(|(i, v)| act(v, &format!("{at}/{i}")))
        .collect()
}

impl PhiSpec {
    pub fn build(&self, at: &str) -> Result<AmbiguityFunction> {
        Ok(match self {
            Self::Sqrt => AmbiguityFunction::Sqrt,
            Self::SqrtPlusLinear => AmbiguityFunction::SqrtPlusLinear,
            Self::Log => AmbiguityFunction::Log,
            Self::ExpCapped => AmbiguityFunction::ExpCapped,
            Self::Power { rho } => {
                AmbiguityFunction::power(*rho).map_err(|e| ConfigError::schema(at, e))?
            }
        })
    }
}

impl ModelSpec {
    pub fn build(&self, at: &str) -> Result<PreferenceModel> {
        let invalid = |e: ambiguity_core::Error| ConfigError::schema(at, e);
        Ok(match self {
            Self::DualSelfMax { aggregators } => {
                let mut hs = Vec::with_capacity(aggregators.len());
                for (i, a) in aggregators.iter().enumerate() {
                    let at = format!("{at}/aggregators/{i}");
                    let h = match a {
                        AggregatorSpec::Affine { belief: w, offset } => {
                            Aggregator::affine(belief(w, &format!("{at}/belief"))?, *offset)
                        }
                        AggregatorSpec::LogSumExp {
                            lambda,
                            weights,
                            beliefs: ws,
                        } => Aggregator::log_sum_exp(
                            *lambda,
                            weights.clone(),
                            beliefs(ws, &format!("{at}/beliefs"))?,
                        ),
                    };
                    hs.push(h.map_err(|e| ConfigError::schema(&at, e))?);
                }
                DualSelfMax::new(hs).map_err(invalid)?.into()
            }
            Self::MultiplierOO {
                q_set,
                theta,
                lambda,
            } => MultiplierOO::new(beliefs(q_set, &format!("{at}/q_set"))?, *theta, *lambda)
                .map_err(invalid)?
                .into(),
            Self::ConfidenceOO { q_set, theta } => {
                ConfidenceOO::new(beliefs(q_set, &format!("{at}/q_set"))?, *theta)
                    .map_err(invalid)?
                    .into()
            }
            Self::SecondOrderRM { q_set, phi } => SecondOrderRM::new(
                beliefs(q_set, &format!("{at}/q_set"))?,
                phi.build(&format!("{at}/phi"))?,
            )
            .map_err(invalid)?
            .into(),
            Self::Smooth { priors, mu, phi } => Smooth::new(
                beliefs(priors, &format!("{at}/priors"))?,
                mu.clone(),
                phi.build(&format!("{at}/phi"))?,
            )
            .map_err(invalid)?
            .into(),
            Self::VariationalMenu { entries } => {
                let mut menu = Vec::with_capacity(entries.len());
                for (i, e) in entries.iter().enumerate() {
                    menu.push((
                        belief(&e.belief, &format!("{at}/entries/{i}/belief"))?,
                        e.cost,
                    ));
                }
                VariationalMenu::new(menu).map_err(invalid)?.into()
            }
            Self::Maxmin { beliefs: ws } => {
                VariationalMenu::maxmin(beliefs(ws, &format!("{at}/beliefs"))?)
                    .map_err(invalid)?
                    .into()
            }
        })
    }
}
