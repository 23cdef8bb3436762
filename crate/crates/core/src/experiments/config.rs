use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::ClockMode;
use crate::error::{Error, Result};
use crate::exact::{Starts, DEFAULT_STATE_BUDGET};
use crate::profile::{build_profile, ConductanceProfile, ProfileSpec};
use crate::spectral::{Boundary, Method};

/// Where a profile comes from: a file with explicit resistances or a generator.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ProfileSource {
    File { file: PathBuf },
    Spec(ProfileSpec),
}

impl ProfileSource {
    /// Profile on `n` sites. A file fixes N and must agree with it.
    pub fn build(&self, n: usize) -> Result<ConductanceProfile> {
        match self {
            Self::File { file } => {
                let p = ConductanceProfile::load(file)?;
                if p.n_sites() != n {
                    return Err(Error::param(format!("profile file has N = {}, run needs N = {n}", p.n_sites())));
                }
                Ok(p)
            }
            Self::Spec(spec) => build_profile(spec, n),
        }
    }
}

/// Particle number as a function of N.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum KRule {
    Half,
    /// ⌈c·N^ϱ⌉, clamped to 1..N/2.
    Power { rho: f64, c_rho: f64 },
    Fixed { k: usize },
}

impl KRule {
    pub fn k(&self, n: usize) -> usize {
        match *self {
            Self::Half => n / 2,
            Self::Power { rho, c_rho } => ((c_rho * (n as f64).powf(rho)).ceil() as usize).clamp(1, (n / 2).max(1)),
            Self::Fixed { k } => k,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Replicas {
    pub wilson: usize,
    pub coalescence: usize,
    /// Everything else: heat, bracket, area and covariance estimates.
    pub general: usize,
}

impl Default for Replicas {
    fn default() -> Self {
        Self { wilson: 400, coalescence: 200, general: 1000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSettings {
    pub count: usize,
    pub boundary: Boundary,
    pub method: Method,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self { count: 3, boundary: Boundary::Neumann, method: Method::Dense }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSettings {
    /// 0/1 strings; empty means the maximal and minimal configurations.
    pub starts: Vec<String>,
    pub horizon: f64,
    pub clock: ClockMode,
    pub snapshots: usize,
    /// Write the event log of replica 0.
    pub event_log: bool,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self { starts: Vec::new(), horizon: 10.0, clock: ClockMode::PerColumn, snapshots: 10, event_log: false }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CoalesceSettings {
    /// Defaults to 20 log max(k,2)/λ_1.
    pub max_time: Option<f64>,
    /// Replay replica 0 with its event log.
    pub event_log: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MixExactSettings {
    pub points: usize,
    /// Defaults to every state below the all-starts limit, the extremal pair above it.
    pub starts: Option<Starts>,
}

impl Default for MixExactSettings {
    fn default() -> Self {
        Self { points: 200, starts: None }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Wilson,
    Bracket,
    Area,
    Covariance,
    Heat,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSettings {
    pub what: EstimateKind,
    /// Observation time for `heat` and `bracket`; defaults to 1/λ_1.
    pub t: Option<f64>,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self { what: EstimateKind::Wilson, t: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub suite: super::verify::Suite,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { suite: super::verify::Suite::Fast }
    }
}

/// One JSON document drives every subcommand; flags override its keys.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub profile: ProfileSource,
    pub n_ladder: Vec<usize>,
    pub k_rule: KRule,
    pub eps: Vec<f64>,
    pub replicas: Replicas,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub state_budget: usize,
    /// Margin fraction of the embedded segment.
    pub delta: f64,
    pub spectrum: SpectrumSettings,
    pub simulate: SimulateSettings,
    pub coalesce: CoalesceSettings,
    pub mix_exact: MixExactSettings,
    pub estimate: EstimateSettings,
    pub verify: VerifySettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSource::Spec(ProfileSpec::iid_uniform(0.5, 1.5, 0)),
            n_ladder: vec![64, 128, 256],
            k_rule: KRule::Half,
            eps: vec![0.25],
            replicas: Replicas::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            state_budget: DEFAULT_STATE_BUDGET,
            delta: 0.5,
            spectrum: SpectrumSettings::default(),
            simulate: SimulateSettings::default(),
            coalesce: CoalesceSettings::default(),
            mix_exact: MixExactSettings::default(),
            estimate: EstimateSettings::default(),
            verify: VerifySettings::default(),
        }
    }
}

/// Set `value` at a dotted key such as `replicas.wilson`, creating objects on the way.
pub fn set_key(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::param(format!("bad config key `{key}`")));
        }
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("just made an object");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Parse an override value: JSON when it parses, a bare string otherwise.
pub fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

impl ExperimentConfig {
    /// Read `path` (or start from defaults), apply `key=value` overrides, validate.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => Value::Object(Map::new()),
        };
        for (k, v) in overrides {
            set_key(&mut doc, k, v.clone())?;
        }
        let cfg: Self = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() || self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("n_ladder must be nonempty and strictly increasing"));
        }
        if self.n_ladder[0] < 2 {
            return Err(Error::param("every N must be at least 2"));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::param("eps values must lie in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::param("delta must lie in (0, 1]"));
        }
        for &n in &self.n_ladder {
            let k = self.k_rule.k(n);
            if k == 0 || k >= n {
                return Err(Error::param(format!("k rule gives k = {k} at N = {n}")));
            }
        }
        if self.spectrum.count == 0 {
            return Err(Error::param("spectrum.count must be positive"));
        }
        if !(self.simulate.horizon >= 0.0 && self.simulate.horizon.is_finite()) {
            return Err(Error::param("simulate.horizon must be finite and nonnegative"));
        }
        if self.coalesce.max_time.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::param("coalesce.max_time must be positive"));
        }
        if self.mix_exact.points < 2 {
            return Err(Error::param("mix_exact.points must be at least 2"));
        }
        if self.estimate.t.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::param("estimate.t must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
