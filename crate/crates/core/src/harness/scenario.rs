use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::meanfield::SteadyStateParams;
use crate::models::ModelSpec;
use crate::qoi::Qoi;
use crate::uq::{budget_max_mmf, EstimatorKind, LambdaPolicy, MfcvSetup, DEFAULT_COLLOCATION_NODES};

/// A validated experiment description. Serializing it echoes every resolved default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub model: ModelSection,
    pub solver: SolverSection,
    pub uq: UqSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub key: String,
    /// Overrides the catalog σ².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "N", deserialize_with = "count")]
    pub n: usize,
    pub eps: f64,
    pub t_final: f64,
    /// Defaults to `[t_final]`.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(rename = "N_MF", default = "default_n_mf", deserialize_with = "count")]
    pub n_mf: usize,
    #[serde(default = "default_k", deserialize_with = "count_u32")]
    pub k: u32,
    #[serde(rename = "N_Z", default = "default_n_z", deserialize_with = "count")]
    pub n_z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqSection {
    #[serde(default = "default_kinds", with = "strings")]
    pub kinds: Vec<EstimatorKind>,
    #[serde(rename = "M", deserialize_with = "counts")]
    pub m: Vec<usize>,
    #[serde(rename = "M_MF", default, deserialize_with = "count")]
    pub m_mf: usize,
    #[serde(default = "default_replications", deserialize_with = "count")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_qois", with = "strings")]
    pub qois: Vec<Qoi>,
    #[serde(default)]
    pub reference: ReferenceKind,
    /// DSMC runs averaged per collocation node for the kinetic reference.
    #[serde(default = "default_reference_runs", deserialize_with = "count")]
    pub reference_runs: usize,
    #[serde(default = "default_collocation", deserialize_with = "count")]
    pub collocation_nodes: usize,
    #[serde(default, with = "lambda")]
    pub lambda: LambdaPolicy,
    #[serde(default)]
    pub norm: NormOrdering,
    #[serde(default = "default_p")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Wall-times make reports non-reproducible, so they are opt-in.
    #[serde(default)]
    pub wall_time: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            wall_time: false,
        }
    }
}

/// What the estimates are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// `E[f∞]` of the analytic steady state, by collocation.
    SteadyState,
    /// Collocation of a fine FP solution (4× cells, Δt/4).
    #[default]
    MeanField,
    /// Collocation of DSMC runs averaged per node.
    Kinetic,
}

impl ReferenceKind {
    pub fn label(&self) -> &'static str {
        match self {
            ReferenceKind::SteadyState => "collocated analytic steady state",
            ReferenceKind::MeanField => "collocated fine-grid mean-field solution (interpretation)",
            ReferenceKind::Kinetic => "collocated averaged DSMC solution (interpretation)",
        }
    }
}

/// Order of the replication and state norms in the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormOrdering {
    /// `‖ E[e²]^{1/2} ‖_{L^p}`
    #[default]
    Rms,
    /// `E[ ‖e‖²_{L^p} ]^{1/2}`
    Expectation,
}

fn default_n_mf() -> usize {
    200
}
fn default_k() -> u32 {
    1
}
fn default_n_z() -> usize {
    crate::qoi::DEFAULT_RECONSTRUCTION_CELLS
}
fn default_kinds() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Mc]
}
fn default_replications() -> usize {
    50
}
fn default_qois() -> Vec<Qoi> {
    vec![Qoi::Density]
}
fn default_reference_runs() -> usize {
    32
}
fn default_collocation() -> usize {
    DEFAULT_COLLOCATION_NODES
}
fn default_p() -> f64 {
    2.0
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCount {
    Int(i64),
    Float(f64),
}

impl RawCount {
    fn resolve<E: serde::de::Error>(self) -> std::result::Result<usize, E> {
        match self {
            RawCount::Int(i) if i >= 0 => Ok(i as usize),
            RawCount::Float(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as usize),
            RawCount::Int(i) => Err(E::custom(format!("expected a non-negative count, got {i}"))),
            RawCount::Float(x) => Err(E::custom(format!("expected a non-negative integral count, got {x}"))),
        }
    }
}

/// Counts may be written as `20000` or `2e4`.
fn count<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    RawCount::deserialize(d)?.resolve()
}

fn count_u32<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
    let c = count(d)?;
    u32::try_from(c).map_err(|_| D::Error::custom(format!("count {c} is too large")))
}

fn counts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(RawCount),
        Many(Vec<RawCount>),
    }
    match OneOrMany::deserialize(d)? {
        OneOrMany::One(c) => Ok(vec![c.resolve()?]),
        OneOrMany::Many(cs) => cs.into_iter().map(RawCount::resolve).collect(),
    }
}

mod strings {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(ToString::to_string))
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<Vec<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

/// `"optimal"` or a fixed number.
mod lambda {
    use super::*;

    pub fn serialize<S: Serializer>(v: &LambdaPolicy, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            LambdaPolicy::Optimal => s.serialize_str("optimal"),
            LambdaPolicy::Fixed(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<LambdaPolicy, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "optimal" => Ok(LambdaPolicy::Optimal),
            Raw::Name(s) => Err(D::Error::custom(format!("expected \"optimal\" or a number, got `{s}`"))),
            Raw::Value(x) => Ok(LambdaPolicy::Fixed(x)),
        }
    }
}

fn invalid(key: &str, msg: impl Display) -> Error {
    Error::Configuration(format!("{key}: {msg}"))
}

fn positive(key: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(invalid(key, "must be positive"));
    }
    Ok(())
}

/// Parses and validates a TOML scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let mut spec: ScenarioSpec =
        toml::from_str(text).map_err(|e| Error::Configuration(format!("scenario: {}", e.to_string().trim())))?;
    spec.resolve()?;
    Ok(spec)
}

impl ScenarioSpec {
    /// Checks every invariant and fills derived defaults. Idempotent.
    pub fn resolve(&mut self) -> Result<()> {
        let model = self.model_spec()?;
        let s = &mut self.solver;
        if s.n < 2 {
            return Err(invalid("solver.N", "DSMC needs at least 2 particles"));
        }
        positive("solver.N_MF", s.n_mf)?;
        positive("solver.k", s.k as usize)?;
        positive("solver.N_Z", s.n_z)?;
        if s.n_mf < 4 {
            return Err(invalid("solver.N_MF", "needs at least 4 cells"));
        }
        if s.n_z < 4 {
            return Err(invalid("solver.N_Z", "needs at least 4 cells"));
        }
        if !(s.eps > 0.0 && s.eps <= 1.0) {
            return Err(invalid("solver.eps", format!("must lie in (0, 1], got {}", s.eps)));
        }
        if !(s.t_final.is_finite() && s.t_final > 0.0) {
            return Err(invalid("solver.t_final", format!("must be positive, got {}", s.t_final)));
        }
        if s.snapshots.is_empty() {
            s.snapshots.push(s.t_final);
        }
        if let Some(t) = s.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= s.t_final)) {
            return Err(invalid("solver.snapshots", format!("time {t} is outside [0, t_final = {}]", s.t_final)));
        }
        s.snapshots.sort_by(f64::total_cmp);
        s.snapshots.dedup();

        let u = &mut self.uq;
        if u.kinds.is_empty() {
            return Err(invalid("uq.kinds", "at least one estimator kind is required"));
        }
        u.kinds.sort();
        u.kinds.dedup();
        if u.m.is_empty() {
            return Err(invalid("uq.M", "at least one sample count is required"));
        }
        for &m in &u.m {
            positive("uq.M", m)?;
        }
        u.m.sort_unstable();
        u.m.dedup();
        positive("uq.replications", u.replications)?;
        positive("uq.reference_runs", u.reference_runs)?;
        if u.qois.is_empty() {
            return Err(invalid("uq.qois", "at least one QoI is required"));
        }
        if !(u.p >= 1.0) {
            return Err(invalid("uq.p", format!("norm order must be at least 1, got {}", u.p)));
        }
        if let LambdaPolicy::Fixed(x) = u.lambda {
            if !x.is_finite() {
                return Err(invalid("uq.lambda", "must be finite"));
            }
        }
        let cv = u.kinds.iter().any(|k| *k != EstimatorKind::Mc);
        if cv && u.lambda == LambdaPolicy::Optimal && u.m[0] < 2 {
            return Err(invalid("uq.M", "the optimal λ needs at least two samples; use M >= 2 or a fixed lambda"));
        }
        let steady = u.kinds.contains(&EstimatorKind::MfcvS) || u.reference == ReferenceKind::SteadyState;
        if steady && u.collocation_nodes < DEFAULT_COLLOCATION_NODES {
            return Err(invalid(
                "uq.collocation_nodes",
                format!("steady-state expectations need at least {DEFAULT_COLLOCATION_NODES} nodes"),
            ));
        }
        positive("uq.collocation_nodes", u.collocation_nodes)?;
        if steady {
            SteadyStateParams::for_model(&model, model.uncertainty.mean())
                .map_err(|e| invalid("model.key", format!("steady-state control or reference unavailable: {e}")))?;
        }
        if let Some(q) = u.qois.iter().find(|q| q.needs_nonnegative_states()) {
            if model.domain.lower < 0.0 {
                return Err(invalid("uq.qois", format!("`{q}` needs nonnegative states, model `{}` is signed", model.key)));
            }
        }
        if u.kinds.contains(&EstimatorKind::Mfcv) {
            positive("uq.M_MF", u.m_mf)?;
            let m_min = u.m[0];
            let bound = budget_max_mmf(s.n, m_min, s.n_mf, s.k)?;
            if u.m_mf > bound {
                return Err(invalid(
                    "uq.M_MF",
                    format!(
                        "{} exceeds the cost bound floor(k N M / N_MF) = {bound} at the smallest M = {m_min}",
                        u.m_mf
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let model = ModelSpec::catalog(&self.model.key).map_err(|e| invalid("model.key", e))?;
        match self.model.noise_variance {
            Some(v) if v.is_finite() && v > 0.0 => {
                let model = model.with_noise_variance(v);
                model.validate().map_err(|e| invalid("model.noise_variance", e))?;
                Ok(model)
            }
            Some(v) => Err(invalid("model.noise_variance", format!("must be positive, got {v}"))),
            None => Ok(model),
        }
    }

    /// Sampling setup shared by every replication.
    pub fn setup(&self) -> Result<MfcvSetup> {
        Ok(MfcvSetup {
            model: self.model_spec()?,
            n: self.solver.n,
            n_mf: self.solver.n_mf,
            m_mf: self.uq.m_mf,
            k: self.solver.k,
            eps: self.solver.eps,
            t_final: self.solver.t_final,
            snapshots: self.solver.snapshots.clone(),
            qois: self.uq.qois.clone(),
            n_z: self.solver.n_z,
            seed: self.uq.seed,
            collocation_nodes: self.uq.collocation_nodes,
        })
    }

    /// SHA-256 of the canonical JSON of everything but the output section.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::json!({
            "model": self.model,
            "solver": self.solver,
            "uq": self.uq,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// The resolved document, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}
