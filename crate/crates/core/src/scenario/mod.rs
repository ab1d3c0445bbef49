//! Scenario documents: one JSON file describes one reproducible experiment.

mod corpus;
mod parse;
mod random;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::SharingRules;
use crate::crrm::{CellConfig, CrrmParams, ExternalInterferer, Faults};
use crate::radio::PropagationParams;
use crate::spectrum::{
    validate_channel_plan, ActivationId, BandPlan, Channel, ChannelId, ControllerId, GeoZone, IncumbentActivation,
    OperatorId, Regime, RepositoryId, SpectrumMap, Window, ZoneId,
};
use crate::traffic::TrafficProfile;

pub use corpus::{bundled, corpus_names, BUNDLED};
pub use parse::parse_scenario;
pub use random::{random_scenario, RandomParams};

pub const SCHEMA: &str = "lsasim/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosEntry {
    pub channel: ChannelId,
    pub zone: ZoneId,
    pub max_eirp_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositoryConfig {
    pub id: RepositoryId,
    #[serde(default = "one_i64")]
    pub latency_tti: i64,
    #[serde(default = "default_eirp")]
    pub default_max_eirp_dbm: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qos: Vec<QosEntry>,
}

fn one_i64() -> i64 {
    1
}

fn default_eirp() -> f64 {
    30.0
}

impl Default for RepositoryConfig {
    fn default() -> Self {
        RepositoryConfig {
            id: RepositoryId::new("repo"),
            latency_tti: 1,
            default_max_eirp_dbm: default_eirp(),
            qos: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default = "default_controller_id")]
    pub id: ControllerId,
    /// Controller to cRRM command latency.
    #[serde(default = "one_u64")]
    pub crrm_latency_tti: u64,
    #[serde(default)]
    pub rules: SharingRules,
}

fn default_controller_id() -> ControllerId {
    ControllerId::new("ctl")
}

fn one_u64() -> u64 {
    1
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            id: default_controller_id(),
            crrm_latency_tti: 1,
            rules: SharingRules::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrantRequest {
    pub at: u64,
    pub licensee: OperatorId,
    pub channels: BTreeSet<ChannelId>,
    pub zone: ZoneId,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationEvent {
    /// When the incumbent registers the activation with the repositories.
    pub announce_at: u64,
    pub activation: IncumbentActivation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub seed: u64,
    pub horizon_tti: u64,
    #[serde(default = "default_tti_ms")]
    pub tti_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_plan: Option<BandPlan>,
    pub channels: Vec<Channel>,
    pub zones: Vec<GeoZone>,
    pub operators: Vec<OperatorId>,
    pub cells: Vec<CellConfig>,
    #[serde(default = "default_repositories")]
    pub repositories: Vec<RepositoryConfig>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub grant_requests: Vec<GrantRequest>,
    #[serde(default)]
    pub activations: Vec<ActivationEvent>,
    #[serde(default)]
    pub propagation: PropagationParams,
    #[serde(default)]
    pub traffic: Vec<TrafficProfile>,
    #[serde(default)]
    pub crrm: CrrmParams,
    #[serde(default)]
    pub interferers: Vec<ExternalInterferer>,
    #[serde(default)]
    pub faults: Faults,
}

fn default_tti_ms() -> f64 {
    1.0
}

fn default_repositories() -> Vec<RepositoryConfig> {
    vec![RepositoryConfig::default()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    SyntaxError,
    /// Well-formed JSON of the wrong shape (missing field, wrong type).
    SchemaError,
    ReferenceError,
    RangeError,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioError {
    pub kind: ErrorKind,
    pub path: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl ScenarioError {
    pub(crate) fn new(kind: ErrorKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            kind,
            path: path.into(),
            message: message.into(),
            line: None,
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(l) = self.line {
            write!(f, " at line {l}")?;
        }
        if !self.path.is_empty() {
            write!(f, " in {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Every problem found in one document.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
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

impl Scenario {
    pub fn spectrum_map(&self) -> Arc<SpectrumMap> {
        Arc::new(SpectrumMap::new(
            self.channels.iter().cloned(),
            self.zones.iter().cloned(),
        ))
    }

    /// Canonical (compact) serialization; the hash and the fixed point are
    /// defined over this form.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    /// Minimum TTIs between announcing an activation and its window start so
    /// that evacuation completes before the incumbent transmits.
    pub fn required_announce_lead(&self) -> u64 {
        let repo = self
            .repositories
            .iter()
            .map(|r| r.latency_tti.max(0) as u64)
            .max()
            .unwrap_or(0);
        repo + self.controller.rules.evacuation_deadline_tti + 1
    }

    /// Cross-reference and range checks on an already well-shaped document.
    pub fn validate(&self) -> Vec<ScenarioError> {
        use ErrorKind::*;
        let mut e = Vec::new();
        let mut err = |kind, path: String, msg: String| e.push(ScenarioError::new(kind, path, msg));

        if self.schema != SCHEMA {
            err(
                RangeError,
                "schema".into(),
                format!("unsupported schema '{}', expected '{SCHEMA}'", self.schema),
            );
        }
        if self.horizon_tti == 0 {
            err(RangeError, "horizon_tti".into(), "horizon must be > 0".into());
        }
        if !(self.tti_ms > 0.0) || !self.tti_ms.is_finite() {
            err(
                RangeError,
                "tti_ms".into(),
                format!("tti_ms {} must be > 0", self.tti_ms),
            );
        }

        for v in validate_channel_plan(&self.channels, self.band_plan) {
            let idx = self.channels.iter().position(|c| c.id == v.channel).unwrap_or(0);
            err(RangeError, format!("channels[{idx}]"), v.to_string());
        }
        let channels: BTreeMap<ChannelId, &Channel> = self.channels.iter().map(|c| (c.id, c)).collect();
        let ops: BTreeSet<&OperatorId> = self.operators.iter().collect();
        if ops.len() != self.operators.len() {
            err(RangeError, "operators".into(), "duplicate operator id".into());
        }
        for (i, c) in self.channels.iter().enumerate() {
            if let Regime::Licensed(op) = &c.regime {
                if !ops.contains(op) {
                    err(
                        ReferenceError,
                        format!("channels[{i}].regime"),
                        format!("unknown operator '{op}'"),
                    );
                }
            }
        }
        let mut zones = BTreeSet::new();
        for (i, z) in self.zones.iter().enumerate() {
            if !zones.insert(&z.id) {
                err(
                    RangeError,
                    format!("zones[{i}].id"),
                    format!("duplicate zone id '{}'", z.id),
                );
            }
        }

        let check_op = |op: &OperatorId, path: String, err: &mut dyn FnMut(ErrorKind, String, String)| {
            if !ops.contains(op) {
                err(ReferenceError, path, format!("unknown operator '{op}'"));
            }
        };
        let check_zone = |z: &ZoneId, path: String, err: &mut dyn FnMut(ErrorKind, String, String)| {
            if !zones.contains(z) {
                err(ReferenceError, path, format!("unknown zone '{z}'"));
            }
        };
        let check_channel =
            |c: &ChannelId, lsa: bool, path: String, err: &mut dyn FnMut(ErrorKind, String, String)| match channels
                .get(c)
            {
                None => err(ReferenceError, path, format!("unknown channel {c}")),
                Some(ch) if lsa && !ch.is_lsa() => err(RangeError, path, format!("channel {c} is not an LSA channel")),
                _ => {}
            };

        let mut cell_ids = BTreeSet::new();
        for (i, c) in self.cells.iter().enumerate() {
            let p = format!("cells[{i}]");
            if !cell_ids.insert(&c.id) {
                err(RangeError, format!("{p}.id"), format!("duplicate cell id '{}'", c.id));
            }
            if c.operators.is_empty() {
                err(RangeError, format!("{p}.operators"), "cell serves no operator".into());
            }
            for op in &c.operators {
                check_op(op, format!("{p}.operators"), &mut err);
            }
            if c.eirp_dbm.is_empty() {
                err(
                    RangeError,
                    format!("{p}.eirp_dbm"),
                    "cell needs at least one RAT".into(),
                );
            }
            if c.eirp_dbm.values().any(|v| !v.is_finite()) {
                err(RangeError, format!("{p}.eirp_dbm"), "EIRP must be finite".into());
            }
            if c.max_channels == 0 {
                err(
                    RangeError,
                    format!("{p}.max_channels"),
                    "max_channels must be >= 1".into(),
                );
            }
            if !c.position.x.is_finite() || !c.position.y.is_finite() {
                err(RangeError, format!("{p}.position"), "position must be finite".into());
            }
        }
        for x in self.interferers.iter().map(|x| &x.id) {
            if cell_ids.contains(x) {
                err(
                    RangeError,
                    "interferers".into(),
                    format!("interferer id '{x}' collides with a cell id"),
                );
            }
        }

        let mut repo_ids = BTreeSet::new();
        for (i, r) in self.repositories.iter().enumerate() {
            let p = format!("repositories[{i}]");
            if !repo_ids.insert(&r.id) {
                err(
                    RangeError,
                    format!("{p}.id"),
                    format!("duplicate repository id '{}'", r.id),
                );
            }
            if r.latency_tti < 0 {
                err(
                    RangeError,
                    format!("{p}.latency_tti"),
                    format!("latency {} must be >= 0", r.latency_tti),
                );
            }
            for (k, q) in r.qos.iter().enumerate() {
                check_channel(&q.channel, true, format!("{p}.qos[{k}].channel"), &mut err);
                check_zone(&q.zone, format!("{p}.qos[{k}].zone"), &mut err);
            }
        }
        if self.repositories.is_empty() && !self.grant_requests.is_empty() {
            err(
                ReferenceError,
                "repositories".into(),
                "grant requests need at least one repository".into(),
            );
        }

        let rules = &self.controller.rules;
        for op in rules.max_channels.keys() {
            check_op(op, "controller.rules.max_channels".into(), &mut err);
        }
        for (op, zs) in &rules.eligible_zones {
            check_op(op, "controller.rules.eligible_zones".into(), &mut err);
            for z in zs {
                check_zone(z, format!("controller.rules.eligible_zones.{op}"), &mut err);
            }
        }
        if rules.evacuation_deadline_tti == 0 {
            err(
                RangeError,
                "controller.rules.evacuation_deadline_tti".into(),
                "deadline must be > 0".into(),
            );
        }

        for (i, g) in self.grant_requests.iter().enumerate() {
            let p = format!("grant_requests[{i}]");
            check_op(&g.licensee, format!("{p}.licensee"), &mut err);
            check_zone(&g.zone, format!("{p}.zone"), &mut err);
            if g.channels.is_empty() {
                err(RangeError, format!("{p}.channels"), "empty channel set".into());
            }
            for c in &g.channels {
                check_channel(c, true, format!("{p}.channels"), &mut err);
            }
            if !g.window.is_valid() {
                err(
                    RangeError,
                    format!("{p}.window"),
                    "window start must precede end".into(),
                );
            }
        }

        let lead = self.required_announce_lead();
        let mut act_ids: BTreeSet<&ActivationId> = BTreeSet::new();
        for (i, a) in self.activations.iter().enumerate() {
            let p = format!("activations[{i}]");
            let act = &a.activation;
            if !act_ids.insert(&act.id) {
                err(
                    RangeError,
                    format!("{p}.activation.id"),
                    format!("duplicate activation id '{}'", act.id),
                );
            }
            check_zone(&act.zone, format!("{p}.activation.zone"), &mut err);
            if act.channels.is_empty() {
                err(
                    RangeError,
                    format!("{p}.activation.channels"),
                    "empty channel set".into(),
                );
            }
            for c in &act.channels {
                check_channel(c, true, format!("{p}.activation.channels"), &mut err);
            }
            if !act.window.is_valid() {
                err(
                    RangeError,
                    format!("{p}.activation.window"),
                    "window start must precede end".into(),
                );
            }
            if !act.protection_dbm.is_finite() {
                err(
                    RangeError,
                    format!("{p}.activation.protection_dbm"),
                    "must be finite".into(),
                );
            }
            if a.announce_at + lead > act.window.start {
                err(
                    RangeError,
                    format!("{p}.announce_at"),
                    format!(
                        "announced at {} but window starts at {}; needs at least {lead} TTIs lead",
                        a.announce_at, act.window.start
                    ),
                );
            }
        }

        for v in self.propagation.violations() {
            err(RangeError, "propagation".into(), v.into());
        }
        for (i, t) in self.traffic.iter().enumerate() {
            check_op(&t.operator, format!("traffic[{i}].operator"), &mut err);
            for v in t.violations() {
                err(RangeError, format!("traffic[{i}]"), v);
            }
        }
        for v in self.crrm.violations() {
            err(RangeError, "crrm".into(), v);
        }
        for op in self
            .crrm
            .sync_offsets_tti
            .keys()
            .chain(self.crrm.sla_baselines_bps.keys())
            .chain(self.crrm.operator_weights.keys())
        {
            check_op(op, "crrm".into(), &mut err);
        }
        for (i, x) in self.interferers.iter().enumerate() {
            check_channel(&x.channel, false, format!("interferers[{i}].channel"), &mut err);
            for w in &x.on {
                if !w.is_valid() {
                    err(
                        RangeError,
                        format!("interferers[{i}].on"),
                        "window start must precede end".into(),
                    );
                }
            }
        }
        e
    }
}
