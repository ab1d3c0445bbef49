//! The LSA controller: evaluates sharing rules, issues grants to the
//! licensee's cRRM, and orders evacuations when incumbents claim spectrum.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::SimTime;
use crate::repository::{AvailabilityChange, ChangeNotification};
use crate::spectrum::{
    grant_conflicts, ActivationId, ChannelId, ControllerId, GrantId, GrantState, IncumbentActivation, OperatorId,
    RepositoryId, SpectrumError, SpectrumGrant, SpectrumMap, TransitionError, Window, ZoneId,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharingRules {
    /// Per-licensee cap on simultaneously held LSA channels.
    #[serde(default)]
    pub max_channels: BTreeMap<OperatorId, usize>,
    #[serde(default = "default_quota")]
    pub default_max_channels: usize,
    #[serde(default = "default_evacuation_deadline")]
    pub evacuation_deadline_tti: u64,
    /// Zones each licensee may request; a licensee absent here may use any zone.
    #[serde(default)]
    pub eligible_zones: BTreeMap<OperatorId, BTreeSet<ZoneId>>,
}

fn default_quota() -> usize {
    usize::MAX
}

fn default_evacuation_deadline() -> u64 {
    100
}

impl Default for SharingRules {
    fn default() -> Self {
        SharingRules {
            max_channels: BTreeMap::new(),
            default_max_channels: default_quota(),
            evacuation_deadline_tti: default_evacuation_deadline(),
            eligible_zones: BTreeMap::new(),
        }
    }
}

impl SharingRules {
    pub fn quota(&self, licensee: &OperatorId) -> usize {
        self.max_channels
            .get(licensee)
            .copied()
            .unwrap_or(self.default_max_channels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GrantCommandKind {
    Issue { grant: SpectrumGrant },
    Suspend { grant: GrantId, deadline: SimTime },
    Reinstate { grant: GrantId },
    Revoke { grant: GrantId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrantCommand {
    #[serde(flatten)]
    pub kind: GrantCommandKind,
    pub issued_at: SimTime,
    pub deliver_at: SimTime,
}

impl GrantCommand {
    pub fn grant_id(&self) -> GrantId {
        match &self.kind {
            GrantCommandKind::Issue { grant } => grant.id,
            GrantCommandKind::Suspend { grant, .. }
            | GrantCommandKind::Reinstate { grant }
            | GrantCommandKind::Revoke { grant } => *grant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvacuationRecord {
    pub grant: GrantId,
    pub licensee: OperatorId,
    pub ordered_at: SimTime,
    pub deadline: SimTime,
    pub confirmed_at: SimTime,
    pub compliant: bool,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GrantRejection {
    #[error("channel {channel} unavailable: blocked by activation {blocking}")]
    RejectedUnavailable { channel: ChannelId, blocking: ActivationId },
    #[error("quota exceeded for {licensee}: {requested} channels requested, limit {limit}")]
    RejectedQuota {
        licensee: OperatorId,
        limit: usize,
        requested: usize,
    },
    #[error("conflicts with grant {grant} held by {holder}")]
    RejectedConflict { grant: GrantId, holder: OperatorId },
    #[error("zone {zone} is not eligible for {licensee}")]
    RejectedIneligibleZone { licensee: OperatorId, zone: ZoneId },
    #[error("controller is not subscribed to any repository")]
    NotSubscribed,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error("grant {0} is not awaiting evacuation")]
    NotSuspendPending(GrantId),
    #[error("unknown grant {0}")]
    UnknownGrant(GrantId),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

pub struct Controller {
    id: ControllerId,
    map: Arc<SpectrumMap>,
    rules: SharingRules,
    crrm_latency_tti: u64,
    /// Activations known per repository, rebuilt purely from notifications.
    mirrors: BTreeMap<RepositoryId, BTreeMap<ActivationId, IncumbentActivation>>,
    qos: BTreeMap<(ChannelId, ZoneId), f64>,
    default_max_eirp_dbm: f64,
    grants: BTreeMap<GrantId, SpectrumGrant>,
    suspensions: BTreeMap<GrantId, SimTime>,
    next_grant: u64,
    ledger: Vec<EvacuationRecord>,
    violations: u64,
}

impl Controller {
    pub fn new(id: ControllerId, map: Arc<SpectrumMap>, rules: SharingRules, crrm_latency_tti: u64) -> Self {
        Controller {
            id,
            map,
            rules,
            crrm_latency_tti,
            mirrors: BTreeMap::new(),
            qos: BTreeMap::new(),
            default_max_eirp_dbm: f64::INFINITY,
            grants: BTreeMap::new(),
            suspensions: BTreeMap::new(),
            next_grant: 1,
            ledger: Vec::new(),
            violations: 0,
        }
    }

    pub fn id(&self) -> &ControllerId {
        &self.id
    }

    pub fn rules(&self) -> &SharingRules {
        &self.rules
    }

    /// Registers a repository this controller is subscribed to, along with
    /// the QoS ceilings it publishes. Multiple repositories combine
    /// conservatively: a channel is available only if every one agrees, and
    /// the tightest EIRP ceiling applies.
    pub fn attach_repository(
        &mut self,
        repo: RepositoryId,
        default_max_eirp_dbm: f64,
        qos: &BTreeMap<(ChannelId, ZoneId), f64>,
    ) {
        self.mirrors.entry(repo).or_default();
        self.default_max_eirp_dbm = self.default_max_eirp_dbm.min(default_max_eirp_dbm);
        for (k, v) in qos {
            let e = self.qos.entry(k.clone()).or_insert(f64::INFINITY);
            *e = e.min(*v);
        }
    }

    pub fn grants(&self) -> impl Iterator<Item = &SpectrumGrant> {
        self.grants.values()
    }

    pub fn grant(&self, id: GrantId) -> Option<&SpectrumGrant> {
        self.grants.get(&id)
    }

    pub fn evacuation_ledger(&self) -> &[EvacuationRecord] {
        &self.ledger
    }

    pub fn violation_count(&self) -> u64 {
        self.violations
    }

    fn known_activations(&self) -> impl Iterator<Item = &IncumbentActivation> + Clone {
        self.mirrors.values().flat_map(|m| m.values())
    }

    fn max_eirp(&self, channel: ChannelId, zone: &ZoneId) -> f64 {
        self.qos
            .get(&(channel, zone.clone()))
            .copied()
            .unwrap_or(self.default_max_eirp_dbm)
    }

    fn command(&self, kind: GrantCommandKind, now: SimTime) -> GrantCommand {
        GrantCommand {
            kind,
            issued_at: now,
            deliver_at: now.plus(self.crrm_latency_tti),
        }
    }

    pub fn request_grant(
        &mut self,
        licensee: &OperatorId,
        channels: &BTreeSet<ChannelId>,
        zone: &ZoneId,
        window: Window,
        now: SimTime,
    ) -> Result<GrantCommand, GrantRejection> {
        if self.mirrors.is_empty() {
            return Err(GrantRejection::NotSubscribed);
        }
        if channels.is_empty() {
            return Err(GrantRejection::Invalid("empty channel set".into()));
        }
        if !window.is_valid() || window.end <= now.0 {
            return Err(GrantRejection::Invalid(format!(
                "window [{}, {}) unusable at {now}",
                window.start, window.end
            )));
        }
        self.map.zone(zone)?;
        for c in channels {
            if !self.map.channel(*c)?.is_lsa() {
                return Err(GrantRejection::Invalid(format!("channel {c} is not an LSA channel")));
            }
        }
        if let Some(eligible) = self.rules.eligible_zones.get(licensee) {
            if !eligible.contains(zone) {
                return Err(GrantRejection::RejectedIneligibleZone {
                    licensee: licensee.clone(),
                    zone: zone.clone(),
                });
            }
        }

        // (a) availability per current repository knowledge
        for c in channels {
            let probe: BTreeSet<ChannelId> = [*c].into();
            for a in self.known_activations() {
                if self
                    .map
                    .claims_conflict((&probe, zone, window), (&a.channels, &a.zone, a.window))?
                {
                    return Err(GrantRejection::RejectedUnavailable {
                        channel: *c,
                        blocking: a.id.clone(),
                    });
                }
            }
        }

        // (b) quota over grants whose windows overlap the request
        let held: BTreeSet<ChannelId> = self
            .grants
            .values()
            .filter(|g| &g.licensee == licensee && g.state != GrantState::Revoked && g.window.overlaps(&window))
            .flat_map(|g| g.channels.iter().copied())
            .collect();
        let requested = held.union(channels).count();
        let limit = self.rules.quota(licensee);
        if requested > limit {
            return Err(GrantRejection::RejectedQuota {
                licensee: licensee.clone(),
                limit,
                requested,
            });
        }

        // (c) exclusivity against every grant that could be active in the window
        for g in self.grants.values() {
            if g.state == GrantState::Revoked {
                continue;
            }
            if self
                .map
                .claims_conflict((channels, zone, window), (&g.channels, &g.zone, g.window))?
            {
                return Err(GrantRejection::RejectedConflict {
                    grant: g.id,
                    holder: g.licensee.clone(),
                });
            }
        }

        let id = GrantId(self.next_grant);
        self.next_grant += 1;
        let max_eirp_dbm = channels
            .iter()
            .map(|c| self.max_eirp(*c, zone))
            .fold(f64::INFINITY, f64::min);
        let mut grant = SpectrumGrant {
            id,
            licensee: licensee.clone(),
            channels: channels.clone(),
            zone: zone.clone(),
            window,
            max_eirp_dbm,
            state: GrantState::Pending,
        };
        grant.activate().expect("fresh grants are pending");
        self.grants.insert(id, grant.clone());
        Ok(self.command(GrantCommandKind::Issue { grant }, now))
    }

    fn conflicts_with_known(&self, g: &SpectrumGrant) -> bool {
        self.known_activations()
            .any(|a| grant_conflicts(g, a, &self.map).unwrap_or(true))
    }

    pub fn on_availability_change(&mut self, n: &ChangeNotification, now: SimTime) -> Vec<GrantCommand> {
        let mirror = self.mirrors.entry(n.repository.clone()).or_default();
        match &n.change {
            AvailabilityChange::Registered(a) => {
                mirror.insert(a.id.clone(), a.clone());
            }
            AvailabilityChange::Expired(a) => {
                mirror.remove(&a.id);
            }
        }

        let mut out = Vec::new();
        match &n.change {
            AvailabilityChange::Registered(a) => {
                let deadline = now.plus(self.rules.evacuation_deadline_tti);
                let hit: Vec<GrantId> = self
                    .grants
                    .values()
                    .filter(|g| g.is_active() && grant_conflicts(g, a, &self.map).unwrap_or(true))
                    .map(|g| g.id)
                    .collect();
                for id in hit {
                    let g = self.grants.get_mut(&id).expect("grant listed above");
                    if g.suspend(deadline).is_ok() {
                        self.suspensions.insert(id, now);
                        out.push(self.command(GrantCommandKind::Suspend { grant: id, deadline }, now));
                    }
                }
            }
            AvailabilityChange::Expired(_) => {
                out.extend(self.reinstate_cleared(now));
            }
        }
        out
    }

    /// Reinstates suspended, still-in-window grants no longer blocked by any
    /// known activation.
    pub fn reinstate_cleared(&mut self, now: SimTime) -> Vec<GrantCommand> {
        let ready: Vec<GrantId> = self
            .grants
            .values()
            .filter(|g| g.state == GrantState::Suspended && now.0 < g.window.end && !self.conflicts_with_known(g))
            .map(|g| g.id)
            .collect();
        let mut out = Vec::new();
        for id in ready {
            let g = self.grants.get_mut(&id).expect("grant listed above");
            if g.reinstate().is_ok() {
                out.push(self.command(GrantCommandKind::Reinstate { grant: id }, now));
            }
        }
        out
    }

    pub fn confirm_evacuation(
        &mut self,
        grant: GrantId,
        confirmed_at: SimTime,
    ) -> Result<EvacuationRecord, ControllerError> {
        let g = self
            .grants
            .get_mut(&grant)
            .ok_or(ControllerError::UnknownGrant(grant))?;
        let GrantState::SuspendPending { deadline } = g.state else {
            return Err(ControllerError::NotSuspendPending(grant));
        };
        g.confirm_suspended()?;
        let compliant = confirmed_at <= deadline;
        if !compliant {
            self.violations += 1;
        }
        let record = EvacuationRecord {
            grant,
            licensee: g.licensee.clone(),
            ordered_at: self.suspensions.remove(&grant).unwrap_or(confirmed_at),
            deadline,
            confirmed_at,
            compliant,
        };
        self.ledger.push(record.clone());
        Ok(record)
    }

    /// Revokes active grants whose window has closed.
    pub fn expire_grants(&mut self, now: SimTime) -> Vec<GrantCommand> {
        let done: Vec<GrantId> = self
            .grants
            .values()
            .filter(|g| g.is_active() && g.window.end <= now.0)
            .map(|g| g.id)
            .collect();
        let mut out = Vec::new();
        for id in done {
            if self.grants.get_mut(&id).expect("listed").revoke().is_ok() {
                out.push(self.command(GrantCommandKind::Revoke { grant: id }, now));
            }
        }
        out
    }
}
