//! Spectrum resources: channels and their regimes, geographic zones, and
//! the grant / incumbent-activation algebra shared by the repository, the
//! controller and the cRRM.
//!
//! All time windows are half-open `[start, end)` in TTIs.

pub mod geometry;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use geometry::{Point, Polygon, PolygonError};

use crate::engine::SimTime;

/// Widest channel a licensee may be granted, MHz.
pub const MAX_CHANNEL_BANDWIDTH_MHZ: f64 = 100.0;

macro_rules! label_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

label_id!(OperatorId);
label_id!(ZoneId);
label_id!(ActivationId);
label_id!(RepositoryId);
label_id!(ControllerId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub u32);

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GrantId(pub u64);

impl fmt::Display for GrantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Licensed(OperatorId),
    Unlicensed,
    Lsa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub id: ChannelId,
    pub center_mhz: f64,
    pub bandwidth_mhz: f64,
    pub regime: Regime,
}

impl Channel {
    pub fn lower_mhz(&self) -> f64 {
        self.center_mhz - self.bandwidth_mhz / 2.0
    }

    pub fn upper_mhz(&self) -> f64 {
        self.center_mhz + self.bandwidth_mhz / 2.0
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_mhz * 1e6
    }

    pub fn is_lsa(&self) -> bool {
        self.regime == Regime::Lsa
    }
}

/// True iff the open frequency intervals intersect.
pub fn channels_overlap(a: &Channel, b: &Channel) -> bool {
    a.lower_mhz() < b.upper_mhz() && b.lower_mhz() < a.upper_mhz()
}

/// Frequency range the channel plan must fit in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub min_mhz: f64,
    pub max_mhz: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanViolation {
    pub channel: ChannelId,
    pub rule: &'static str,
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "channel {}: {}", self.channel, self.rule)
    }
}

/// Checks every channel-plan invariant and returns all violations.
pub fn validate_channel_plan(plan: &[Channel], band: Option<BandPlan>) -> Vec<PlanViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for ch in plan {
        let mut flag = |rule| out.push(PlanViolation { channel: ch.id, rule });
        if !seen.insert(ch.id) {
            flag("duplicate id");
        }
        if !ch.center_mhz.is_finite() || !ch.bandwidth_mhz.is_finite() {
            flag("non-finite frequency");
            continue;
        }
        if ch.bandwidth_mhz <= 0.0 {
            flag("non-positive bandwidth");
        } else if ch.bandwidth_mhz > MAX_CHANNEL_BANDWIDTH_MHZ {
            flag("bandwidth exceeds 100 MHz");
        }
        if let Some(b) = band {
            if ch.lower_mhz() < b.min_mhz || ch.upper_mhz() > b.max_mhz {
                flag("outside band plan");
            }
        }
    }
    out
}

/// Half-open interval of TTIs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct Window {
    pub start: u64,
    pub end: u64,
}

impl From<[u64; 2]> for Window {
    fn from(v: [u64; 2]) -> Self {
        Window { start: v[0], end: v[1] }
    }
}

impl From<Window> for [u64; 2] {
    fn from(w: Window) -> Self {
        [w.start, w.end]
    }
}

impl Window {
    pub const fn new(start: u64, end: u64) -> Self {
        Window { start, end }
    }

    pub fn is_valid(&self) -> bool {
        self.start < self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t.0 && t.0 < self.end
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoZone {
    pub id: ZoneId,
    pub polygon: Polygon,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
    /// Where incumbent protection is evaluated; the centroid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_point: Option<Point>,
}

impl GeoZone {
    pub fn reference(&self) -> Point {
        self.reference_point.unwrap_or_else(|| self.polygon.centroid())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum GrantState {
    Pending,
    Active,
    SuspendPending { deadline: SimTime },
    Suspended,
    Revoked,
}

impl GrantState {
    pub fn name(&self) -> &'static str {
        match self {
            GrantState::Pending => "pending",
            GrantState::Active => "active",
            GrantState::SuspendPending { .. } => "suspend_pending",
            GrantState::Suspended => "suspended",
            GrantState::Revoked => "revoked",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("illegal grant transition {from} -> {to}")]
pub struct TransitionError {
    pub from: &'static str,
    pub to: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrant {
    pub id: GrantId,
    pub licensee: OperatorId,
    pub channels: BTreeSet<ChannelId>,
    pub zone: ZoneId,
    pub window: Window,
    pub max_eirp_dbm: f64,
    pub state: GrantState,
}

impl SpectrumGrant {
    fn transition(&mut self, to: GrantState) -> Result<(), TransitionError> {
        use GrantState::*;
        let legal = matches!(
            (&self.state, &to),
            (Pending, Active)
                | (Active, SuspendPending { .. })
                | (Active, Revoked)
                | (SuspendPending { .. }, Suspended)
                | (Suspended, Active)
        );
        if !legal {
            return Err(TransitionError {
                from: self.state.name(),
                to: to.name(),
            });
        }
        self.state = to;
        Ok(())
    }

    pub fn activate(&mut self) -> Result<(), TransitionError> {
        match self.state {
            GrantState::Pending => self.transition(GrantState::Active),
            _ => Err(TransitionError {
                from: self.state.name(),
                to: "active",
            }),
        }
    }

    pub fn suspend(&mut self, deadline: SimTime) -> Result<(), TransitionError> {
        self.transition(GrantState::SuspendPending { deadline })
    }

    pub fn confirm_suspended(&mut self) -> Result<(), TransitionError> {
        self.transition(GrantState::Suspended)
    }

    pub fn reinstate(&mut self) -> Result<(), TransitionError> {
        match self.state {
            GrantState::Suspended => self.transition(GrantState::Active),
            _ => Err(TransitionError {
                from: self.state.name(),
                to: "active",
            }),
        }
    }

    pub fn revoke(&mut self) -> Result<(), TransitionError> {
        self.transition(GrantState::Revoked)
    }

    pub fn is_active(&self) -> bool {
        self.state == GrantState::Active
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncumbentActivation {
    pub id: ActivationId,
    pub incumbent: String,
    pub channels: BTreeSet<ChannelId>,
    pub zone: ZoneId,
    pub window: Window,
    /// Maximum tolerable aggregate interference at the zone reference point.
    pub protection_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpectrumError {
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("unknown zone {0}")]
    UnknownZone(ZoneId),
}

/// Lookup tables for the static band plan and zone map of a scenario.
#[derive(Clone, Debug, Default)]
pub struct SpectrumMap {
    pub channels: BTreeMap<ChannelId, Channel>,
    pub zones: BTreeMap<ZoneId, GeoZone>,
}

impl SpectrumMap {
    pub fn new(channels: impl IntoIterator<Item = Channel>, zones: impl IntoIterator<Item = GeoZone>) -> Self {
        SpectrumMap {
            channels: channels.into_iter().map(|c| (c.id, c)).collect(),
            zones: zones.into_iter().map(|z| (z.id.clone(), z)).collect(),
        }
    }

    pub fn channel(&self, id: ChannelId) -> Result<&Channel, SpectrumError> {
        self.channels.get(&id).ok_or(SpectrumError::UnknownChannel(id))
    }

    pub fn zone(&self, id: &ZoneId) -> Result<&GeoZone, SpectrumError> {
        self.zones.get(id).ok_or_else(|| SpectrumError::UnknownZone(id.clone()))
    }

    pub fn lsa_channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.values().filter(|c| c.is_lsa())
    }

    pub fn zones_intersect(&self, a: &ZoneId, b: &ZoneId) -> Result<bool, SpectrumError> {
        let za = self.zone(a)?;
        let zb = self.zone(b)?;
        Ok(a == b || za.polygon.intersects(&zb.polygon))
    }

    /// Any channel of `a` overlaps any channel of `b` in frequency.
    pub fn channel_sets_overlap(
        &self,
        a: &BTreeSet<ChannelId>,
        b: &BTreeSet<ChannelId>,
    ) -> Result<bool, SpectrumError> {
        for ca in a {
            let ca = self.channel(*ca)?;
            for cb in b {
                if channels_overlap(ca, self.channel(*cb)?) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Shared conflict predicate: overlapping channels, intersecting zones,
    /// overlapping windows.
    pub fn claims_conflict(
        &self,
        a: (&BTreeSet<ChannelId>, &ZoneId, Window),
        b: (&BTreeSet<ChannelId>, &ZoneId, Window),
    ) -> Result<bool, SpectrumError> {
        // Resolve all references first so dangling ids error regardless of
        // which clause would short-circuit.
        self.zone(a.1)?;
        self.zone(b.1)?;
        for c in a.0.iter().chain(b.0.iter()) {
            self.channel(*c)?;
        }
        Ok(a.2.overlaps(&b.2) && self.channel_sets_overlap(a.0, b.0)? && self.zones_intersect(a.1, b.1)?)
    }
}

/// A grant conflicts with an activation iff their channels overlap, their
/// zones intersect and their windows overlap.
pub fn grant_conflicts(g: &SpectrumGrant, a: &IncumbentActivation, map: &SpectrumMap) -> Result<bool, SpectrumError> {
    map.claims_conflict((&g.channels, &g.zone, g.window), (&a.channels, &a.zone, a.window))
}

/// Two grants conflict on the same terms.
pub fn grants_conflict(a: &SpectrumGrant, b: &SpectrumGrant, map: &SpectrumMap) -> Result<bool, SpectrumError> {
    map.claims_conflict((&a.channels, &a.zone, a.window), (&b.channels, &b.zone, b.window))
}
