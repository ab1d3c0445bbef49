//! The LSA repository: authoritative store of incumbent activations,
//! availability queries, and change notifications pushed to subscribed
//! controllers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::SimTime;
use crate::spectrum::{
    ActivationId, ChannelId, ControllerId, IncumbentActivation, RepositoryId, SpectrumError, SpectrumMap, Window,
    ZoneId,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityRecord {
    pub channel: ChannelId,
    pub zone: ZoneId,
    pub window: Window,
    /// Licensee EIRP ceiling on this channel in this zone.
    pub max_eirp_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub controller: ControllerId,
    pub latency_tti: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "change", content = "activation")]
pub enum AvailabilityChange {
    Registered(IncumbentActivation),
    Expired(IncumbentActivation),
}

impl AvailabilityChange {
    pub fn activation(&self) -> &IncumbentActivation {
        match self {
            AvailabilityChange::Registered(a) | AvailabilityChange::Expired(a) => a,
        }
    }
}

/// One message from a repository to one subscribed controller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeNotification {
    pub repository: RepositoryId,
    pub controller: ControllerId,
    pub deliver_at: SimTime,
    pub change: AvailabilityChange,
    /// Channels whose availability in the activation's zone changed.
    pub affected_channels: BTreeSet<ChannelId>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RepositoryError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("activation id {0} already registered")]
    DuplicateActivationId(ActivationId),
    #[error("activation {0} has an empty or inverted window")]
    InvalidWindow(ActivationId),
    #[error("activation {id} already ended at {end}, now {now}")]
    AlreadyEnded { id: ActivationId, end: u64, now: SimTime },
    #[error("activation {0} channel {1} is not an LSA channel")]
    NotLsaChannel(ActivationId, ChannelId),
    #[error("controller {0} already subscribed")]
    AlreadySubscribed(ControllerId),
    #[error("negative subscription latency {0}")]
    NegativeLatency(i64),
    #[error("unknown activation {0}")]
    UnknownActivation(ActivationId),
}

/// Availability of every LSA channel for `(zone, window)` given a set of
/// activations, sorted by channel id.
pub fn availability<'a>(
    map: &SpectrumMap,
    activations: impl Iterator<Item = &'a IncumbentActivation> + Clone,
    zone: &ZoneId,
    window: Window,
    max_eirp: impl Fn(ChannelId) -> f64,
) -> Result<Vec<AvailabilityRecord>, SpectrumError> {
    map.zone(zone)?;
    let mut out = Vec::new();
    for ch in map.lsa_channels() {
        let probe: BTreeSet<ChannelId> = [ch.id].into();
        let mut blocked = false;
        for a in activations.clone() {
            if map.claims_conflict((&probe, zone, window), (&a.channels, &a.zone, a.window))? {
                blocked = true;
                break;
            }
        }
        if !blocked {
            out.push(AvailabilityRecord {
                channel: ch.id,
                zone: zone.clone(),
                window,
                max_eirp_dbm: max_eirp(ch.id),
            });
        }
    }
    Ok(out)
}

pub struct Repository {
    id: RepositoryId,
    map: Arc<SpectrumMap>,
    activations: BTreeMap<ActivationId, IncumbentActivation>,
    subscriptions: BTreeMap<ControllerId, Subscription>,
    qos: BTreeMap<(ChannelId, ZoneId), f64>,
    default_max_eirp_dbm: f64,
}

impl Repository {
    pub fn new(id: RepositoryId, map: Arc<SpectrumMap>, default_max_eirp_dbm: f64) -> Self {
        Repository {
            id,
            map,
            activations: BTreeMap::new(),
            subscriptions: BTreeMap::new(),
            qos: BTreeMap::new(),
            default_max_eirp_dbm,
        }
    }

    pub fn id(&self) -> &RepositoryId {
        &self.id
    }

    pub fn set_qos(&mut self, channel: ChannelId, zone: ZoneId, max_eirp_dbm: f64) {
        self.qos.insert((channel, zone), max_eirp_dbm);
    }

    pub fn max_eirp(&self, channel: ChannelId, zone: &ZoneId) -> f64 {
        self.qos
            .get(&(channel, zone.clone()))
            .copied()
            .unwrap_or(self.default_max_eirp_dbm)
    }

    pub fn default_max_eirp(&self) -> f64 {
        self.default_max_eirp_dbm
    }

    pub fn qos_table(&self) -> &BTreeMap<(ChannelId, ZoneId), f64> {
        &self.qos
    }

    pub fn activations(&self) -> impl Iterator<Item = &IncumbentActivation> {
        self.activations.values()
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = &Subscription> {
        self.subscriptions.values()
    }

    pub fn subscribe(&mut self, controller: ControllerId, latency_tti: i64) -> Result<Subscription, RepositoryError> {
        if latency_tti < 0 {
            return Err(RepositoryError::NegativeLatency(latency_tti));
        }
        if self.subscriptions.contains_key(&controller) {
            return Err(RepositoryError::AlreadySubscribed(controller));
        }
        let sub = Subscription {
            controller: controller.clone(),
            latency_tti: latency_tti as u64,
        };
        self.subscriptions.insert(controller, sub.clone());
        Ok(sub)
    }

    fn affected(&self, a: &IncumbentActivation) -> BTreeSet<ChannelId> {
        self.map
            .lsa_channels()
            .filter(|c| {
                a.channels
                    .iter()
                    .filter_map(|id| self.map.channels.get(id))
                    .any(|ac| crate::spectrum::channels_overlap(ac, c))
            })
            .map(|c| c.id)
            .collect()
    }

    fn fan_out(&self, change: AvailabilityChange, now: SimTime) -> Vec<ChangeNotification> {
        let affected = self.affected(change.activation());
        self.subscriptions
            .values()
            .map(|s| ChangeNotification {
                repository: self.id.clone(),
                controller: s.controller.clone(),
                deliver_at: now.plus(s.latency_tti),
                change: change.clone(),
                affected_channels: affected.clone(),
            })
            .collect()
    }

    pub fn register_incumbent_activation(
        &mut self,
        a: IncumbentActivation,
        now: SimTime,
    ) -> Result<Vec<ChangeNotification>, RepositoryError> {
        self.map.zone(&a.zone)?;
        for c in &a.channels {
            if !self.map.channel(*c)?.is_lsa() {
                return Err(RepositoryError::NotLsaChannel(a.id.clone(), *c));
            }
        }
        if !a.window.is_valid() {
            return Err(RepositoryError::InvalidWindow(a.id.clone()));
        }
        if a.window.end <= now.0 {
            return Err(RepositoryError::AlreadyEnded {
                id: a.id.clone(),
                end: a.window.end,
                now,
            });
        }
        if self.activations.contains_key(&a.id) {
            return Err(RepositoryError::DuplicateActivationId(a.id.clone()));
        }
        self.activations.insert(a.id.clone(), a.clone());
        Ok(self.fan_out(AvailabilityChange::Registered(a), now))
    }

    /// Drops an activation whose window has ended and notifies subscribers.
    pub fn expire_activation(
        &mut self,
        id: &ActivationId,
        now: SimTime,
    ) -> Result<Vec<ChangeNotification>, RepositoryError> {
        let a = self
            .activations
            .remove(id)
            .ok_or_else(|| RepositoryError::UnknownActivation(id.clone()))?;
        Ok(self.fan_out(AvailabilityChange::Expired(a), now))
    }

    pub fn query_availability(
        &self,
        zone: &ZoneId,
        window: Window,
    ) -> Result<Vec<AvailabilityRecord>, RepositoryError> {
        Ok(availability(&self.map, self.activations.values(), zone, window, |c| {
            self.max_eirp(c, zone)
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{Channel, GeoZone, Polygon, Regime};
    use proptest::prelude::*;

    fn map() -> Arc<SpectrumMap> {
        let ch = |id, center| Channel {
            id: ChannelId(id),
            center_mhz: center,
            bandwidth_mhz: 20.0,
            regime: Regime::Lsa,
        };
        let zone = |id: &str, x0: f64, tag: &str| GeoZone {
            id: ZoneId::new(id),
            polygon: Polygon::rect(x0, 0.0, x0 + 100.0, 100.0),
            tags: [tag.to_string()].into(),
            reference_point: None,
        };
        Arc::new(SpectrumMap::new(
            [
                ch(1, 2610.0),
                ch(2, 3510.0),
                ch(3, 3530.0),
                Channel {
                    id: ChannelId(9),
                    center_mhz: 3700.0,
                    bandwidth_mhz: 20.0,
                    regime: Regime::Unlicensed,
                },
            ],
            [zone("coastal", 0.0, "coastal"), zone("inland", 500.0, "inland")],
        ))
    }

    fn act(id: &str, zone: &str, chans: &[u32], w: (u64, u64)) -> IncumbentActivation {
        IncumbentActivation {
            id: ActivationId::new(id),
            incumbent: "maritime-radar".into(),
            channels: chans.iter().map(|c| ChannelId(*c)).collect(),
            zone: ZoneId::new(zone),
            window: Window::new(w.0, w.1),
            protection_dbm: -110.0,
        }
    }

    fn ids(recs: &[AvailabilityRecord]) -> Vec<u32> {
        recs.iter().map(|r| r.channel.0).collect()
    }

    #[test]
    fn no_subscribers_still_stores() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        let n = r
            .register_incumbent_activation(act("a", "coastal", &[1], (200, 300)), SimTime(100))
            .unwrap();
        assert!(n.is_empty());
        assert_eq!(r.activations().count(), 1);
    }

    #[test]
    fn notification_latency() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        r.subscribe("c1".into(), 2).unwrap();
        let n = r
            .register_incumbent_activation(act("a", "coastal", &[1], (200, 300)), SimTime(100))
            .unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].deliver_at, SimTime(102));
        assert_eq!(n[0].affected_channels, [ChannelId(1)].into());
    }

    #[test]
    fn fan_out_to_two_subscribers() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        r.subscribe("c1".into(), 1).unwrap();
        r.subscribe("c2".into(), 5).unwrap();
        let n = r
            .register_incumbent_activation(act("a", "coastal", &[1], (200, 300)), SimTime(100))
            .unwrap();
        let times: Vec<u64> = n.iter().map(|x| x.deliver_at.0).collect();
        assert_eq!(times, [101, 105]);
        assert_eq!(n[0].change, n[1].change);
        assert_eq!(n[0].affected_channels, n[1].affected_channels);
    }

    #[test]
    fn empty_repository_offers_all_lsa_channels() {
        let r = Repository::new("r".into(), map(), 30.0);
        let recs = r.query_availability(&"coastal".into(), Window::new(0, 100)).unwrap();
        assert_eq!(ids(&recs), [1, 2, 3]);
        assert!(recs.iter().all(|x| x.max_eirp_dbm == 30.0));
    }

    #[test]
    fn coastal_radar_blocks_only_the_coastal_zone() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        r.register_incumbent_activation(act("radar", "coastal", &[1], (0, 1000)), SimTime(0))
            .unwrap();
        let w = Window::new(100, 200);
        assert_eq!(ids(&r.query_availability(&"coastal".into(), w).unwrap()), [2, 3]);
        assert_eq!(ids(&r.query_availability(&"inland".into(), w).unwrap()), [1, 2, 3]);
    }

    #[test]
    fn half_open_windows_do_not_collide() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        r.register_incumbent_activation(act("a", "coastal", &[2], (200, 300)), SimTime(0))
            .unwrap();
        let recs = r.query_availability(&"coastal".into(), Window::new(300, 400)).unwrap();
        assert!(ids(&recs).contains(&2));
        let recs = r.query_availability(&"coastal".into(), Window::new(299, 400)).unwrap();
        assert!(!ids(&recs).contains(&2));
    }

    #[test]
    fn subscription_is_not_retroactive() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        r.register_incumbent_activation(act("a", "coastal", &[1], (200, 300)), SimTime(0))
            .unwrap();
        r.subscribe("late".into(), 1).unwrap();
        assert!(!ids(&r.query_availability(&"coastal".into(), Window::new(200, 300)).unwrap()).contains(&1));
        let n = r
            .register_incumbent_activation(act("b", "inland", &[2], (200, 300)), SimTime(1))
            .unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].change.activation().id, ActivationId::new("b"));
    }

    #[test]
    fn error_paths() {
        let mut r = Repository::new("r".into(), map(), 30.0);
        assert_eq!(r.subscribe("c".into(), -1), Err(RepositoryError::NegativeLatency(-1)));
        r.subscribe("c".into(), 0).unwrap();
        assert!(matches!(
            r.subscribe("c".into(), 3),
            Err(RepositoryError::AlreadySubscribed(_))
        ));
        r.register_incumbent_activation(act("a", "coastal", &[1], (200, 300)), SimTime(0))
            .unwrap();
        assert!(matches!(
            r.register_incumbent_activation(act("a", "coastal", &[2], (200, 300)), SimTime(0)),
            Err(RepositoryError::DuplicateActivationId(_))
        ));
        assert!(matches!(
            r.register_incumbent_activation(act("z", "mars", &[2], (200, 300)), SimTime(0)),
            Err(RepositoryError::Spectrum(SpectrumError::UnknownZone(_)))
        ));
        assert!(matches!(
            r.register_incumbent_activation(act("u", "coastal", &[9], (200, 300)), SimTime(0)),
            Err(RepositoryError::NotLsaChannel(..))
        ));
        assert!(matches!(
            r.register_incumbent_activation(act("old", "coastal", &[2], (10, 20)), SimTime(20)),
            Err(RepositoryError::AlreadyEnded { .. })
        ));
        assert!(r.query_availability(&"mars".into(), Window::new(0, 1)).is_err());
    }

    fn arb_activation(i: usize) -> impl Strategy<Value = IncumbentActivation> {
        (1u32..=3, any::<bool>(), 0u64..400, 1u64..200).prop_map(move |(c, coastal, s, l)| {
            act(
                &format!("a{i}"),
                if coastal { "coastal" } else { "inland" },
                &[c],
                (s, s + l),
            )
        })
    }

    fn arb_activations() -> impl Strategy<Value = Vec<IncumbentActivation>> {
        (0usize..8).prop_flat_map(|n| (0..n).map(arb_activation).collect::<Vec<_>>())
    }

    proptest! {
        #[test]
        fn notifications_reconstruct_availability(acts in arb_activations(), expire_mask in any::<u8>(), qs in 0u64..500, ql in 1u64..200) {
            let mut r = Repository::new("r".into(), map(), 30.0);
            r.subscribe("c".into(), 3).unwrap();
            let mut mirror: BTreeMap<ActivationId, IncumbentActivation> = BTreeMap::new();
            let replay = |ns: Vec<ChangeNotification>, mirror: &mut BTreeMap<ActivationId, IncumbentActivation>| {
                for n in ns {
                    match n.change {
                        AvailabilityChange::Registered(a) => { mirror.insert(a.id.clone(), a); }
                        AvailabilityChange::Expired(a) => { mirror.remove(&a.id); }
                    }
                }
            };
            for (i, a) in acts.iter().enumerate() {
                let ns = r.register_incumbent_activation(a.clone(), SimTime(0)).unwrap();
                replay(ns, &mut mirror);
                if expire_mask & (1 << i) != 0 {
                    let ns = r.expire_activation(&a.id, SimTime(0)).unwrap();
                    replay(ns, &mut mirror);
                }
            }
            let m = map();
            let w = Window::new(qs, qs + ql);
            for zone in ["coastal", "inland"] {
                let z = ZoneId::new(zone);
                let fresh = r.query_availability(&z, w).unwrap();
                let rebuilt = availability(&m, mirror.values(), &z, w, |_| 30.0).unwrap();
                prop_assert_eq!(&fresh, &rebuilt);
                prop_assert_eq!(&fresh, &r.query_availability(&z, w).unwrap());
            }
        }

        #[test]
        fn availability_is_anti_monotone(acts in arb_activations(), extra in arb_activation(99), qs in 0u64..500, ql in 1u64..200) {
            let mut r = Repository::new("r".into(), map(), 30.0);
            for a in acts {
                r.register_incumbent_activation(a, SimTime(0)).unwrap();
            }
            let w = Window::new(qs, qs + ql);
            let before: Vec<_> = ["coastal", "inland"].iter().map(|z| ids(&r.query_availability(&ZoneId::new(*z), w).unwrap())).collect();
            r.register_incumbent_activation(extra, SimTime(0)).unwrap();
            for (i, z) in ["coastal", "inland"].iter().enumerate() {
                let after = ids(&r.query_availability(&ZoneId::new(*z), w).unwrap());
                prop_assert!(after.iter().all(|c| before[i].contains(c)));
            }
        }
    }
}
