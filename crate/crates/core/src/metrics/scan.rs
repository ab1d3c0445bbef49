//! Post-run verdicts. Each scanner re-derives its answer from the run log
//! and the scenario alone, never from cRRM or controller state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::{LogEvent, RunOutput, TxInterval};
use crate::spectrum::{channels_overlap, Channel, ChannelId, GrantId, OperatorId, Polygon, Window, ZoneId};

/// Findings kept per verdict; the count is always exact.
const MAX_FINDINGS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NOT_APPLICABLE")]
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "NOT_APPLICABLE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub violations: u64,
    pub findings: Vec<String>,
}

impl Verdict {
    fn from_findings(name: &'static str, checked: u64, found: Vec<String>) -> Verdict {
        let n = found.len() as u64;
        Verdict {
            name,
            status: if n == 0 { Status::Pass } else { Status::Fail },
            detail: format!("{n} violations over {checked} checks"),
            violations: n,
            findings: found.into_iter().take(MAX_FINDINGS).collect(),
        }
    }

    fn not_applicable(name: &'static str, why: &str) -> Verdict {
        Verdict {
            name,
            status: Status::NotApplicable,
            detail: why.into(),
            violations: 0,
            findings: Vec::new(),
        }
    }
}

struct IssuedGrant {
    licensee: OperatorId,
    channels: BTreeSet<ChannelId>,
    zone: ZoneId,
    window: Window,
}

fn issued_grants(out: &RunOutput) -> BTreeMap<GrantId, IssuedGrant> {
    out.log
        .records
        .iter()
        .filter_map(|r| match &r.event {
            LogEvent::GrantIssued {
                grant,
                licensee,
                channels,
                zone,
                window,
            } => Some((
                *grant,
                IssuedGrant {
                    licensee: licensee.clone(),
                    channels: channels.clone(),
                    zone: zone.clone(),
                    window: *window,
                },
            )),
            _ => None,
        })
        .collect()
}

struct Plan<'a> {
    channels: BTreeMap<ChannelId, &'a Channel>,
    zones: BTreeMap<&'a ZoneId, &'a Polygon>,
}

impl<'a> Plan<'a> {
    fn new(out: &'a RunOutput) -> Self {
        Plan {
            channels: out.scenario.channels.iter().map(|c| (c.id, c)).collect(),
            zones: out.scenario.zones.iter().map(|z| (&z.id, &z.polygon)).collect(),
        }
    }

    fn overlaps(&self, a: ChannelId, set: &BTreeSet<ChannelId>) -> bool {
        let Some(x) = self.channels.get(&a) else { return false };
        set.iter()
            .any(|b| self.channels.get(b).is_some_and(|y| channels_overlap(x, y)))
    }

    fn is_lsa(&self, c: ChannelId) -> bool {
        self.channels.get(&c).is_some_and(|c| c.is_lsa())
    }

    fn zone(&self, z: &ZoneId) -> Option<&'a Polygon> {
        self.zones.get(z).copied()
    }
}

fn time_overlap(iv: &TxInterval, start: u64, end: u64) -> bool {
    iv.start.max(start) < iv.end.min(end)
}

/// No licensee carrier may overlap an incumbent activation in frequency,
/// time and place, and no two grants may share a channel at one place.
pub fn scan_exclusivity(out: &RunOutput) -> Verdict {
    let plan = Plan::new(out);
    let grants = issued_grants(out);
    let mut found = Vec::new();
    let mut checked = 0u64;

    for ev in &out.scenario.activations {
        let a = &ev.activation;
        let Some(zone) = plan.zone(&a.zone) else { continue };
        for iv in &out.log.tx {
            checked += 1;
            if !plan.overlaps(iv.channel, &a.channels) || !time_overlap(iv, a.window.start, a.window.end) {
                continue;
            }
            let inside = zone.contains(iv.position);
            let by_grant = iv
                .grant
                .and_then(|g| grants.get(&g))
                .and_then(|g| plan.zone(&g.zone))
                .is_some_and(|gz| gz.intersects(zone));
            if inside || by_grant {
                found.push(format!(
                    "cell {} on channel {} during [{}, {}) overlaps activation {} [{}, {})",
                    iv.cell, iv.channel, iv.start, iv.end, a.id, a.window.start, a.window.end
                ));
            }
        }
    }

    for iv in out.log.tx.iter().filter(|iv| plan.is_lsa(iv.channel)) {
        checked += 1;
        match iv.grant.and_then(|g| grants.get(&g)) {
            None => found.push(format!(
                "cell {} on LSA channel {} at {} without a grant",
                iv.cell, iv.channel, iv.start
            )),
            Some(g) => {
                let in_zone = plan.zone(&g.zone).is_some_and(|z| z.contains(iv.position));
                let licensed = iv.operators.contains(&g.licensee);
                let in_window = g.window.start <= iv.start && iv.end <= g.window.end;
                if !(in_zone && licensed && in_window && g.channels.contains(&iv.channel)) {
                    found.push(format!(
                        "cell {} on channel {} during [{}, {}) outside the terms of its grant",
                        iv.cell, iv.channel, iv.start, iv.end
                    ));
                }
            }
        }
    }

    let lsa: Vec<&TxInterval> = out.log.tx.iter().filter(|iv| iv.grant.is_some()).collect();
    for (i, x) in lsa.iter().enumerate() {
        for y in &lsa[i + 1..] {
            if x.grant == y.grant || !time_overlap(x, y.start, y.end) {
                continue;
            }
            let set: BTreeSet<ChannelId> = [y.channel].into();
            if !plan.overlaps(x.channel, &set) {
                continue;
            }
            checked += 1;
            let (Some(gx), Some(gy)) = (grants.get(&x.grant.unwrap()), grants.get(&y.grant.unwrap())) else {
                continue;
            };
            let (Some(zx), Some(zy)) = (plan.zone(&gx.zone), plan.zone(&gy.zone)) else {
                continue;
            };
            if zx.intersects(zy) {
                found.push(format!(
                    "grants {} and {} both on air over channel {} at {}",
                    x.grant.unwrap(),
                    y.grant.unwrap(),
                    x.channel,
                    x.start.max(y.start)
                ));
            }
        }
    }
    Verdict::from_findings("exclusivity", checked, found)
}

struct Suspension {
    grant: GrantId,
    ordered_at: u64,
    deadline: u64,
    /// Reinstatement, revocation or window end, whichever comes first.
    until: u64,
    confirmed_at: Option<u64>,
}

fn suspensions(out: &RunOutput) -> Vec<Suspension> {
    let grants = issued_grants(out);
    let recs = &out.log.records;
    let mut v = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        let LogEvent::SuspendOrdered { grant, deadline } = &r.event else {
            continue;
        };
        let later = &recs[i + 1..];
        let until = later
            .iter()
            .find(|x| matches!(&x.event, LogEvent::Reinstated { grant: g } | LogEvent::Revoked { grant: g } if g == grant))
            .map(|x| x.t)
            .unwrap_or(u64::MAX)
            .min(grants.get(grant).map(|g| g.window.end).unwrap_or(u64::MAX));
        let confirmed_at = later
            .iter()
            .find(|x| matches!(&x.event, LogEvent::EvacuationConfirmed { grant: g, .. } if g == grant))
            .map(|x| x.t);
        v.push(Suspension {
            grant: *grant,
            ordered_at: r.t,
            deadline: *deadline,
            until,
            confirmed_at,
        });
    }
    v
}

/// Nothing on a suspended grant's channels inside its zone after the
/// deadline, until the grant is reinstated or ends.
pub fn scan_evacuation_safety(out: &RunOutput) -> Verdict {
    let plan = Plan::new(out);
    let grants = issued_grants(out);
    let mut found = Vec::new();
    let mut checked = 0;
    for s in suspensions(out) {
        checked += 1;
        let Some(g) = grants.get(&s.grant) else {
            found.push(format!("suspension of unknown grant {}", s.grant));
            continue;
        };
        let Some(zone) = plan.zone(&g.zone) else { continue };
        for iv in &out.log.tx {
            if plan.overlaps(iv.channel, &g.channels)
                && zone.contains(iv.position)
                && time_overlap(iv, s.deadline + 1, s.until)
            {
                found.push(format!(
                    "cell {} on channel {} until {} after grant {} deadline {}",
                    iv.cell, iv.channel, iv.end, s.grant, s.deadline
                ));
            }
        }
    }
    Verdict::from_findings("evacuation_safety", checked, found)
}

/// Every Suspend confirmed at or before its deadline. Orders whose
/// deadline lies past the horizon are not judged.
pub fn scan_evacuation_compliance(out: &RunOutput) -> Verdict {
    let last = out.scenario.horizon_tti - 1;
    let mut found = Vec::new();
    let mut checked = 0;
    for s in suspensions(out) {
        match s.confirmed_at {
            Some(c) => {
                checked += 1;
                if c > s.deadline {
                    found.push(format!(
                        "grant {} ordered at {} confirmed at {} after deadline {}",
                        s.grant, s.ordered_at, c, s.deadline
                    ));
                }
            }
            None if s.deadline < last => {
                checked += 1;
                found.push(format!(
                    "grant {} ordered at {} never confirmed (deadline {})",
                    s.grant, s.ordered_at, s.deadline
                ));
            }
            None => {}
        }
    }
    if checked == 0 {
        return Verdict::not_applicable("evacuation_compliance", "no suspension orders");
    }
    Verdict::from_findings("evacuation_compliance", checked, found)
}

/// offered = served + buffered for every session at every window boundary,
/// and the KPI windows add up to what the sessions were served.
pub fn scan_conservation(out: &RunOutput) -> Verdict {
    let mut found = Vec::new();
    for r in &out.conservation {
        if r.offered != r.served + r.buffered {
            found.push(format!(
                "session {} at {}: offered {} != served {} + buffered {}",
                r.session, r.tti, r.offered, r.served, r.buffered
            ));
        }
    }
    let windows: u64 = out
        .kpi
        .iter()
        .flat_map(|w| w.operators.values())
        .map(|o| o.goodput_bits)
        .sum();
    let last = out.conservation.iter().map(|r| r.tti).max();
    let served: u64 = out
        .conservation
        .iter()
        .filter(|r| Some(r.tti) == last)
        .map(|r| r.served)
        .sum();
    if windows != served {
        found.push(format!("window goodput {windows} != session served total {served}"));
    }
    Verdict::from_findings("conservation", out.conservation.len() as u64 + 1, found)
}

/// In a pooled run with configured baselines, each operator's goodput is at
/// least 95% of min(baseline, offered).
pub fn scan_sla_floor(out: &RunOutput) -> Verdict {
    let baselines = &out.scenario.crrm.sla_baselines_bps;
    if !out.pooled || baselines.is_empty() {
        return Verdict::not_applicable("sla_floor", "no pooled operators with baselines");
    }
    let secs = out.scenario.horizon_tti as f64 * out.scenario.tti_ms / 1000.0;
    let mut found = Vec::new();
    for (op, base) in baselines {
        let (offered, got) = out
            .kpi
            .iter()
            .filter_map(|w| w.operators.get(op))
            .fold((0u64, 0u64), |(o, g), k| (o + k.offered_bits, g + k.goodput_bits));
        let floor = (base * secs).min(offered as f64);
        if floor > 0.0 && (got as f64) < 0.95 * floor {
            found.push(format!("operator {op}: goodput {got} < 0.95 x {floor:.0}"));
        }
    }
    Verdict::from_findings("sla_floor", baselines.len() as u64, found)
}

pub fn scan_se_cap(out: &RunOutput) -> Verdict {
    let a = &out.se_audit;
    let found = (0..a.violations)
        .map(|_| format!("allocation above 8 b/s/Hz (max {:.6})", a.max_se))
        .collect();
    Verdict::from_findings("se_cap", a.allocations, found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    Interference,
    Incumbent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReactionTimeRecord {
    pub kind: ReactionKind,
    pub stimulus_tti: u64,
    /// None if nothing reacted before the stimulus went away.
    pub action_tti: Option<u64>,
}

impl ReactionTimeRecord {
    pub fn reaction_tti(&self) -> Option<u64> {
        self.action_tti.map(|a| a - self.stimulus_tti)
    }
}

/// Interference onsets that hit a carrier in use, paired with the first
/// DCA move off that channel (or muting change) while the emitter is on;
/// and incumbent announcements paired with their evacuation confirmations.
pub fn reaction_times(out: &RunOutput) -> Vec<ReactionTimeRecord> {
    let plan = Plan::new(out);
    let recs = &out.log.records;
    let mut v = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        let LogEvent::InterfererOn { id, channel } = &r.event else {
            continue;
        };
        let set: BTreeSet<ChannelId> = [*channel].into();
        let hit = out
            .log
            .tx
            .iter()
            .any(|iv| iv.start <= r.t && r.t < iv.end && plan.overlaps(iv.channel, &set));
        if !hit {
            continue;
        }
        let mut action = None;
        for x in &recs[i + 1..] {
            match &x.event {
                LogEvent::InterfererOff { id: o, .. } if o == id => break,
                LogEvent::Reassigned { from, to, .. }
                    if from.iter().any(|c| plan.overlaps(*c, &set)) && !to.iter().any(|c| plan.overlaps(*c, &set)) =>
                {
                    action = Some(x.t);
                    break;
                }
                LogEvent::MutingChanged { .. } => {
                    action = Some(x.t);
                    break;
                }
                _ => {}
            }
        }
        v.push(ReactionTimeRecord {
            kind: ReactionKind::Interference,
            stimulus_tti: r.t,
            action_tti: action,
        });
    }
    let sus = suspensions(out);
    for ev in &out.scenario.activations {
        let stimulus = ev.announce_at;
        let first = recs
            .iter()
            .filter(|r| stimulus <= r.t && r.t < ev.activation.window.start)
            .find_map(|r| match &r.event {
                LogEvent::SuspendOrdered { grant, .. } => Some(*grant),
                _ => None,
            })
            .and_then(|g| sus.iter().find(|s| s.grant == g && s.ordered_at >= stimulus))
            .and_then(|s| s.confirmed_at);
        if first.is_some() {
            v.push(ReactionTimeRecord {
                kind: ReactionKind::Incumbent,
                stimulus_tti: stimulus,
                action_tti: first,
            });
        }
    }
    v
}
