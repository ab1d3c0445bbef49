//! One simulation run: repositories, the controller, the cRRM and the
//! traffic generators driven from a single event queue.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::controller::{Controller, EvacuationRecord, GrantCommand, GrantCommandKind};
use crate::crrm::{Crrm, CrrmError, DcaCell, Deferred, Effect, InterfaceMode, SessionId, SessionSummary, SlaWindow};
use crate::engine::{Band, Event, EventQueue, RngStream, SimTime, TraceRecord, TraceWriter};
use crate::metrics::{KpiRecorder, KpiWindow, Sample, SeAudit};
use crate::radio::{CoverageRow, Propagation, SensingReport};
use crate::repository::{ChangeNotification, Repository};
use crate::scenario::{Scenario, ScenarioErrors};
use crate::spectrum::{ActivationId, ChannelId, GrantId, OperatorId, Point, RepositoryId, Window, ZoneId};
use crate::traffic::{generate_arrivals, Arrival, Mobility};

#[derive(Clone, Debug)]
pub enum Payload {
    GrantRequest(usize),
    Announce(usize),
    ActivationEnd(usize),
    Notify(Box<ChangeNotification>),
    Command(Box<GrantCommand>),
    CrrmEffect(Effect),
    Confirm(GrantId),
    GrantEdge,
    Interferer { index: usize, on: bool },
    SensingTick,
    SensingDelivery(Vec<SensingReport>),
    DcaTick,
    MobilityTick,
    SchedulerTick,
    Arrival { profile: usize, arrival: Arrival },
    TrafficTick,
    KpiFlush,
}

impl TraceRecord for Payload {
    fn kind(&self) -> &'static str {
        match self {
            Payload::GrantRequest(_) => "grant_request",
            Payload::Announce(_) => "activation_announce",
            Payload::ActivationEnd(_) => "activation_end",
            Payload::Notify(_) => "notification",
            Payload::Command(_) => "grant_command",
            Payload::CrrmEffect(_) => "crrm_effect",
            Payload::Confirm(_) => "evacuation_confirm",
            Payload::GrantEdge => "grant_edge",
            Payload::Interferer { .. } => "interferer",
            Payload::SensingTick => "sensing_tick",
            Payload::SensingDelivery(_) => "sensing_delivery",
            Payload::DcaTick => "dca_tick",
            Payload::MobilityTick => "mobility_tick",
            Payload::SchedulerTick => "scheduler_tick",
            Payload::Arrival { .. } => "arrival",
            Payload::TrafficTick => "traffic_tick",
            Payload::KpiFlush => "kpi_flush",
        }
    }

    fn detail(&self) -> serde_json::Value {
        match self {
            Payload::GrantRequest(i) | Payload::Announce(i) | Payload::ActivationEnd(i) => json!({ "index": i }),
            Payload::Notify(n) => {
                json!({ "repository": n.repository, "change": format!("{:?}", n.change.activation().id) })
            }
            Payload::Command(c) => serde_json::to_value(c.as_ref()).unwrap_or_default(),
            Payload::CrrmEffect(e) => json!(format!("{e:?}")),
            Payload::Confirm(g) => json!({ "grant": g }),
            Payload::Interferer { index, on } => json!({ "index": index, "on": on }),
            Payload::SensingDelivery(r) => json!({ "reports": r.len() }),
            Payload::Arrival { profile, arrival } => {
                json!({ "profile": profile, "operator": arrival.operator, "departure": arrival.departure.0 })
            }
            _ => serde_json::Value::Null,
        }
    }
}

/// Something the run did, in the order it happened.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    GrantIssued {
        grant: GrantId,
        licensee: OperatorId,
        channels: BTreeSet<ChannelId>,
        zone: ZoneId,
        window: Window,
    },
    GrantRejected {
        request: usize,
        licensee: OperatorId,
        reason: String,
    },
    SuspendOrdered {
        grant: GrantId,
        deadline: u64,
    },
    EvacuationConfirmed {
        grant: GrantId,
        deadline: u64,
        compliant: bool,
    },
    Reinstated {
        grant: GrantId,
    },
    Revoked {
        grant: GrantId,
    },
    ActivationRegistered {
        activation: ActivationId,
        repository: RepositoryId,
    },
    ActivationExpired {
        activation: ActivationId,
        repository: RepositoryId,
    },
    DcaTick {
        reassignments: usize,
    },
    Reassigned {
        cell: String,
        from: BTreeSet<ChannelId>,
        to: BTreeSet<ChannelId>,
    },
    MutingChanged {
        muted: usize,
    },
    InterfererOn {
        id: String,
        channel: ChannelId,
    },
    InterfererOff {
        id: String,
        channel: ChannelId,
    },
    Handover {
        session: SessionId,
        from: String,
        to: String,
    },
    SessionAdmitted {
        session: SessionId,
        operator: OperatorId,
    },
    SessionBlocked {
        operator: OperatorId,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogRecord {
    pub t: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// A licensee carrier continuously on air over `[start, end)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TxInterval {
    pub cell: String,
    pub position: Point,
    pub channel: ChannelId,
    /// Grant the cRRM transmits under, for LSA carriers.
    pub grant: Option<GrantId>,
    pub operators: BTreeSet<OperatorId>,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
    pub tx: Vec<TxInterval>,
}

/// Per-session bit accounting at a window boundary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationRow {
    pub tti: u64,
    pub session: SessionId,
    pub operator: OperatorId,
    pub offered: u64,
    pub served: u64,
    pub buffered: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario:\n{0}")]
    InvalidScenario(#[from] ScenarioErrors),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("run stopped at tti {stopped_at} before the horizon {horizon}")]
    IncompleteRun { stopped_at: u64, horizon: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything a finished run leaves behind for reporting.
pub struct RunOutput {
    pub scenario: Scenario,
    pub log: RunLog,
    pub kpi: Vec<KpiWindow>,
    pub se_audit: SeAudit,
    pub evacuations: Vec<EvacuationRecord>,
    pub sessions: Vec<SessionSummary>,
    pub conservation: Vec<ConservationRow>,
    pub sla_windows: Vec<SlaWindow>,
    pub pooled: bool,
    /// Coverage map contents at the end.
    pub coverage: Vec<CoverageRow>,
    pub coverage_pitch_m: f64,
    /// DCA view (assignments and tables) at the last TTI.
    pub final_dca: Vec<DcaCell>,
}

pub struct Simulation {
    scenario: Scenario,
    queue: EventQueue<Payload>,
    repos: Vec<Repository>,
    controller: Controller,
    crrm: Crrm,
    log: RunLog,
    open_tx: BTreeMap<(String, ChannelId, Option<GrantId>), TxInterval>,
    kpi: KpiRecorder,
    conservation: Vec<ConservationRow>,
    sla_windows: Vec<SlaWindow>,
    trace: Option<TraceWriter<Box<dyn Write>>>,
    last_tick: SimTime,
    /// Events raised by the current handler, moved into the queue after it.
    pending: Vec<(SimTime, u8, Payload)>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let errs = scenario.validate();
        if !errs.is_empty() {
            return Err(ScenarioErrors(errs).into());
        }
        let map = scenario.spectrum_map();
        let ctl = &scenario.controller;
        let mut controller = Controller::new(ctl.id.clone(), map.clone(), ctl.rules.clone(), ctl.crrm_latency_tti);
        let mut repos = Vec::new();
        for rc in &scenario.repositories {
            let mut repo = Repository::new(rc.id.clone(), map.clone(), rc.default_max_eirp_dbm);
            for q in &rc.qos {
                repo.set_qos(q.channel, q.zone.clone(), q.max_eirp_dbm);
            }
            repo.subscribe(ctl.id.clone(), rc.latency_tti)
                .map_err(|e| SimError::Setup(e.to_string()))?;
            controller.attach_repository(rc.id.clone(), rc.default_max_eirp_dbm, repo.qos_table());
            repos.push(repo);
        }
        let prop = Propagation::with_shadowing(
            scenario.propagation.clone(),
            scenario.seed,
            scenario.crrm.coverage_pitch_m,
        );
        let crrm = Crrm::new(
            map,
            prop,
            scenario.cells.clone(),
            scenario.crrm.clone(),
            scenario.faults.clone(),
            scenario.interferers.clone(),
            scenario.tti_ms,
            scenario.seed,
        );
        let kpi = KpiRecorder::new(
            scenario.operators.clone(),
            scenario.crrm.kpi_window_tti,
            scenario.horizon_tti,
        );
        let mut sim = Simulation {
            queue: EventQueue::new(),
            repos,
            controller,
            crrm,
            log: RunLog::default(),
            open_tx: BTreeMap::new(),
            kpi,
            conservation: Vec::new(),
            sla_windows: Vec::new(),
            trace: None,
            last_tick: SimTime(0),
            pending: Vec::new(),
            scenario,
        };
        sim.seed_events();
        for (t, prio, p) in std::mem::take(&mut sim.pending) {
            sim.queue.schedule(t, prio, p).expect("initial events lie ahead");
        }
        Ok(sim)
    }

    /// Writes every processed event as a trace line.
    pub fn with_trace(mut self, out: Box<dyn Write>) -> Self {
        self.trace = Some(TraceWriter::new(out));
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn crrm(&self) -> &Crrm {
        &self.crrm
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    fn horizon(&self) -> u64 {
        self.scenario.horizon_tti
    }

    fn at(&mut self, t: u64, band: Band, p: Payload) {
        if t < self.horizon() {
            self.pending.push((SimTime(t), band.priority(), p));
        }
    }

    fn seed_events(&mut self) {
        let s = self.scenario.clone();
        for (i, g) in s.grant_requests.iter().enumerate() {
            self.at(g.at, Band::Control, Payload::GrantRequest(i));
        }
        for (i, a) in s.activations.iter().enumerate() {
            self.at(a.announce_at, Band::Control, Payload::Announce(i));
            self.at(a.activation.window.end, Band::Control, Payload::ActivationEnd(i));
        }
        for (index, x) in s.interferers.iter().enumerate() {
            for w in &x.on {
                self.at(w.start, Band::Control, Payload::Interferer { index, on: true });
                self.at(w.end, Band::Control, Payload::Interferer { index, on: false });
            }
        }
        let mut per_op: BTreeMap<&OperatorId, usize> = BTreeMap::new();
        for (profile, tp) in s.traffic.iter().enumerate() {
            let k = per_op.entry(&tp.operator).or_insert(0);
            let mut rng = RngStream::new(s.seed, &format!("arrivals:{}:{}", tp.operator, k));
            *k += 1;
            for arrival in generate_arrivals(tp, SimTime(s.horizon_tti), s.tti_ms, &mut rng) {
                self.at(arrival.arrival.0, Band::Traffic, Payload::Arrival { profile, arrival });
            }
        }
        self.at(0, Band::Sensing, Payload::SensingTick);
        self.at(0, Band::Decision, Payload::DcaTick);
        if s.traffic.iter().any(|t| t.mobility != Mobility::Static) {
            self.at(0, Band::Decision, Payload::MobilityTick);
        }
        self.at(0, Band::Scheduling, Payload::SchedulerTick);
        self.at(0, Band::Traffic, Payload::TrafficTick);
        let w = s.crrm.kpi_window_tti;
        self.at(w.min(s.horizon_tti) - 1, Band::Metrics, Payload::KpiFlush);
    }

    fn record(&mut self, t: SimTime, event: LogEvent) {
        self.log.records.push(LogRecord { t: t.0, event });
    }

    /// Runs every event up to and including `t` (clamped to the last TTI).
    pub fn run_until(&mut self, t: SimTime) -> Result<(), SimError> {
        let end = SimTime(t.0.min(self.horizon().saturating_sub(1)));
        let mut queue = std::mem::take(&mut self.queue);
        let mut io_err = None;
        queue.run_until(end, |q, ev| {
            if let Some(tr) = self.trace.as_mut() {
                if let Err(e) = tr.write(&ev) {
                    io_err.get_or_insert(e);
                }
            }
            self.handle(q, ev);
        });
        self.queue = queue;
        self.last_tick = end;
        match io_err {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        self.run_until(SimTime(self.horizon()))?;
        self.finish()
    }

    /// Closes the books; fails if the horizon was not reached.
    pub fn finish(mut self) -> Result<RunOutput, SimError> {
        let last = self.horizon() - 1;
        if self.last_tick.0 < last || self.queue.now().0 < last {
            return Err(SimError::IncompleteRun {
                stopped_at: self.queue.now().0,
                horizon: self.horizon(),
            });
        }
        if let Some(tr) = self.trace.take() {
            tr.into_inner().flush()?;
        }
        let end = self.horizon();
        for (_, mut iv) in std::mem::take(&mut self.open_tx) {
            iv.end = end;
            self.log.tx.push(iv);
        }
        self.log
            .tx
            .sort_by(|a, b| (a.start, &a.cell, a.channel).cmp(&(b.start, &b.cell, b.channel)));
        let final_dca = self.crrm.dca_inputs(SimTime(last));
        let (kpi, se_audit) = self.kpi.into_parts();
        Ok(RunOutput {
            log: self.log,
            kpi,
            se_audit,
            evacuations: self.controller.evacuation_ledger().to_vec(),
            sessions: self.crrm.session_summaries(),
            conservation: self.conservation,
            sla_windows: self.sla_windows,
            pooled: self.crrm.is_pooled(),
            coverage: self.crrm.coverage().snapshot().collect(),
            coverage_pitch_m: self.crrm.coverage().pitch(),
            final_dca,
            scenario: self.scenario,
        })
    }

    /// Diffs the carriers on air against the open intervals.
    fn sync_tx(&mut self, now: SimTime) {
        let mut live = BTreeMap::new();
        for t in self.crrm.transmissions(now) {
            live.insert((t.cell.clone(), t.channel, t.grant), t);
        }
        let ended: Vec<_> = self
            .open_tx
            .keys()
            .filter(|k| !live.contains_key(*k))
            .cloned()
            .collect();
        for k in ended {
            let mut iv = self.open_tx.remove(&k).expect("listed");
            iv.end = now.0;
            if iv.end > iv.start {
                self.log.tx.push(iv);
            }
        }
        for (k, t) in live {
            self.open_tx.entry(k).or_insert_with(|| TxInterval {
                cell: t.cell,
                position: t.position,
                channel: t.channel,
                grant: t.grant,
                operators: t.operators,
                start: now.0,
                end: now.0,
            });
        }
    }

    fn send_commands(&mut self, cmds: Vec<GrantCommand>, now: SimTime) {
        for c in cmds {
            match &c.kind {
                GrantCommandKind::Suspend { grant, deadline } => self.record(
                    now,
                    LogEvent::SuspendOrdered {
                        grant: *grant,
                        deadline: deadline.0,
                    },
                ),
                GrantCommandKind::Reinstate { grant } => self.record(now, LogEvent::Reinstated { grant: *grant }),
                GrantCommandKind::Revoke { grant } => self.record(now, LogEvent::Revoked { grant: *grant }),
                GrantCommandKind::Issue { .. } => {}
            }
            self.at(c.deliver_at.0, Band::Control, Payload::Command(Box::new(c)));
        }
    }

    fn defer(&mut self, items: Vec<Deferred>) {
        for d in items {
            match d {
                Deferred::Effect { at, effect } => self.at(at.0, Band::Control, Payload::CrrmEffect(effect)),
                Deferred::Confirm { grant, at } => self.at(at.0, Band::Control, Payload::Confirm(grant)),
            }
        }
    }

    fn notify(&mut self, notes: Vec<ChangeNotification>) {
        for n in notes {
            self.at(n.deliver_at.0, Band::Control, Payload::Notify(Box::new(n)));
        }
    }

    fn handle(&mut self, q: &mut EventQueue<Payload>, ev: Event<Payload>) {
        let now = ev.fire_time;
        let control = ev.priority == Band::Control.priority();
        match ev.payload {
            Payload::GrantRequest(i) => self.on_grant_request(i, now),
            Payload::Announce(i) => {
                let a = self.scenario.activations[i].activation.clone();
                let mut notes = Vec::new();
                for k in 0..self.repos.len() {
                    match self.repos[k].register_incumbent_activation(a.clone(), now) {
                        Ok(n) => {
                            let repository = self.repos[k].id().clone();
                            self.record(
                                now,
                                LogEvent::ActivationRegistered {
                                    activation: a.id.clone(),
                                    repository,
                                },
                            );
                            notes.extend(n);
                        }
                        Err(e) => panic!("validated activation rejected: {e}"),
                    }
                }
                self.notify(notes);
            }
            Payload::ActivationEnd(i) => {
                let id = self.scenario.activations[i].activation.id.clone();
                let mut notes = Vec::new();
                for k in 0..self.repos.len() {
                    if let Ok(n) = self.repos[k].expire_activation(&id, now) {
                        let repository = self.repos[k].id().clone();
                        self.record(
                            now,
                            LogEvent::ActivationExpired {
                                activation: id.clone(),
                                repository,
                            },
                        );
                        notes.extend(n);
                    }
                }
                self.notify(notes);
            }
            Payload::Notify(n) => {
                let cmds = self.controller.on_availability_change(&n, now);
                self.send_commands(cmds, now);
            }
            Payload::Command(c) => match self.crrm.apply_grant_command(&c, now) {
                Ok(d) => self.defer(d),
                Err(CrrmError::UnknownGrant(g)) => panic!("controller sent a command for unknown grant {g}"),
                Err(e) => panic!("{e}"),
            },
            Payload::CrrmEffect(e) => {
                let d = self.crrm.apply_effect(&e, now);
                self.defer(d);
            }
            Payload::Confirm(g) => {
                if let Ok(r) = self.controller.confirm_evacuation(g, now) {
                    self.kpi.record(Sample::Evacuation, now);
                    self.record(
                        now,
                        LogEvent::EvacuationConfirmed {
                            grant: g,
                            deadline: r.deadline.0,
                            compliant: r.compliant,
                        },
                    );
                }
            }
            Payload::GrantEdge => {
                self.crrm.refresh(now);
                let cmds = self.controller.expire_grants(now);
                self.send_commands(cmds, now);
            }
            Payload::Interferer { index, on } => {
                let x = self.scenario.interferers[index].clone();
                self.crrm.set_interferer(&x.id, on);
                let ev = if on {
                    LogEvent::InterfererOn {
                        id: x.id,
                        channel: x.channel,
                    }
                } else {
                    LogEvent::InterfererOff {
                        id: x.id,
                        channel: x.channel,
                    }
                };
                self.record(now, ev);
            }
            Payload::SensingTick => {
                let reports = self.crrm.sense(now);
                let p = &self.scenario.crrm;
                let deliver = match p.interface {
                    InterfaceMode::Realtime => now.0 + 1,
                    InterfaceMode::Batch => now.0.div_ceil(p.report_period_tti) * p.report_period_tti,
                };
                let next = now.0 + p.t_sense_tti;
                self.at(deliver, Band::Sensing, Payload::SensingDelivery(reports));
                self.at(next, Band::Sensing, Payload::SensingTick);
            }
            Payload::SensingDelivery(reports) => {
                for mut r in reports {
                    r.delivered_at = now;
                    self.crrm.ingest(&r);
                }
            }
            Payload::DcaTick => {
                let (result, effect) = self.crrm.dca_tick(now);
                self.record(
                    now,
                    LogEvent::DcaTick {
                        reassignments: result.reassignments.len(),
                    },
                );
                for r in result.reassignments {
                    self.record(
                        now,
                        LogEvent::Reassigned {
                            cell: r.cell,
                            from: r.from,
                            to: r.to,
                        },
                    );
                }
                if let Some(effect) = effect {
                    if let Effect::Assign { muting: Some(m), .. } = &effect {
                        self.record(now, LogEvent::MutingChanged { muted: m.len() });
                    }
                    let at = now.0 + self.scenario.crrm.decision_latency_tti;
                    self.at(at, Band::Control, Payload::CrrmEffect(effect));
                }
                self.at(now.0 + self.scenario.crrm.t_dca_tti, Band::Decision, Payload::DcaTick);
            }
            Payload::MobilityTick => {
                let dt = self.scenario.crrm.mobility_period_tti;
                for (session, from, to) in self.crrm.mobility_tick(now, dt) {
                    self.kpi.record(Sample::Handover, now);
                    self.record(now, LogEvent::Handover { session, from, to });
                }
                self.at(now.0 + dt, Band::Decision, Payload::MobilityTick);
            }
            Payload::SchedulerTick => {
                self.crrm.schedule_tti(now, &mut self.kpi);
                self.at(now.0 + 1, Band::Scheduling, Payload::SchedulerTick);
            }
            Payload::Arrival { profile, arrival } => {
                let tp = &self.scenario.traffic[profile];
                match self.crrm.admit(&arrival, &tp.demand, &tp.mobility, &tp.region, now) {
                    Ok(session) => self.record(
                        now,
                        LogEvent::SessionAdmitted {
                            session,
                            operator: arrival.operator,
                        },
                    ),
                    Err(e) => {
                        self.kpi.record(
                            Sample::Blocked {
                                operator: arrival.operator.clone(),
                            },
                            now,
                        );
                        self.record(
                            now,
                            LogEvent::SessionBlocked {
                                operator: arrival.operator,
                                reason: e.to_string(),
                            },
                        );
                    }
                }
            }
            Payload::TrafficTick => {
                self.crrm.traffic_tick(now, &mut self.kpi);
                self.at(now.0 + 1, Band::Traffic, Payload::TrafficTick);
            }
            Payload::KpiFlush => {
                let w = self.scenario.crrm.kpi_window_tti;
                let start = now.0 / w * w;
                for (session, operator, offered, served, buffered) in self.crrm.conservation_snapshot() {
                    self.conservation.push(ConservationRow {
                        tti: now.0,
                        session,
                        operator,
                        offered,
                        served,
                        buffered,
                    });
                }
                let sla = self.crrm.close_sla_window(now.0 + 1 - start);
                self.sla_windows.push(sla);
                self.kpi.close_window(now);
                let next = (now.0 + 1 + w).min(self.horizon()) - 1;
                if next > now.0 {
                    self.at(next, Band::Metrics, Payload::KpiFlush);
                }
            }
        }
        for (t, prio, p) in std::mem::take(&mut self.pending) {
            q.schedule(t, prio, p).expect("events are never scheduled in the past");
        }
        if control {
            self.sync_tx(now);
        }
    }

    fn on_grant_request(&mut self, i: usize, now: SimTime) {
        let g = self.scenario.grant_requests[i].clone();
        match self
            .controller
            .request_grant(&g.licensee, &g.channels, &g.zone, g.window, now)
        {
            Ok(cmd) => {
                if let GrantCommandKind::Issue { grant } = &cmd.kind {
                    self.record(
                        now,
                        LogEvent::GrantIssued {
                            grant: grant.id,
                            licensee: grant.licensee.clone(),
                            channels: grant.channels.clone(),
                            zone: grant.zone.clone(),
                            window: grant.window,
                        },
                    );
                    if grant.window.start > now.0 {
                        self.at(grant.window.start, Band::Control, Payload::GrantEdge);
                    }
                    self.at(grant.window.end, Band::Control, Payload::GrantEdge);
                }
                self.at(cmd.deliver_at.0, Band::Control, Payload::Command(Box::new(cmd)));
            }
            Err(e) => self.record(
                now,
                LogEvent::GrantRejected {
                    request: i,
                    licensee: g.licensee,
                    reason: e.to_string(),
                },
            ),
        }
    }
}

/// Runs a scenario to its horizon.
pub fn run_scenario(scenario: Scenario) -> Result<RunOutput, SimError> {
    Simulation::new(scenario)?.run()
}
