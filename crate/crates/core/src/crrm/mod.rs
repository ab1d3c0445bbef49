//! Centralized RRM for a cluster of small cells: band/RAT selection,
//! channel assignment, per-TTI scheduling, handover, evacuation and MOCN
//! SLA enforcement.

pub mod dca;
pub mod handover;
pub mod icic;
pub mod scheduler;
pub mod select;
pub mod sla;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controller::{GrantCommand, GrantCommandKind};
use crate::engine::{RngStream, SimTime};
use crate::radio::{
    dbm_to_mw, mw_to_dbm, pathloss_db, spectral_efficiency, CoverageMap, Propagation, SensingReport, Transmission,
};
use crate::spectrum::{
    channels_overlap, ChannelId, GrantId, GrantState, OperatorId, Point, Polygon, Regime, SpectrumGrant, SpectrumMap,
    Window,
};
use crate::traffic::{Arrival, Demand, DemandProcess, Mobility, Walker};

pub use dca::{dca_step, is_local_optimum, DcaCell, DcaResult, Reassignment};
pub use handover::HandoverTracker;
pub use icic::{is_muted, plan_muting, MutePlan};
pub use scheduler::{full_allocation_bits, water_fill, Claimant};
pub use select::{select_band_rat, Candidate};
pub use sla::{check_sync, enforce_mocn_sla, SlaWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rat {
    #[serde(rename = "5G-NR")]
    Nr,
    #[serde(rename = "WiFi-like")]
    WifiLike,
}

impl Rat {
    pub fn for_regime(r: &Regime) -> Rat {
        match r {
            Regime::Unlicensed => Rat::WifiLike,
            _ => Rat::Nr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QosClass {
    Gbr { rate_bps: f64 },
    BestEffort,
}

impl From<&Demand> for QosClass {
    fn from(d: &Demand) -> Self {
        match d {
            Demand::Gbr { rate_bps } => QosClass::Gbr { rate_bps: *rate_bps },
            Demand::OnOff { .. } => QosClass::BestEffort,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub id: String,
    pub position: Point,
    /// Transmit EIRP per supported RAT.
    pub eirp_dbm: BTreeMap<Rat, f64>,
    pub operators: BTreeSet<OperatorId>,
    #[serde(default = "one")]
    pub max_channels: usize,
    #[serde(default = "default_cluster")]
    pub cluster: String,
}

fn one() -> usize {
    1
}

fn default_cluster() -> String {
    "edge".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceMode {
    Realtime,
    Batch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct IcicParams {
    pub enabled: bool,
    /// Cells coupling at or above this level on a shared channel alternate.
    pub coupling_threshold_dbm: f64,
}

impl Default for IcicParams {
    fn default() -> Self {
        IcicParams {
            enabled: false,
            coupling_threshold_dbm: -70.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct CrrmParams {
    pub t_dca_tti: u64,
    pub beta_dca: f64,
    pub t_sense_tti: u64,
    pub interface: InterfaceMode,
    pub report_period_tti: u64,
    pub decision_latency_tti: u64,
    /// Delay on the cRRM to controller path for evacuation confirmations.
    pub controller_latency_tti: u64,
    pub sync_offsets_tti: BTreeMap<OperatorId, i64>,
    pub sync_tolerance_tti: u64,
    pub mocn_pool: bool,
    pub sla_baselines_bps: BTreeMap<OperatorId, f64>,
    pub w_max: f64,
    pub operator_weights: BTreeMap<OperatorId, f64>,
    pub min_rsrp_dbm: f64,
    pub hysteresis_db: f64,
    pub ttt_tti: u64,
    pub mobility_period_tti: u64,
    pub max_aggregated_channels: usize,
    pub kpi_window_tti: u64,
    pub sensor_noise_db: f64,
    pub coverage_pitch_m: f64,
    pub coverage_beta: f64,
    pub icic: IcicParams,
}

impl Default for CrrmParams {
    fn default() -> Self {
        CrrmParams {
            t_dca_tti: 50,
            beta_dca: 0.9,
            t_sense_tti: 10,
            interface: InterfaceMode::Realtime,
            report_period_tti: 1000,
            decision_latency_tti: 1,
            controller_latency_tti: 1,
            sync_offsets_tti: BTreeMap::new(),
            sync_tolerance_tti: 1,
            mocn_pool: true,
            sla_baselines_bps: BTreeMap::new(),
            w_max: 4.0,
            operator_weights: BTreeMap::new(),
            min_rsrp_dbm: -110.0,
            hysteresis_db: 3.0,
            ttt_tti: 100,
            mobility_period_tti: 10,
            max_aggregated_channels: 4,
            kpi_window_tti: 1000,
            sensor_noise_db: 0.0,
            coverage_pitch_m: 20.0,
            coverage_beta: 0.9,
            icic: IcicParams::default(),
        }
    }
}

impl CrrmParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut pos = |name: &str, x: u64| {
            if x == 0 {
                v.push(format!("{name} must be > 0"));
            }
        };
        pos("t_dca_tti", self.t_dca_tti);
        pos("t_sense_tti", self.t_sense_tti);
        pos("report_period_tti", self.report_period_tti);
        pos("mobility_period_tti", self.mobility_period_tti);
        pos("kpi_window_tti", self.kpi_window_tti);
        for (name, b) in [("beta_dca", self.beta_dca), ("coverage_beta", self.coverage_beta)] {
            if !(b > 0.0 && b < 1.0) {
                v.push(format!("{name} {b} must be in (0, 1)"));
            }
        }
        if !(self.w_max >= 1.0) {
            v.push(format!("w_max {} must be >= 1", self.w_max));
        }
        if self.max_aggregated_channels == 0 {
            v.push("max_aggregated_channels must be > 0".into());
        }
        if !(self.coverage_pitch_m > 0.0) {
            v.push(format!("coverage_pitch_m {} must be > 0", self.coverage_pitch_m));
        }
        if !(self.sensor_noise_db >= 0.0) || !(self.hysteresis_db >= 0.0) {
            v.push("sensor_noise_db and hysteresis_db must be >= 0".into());
        }
        for (op, w) in &self.operator_weights {
            if !(*w > 0.0) {
                v.push(format!("operator weight for {op} must be > 0"));
            }
        }
        for (op, b) in &self.sla_baselines_bps {
            if !(*b >= 0.0) {
                v.push(format!("SLA baseline for {op} must be >= 0"));
            }
        }
        v
    }
}

/// Deliberate misbehaviour used to check that the verdict scanners bite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct Faults {
    /// Extra TTIs the cRRM keeps transmitting after a Suspend arrives.
    pub evacuation_delay_tti: u64,
}

/// A non-licensee emitter (e.g. a neighbouring system) that the sensing
/// network sees but the cRRM does not control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalInterferer {
    pub id: String,
    pub position: Point,
    pub channel: ChannelId,
    pub eirp_dbm: f64,
    pub on: Vec<Window>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CrrmError {
    #[error("no cell above {min_rsrp_dbm} dBm for operator {operator}")]
    NoCoverage { operator: OperatorId, min_rsrp_dbm: f64 },
    #[error("GBR {needed_bps} b/s exceeds projected capacity {capacity_bps} b/s")]
    AdmissionDenied { needed_bps: f64, capacity_bps: f64 },
    #[error("unknown grant {0}")]
    UnknownGrant(GrantId),
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub cfg: CellConfig,
    pub assigned: BTreeSet<ChannelId>,
}

#[derive(Clone, Debug)]
struct Session {
    id: SessionId,
    operator: OperatorId,
    qos: QosClass,
    position: Point,
    walker: Option<(Walker, Polygon, RngStream)>,
    demand: DemandProcess,
    departure: SimTime,
    serving: usize,
    channels: Vec<ChannelId>,
    fifo: VecDeque<(SimTime, u64)>,
    buffered: u64,
    served: u64,
    delay_bit_tti: u128,
    tracker: HandoverTracker,
}

/// Per-session totals when the session is done or the run ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: SessionId,
    pub operator: OperatorId,
    pub offered_bits: u64,
    pub served_bits: u64,
    pub buffered_bits: u64,
    /// Bit-weighted mean TTIs from offer to service; None if nothing served.
    pub mean_delay_tti: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub tti: SimTime,
    pub cell: String,
    pub channel: ChannelId,
    pub session: SessionId,
    pub operator: OperatorId,
    pub fraction: f64,
    pub bits: u64,
    pub bandwidth_hz: f64,
    pub sinr_db: f64,
    pub tti_s: f64,
}

/// Outcome for one backlogged session in one TTI.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionTti {
    pub tti: SimTime,
    pub session: SessionId,
    pub operator: OperatorId,
    pub served_bits: u64,
    pub stalled: bool,
}

/// Receives the per-TTI record stream.
pub trait Observer {
    fn offered(&mut self, _tti: SimTime, _session: SessionId, _operator: &OperatorId, _bits: u64) {}
    fn allocation(&mut self, _r: &AllocationRecord) {}
    fn session_tti(&mut self, _r: &SessionTti) {}
}

pub struct NullObserver;
impl Observer for NullObserver {}

#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    /// Grant becomes usable (issue or reinstate).
    GrantUp(GrantId),
    /// Vacate the grant's channels, then confirm.
    Evacuate(GrantId),
    /// Vacate without confirmation (revocation).
    Release(GrantId),
    Assign {
        reassignments: Vec<Reassignment>,
        muting: Option<MutePlan>,
    },
}

/// Follow-up work the caller must schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum Deferred {
    Effect { at: SimTime, effect: Effect },
    Confirm { grant: GrantId, at: SimTime },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxInfo {
    pub cell: String,
    pub position: Point,
    pub channel: ChannelId,
    pub grant: Option<GrantId>,
    pub operators: BTreeSet<OperatorId>,
}

#[derive(Clone, Copy, Debug)]
struct TableEntry {
    mw: Option<f64>,
    /// Reports measured before this are stale; the first one at or after it
    /// replaces the value instead of blending.
    reinit_from: Option<SimTime>,
}

#[derive(Clone, Debug)]
struct HeldGrant {
    grant: SpectrumGrant,
    usable: bool,
}

pub struct Crrm {
    map: Arc<SpectrumMap>,
    prop: Propagation,
    params: CrrmParams,
    faults: Faults,
    tti_ms: f64,
    seed: u64,
    cells: Vec<Cell>,
    grants: BTreeMap<GrantId, HeldGrant>,
    tables: BTreeMap<(usize, ChannelId), TableEntry>,
    coverage: CoverageMap,
    sessions: BTreeMap<SessionId, Session>,
    finished: Vec<SessionSummary>,
    next_session: u64,
    per_op_arrivals: BTreeMap<OperatorId, u64>,
    load: BTreeMap<(usize, ChannelId), f64>,
    multipliers: BTreeMap<OperatorId, f64>,
    sla_window: BTreeMap<OperatorId, (u64, u64)>,
    pooled: bool,
    muting: MutePlan,
    interferers: Vec<(ExternalInterferer, bool)>,
    epoch: u64,
    tx_cache: Option<Vec<Transmission>>,
    sinr_cache: BTreeMap<(SessionId, ChannelId), (u64, f64)>,
    sensor_rng: RngStream,
    handovers: u64,
}

impl Crrm {
    pub fn new(
        map: Arc<SpectrumMap>,
        prop: Propagation,
        mut cells: Vec<CellConfig>,
        params: CrrmParams,
        faults: Faults,
        interferers: Vec<ExternalInterferer>,
        tti_ms: f64,
        seed: u64,
    ) -> Self {
        cells.sort_by(|a, b| a.id.cmp(&b.id));
        let offsets: Vec<i64> = params.sync_offsets_tti.values().copied().collect();
        let pooled = params.mocn_pool && check_sync(&offsets, params.sync_tolerance_tti);
        let coverage = CoverageMap::new(
            params.coverage_pitch_m,
            params.coverage_beta,
            map.channels.keys().copied(),
        );
        Crrm {
            prop,
            faults,
            tti_ms,
            seed,
            cells: cells
                .into_iter()
                .map(|cfg| Cell {
                    cfg,
                    assigned: BTreeSet::new(),
                })
                .collect(),
            grants: BTreeMap::new(),
            tables: BTreeMap::new(),
            coverage,
            sessions: BTreeMap::new(),
            finished: Vec::new(),
            next_session: 0,
            per_op_arrivals: BTreeMap::new(),
            load: BTreeMap::new(),
            multipliers: BTreeMap::new(),
            sla_window: BTreeMap::new(),
            pooled,
            muting: MutePlan::new(),
            interferers: interferers.into_iter().map(|i| (i, false)).collect(),
            epoch: 0,
            tx_cache: None,
            sinr_cache: BTreeMap::new(),
            sensor_rng: RngStream::new(seed, "sensor"),
            handovers: 0,
            map,
            params,
        }
    }

    pub fn params(&self) -> &CrrmParams {
        &self.params
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_pooled(&self) -> bool {
        self.pooled
    }

    pub fn coverage(&self) -> &CoverageMap {
        &self.coverage
    }

    pub fn handover_count(&self) -> u64 {
        self.handovers
    }

    pub fn multipliers(&self) -> &BTreeMap<OperatorId, f64> {
        &self.multipliers
    }

    pub fn muting(&self) -> &MutePlan {
        &self.muting
    }

    pub fn cell_index(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.cfg.id == id)
    }

    fn tti_s(&self) -> f64 {
        self.tti_ms / 1000.0
    }

    fn invalidate_radio(&mut self) {
        self.epoch += 1;
        self.tx_cache = None;
    }

    fn grant_covers(&self, g: &SpectrumGrant, cell: usize) -> bool {
        let c = &self.cells[cell];
        c.cfg.operators.contains(&g.licensee)
            && self
                .map
                .zone(&g.zone)
                .map(|z| z.polygon.contains(c.cfg.position))
                .unwrap_or(false)
    }

    /// A grant with a pending suspension stays usable until the cRRM vacates it.
    fn usable_grant_for(&self, cell: usize, ch: ChannelId, now: SimTime) -> Option<&SpectrumGrant> {
        self.grants
            .values()
            .filter(|h| {
                h.usable
                    && matches!(h.grant.state, GrantState::Active | GrantState::SuspendPending { .. })
                    && h.grant.window.contains(now)
            })
            .map(|h| &h.grant)
            .find(|g| g.channels.contains(&ch) && self.grant_covers(g, cell))
    }

    /// Channels a cell may carry right now.
    pub fn cell_admissible(&self, cell: usize, now: SimTime) -> BTreeSet<ChannelId> {
        let c = &self.cells[cell];
        self.map
            .channels
            .values()
            .filter(|ch| c.cfg.eirp_dbm.contains_key(&Rat::for_regime(&ch.regime)))
            .filter(|ch| match &ch.regime {
                Regime::Licensed(op) => c.cfg.operators.contains(op),
                Regime::Unlicensed => true,
                Regime::Lsa => self.usable_grant_for(cell, ch.id, now).is_some(),
            })
            .map(|ch| ch.id)
            .collect()
    }

    /// Channels a cell listens on for sensing.
    fn measured_channels(&self, cell: usize) -> Vec<ChannelId> {
        let c = &self.cells[cell];
        self.map
            .channels
            .values()
            .filter(|ch| c.cfg.eirp_dbm.contains_key(&Rat::for_regime(&ch.regime)))
            .filter(|ch| match &ch.regime {
                Regime::Licensed(op) => c.cfg.operators.contains(op),
                _ => true,
            })
            .map(|ch| ch.id)
            .collect()
    }

    fn session_may_use(&self, op: &OperatorId, cell: usize, ch: ChannelId, now: SimTime) -> bool {
        let Ok(channel) = self.map.channel(ch) else {
            return false;
        };
        let c = &self.cells[cell];
        match &channel.regime {
            Regime::Licensed(owner) => owner == op,
            Regime::Lsa => match self.usable_grant_for(cell, ch, now) {
                Some(g) => &g.licensee == op || self.pooled,
                None => false,
            },
            Regime::Unlicensed => {
                if self.pooled || c.cfg.operators.len() <= 1 {
                    return true;
                }
                let unl: Vec<ChannelId> = self
                    .map
                    .channels
                    .values()
                    .filter(|x| x.regime == Regime::Unlicensed)
                    .map(|x| x.id)
                    .collect();
                let k = unl.iter().position(|x| *x == ch).unwrap_or(0);
                let i = c.cfg.operators.iter().position(|o| o == op).unwrap_or(0);
                k % c.cfg.operators.len() == i
            }
        }
    }

    fn eirp(&self, cell: usize, ch: ChannelId, now: SimTime) -> f64 {
        let c = &self.cells[cell];
        let Ok(channel) = self.map.channel(ch) else {
            return f64::NEG_INFINITY;
        };
        let base = c
            .cfg
            .eirp_dbm
            .get(&Rat::for_regime(&channel.regime))
            .copied()
            .unwrap_or(f64::NEG_INFINITY);
        match self.usable_grant_for(cell, ch, now) {
            Some(g) if channel.is_lsa() => base.min(g.max_eirp_dbm),
            _ => base,
        }
    }

    fn max_eirp(&self, cell: usize) -> f64 {
        self.cells[cell]
            .cfg
            .eirp_dbm
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every carrier currently on air, including external interferers.
    pub fn active_transmissions(&mut self, now: SimTime) -> &[Transmission] {
        if self.tx_cache.is_none() {
            let mut v = Vec::new();
            for (i, c) in self.cells.iter().enumerate() {
                for ch in &c.assigned {
                    v.push(Transmission {
                        position: c.cfg.position,
                        channel: *ch,
                        eirp_dbm: self.eirp(i, *ch, now),
                        operator: c
                            .cfg
                            .operators
                            .iter()
                            .next()
                            .cloned()
                            .unwrap_or_else(|| OperatorId::new("")),
                        cell: c.cfg.id.clone(),
                    });
                }
            }
            for (x, on) in &self.interferers {
                if *on {
                    v.push(Transmission {
                        position: x.position,
                        channel: x.channel,
                        eirp_dbm: x.eirp_dbm,
                        operator: OperatorId::new("external"),
                        cell: x.id.clone(),
                    });
                }
            }
            self.tx_cache = Some(v);
        }
        self.tx_cache.as_deref().unwrap_or(&[])
    }

    /// Licensee carriers on air, for the run log.
    pub fn transmissions(&self, now: SimTime) -> Vec<TxInfo> {
        let mut v = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            for ch in &c.assigned {
                let lsa = self.map.channel(*ch).map(|x| x.is_lsa()).unwrap_or(false);
                v.push(TxInfo {
                    cell: c.cfg.id.clone(),
                    position: c.cfg.position,
                    channel: *ch,
                    grant: if lsa {
                        self.usable_grant_for(i, *ch, now).map(|g| g.id)
                    } else {
                        None
                    },
                    operators: c.cfg.operators.clone(),
                });
            }
        }
        v
    }

    pub fn set_interferer(&mut self, id: &str, on: bool) {
        for (x, state) in &mut self.interferers {
            if x.id == id && *state != on {
                *state = on;
                self.epoch += 1;
                self.tx_cache = None;
            }
        }
    }

    // ---- grants and evacuation ----

    pub fn apply_grant_command(&mut self, cmd: &GrantCommand, now: SimTime) -> Result<Vec<Deferred>, CrrmError> {
        let dl = self.params.decision_latency_tti;
        let mut out = Vec::new();
        match &cmd.kind {
            GrantCommandKind::Issue { grant } => {
                self.grants.insert(
                    grant.id,
                    HeldGrant {
                        grant: grant.clone(),
                        usable: false,
                    },
                );
                out.push(Deferred::Effect {
                    at: now.plus(dl),
                    effect: Effect::GrantUp(grant.id),
                });
            }
            GrantCommandKind::Reinstate { grant } => {
                let h = self.grants.get_mut(grant).ok_or(CrrmError::UnknownGrant(*grant))?;
                h.grant.state = GrantState::Active;
                out.push(Deferred::Effect {
                    at: now.plus(dl),
                    effect: Effect::GrantUp(*grant),
                });
            }
            GrantCommandKind::Suspend { grant, deadline } => {
                let h = self.grants.get_mut(grant).ok_or(CrrmError::UnknownGrant(*grant))?;
                h.grant.state = GrantState::SuspendPending { deadline: *deadline };
                let id = *grant;
                if !self.grant_on_air(id) && self.faults.evacuation_delay_tti == 0 {
                    self.vacate(id, now);
                    out.push(Deferred::Confirm {
                        grant: id,
                        at: now.plus(self.params.controller_latency_tti),
                    });
                } else {
                    out.push(Deferred::Effect {
                        at: now.plus(dl + self.faults.evacuation_delay_tti),
                        effect: Effect::Evacuate(id),
                    });
                }
            }
            GrantCommandKind::Revoke { grant } => {
                let h = self.grants.get_mut(grant).ok_or(CrrmError::UnknownGrant(*grant))?;
                h.grant.state = GrantState::Revoked;
                let id = *grant;
                self.vacate(id, now);
            }
        }
        Ok(out)
    }

    /// Whether some cell carries one of the grant's channels under it.
    fn grant_on_air(&self, id: GrantId) -> bool {
        let Some(h) = self.grants.get(&id) else { return false };
        let zone = self.map.zone(&h.grant.zone).ok();
        self.cells.iter().any(|c| {
            c.assigned.iter().any(|ch| h.grant.channels.contains(ch))
                && zone.is_some_and(|z| z.polygon.contains(c.cfg.position))
        })
    }

    fn vacate(&mut self, id: GrantId, now: SimTime) {
        if let Some(h) = self.grants.get_mut(&id) {
            h.usable = false;
        }
        self.refresh(now);
    }

    pub fn apply_effect(&mut self, effect: &Effect, now: SimTime) -> Vec<Deferred> {
        let mut out = Vec::new();
        match effect {
            Effect::GrantUp(id) => {
                if let Some(h) = self.grants.get_mut(id) {
                    if h.grant.state == GrantState::Active {
                        h.usable = true;
                    }
                }
                self.refresh(now);
            }
            Effect::Evacuate(id) => {
                self.vacate(*id, now);
                out.push(Deferred::Confirm {
                    grant: *id,
                    at: now.plus(self.params.controller_latency_tti),
                });
            }
            Effect::Release(id) => self.vacate(*id, now),
            Effect::Assign { reassignments, muting } => {
                for r in reassignments {
                    let Some(i) = self.cell_index(&r.cell) else { continue };
                    let adm = self.cell_admissible(i, now);
                    let before = self.cells[i].assigned.clone();
                    let after: BTreeSet<ChannelId> = r.to.intersection(&adm).copied().collect();
                    if after == before {
                        continue;
                    }
                    self.cells[i].assigned = after.clone();
                    self.mark_stale(i, &before, &after, now);
                }
                if let Some(m) = muting {
                    self.muting = m.clone();
                }
                self.invalidate_radio();
                self.refresh_sessions(now);
            }
        }
        out
    }

    /// Drops carriers that lost admissibility (grant suspended, revoked or
    /// out of window) and backfills freed slots from the tables at once.
    pub fn refresh(&mut self, now: SimTime) {
        let mut changed = false;
        for i in 0..self.cells.len() {
            let adm = self.cell_admissible(i, now);
            let before = self.cells[i].assigned.clone();
            let mut kept: BTreeSet<ChannelId> = before.intersection(&adm).copied().collect();
            if kept.len() < before.len() {
                let fill = self.dca_cell(i, now);
                let mut spare: Vec<ChannelId> = fill.preferred().into_iter().filter(|c| !kept.contains(c)).collect();
                spare.truncate(self.cells[i].cfg.max_channels.saturating_sub(kept.len()));
                kept.extend(spare);
            }
            if kept != before {
                self.cells[i].assigned = kept.clone();
                self.mark_stale(i, &before, &kept, now);
                changed = true;
            }
        }
        if changed {
            self.invalidate_radio();
        }
        self.refresh_sessions(now);
    }

    /// After cell `mover` changes carriers, other cells' entries on the
    /// touched channels must be re-measured.
    fn mark_stale(&mut self, mover: usize, before: &BTreeSet<ChannelId>, after: &BTreeSet<ChannelId>, now: SimTime) {
        let touched: Vec<ChannelId> = before.symmetric_difference(after).copied().collect();
        for ((cell, ch), e) in self.tables.iter_mut() {
            if *cell == mover {
                continue;
            }
            let hit = touched.iter().any(|t| {
                let (Ok(a), Ok(b)) = (self.map.channel(*t), self.map.channel(*ch)) else {
                    return false;
                };
                channels_overlap(a, b)
            });
            if hit {
                e.reinit_from = Some(now);
            }
        }
    }

    // ---- sensing and DCA ----

    /// One measurement per (cell, listened channel): interference plus noise.
    pub fn sense(&mut self, now: SimTime) -> Vec<SensingReport> {
        let sigma = self.params.sensor_noise_db;
        let n = self.cells.len();
        let mut out = Vec::new();
        for i in 0..n {
            let pos = self.cells[i].cfg.position;
            let id = self.cells[i].cfg.id.clone();
            for ch in self.measured_channels(i) {
                let map = self.map.clone();
                let prop = self.prop.clone();
                let txs = self.active_transmissions(now);
                let Ok(mw) = prop.interference_plus_noise_mw(ch, pos, Some(&id), txs, &map) else {
                    continue;
                };
                let noise = if sigma > 0.0 {
                    sigma * self.sensor_rng.next_standard_normal()
                } else {
                    0.0
                };
                out.push(SensingReport {
                    cell: id.clone(),
                    channel: ch,
                    interference_dbm: mw_to_dbm(mw) + noise,
                    measured_at: now,
                    delivered_at: now,
                });
            }
        }
        out
    }

    pub fn ingest(&mut self, r: &SensingReport) {
        let Some(i) = self.cell_index(&r.cell) else { return };
        let _ = self.coverage.ingest(r, self.cells[i].cfg.position);
        let beta = self.params.beta_dca;
        let e = self.tables.entry((i, r.channel)).or_insert(TableEntry {
            mw: None,
            reinit_from: None,
        });
        let new = dbm_to_mw(r.interference_dbm);
        match (e.mw, e.reinit_from) {
            (_, Some(from)) if r.measured_at < from => {}
            (_, Some(_)) | (None, _) => {
                e.mw = Some(new);
                e.reinit_from = None;
            }
            (Some(old), None) => e.mw = Some(beta * old + (1.0 - beta) * new),
        }
    }

    pub fn table_dbm(&self, cell: usize, ch: ChannelId) -> Option<f64> {
        self.tables.get(&(cell, ch)).and_then(|e| e.mw).map(mw_to_dbm)
    }

    fn dca_cell(&self, i: usize, now: SimTime) -> DcaCell {
        let c = &self.cells[i];
        let admissible = self.cell_admissible(i, now);
        DcaCell {
            id: c.cfg.id.clone(),
            current: c.assigned.clone(),
            table: admissible
                .iter()
                .filter_map(|ch| self.tables.get(&(i, *ch)).and_then(|e| e.mw).map(|v| (*ch, v)))
                .collect(),
            admissible,
            max_channels: c.cfg.max_channels,
        }
    }

    /// Nominal power cell `victim` receives from `mover`, mW.
    pub fn coupling_mw(&self, victim: usize, mover: usize) -> f64 {
        let a = self.cells[mover].cfg.position;
        let b = self.cells[victim].cfg.position;
        dbm_to_mw(self.max_eirp(mover) - pathloss_db(a, b, &self.prop.params, None))
    }

    /// Snapshot of the DCA inputs, one entry per cell.
    pub fn dca_inputs(&self, now: SimTime) -> Vec<DcaCell> {
        (0..self.cells.len()).map(|i| self.dca_cell(i, now)).collect()
    }

    /// Runs one DCA pass (and the muting plan when enabled). The returned
    /// effect, if any, must be applied after the decision latency.
    pub fn dca_tick(&mut self, now: SimTime) -> (DcaResult, Option<Effect>) {
        let inputs = self.dca_inputs(now);
        let map = self.map.clone();
        let overlap = |a: ChannelId, b: ChannelId| match (map.channel(a), map.channel(b)) {
            (Ok(x), Ok(y)) => channels_overlap(x, y),
            _ => false,
        };
        let result = dca_step(&inputs, &|v, m| self.coupling_mw(v, m), &overlap);
        for (i, table) in result.tables.iter().enumerate() {
            for (ch, v) in table {
                if let Some(e) = self.tables.get_mut(&(i, *ch)) {
                    e.mw = Some(*v);
                }
            }
        }
        let muting = if self.params.icic.enabled {
            let mut planned: Vec<BTreeSet<ChannelId>> = self.cells.iter().map(|c| c.assigned.clone()).collect();
            for r in &result.reassignments {
                if let Some(i) = self.cell_index(&r.cell) {
                    planned[i] = r.to.clone();
                }
            }
            let th = self.params.icic.coupling_threshold_dbm;
            let plan = plan_muting(&planned, &|a, b| mw_to_dbm(self.coupling_mw(a, b)) >= th);
            (plan != self.muting).then_some(plan)
        } else {
            None
        };
        let effect = (!result.reassignments.is_empty() || muting.is_some()).then(|| Effect::Assign {
            reassignments: result.reassignments.clone(),
            muting,
        });
        (result, effect)
    }

    // ---- sessions ----

    fn rsrp_dbm(&self, cell: usize, at: Point) -> f64 {
        let c = &self.cells[cell];
        let shadow = self.prop.shadowing.as_ref().map(|s| s.draw_db(&c.cfg.id, at));
        self.max_eirp(cell) - pathloss_db(c.cfg.position, at, &self.prop.params, shadow)
    }

    fn rsrp_map(&self, op: &OperatorId, at: Point) -> BTreeMap<usize, f64> {
        (0..self.cells.len())
            .filter(|i| self.cells[*i].cfg.operators.contains(op))
            .map(|i| (i, self.rsrp_dbm(i, at)))
            .collect()
    }

    fn ranked_channels(&self, op: &OperatorId, qos: &QosClass, cell: usize, now: SimTime) -> Vec<ChannelId> {
        let cands: Vec<Candidate> = self.cells[cell]
            .assigned
            .iter()
            .filter_map(|ch| self.map.channel(*ch).ok())
            .map(|ch| Candidate {
                channel: ch.id,
                regime: ch.regime.clone(),
                load: self.load.get(&(cell, ch.id)).copied().unwrap_or(0.0),
                admissible: self.session_may_use(op, cell, ch.id, now),
            })
            .collect();
        let mut r = select_band_rat(qos, op, &cands);
        r.truncate(self.params.max_aggregated_channels);
        r
    }

    fn sinr_at(&mut self, cell: usize, ch: ChannelId, at: Point, now: SimTime) -> f64 {
        let id = self.cells[cell].cfg.id.clone();
        let map = self.map.clone();
        let prop = self.prop.clone();
        let muted: Vec<(String, ChannelId)> = if self.muting.is_empty() {
            Vec::new()
        } else {
            self.muting
                .keys()
                .filter(|(c, x)| is_muted(&self.muting, *c, *x, now.0))
                .map(|(c, x)| (self.cells[*c].cfg.id.clone(), *x))
                .collect()
        };
        let txs = self.active_transmissions(now);
        let Some(desired) = txs.iter().find(|t| t.cell == id && t.channel == ch) else {
            return f64::NEG_INFINITY;
        };
        let s = dbm_to_mw(prop.rx_power_dbm(desired, at));
        let filtered: Vec<Transmission>;
        let others: &[Transmission] = if muted.is_empty() {
            txs
        } else {
            filtered = txs
                .iter()
                .filter(|t| !muted.iter().any(|(c, x)| *c == t.cell && *x == t.channel))
                .cloned()
                .collect();
            &filtered
        };
        match prop.interference_plus_noise_mw(ch, at, Some(&id), others, &map) {
            Ok(n) => mw_to_dbm(s / n),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn session_sinr(&mut self, sid: SessionId, cell: usize, ch: ChannelId, at: Point, now: SimTime) -> f64 {
        let key = self.epoch * 2 + if self.muting.is_empty() { 0 } else { now.0 % 2 };
        if let Some((k, v)) = self.sinr_cache.get(&(sid, ch)) {
            if *k == key {
                return *v;
            }
        }
        let v = self.sinr_at(cell, ch, at, now);
        self.sinr_cache.insert((sid, ch), (key, v));
        v
    }

    /// Fraction of (cell, channel) already promised to GBR sessions.
    fn gbr_load(&mut self, cell: usize, ch: ChannelId, now: SimTime) -> f64 {
        let bw = self.map.channel(ch).map(|c| c.bandwidth_hz()).unwrap_or(0.0);
        let users: Vec<(SessionId, Point, f64, usize)> = self
            .sessions
            .values()
            .filter(|s| s.serving == cell && s.channels.contains(&ch))
            .filter_map(|s| match s.qos {
                QosClass::Gbr { rate_bps } => Some((s.id, s.position, rate_bps, s.channels.len())),
                _ => None,
            })
            .collect();
        let mut load = 0.0;
        for (sid, pos, rate, n) in users {
            let full = bw * spectral_efficiency(self.session_sinr(sid, cell, ch, pos, now));
            load += if full > 0.0 { rate / n as f64 / full } else { 1.0 };
        }
        load.min(1.0)
    }

    /// Admits an arrival: best-RSRP cell of its operator, ranked channels,
    /// GBR capacity check.
    pub fn admit(
        &mut self,
        a: &Arrival,
        demand: &Demand,
        mobility: &Mobility,
        region: &Polygon,
        now: SimTime,
    ) -> Result<SessionId, CrrmError> {
        let qos = QosClass::from(demand);
        let rsrp = self.rsrp_map(&a.operator, a.position);
        let best = rsrp
            .iter()
            .fold(None::<(usize, f64)>, |acc, (c, p)| match acc {
                Some((_, bp)) if bp >= *p => acc,
                _ => Some((*c, *p)),
            })
            .filter(|(_, p)| *p >= self.params.min_rsrp_dbm);
        let Some((cell, _)) = best else {
            return Err(CrrmError::NoCoverage {
                operator: a.operator.clone(),
                min_rsrp_dbm: self.params.min_rsrp_dbm,
            });
        };
        let channels = self.ranked_channels(&a.operator, &qos, cell, now);
        let sid = SessionId(self.next_session);
        if let QosClass::Gbr { rate_bps } = qos {
            let mut cap = 0.0;
            for ch in &channels {
                let bw = self.map.channel(*ch).map(|c| c.bandwidth_hz()).unwrap_or(0.0);
                let se = spectral_efficiency(self.sinr_at(cell, *ch, a.position, now));
                cap += bw * se * (1.0 - self.gbr_load(cell, *ch, now));
            }
            if cap < rate_bps {
                return Err(CrrmError::AdmissionDenied {
                    needed_bps: rate_bps,
                    capacity_bps: cap,
                });
            }
        }
        self.next_session += 1;
        let n = self.per_op_arrivals.entry(a.operator.clone()).or_insert(0);
        let stream = format!("demand:{}:{}", a.operator, n);
        let mob_stream = format!("mobility:{}:{}", a.operator, n);
        *n += 1;
        let walker = match mobility {
            Mobility::Static => None,
            Mobility::RandomWaypoint { speed_mps, pause_s } => {
                let mut rng = RngStream::new(self.seed, &mob_stream);
                let w = Walker::new(a.position, *speed_mps, *pause_s, self.tti_ms, region, &mut rng);
                Some((w, region.clone(), rng))
            }
        };
        self.sessions.insert(
            sid,
            Session {
                id: sid,
                operator: a.operator.clone(),
                qos,
                position: a.position,
                walker,
                demand: DemandProcess::new(demand.clone(), self.tti_ms, RngStream::new(self.seed, &stream)),
                departure: a.departure,
                serving: cell,
                channels,
                fifo: VecDeque::new(),
                buffered: 0,
                served: 0,
                delay_bit_tti: 0,
                tracker: HandoverTracker::default(),
            },
        );
        Ok(sid)
    }

    fn refresh_sessions(&mut self, now: SimTime) {
        let ids: Vec<SessionId> = self.sessions.keys().copied().collect();
        for id in ids {
            let s = &self.sessions[&id];
            let ch = self.ranked_channels(&s.operator.clone(), &s.qos.clone(), s.serving, now);
            self.sessions.get_mut(&id).expect("listed").channels = ch;
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn session_channels(&self, id: SessionId) -> Option<&[ChannelId]> {
        self.sessions.get(&id).map(|s| s.channels.as_slice())
    }

    /// Offered demand for this TTI; departed sessions stop offering and are
    /// retired once their buffer drains.
    pub fn traffic_tick(&mut self, now: SimTime, obs: &mut dyn Observer) {
        let mut done = Vec::new();
        for s in self.sessions.values_mut() {
            if now < s.departure {
                let bits = s.demand.next_bits();
                if bits > 0 {
                    s.fifo.push_back((now, bits));
                    s.buffered += bits;
                }
                obs.offered(now, s.id, &s.operator, bits);
                let e = self.sla_window.entry(s.operator.clone()).or_default();
                e.1 += bits;
            } else if s.buffered == 0 {
                done.push(s.id);
            }
        }
        for id in done {
            if let Some(s) = self.sessions.remove(&id) {
                self.finished.push(summarize(&s));
                self.sinr_cache.retain(|(sid, _), _| *sid != id);
            }
        }
    }

    /// One scheduling round over every (cell, carrier).
    pub fn schedule_tti(&mut self, now: SimTime, obs: &mut dyn Observer) {
        let tti_s = self.tti_s();
        let mut served_now: BTreeMap<SessionId, u64> = BTreeMap::new();
        for cell in 0..self.cells.len() {
            let chans: Vec<ChannelId> = self.cells[cell].assigned.iter().copied().collect();
            for ch in chans {
                let mut frac_used = 0.0;
                if !is_muted(&self.muting, cell, ch, now.0) {
                    frac_used = self.schedule_carrier(cell, ch, now, tti_s, &mut served_now, obs);
                }
                let l = self.load.entry((cell, ch)).or_insert(0.0);
                *l = 0.9 * *l + 0.1 * frac_used;
            }
        }
        for s in self.sessions.values() {
            let got = served_now.get(&s.id).copied();
            if s.buffered > 0 || got.is_some() {
                obs.session_tti(&SessionTti {
                    tti: now,
                    session: s.id,
                    operator: s.operator.clone(),
                    served_bits: got.unwrap_or(0),
                    stalled: s.channels.is_empty(),
                });
            }
        }
    }

    fn schedule_carrier(
        &mut self,
        cell: usize,
        ch: ChannelId,
        now: SimTime,
        tti_s: f64,
        served_now: &mut BTreeMap<SessionId, u64>,
        obs: &mut dyn Observer,
    ) -> f64 {
        let bw = self.map.channel(ch).map(|c| c.bandwidth_hz()).unwrap_or(0.0);
        let users: Vec<SessionId> = self
            .sessions
            .values()
            .filter(|s| s.serving == cell && s.buffered > 0 && s.channels.contains(&ch))
            .map(|s| s.id)
            .collect();
        if users.is_empty() {
            return 0.0;
        }
        // full-allocation bits and SINR per user
        let mut full = Vec::with_capacity(users.len());
        for id in &users {
            let pos = self.sessions[id].position;
            let sinr = self.session_sinr(*id, cell, ch, pos, now);
            full.push((sinr, full_allocation_bits(bw, sinr, tti_s)));
        }
        let mut frac = vec![0.0; users.len()];
        let mut left = 1.0;
        // GBR first, up to their per-TTI rate
        for (k, id) in users.iter().enumerate() {
            let s = &self.sessions[id];
            if let QosClass::Gbr { rate_bps } = s.qos {
                let want = (rate_bps * tti_s).min(s.buffered as f64);
                let owed = (want - *served_now.get(id).unwrap_or(&0) as f64).max(0.0);
                if full[k].1 > 0.0 && left > 0.0 {
                    let f = (owed / full[k].1).min(left);
                    frac[k] = f;
                    left -= f;
                }
            }
        }
        // weighted proportional fair on what remains
        let claimants: Vec<Claimant> = users
            .iter()
            .enumerate()
            .map(|(k, id)| {
                let s = &self.sessions[id];
                let already = frac[k] * full[k].1;
                let backlog = (s.buffered as f64 - already).max(0.0);
                let w = self.params.operator_weights.get(&s.operator).copied().unwrap_or(1.0)
                    * self.multipliers.get(&s.operator).copied().unwrap_or(1.0);
                Claimant {
                    weight: w,
                    cap: if full[k].1 > 0.0 { backlog / full[k].1 } else { 0.0 },
                }
            })
            .collect();
        let extra = water_fill(left, &claimants);
        let mut used = 0.0;
        for (k, id) in users.iter().enumerate() {
            let f = frac[k] + extra[k];
            if f <= 0.0 {
                continue;
            }
            used += f;
            let s = self.sessions.get_mut(id).expect("listed");
            let bits = ((f * full[k].1).floor() as u64).min(s.buffered);
            if bits == 0 {
                continue;
            }
            dequeue(s, bits, now);
            *served_now.entry(*id).or_insert(0) += bits;
            let e = self.sla_window.entry(s.operator.clone()).or_default();
            e.0 += bits;
            obs.allocation(&AllocationRecord {
                tti: now,
                cell: self.cells[cell].cfg.id.clone(),
                channel: ch,
                session: *id,
                operator: s.operator.clone(),
                fraction: f,
                bits,
                bandwidth_hz: bw,
                sinr_db: full[k].0,
                tti_s,
            });
        }
        used
    }

    /// Moves UEs and runs the time-to-trigger check. Returns handovers.
    pub fn mobility_tick(&mut self, now: SimTime, dt_tti: u64) -> Vec<(SessionId, String, String)> {
        let tti_ms = self.tti_ms;
        let mut moved = false;
        for s in self.sessions.values_mut() {
            if let Some((w, region, rng)) = s.walker.as_mut() {
                w.step(dt_tti, tti_ms, region, rng);
                if w.position != s.position {
                    s.position = w.position;
                    moved = true;
                }
            }
        }
        if moved {
            self.sinr_cache.clear();
        }
        let mut out = Vec::new();
        let ids: Vec<SessionId> = self.sessions.keys().copied().collect();
        for id in ids {
            let (op, pos, serving) = {
                let s = &self.sessions[&id];
                if s.walker.is_none() {
                    continue;
                }
                (s.operator.clone(), s.position, s.serving)
            };
            let rsrp = self.rsrp_map(&op, pos);
            let (h, t) = (self.params.hysteresis_db, self.params.ttt_tti);
            let s = self.sessions.get_mut(&id).expect("listed");
            if let Some(target) = s.tracker.observe(&rsrp, serving, h, t, dt_tti) {
                s.serving = target;
                let qos = s.qos.clone();
                let ch = self.ranked_channels(&op, &qos, target, now);
                self.sessions.get_mut(&id).expect("listed").channels = ch;
                self.sinr_cache.retain(|(sid, _), _| *sid != id);
                self.handovers += 1;
                out.push((
                    id,
                    self.cells[serving].cfg.id.clone(),
                    self.cells[target].cfg.id.clone(),
                ));
            }
        }
        out
    }

    /// Closes an SLA window and derives next window's multipliers.
    pub fn close_sla_window(&mut self, window_tti: u64) -> SlaWindow {
        let window_s = window_tti as f64 * self.tti_s();
        let mut w = SlaWindow::default();
        for (op, base_bps) in &self.params.sla_baselines_bps {
            let (got, offered) = self.sla_window.get(op).copied().unwrap_or((0, 0));
            w.achieved_bits.insert(op.clone(), got);
            w.baseline_bits
                .insert(op.clone(), (base_bps * window_s).min(offered as f64));
        }
        self.sla_window.clear();
        if self.pooled {
            self.multipliers = enforce_mocn_sla(&w, self.params.w_max);
        }
        w
    }

    /// Per-session (offered, served, buffered) from the session's own
    /// demand generator, service counter and queue.
    pub fn conservation_snapshot(&self) -> Vec<(SessionId, OperatorId, u64, u64, u64)> {
        let mut v: Vec<_> = self
            .sessions
            .values()
            .map(|s| {
                (
                    s.id,
                    s.operator.clone(),
                    s.demand.offered_total(),
                    s.served,
                    s.fifo.iter().map(|(_, b)| *b).sum(),
                )
            })
            .collect();
        v.extend(
            self.finished
                .iter()
                .map(|f| (f.id, f.operator.clone(), f.offered_bits, f.served_bits, f.buffered_bits)),
        );
        v.sort_by_key(|x| x.0);
        v
    }

    pub fn session_summaries(&self) -> Vec<SessionSummary> {
        let mut v = self.finished.clone();
        v.extend(self.sessions.values().map(summarize));
        v.sort_by_key(|s| s.id);
        v
    }
}

fn dequeue(s: &mut Session, mut bits: u64, now: SimTime) {
    s.buffered -= bits;
    s.served += bits;
    while bits > 0 {
        let Some(front) = s.fifo.front_mut() else { break };
        let take = front.1.min(bits);
        s.delay_bit_tti += u128::from(take) * u128::from(now.0 - front.0 .0);
        front.1 -= take;
        bits -= take;
        if front.1 == 0 {
            s.fifo.pop_front();
        }
    }
}

fn summarize(s: &Session) -> SessionSummary {
    SessionSummary {
        id: s.id,
        operator: s.operator.clone(),
        offered_bits: s.demand.offered_total(),
        served_bits: s.served,
        buffered_bits: s.buffered,
        mean_delay_tti: (s.served > 0).then(|| s.delay_bit_tti as f64 / s.served as f64),
    }
}
