//! KPI accumulation during the run and verdicts after it.

mod compare;
mod report;
mod scan;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crrm::{AllocationRecord, Observer, SessionId, SessionTti};
use crate::engine::SimTime;
use crate::radio::SE_CAP;
use crate::spectrum::OperatorId;

pub use compare::{compare, load_summary, CompareError, Relation};
pub use report::{write_outputs, Report, Summary, VerdictEntry, SUMMARY_SCHEMA, TOOL_VERSION};
pub use scan::{
    reaction_times, scan_conservation, scan_evacuation_compliance, scan_evacuation_safety, scan_exclusivity,
    scan_se_cap, scan_sla_floor, ReactionKind, ReactionTimeRecord, Status, Verdict,
};

/// Nearest-rank percentile, `p` in [0, 1]. `None` for no samples.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Offered {
        operator: OperatorId,
        bits: u64,
    },
    Goodput {
        operator: OperatorId,
        bits: u64,
    },
    Sinr {
        operator: OperatorId,
        db: f64,
    },
    /// A backlogged session got nothing this TTI.
    Outage {
        operator: OperatorId,
        session: SessionId,
    },
    Blocked {
        operator: OperatorId,
    },
    Handover,
    Evacuation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OperatorKpi {
    pub offered_bits: u64,
    pub goodput_bits: u64,
    pub sinr_samples: u64,
    /// Mean of the per-allocation SINR samples in dB.
    pub sinr_mean_db: Option<f64>,
    pub sinr_p5_db: Option<f64>,
    pub sinr_p50_db: Option<f64>,
    pub sinr_p95_db: Option<f64>,
    /// Session-TTIs with a backlog or a service, the outage denominator.
    pub active_session_ttis: u64,
    pub outage_ttis: u64,
    pub blocked: u64,
}

impl OperatorKpi {
    pub fn outage_ratio(&self) -> f64 {
        if self.active_session_ttis == 0 {
            0.0
        } else {
            self.outage_ttis as f64 / self.active_session_ttis as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct KpiWindow {
    pub index: u64,
    pub start_tti: u64,
    /// Exclusive.
    pub end_tti: u64,
    pub operators: BTreeMap<OperatorId, OperatorKpi>,
    pub session_outage_ttis: BTreeMap<SessionId, u64>,
    pub handovers: u64,
    pub evacuations: u64,
}

/// Spectral-efficiency audit over every logged allocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SeAudit {
    pub allocations: u64,
    pub max_se: f64,
    pub violations: u64,
}

/// Single-owner accumulator fed by the scheduler. Samples go to the open
/// window whatever their TTI; windows close only on `close_window`.
pub struct KpiRecorder {
    operators: Vec<OperatorId>,
    window_tti: u64,
    current: KpiWindow,
    sinr: BTreeMap<OperatorId, Vec<f64>>,
    done: Vec<KpiWindow>,
    se: SeAudit,
}

impl KpiRecorder {
    pub fn new(operators: Vec<OperatorId>, window_tti: u64, horizon_tti: u64) -> Self {
        let mut r = KpiRecorder {
            operators,
            window_tti: window_tti.max(1),
            current: KpiWindow::default(),
            sinr: BTreeMap::new(),
            done: Vec::new(),
            se: SeAudit::default(),
        };
        r.open(0, horizon_tti);
        r
    }

    fn open(&mut self, index: u64, horizon: u64) {
        let start = index * self.window_tti;
        self.current = KpiWindow {
            index,
            start_tti: start,
            end_tti: (start + self.window_tti).min(horizon.max(start + 1)),
            operators: self
                .operators
                .iter()
                .map(|o| (o.clone(), OperatorKpi::default()))
                .collect(),
            ..KpiWindow::default()
        };
        self.sinr.clear();
    }

    fn op(&mut self, o: &OperatorId) -> &mut OperatorKpi {
        self.current.operators.entry(o.clone()).or_default()
    }

    pub fn record(&mut self, sample: Sample, _tti: SimTime) {
        match sample {
            Sample::Offered { operator, bits } => self.op(&operator).offered_bits += bits,
            Sample::Goodput { operator, bits } => self.op(&operator).goodput_bits += bits,
            Sample::Sinr { operator, db } => self.sinr.entry(operator).or_default().push(db),
            Sample::Outage { operator, session } => {
                self.op(&operator).outage_ttis += 1;
                *self.current.session_outage_ttis.entry(session).or_insert(0) += 1;
            }
            Sample::Blocked { operator } => self.op(&operator).blocked += 1,
            Sample::Handover => self.current.handovers += 1,
            Sample::Evacuation => self.current.evacuations += 1,
        }
    }

    /// Closes the open window at `last` (its final TTI) and opens the next.
    pub fn close_window(&mut self, last: SimTime) {
        for (op, mut v) in std::mem::take(&mut self.sinr) {
            v.sort_by(f64::total_cmp);
            let k = self.op(&op);
            k.sinr_samples = v.len() as u64;
            k.sinr_mean_db = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            k.sinr_p5_db = percentile(&v, 0.05);
            k.sinr_p50_db = percentile(&v, 0.50);
            k.sinr_p95_db = percentile(&v, 0.95);
        }
        self.current.end_tti = last.0 + 1;
        let next = self.current.index + 1;
        let w = std::mem::take(&mut self.current);
        self.done.push(w);
        self.open(next, u64::MAX);
    }

    pub fn windows(&self) -> &[KpiWindow] {
        &self.done
    }

    pub fn se_audit(&self) -> &SeAudit {
        &self.se
    }

    pub fn into_parts(self) -> (Vec<KpiWindow>, SeAudit) {
        (self.done, self.se)
    }
}

impl Observer for KpiRecorder {
    fn offered(&mut self, tti: SimTime, _session: SessionId, operator: &OperatorId, bits: u64) {
        self.record(
            Sample::Offered {
                operator: operator.clone(),
                bits,
            },
            tti,
        );
    }

    fn allocation(&mut self, r: &AllocationRecord) {
        let denom = r.fraction * r.bandwidth_hz * r.tti_s;
        let se = if denom > 0.0 {
            r.bits as f64 / denom
        } else {
            f64::INFINITY
        };
        self.se.allocations += 1;
        self.se.max_se = self.se.max_se.max(se);
        if se > SE_CAP * (1.0 + 1e-9) {
            self.se.violations += 1;
        }
        self.record(
            Sample::Goodput {
                operator: r.operator.clone(),
                bits: r.bits,
            },
            r.tti,
        );
        self.record(
            Sample::Sinr {
                operator: r.operator.clone(),
                db: r.sinr_db,
            },
            r.tti,
        );
    }

    fn session_tti(&mut self, r: &SessionTti) {
        self.op(&r.operator).active_session_ttis += 1;
        if r.served_bits == 0 {
            self.record(
                Sample::Outage {
                    operator: r.operator.clone(),
                    session: r.session,
                },
                r.tti,
            );
        }
    }
}
