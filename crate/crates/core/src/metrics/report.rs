use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::percentile;
use super::scan::*;
use crate::sim::{LogEvent, RunOutput};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SUMMARY_SCHEMA: &str = "lsasim-summary/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub status: Status,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<String>,
}

/// The structured verdict document written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub tool_version: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub horizon_tti: u64,
    pub pass: bool,
    pub verdicts: BTreeMap<String, VerdictEntry>,
    pub metrics: BTreeMap<String, f64>,
}

pub struct Report {
    pub verdicts: Vec<Verdict>,
    pub reactions: Vec<ReactionTimeRecord>,
    pub summary: Summary,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Report {
    pub fn build(out: &RunOutput) -> Report {
        let verdicts = vec![
            scan_exclusivity(out),
            scan_evacuation_safety(out),
            scan_evacuation_compliance(out),
            scan_conservation(out),
            scan_sla_floor(out),
            scan_se_cap(out),
        ];
        let reactions = reaction_times(out);
        let metrics = Self::metrics(out, &reactions);
        let s = &out.scenario;
        let summary = Summary {
            schema: SUMMARY_SCHEMA.into(),
            tool_version: TOOL_VERSION.into(),
            scenario: s.name.clone(),
            scenario_sha256: s.content_hash(),
            seed: s.seed,
            horizon_tti: s.horizon_tti,
            pass: verdicts.iter().all(|v| v.status != Status::Fail),
            verdicts: verdicts
                .iter()
                .map(|v| {
                    (
                        v.name.to_string(),
                        VerdictEntry {
                            status: v.status,
                            detail: v.detail.clone(),
                            findings: v.findings.clone(),
                        },
                    )
                })
                .collect(),
            metrics,
        };
        Report {
            verdicts,
            reactions,
            summary,
        }
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.verdicts
            .iter()
            .filter(|v| v.status == Status::Fail)
            .map(|v| v.name)
            .collect()
    }

    fn metrics(out: &RunOutput, reactions: &[ReactionTimeRecord]) -> BTreeMap<String, f64> {
        let s = &out.scenario;
        let secs = s.horizon_tti as f64 * s.tti_ms / 1000.0;
        let mut m = BTreeMap::new();
        for op in &s.operators {
            let (offered, got, blocked) = out
                .kpi
                .iter()
                .filter_map(|w| w.operators.get(op))
                .fold((0u64, 0u64, 0u64), |(o, g, b), k| {
                    (o + k.offered_bits, g + k.goodput_bits, b + k.blocked)
                });
            m.insert(format!("offered_bps.{op}"), offered as f64 / secs);
            m.insert(format!("goodput_bps.{op}"), got as f64 / secs);
            m.insert(format!("blocked.{op}"), blocked as f64);
            let mut delays: Vec<f64> = out
                .sessions
                .iter()
                .filter(|x| &x.operator == op)
                .filter_map(|x| x.mean_delay_tti)
                .collect();
            delays.sort_by(f64::total_cmp);
            m.insert(
                format!("sessions.{op}"),
                out.sessions.iter().filter(|x| &x.operator == op).count() as f64,
            );
            if let Some(d) = mean(&delays) {
                m.insert(format!("delay_mean_tti.{op}"), d);
            }
            if let Some(d) = percentile(&delays, 0.95) {
                m.insert(format!("delay_p95_tti.{op}"), d);
            }
        }
        let count = |pred: fn(&LogEvent) -> bool| out.log.records.iter().filter(|r| pred(&r.event)).count() as f64;
        m.insert(
            "grants_issued".into(),
            count(|e| matches!(e, LogEvent::GrantIssued { .. })),
        );
        m.insert(
            "grants_rejected".into(),
            count(|e| matches!(e, LogEvent::GrantRejected { .. })),
        );
        m.insert(
            "suspensions".into(),
            count(|e| matches!(e, LogEvent::SuspendOrdered { .. })),
        );
        m.insert(
            "evacuations_confirmed".into(),
            count(|e| matches!(e, LogEvent::EvacuationConfirmed { .. })),
        );
        m.insert(
            "reinstatements".into(),
            count(|e| matches!(e, LogEvent::Reinstated { .. })),
        );
        m.insert("handovers".into(), count(|e| matches!(e, LogEvent::Handover { .. })));
        m.insert(
            "reassignments".into(),
            count(|e| matches!(e, LogEvent::Reassigned { .. })),
        );
        m.insert("dca_ticks".into(), count(|e| matches!(e, LogEvent::DcaTick { .. })));
        m.insert("pooled".into(), if out.pooled { 1.0 } else { 0.0 });
        m.insert("allocations".into(), out.se_audit.allocations as f64);
        m.insert("max_se_bps_hz".into(), out.se_audit.max_se);
        m.insert("tx_intervals".into(), out.log.tx.len() as f64);

        for (kind, key) in [
            (ReactionKind::Interference, "reaction"),
            (ReactionKind::Incumbent, "incumbent_reaction"),
        ] {
            let rs: Vec<&ReactionTimeRecord> = reactions.iter().filter(|r| r.kind == kind).collect();
            let done: Vec<f64> = rs.iter().filter_map(|r| r.reaction_tti()).map(|x| x as f64).collect();
            m.insert(format!("{key}_count"), done.len() as f64);
            m.insert(format!("{key}_unanswered"), (rs.len() - done.len()) as f64);
            if let Some(x) = mean(&done) {
                m.insert(format!("{key}_mean_tti"), x);
                m.insert(format!("{key}_max_tti"), done.iter().copied().fold(0.0, f64::max));
            }
        }
        m
    }
}

fn header(out: &RunOutput) -> String {
    format!(
        "# lsasim {TOOL_VERSION} scenario_sha256={} seed={}\n",
        out.scenario.content_hash(),
        out.scenario.seed
    )
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per window and operator. The SINR percentile and bit-count
/// columns follow the fixed leading columns.
pub fn kpi_csv(out: &RunOutput) -> String {
    let mut s = header(out);
    s.push_str("window_end_tti,operator,goodput_bps,sla_baseline_bps,outage_ratio,mean_sinr_db,handover_count,evac_count,evac_violations,sinr_p5_db,sinr_p50_db,sinr_p95_db,sinr_samples,offered_bits,goodput_bits,blocked\n");
    let tti_s = out.scenario.tti_ms / 1000.0;
    let violations = evac_violation_ttis(out);
    for w in &out.kpi {
        let secs = (w.end_tti - w.start_tti) as f64 * tti_s;
        let late = violations
            .iter()
            .filter(|t| (w.start_tti..w.end_tti).contains(t))
            .count();
        for (op, k) in &w.operators {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                w.end_tti,
                op,
                k.goodput_bits as f64 / secs,
                opt(out.scenario.crrm.sla_baselines_bps.get(op).copied()),
                k.outage_ratio(),
                opt(k.sinr_mean_db),
                w.handovers,
                w.evacuations,
                late,
                opt(k.sinr_p5_db),
                opt(k.sinr_p50_db),
                opt(k.sinr_p95_db),
                k.sinr_samples,
                k.offered_bits,
                k.goodput_bits,
                k.blocked
            );
        }
    }
    s
}

/// Deadlines of suspend orders not confirmed by then.
fn evac_violation_ttis(out: &RunOutput) -> Vec<u64> {
    let recs = &out.log.records;
    recs.iter()
        .enumerate()
        .filter_map(|(i, r)| match &r.event {
            LogEvent::SuspendOrdered { grant, deadline } => {
                let on_time = recs[i + 1..].iter().any(|x| {
                    x.t <= *deadline && matches!(&x.event, LogEvent::EvacuationConfirmed { grant: g, .. } if g == grant)
                });
                (!on_time).then_some(*deadline)
            }
            _ => None,
        })
        .collect()
}

/// One row per Suspend order, confirmed or not.
pub fn evac_ledger_csv(out: &RunOutput) -> String {
    let mut s = header(out);
    s.push_str("grant_id,ordered_at,deadline,confirmed_at,compliant\n");
    let recs = &out.log.records;
    for (i, r) in recs.iter().enumerate() {
        let LogEvent::SuspendOrdered { grant, deadline } = &r.event else {
            continue;
        };
        let confirmed = recs[i + 1..].iter().find_map(|x| match &x.event {
            LogEvent::EvacuationConfirmed { grant: g, .. } if g == grant => Some(x.t),
            _ => None,
        });
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            grant,
            r.t,
            deadline,
            confirmed.map(|c| c.to_string()).unwrap_or_default(),
            confirmed.is_some_and(|c| c <= *deadline)
        );
    }
    s
}

/// Final coverage estimates; `tti` is each entry's last update.
pub fn coverage_csv(out: &RunOutput) -> String {
    let mut s = header(out);
    s.push_str("tti,grid_x,grid_y,channel_id,interference_dbm\n");
    for r in &out.coverage {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.updated.0, r.grid_x, r.grid_y, r.channel, r.interference_dbm
        );
    }
    s
}

pub fn sessions_csv(out: &RunOutput) -> String {
    let mut s = header(out);
    s.push_str("session,operator,offered_bits,served_bits,buffered_bits,mean_delay_tti\n");
    for x in &out.sessions {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            x.id.0,
            x.operator,
            x.offered_bits,
            x.served_bits,
            x.buffered_bits,
            opt(x.mean_delay_tti)
        );
    }
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    scenario: &'a str,
    scenario_path: Option<&'a str>,
    scenario_sha256: String,
    seed: u64,
    seed_override: bool,
    output_dir: String,
    files: BTreeMap<&'a str, String>,
}

/// Writes the report files into `dir` (created if missing) and returns the
/// names written.
pub fn write_outputs(
    out: &RunOutput,
    report: &Report,
    dir: &Path,
    scenario_path: Option<&str>,
    seed_override: bool,
) -> std::io::Result<Vec<&'static str>> {
    fs::create_dir_all(dir)?;
    let mut summary = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    summary.push('\n');
    let files: Vec<(&'static str, String)> = vec![
        ("kpi.csv", kpi_csv(out)),
        ("evac_ledger.csv", evac_ledger_csv(out)),
        ("coverage.csv", coverage_csv(out)),
        ("sessions.csv", sessions_csv(out)),
        ("summary.json", summary),
    ];
    let mut hashes = BTreeMap::new();
    for (name, body) in &files {
        fs::write(dir.join(name), body)?;
        hashes.insert(*name, hex::encode(Sha256::digest(body.as_bytes())));
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION,
        scenario: &out.scenario.name,
        scenario_path,
        scenario_sha256: out.scenario.content_hash(),
        seed: out.scenario.seed,
        seed_override,
        output_dir: dir.display().to_string(),
        files: hashes,
    };
    let mut m = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    m.push('\n');
    fs::write(dir.join("manifest.json"), m)?;
    let mut names: Vec<&'static str> = files.iter().map(|(n, _)| *n).collect();
    names.push("manifest.json");
    Ok(names)
}
