//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Oracles here are computed from scenario documents
//! and the raw event log, never from simulator internals.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use serde_json::Value;

use lsasim::crrm::{is_local_optimum, DcaCell, InterfaceMode};
use lsasim::engine::SimTime;
use lsasim::metrics::{Report, Status};
use lsasim::radio::{
    pathloss_db, sinr_db, sinr_from_powers_db, CoverageMap, Propagation, PropagationParams, SensingReport,
    Transmission, SE_CAP,
};
use lsasim::scenario::{bundled, parse_scenario, random_scenario, RandomParams, Scenario, BUNDLED};
use lsasim::sim::{run_scenario, LogEvent, RunOutput};
use lsasim::spectrum::{ChannelId, OperatorId, Point};

const RANDOM_RUNS: u64 = 1000;
const EVACUATION_DEADLINE_TTI: u64 = 100;
const DCA_MAX_STEPS: usize = 20;
const SLA_FRACTION: f64 = 0.95;
const MAX_LOAD_OF_POOLED_CAPACITY: f64 = 0.60;
const MUX_SEEDS: u64 = 10;
const MUX_MIN_WINS: usize = 8;
const SINR_LINEAR_REL_TOL: f64 = 1e-9;
const COVERAGE_REPORTS: usize = 100;
const COVERAGE_BETA: f64 = 0.9;
const COVERAGE_TOL_DB: f64 = 0.1;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> Scenario {
    bundled(name).expect("bundled name").expect("bundled scenario parses")
}

fn fixture(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn with_seed(mut s: Scenario, seed: u64) -> Scenario {
    s.seed = seed;
    s
}

fn run(s: Scenario) -> (RunOutput, Report) {
    let out = run_scenario(s).expect("run completes");
    let report = Report::build(&out);
    (out, report)
}

fn status(r: &Report, name: &str) -> Status {
    r.verdicts
        .iter()
        .find(|v| v.name == name)
        .expect("verdict present")
        .status
}

// ---------------------------------------------------------------------------
// Randomized safety suite, shared by exclusivity, evacuation and conservation.

struct RandomSuite {
    runs: u64,
    exclusivity_fails: Vec<u64>,
    safety_fails: Vec<u64>,
    suspends: usize,
    confirmed_on_time: usize,
    late_tx: Vec<(u64, u64)>,
    conservation_rows: usize,
    conservation_breaks: Vec<u64>,
    allocations: u64,
    se_violations: u64,
    max_se: f64,
}

/// Transmissions on a suspended grant strictly after its deadline and
/// before any reinstatement, re-derived from the log.
fn late_transmissions(out: &RunOutput) -> usize {
    let recs = &out.log.records;
    let mut n = 0;
    for (i, r) in recs.iter().enumerate() {
        let LogEvent::SuspendOrdered { grant, deadline } = &r.event else {
            continue;
        };
        let until = recs[i + 1..]
            .iter()
            .find_map(|x| match &x.event {
                LogEvent::Reinstated { grant: g } | LogEvent::Revoked { grant: g } if g == grant => Some(x.t),
                _ => None,
            })
            .unwrap_or(u64::MAX);
        n += out
            .log
            .tx
            .iter()
            .filter(|tx| tx.grant == Some(*grant) && tx.start < until && tx.end > deadline + 1)
            .count();
    }
    n
}

fn random_suite() -> RandomSuite {
    let params = RandomParams {
        evacuation_deadline_tti: EVACUATION_DEADLINE_TTI,
        ..RandomParams::default()
    };
    assert_eq!((params.cells, params.lsa_channels, params.horizon_tti), (10, 6, 10_000));
    let mut s = RandomSuite {
        runs: RANDOM_RUNS,
        exclusivity_fails: vec![],
        safety_fails: vec![],
        suspends: 0,
        confirmed_on_time: 0,
        late_tx: vec![],
        conservation_rows: 0,
        conservation_breaks: vec![],
        allocations: 0,
        se_violations: 0,
        max_se: 0.0,
    };
    for seed in 0..RANDOM_RUNS {
        let (out, report) = run(random_scenario(seed, &params));
        if status(&report, "exclusivity") == Status::Fail {
            s.exclusivity_fails.push(seed);
        }
        if status(&report, "evacuation_safety") == Status::Fail {
            s.safety_fails.push(seed);
        }
        let recs = &out.log.records;
        for (i, r) in recs.iter().enumerate() {
            let LogEvent::SuspendOrdered { grant, deadline } = &r.event else {
                continue;
            };
            s.suspends += 1;
            let on_time = recs[i + 1..].iter().any(|x| {
                x.t <= *deadline && matches!(&x.event, LogEvent::EvacuationConfirmed { grant: g, .. } if g == grant)
            });
            s.confirmed_on_time += usize::from(on_time);
        }
        let late = late_transmissions(&out);
        if late > 0 {
            s.late_tx.push((seed, late as u64));
        }
        s.conservation_rows += out.conservation.len();
        if !conserved(&out) {
            s.conservation_breaks.push(seed);
        }
        s.allocations += out.se_audit.allocations;
        s.se_violations += out.se_audit.violations;
        s.max_se = s.max_se.max(out.se_audit.max_se);
    }
    s
}

/// offered = served + buffered on every row, and the KPI goodput adds up
/// to the served bits of the final boundary.
fn conserved(out: &RunOutput) -> bool {
    if out.conservation.iter().any(|r| r.offered != r.served + r.buffered) {
        return false;
    }
    let Some(last) = out.conservation.iter().map(|r| r.tti).max() else {
        return true;
    };
    let served: u64 = out
        .conservation
        .iter()
        .filter(|r| r.tti == last)
        .map(|r| r.served)
        .sum();
    let goodput: u64 = out
        .kpi
        .iter()
        .flat_map(|w| w.operators.values())
        .map(|k| k.goodput_bits)
        .sum();
    served == goodput
}

fn exclusivity(s: &RandomSuite) -> Outcome {
    outcome(
        s.exclusivity_fails.is_empty() && s.suspends > 0,
        format!(
            "{} runs, {} suspensions exercised, scanner failures in seeds {:?}",
            s.runs, s.suspends, s.exclusivity_fails
        ),
    )
}

fn evacuation(s: &RandomSuite) -> Outcome {
    outcome(
        s.suspends > 0 && s.confirmed_on_time == s.suspends && s.late_tx.is_empty() && s.safety_fails.is_empty(),
        format!(
            "{}/{} suspends confirmed by deadline {EVACUATION_DEADLINE_TTI}; late carriers {:?}; safety scan failures {:?}",
            s.confirmed_on_time, s.suspends, s.late_tx, s.safety_fails
        ),
    )
}

// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lsasim");
    let tmp = tempfile::tempdir().unwrap();
    let files = [
        "kpi.csv",
        "evac_ledger.csv",
        "summary.json",
        "coverage.csv",
        "sessions.csv",
    ];
    let mut diffs = Vec::new();
    let mut compared = 0;
    for name in ["coastal_radar", "mocn_shared", "batch_vs_realtime"] {
        let dirs: Vec<_> = (0..2).map(|k| tmp.path().join(format!("{name}-{k}"))).collect();
        for d in &dirs {
            let st = Command::new(bin)
                .args(["run", name, "--seed", "42", "--out"])
                .arg(d)
                .output()
                .expect("cli runs");
            if !st.status.success() {
                return outcome(false, format!("{name} exited {:?}", st.status.code()));
            }
        }
        for f in files {
            let a = std::fs::read(dirs[0].join(f)).unwrap();
            let b = std::fs::read(dirs[1].join(f)).unwrap();
            compared += 1;
            if a != b {
                diffs.push(format!("{name}/{f}"));
            }
        }
    }
    outcome(
        diffs.is_empty(),
        format!("{compared} file pairs compared, differing: {diffs:?}"),
    )
}

// ---------------------------------------------------------------------------
// DCA: the oracle rebuilds the static interference field from the document.

fn doc(name: &str) -> Value {
    let text = BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1;
    serde_json::from_str(text).unwrap()
}

fn mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn dca_convergence() -> Outcome {
    let d = doc("dca_grid");
    let (pl0, n, n0) = (38.0, 3.7, -174.0);
    assert!(d.get("propagation").is_none(), "oracle assumes default propagation");
    let cells: Vec<(String, f64, f64, f64)> = d["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["id"].as_str().unwrap().to_string(),
                c["position"][0].as_f64().unwrap(),
                c["position"][1].as_f64().unwrap(),
                c["eirp_dbm"]["5G-NR"].as_f64().unwrap(),
            )
        })
        .collect();
    let chans: Vec<u32> = d["channels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap() as u32)
        .collect();
    let bw_hz = d["channels"][0]["bandwidth_mhz"].as_f64().unwrap() * 1e6;
    let noise = mw(n0 + 10.0 * bw_hz.log10());
    let k = cells.len();
    let gain = |i: usize, j: usize| {
        let dist = ((cells[i].1 - cells[j].1).powi(2) + (cells[i].2 - cells[j].2).powi(2))
            .sqrt()
            .max(1.0);
        mw(cells[j].3 - (pl0 + 10.0 * n * dist.log10()))
    };
    // interference seen by cell i on channel c when the others use `a`
    let level = |a: &[usize], i: usize, c: usize| {
        noise + (0..k).filter(|&j| j != i && a[j] == c).map(|j| gain(i, j)).sum::<f64>()
    };
    let oracle_lo = |a: &[usize]| (0..k).all(|i| (0..chans.len()).all(|c| level(a, i, c) >= level(a, i, a[i])));

    let total = chans.len().pow(k as u32);
    let mut optima = BTreeSet::new();
    let mut predicate_mismatch = 0;
    for code in 0..total {
        let a: Vec<usize> = (0..k).map(|i| code / chans.len().pow(i as u32) % chans.len()).collect();
        let lo = oracle_lo(&a);
        if lo {
            optima.insert(a.clone());
        }
        // the library predicate on oracle tables must agree everywhere
        let dca: Vec<DcaCell> = (0..k)
            .map(|i| DcaCell {
                id: cells[i].0.clone(),
                current: [ChannelId(chans[a[i]])].into(),
                admissible: chans.iter().map(|c| ChannelId(*c)).collect(),
                max_channels: 1,
                table: (0..chans.len())
                    .map(|c| (ChannelId(chans[c]), level(&a, i, c)))
                    .collect(),
            })
            .collect();
        predicate_mismatch += usize::from(is_local_optimum(&dca) != lo);
    }

    let (out, _) = run(scenario("dca_grid"));
    let ticks: Vec<usize> = out
        .log
        .records
        .iter()
        .filter_map(|r| match r.event {
            LogEvent::DcaTick { reassignments } => Some(reassignments),
            _ => None,
        })
        .collect();
    let settled_after = ticks.iter().rposition(|&r| r > 0).map_or(0, |p| p + 1);
    let by_id: BTreeMap<&str, &DcaCell> = out.final_dca.iter().map(|c| (c.id.as_str(), c)).collect();
    let converged: Option<Vec<usize>> = cells
        .iter()
        .map(|(id, ..)| {
            let cur = &by_id.get(id.as_str())?.current;
            let ch = cur.iter().next()?;
            chans
                .iter()
                .position(|c| ChannelId(*c) == *ch)
                .filter(|_| cur.len() == 1)
        })
        .collect();
    let Some(converged) = converged else {
        return outcome(false, "a cell ended without exactly one channel");
    };
    let ewma_lo = is_local_optimum(&out.final_dca);
    let oracle_says = optima.contains(&converged);
    outcome(
        settled_after <= DCA_MAX_STEPS
            && settled_after < ticks.len()
            && ewma_lo
            && oracle_says
            && predicate_mismatch == 0,
        format!(
            "stable after {settled_after} of {} steps (limit {DCA_MAX_STEPS}); assignment {:?}; local optimum on EWMA tables {ewma_lo}, \
             in brute-force set of {}/{total} {oracle_says}; predicate disagreements over {total} assignments: {predicate_mismatch}",
            ticks.len(),
            converged.iter().map(|c| chans[*c]).collect::<Vec<_>>(),
            optima.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Shared pool against each operator alone.

struct MocnSeed {
    shared: BTreeMap<String, f64>,
    alone: BTreeMap<String, f64>,
}

fn mocn_runs() -> Vec<MocnSeed> {
    (1..=MUX_SEEDS)
        .map(|seed| {
            let (_, shared) = run(with_seed(scenario("mocn_shared"), seed));
            let (_, a) = run(with_seed(scenario("standalone_A"), seed));
            let (_, b) = run(with_seed(scenario("standalone_B"), seed));
            let mut alone = a.summary.metrics.clone();
            for (key, v) in b.summary.metrics {
                if key.ends_with(".B") {
                    alone.insert(key, v);
                }
            }
            MocnSeed {
                shared: shared.summary.metrics,
                alone,
            }
        })
        .collect()
}

fn pooled_capacity_bps() -> f64 {
    let d = doc("mocn_shared");
    d["channels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["bandwidth_mhz"].as_f64().unwrap() * 1e6 * SE_CAP)
        .sum()
}

fn sla_floor(runs: &[MocnSeed]) -> Outcome {
    let mean = |f: &dyn Fn(&MocnSeed) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let offered = mean(&|r| r.shared["offered_bps.A"] + r.shared["offered_bps.B"]);
    let load = offered / pooled_capacity_bps();
    let mut pass = load <= MAX_LOAD_OF_POOLED_CAPACITY;
    let mut parts = vec![format!("mean offered load {:.1}% of pooled capacity", load * 100.0)];
    for op in ["A", "B"] {
        let key = format!("goodput_bps.{op}");
        let shared = mean(&|r| r.shared[&key]);
        let alone = mean(&|r| r.alone[&key]);
        let ratio = shared / alone;
        pass &= ratio >= SLA_FRACTION;
        parts.push(format!("{op}: shared/standalone goodput {ratio:.4}"));
    }
    outcome(pass, format!("{} seeds, {}", runs.len(), parts.join(", ")))
}

fn multiplexing(runs: &[MocnSeed]) -> Outcome {
    let mut wins = 0;
    let mut losses = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let ok = ["A", "B"].iter().all(|op| {
            let key = format!("delay_p95_tti.{op}");
            match (r.shared.get(&key), r.alone.get(&key)) {
                (Some(s), Some(a)) => s <= a,
                _ => false,
            }
        });
        if ok {
            wins += 1;
        } else {
            losses.push(i as u64 + 1);
        }
    }
    outcome(
        wins >= MUX_MIN_WINS,
        format!("shared p95 delay <= standalone for both operators in {wins}/{} seeds (need {MUX_MIN_WINS}); other seeds {losses:?}", runs.len()),
    )
}

// ---------------------------------------------------------------------------

fn reporting_latency() -> Outcome {
    let base = scenario("batch_vs_realtime");
    let period = base.crrm.report_period_tti as f64;
    let mut pass = true;
    let mut rows = Vec::new();
    for seed in 1..=MUX_SEEDS {
        let mut means = Vec::new();
        for mode in [InterfaceMode::Realtime, InterfaceMode::Batch] {
            let mut s = with_seed(base.clone(), seed);
            s.crrm.interface = mode;
            let (_, r) = run(s);
            let m = &r.summary.metrics;
            let answered = m["reaction_count"] > 0.0 && m["reaction_unanswered"] == 0.0;
            pass &= answered;
            means.push(m.get("reaction_mean_tti").copied().unwrap_or(f64::NAN));
        }
        let (rt, batch) = (means[0], means[1]);
        pass &= rt < batch && batch >= period - 1.0;
        rows.push(format!("{rt:.0}/{batch:.0}"));
    }
    outcome(
        pass,
        format!(
            "mean reaction realtime/batch per seed (period {period}): {}",
            rows.join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------

fn radio_math(suite: &RandomSuite) -> Outcome {
    let mut fails = Vec::new();

    // pinned instance: oracle sums milliwatts directly
    let (s, i1, i2, n) = (1e-7, 1e-8, 10f64.powf(-8.3), 1e-10);
    let oracle = s / (n + i1 + i2);
    let got = mw(sinr_from_powers_db(-70.0, &[-80.0, -83.0], -100.0));
    let rel = (got - oracle).abs() / oracle;
    if rel > SINR_LINEAR_REL_TOL {
        fails.push(format!("powers: rel err {rel:e}"));
    }

    // same instance through geometry: 1 m links, noise density tuned to -100 dBm
    let params = PropagationParams {
        noise_density_dbm_per_hz: -100.0 - 10.0 * 20e6f64.log10(),
        ..PropagationParams::default()
    };
    let prop = Propagation::new(params.clone());
    let map = fixture("minimal.json").spectrum_map();
    let tx = |cell: &str, x: f64, eirp: f64| Transmission {
        position: Point { x, y: 1.0 },
        channel: ChannelId(1),
        eirp_dbm: eirp,
        operator: OperatorId::new("A"),
        cell: cell.into(),
    };
    let rx = Point { x: 0.0, y: 0.0 };
    let active = [
        tx("d", 0.0, -70.0 + 38.0),
        tx("i1", 0.0, -80.0 + 38.0),
        tx("i2", 0.0, -83.0 + 38.0),
    ];
    match sinr_db("d", ChannelId(1), rx, &active, &prop, &map) {
        Ok(db) => {
            let rel = (mw(db) - oracle).abs() / oracle;
            if rel > SINR_LINEAR_REL_TOL {
                fails.push(format!("geometry: rel err {rel:e}"));
            }
        }
        Err(e) => fails.push(e.to_string()),
    }

    let p = PropagationParams::default();
    let o = Point { x: 0.0, y: 0.0 };
    for (d, expect) in [(1.0, 38.0), (10.0, 75.0), (100.0, 112.0)] {
        let direct = p.pl0_db + 10.0 * p.exponent * f64::log10(d);
        let got = pathloss_db(o, Point { x: d, y: 0.0 }, &p, None);
        if got != direct || (got - expect).abs() > 1e-12 {
            fails.push(format!("pathloss at {d} m = {got}"));
        }
    }

    // SE cap over every allocation of the bundled corpus and the random suite
    let mut allocations = suite.allocations;
    let mut violations = suite.se_violations;
    let mut max_se = suite.max_se;
    for (name, _) in BUNDLED {
        let (out, _) = run(scenario(name));
        allocations += out.se_audit.allocations;
        violations += out.se_audit.violations;
        max_se = max_se.max(out.se_audit.max_se);
    }
    if violations > 0 || max_se > SE_CAP {
        fails.push(format!("{violations} allocations above the cap, max {max_se}"));
    }
    outcome(
        fails.is_empty() && allocations > 0,
        format!(
            "pinned SINR {:.6} dB; pathloss 1/10/100 m exact; {allocations} allocations, max SE {max_se}; failures {fails:?}",
            10.0 * oracle.log10()
        ),
    )
}

// ---------------------------------------------------------------------------

fn coverage() -> Outcome {
    // direct: a prior 20 dB off either way, then a stationary field. With
    // beta 0.9 the residual after 100 reports is 0.9^99 times the prior's
    // linear excess, so anything up to about 29 dB high stays inside 0.1 dB.
    let truth: Vec<(Point, f64)> = (0..6)
        .map(|k| {
            (
                Point {
                    x: 25.0 * k as f64 + 3.0,
                    y: 7.0,
                },
                -95.0 + 4.5 * k as f64,
            )
        })
        .collect();
    let mut map = CoverageMap::new(20.0, COVERAGE_BETA, [ChannelId(1)]);
    let mut worst_direct: f64 = 0.0;
    for (p, dbm) in &truth {
        for k in 0..COVERAGE_REPORTS {
            let prior = if p.x < 60.0 { 20.0 } else { -20.0 };
            let v = if k == 0 { dbm + prior } else { *dbm };
            let r = SensingReport {
                cell: "c".into(),
                channel: ChannelId(1),
                interference_dbm: v,
                measured_at: SimTime(k as u64),
                delivered_at: SimTime(k as u64),
            };
            map.ingest(&r, *p).unwrap();
        }
        let est = map.estimate(*p, ChannelId(1)).unwrap().dbm();
        worst_direct = worst_direct.max((est - dbm).abs());
    }

    // through the simulator: three fixed carriers and a constant emitter
    let s = fixture("stationary_field.json");
    let d: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/stationary_field.json"))
            .unwrap(),
    )
    .unwrap();
    let pitch = s.crrm.coverage_pitch_m;
    let reports = (s.horizon_tti / s.crrm.t_sense_tti) as usize;
    let bw_hz = d["channels"][0]["bandwidth_mhz"].as_f64().unwrap() * 1e6;
    let noise = mw(-174.0 + 10.0 * bw_hz.log10());
    let pos = |v: &Value| (v[0].as_f64().unwrap(), v[1].as_f64().unwrap());
    let mut sources: Vec<(String, (f64, f64), f64)> = d["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["id"].as_str().unwrap().to_string(),
                pos(&c["position"]),
                c["eirp_dbm"]["5G-NR"].as_f64().unwrap(),
            )
        })
        .collect();
    let cell_count = sources.len();
    for e in d["interferers"].as_array().unwrap() {
        sources.push((
            e["id"].as_str().unwrap().to_string(),
            pos(&e["position"]),
            e["eirp_dbm"].as_f64().unwrap(),
        ));
    }
    let (out, _) = run(s);
    let mut worst_run: f64 = 0.0;
    let mut touched = 0;
    for (id, (x, y), _) in &sources[..cell_count] {
        let g = ((x / pitch).floor() as i64, (y / pitch).floor() as i64);
        let truth_mw = noise
            + sources
                .iter()
                .filter(|(other, ..)| other != id)
                .map(|(_, (sx, sy), eirp)| {
                    let dist = ((sx - x).powi(2) + (sy - y).powi(2)).sqrt().max(1.0);
                    mw(eirp - (38.0 + 37.0 * dist.log10()))
                })
                .sum::<f64>();
        match out
            .coverage
            .iter()
            .find(|r| (r.grid_x, r.grid_y) == g && r.channel == ChannelId(1))
        {
            Some(r) => {
                touched += 1;
                worst_run = worst_run.max((r.interference_dbm - 10.0 * truth_mw.log10()).abs());
            }
            None => worst_run = f64::INFINITY,
        }
    }
    outcome(
        worst_direct < COVERAGE_TOL_DB
            && worst_run < COVERAGE_TOL_DB
            && reports >= COVERAGE_REPORTS
            && touched == cell_count,
        format!(
            "worst error {worst_direct:.2e} dB after {COVERAGE_REPORTS} reports from a prior 20 dB off; \
             simulated field {worst_run:.2e} dB over {touched} grid cells after {reports} reports"
        ),
    )
}

// ---------------------------------------------------------------------------

fn conservation(suite: &RandomSuite) -> Outcome {
    let mut rows = suite.conservation_rows;
    let mut breaks: Vec<String> = suite
        .conservation_breaks
        .iter()
        .map(|s| format!("random seed {s}"))
        .collect();
    for (name, _) in BUNDLED {
        let (out, report) = run(scenario(name));
        rows += out.conservation.len();
        if !conserved(&out) || status(&report, "conservation") == Status::Fail {
            breaks.push(name.to_string());
        }
    }
    outcome(
        breaks.is_empty() && rows > 0,
        format!("{rows} session rows at window boundaries, exact; breaks {breaks:?}"),
    )
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));

    let started = Instant::now();
    let needs_suite = ["exclusivity", "evacuation", "radio", "conservation"]
        .iter()
        .any(|n| wanted(n));
    let suite = needs_suite.then(random_suite);
    let needs_mocn = wanted("sla") || wanted("multiplexing");
    let mocn = if needs_mocn { mocn_runs() } else { Vec::new() };

    let criteria: Vec<(&str, Check)> = vec![
        ("exclusivity safety", Box::new(|| exclusivity(suite.as_ref().unwrap()))),
        (
            "evacuation compliance",
            Box::new(|| evacuation(suite.as_ref().unwrap())),
        ),
        ("determinism", Box::new(determinism)),
        ("dca convergence", Box::new(dca_convergence)),
        ("mocn sla floor", Box::new(|| sla_floor(&mocn))),
        ("statistical multiplexing", Box::new(|| multiplexing(&mocn))),
        ("reporting latency contrast", Box::new(reporting_latency)),
        ("radio math oracle", Box::new(|| radio_math(suite.as_ref().unwrap()))),
        ("coverage map convergence", Box::new(coverage)),
        ("conservation", Box::new(|| conservation(suite.as_ref().unwrap()))),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in &criteria {
        if !wanted(name) {
            continue;
        }
        ran += 1;
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{ran} criteria passed in {:.1}s",
        ran - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
