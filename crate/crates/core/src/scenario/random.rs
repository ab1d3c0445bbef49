//! Randomized scenarios for the exclusivity and evacuation property suites.

use std::collections::BTreeSet;

use super::{ActivationEvent, ControllerConfig, GrantRequest, RepositoryConfig, Scenario, SCHEMA};
use crate::controller::SharingRules;
use crate::crrm::{CellConfig, CrrmParams, Faults, Rat};
use crate::engine::RngStream;
use crate::radio::PropagationParams;
use crate::spectrum::{
    ActivationId, Channel, ChannelId, GeoZone, IncumbentActivation, OperatorId, Point, Polygon, Regime, RepositoryId,
    Window, ZoneId,
};
use crate::traffic::{Demand, Mobility, TrafficProfile};

#[derive(Clone, Debug)]
pub struct RandomParams {
    pub cells: usize,
    pub lsa_channels: u32,
    pub horizon_tti: u64,
    pub grants: usize,
    pub activations: usize,
    pub evacuation_deadline_tti: u64,
    /// Side of the square deployment area, m.
    pub area_m: f64,
    pub with_traffic: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            cells: 10,
            lsa_channels: 6,
            horizon_tti: 10_000,
            grants: 8,
            activations: 5,
            evacuation_deadline_tti: 100,
            area_m: 1000.0,
            with_traffic: true,
        }
    }
}

fn random_rect(rng: &mut RngStream, area: f64) -> Polygon {
    let w = rng.next_range(0.2, 0.7) * area;
    let h = rng.next_range(0.2, 0.7) * area;
    let x = rng.next_range(0.0, area - w);
    let y = rng.next_range(0.0, area - h);
    Polygon::rect(x, y, x + w, y + h)
}

fn random_window(rng: &mut RngStream, lo: u64, hi: u64, min_len: u64) -> Window {
    let start = lo + rng.next_index((hi - lo - min_len) as usize) as u64;
    let len = min_len + rng.next_index((hi - start - min_len) as usize + 1) as u64;
    Window::new(start, start + len)
}

fn random_subset(rng: &mut RngStream, n: u32, max: usize) -> BTreeSet<ChannelId> {
    let k = (1 + rng.next_index(max)).min(n as usize);
    let mut s = BTreeSet::new();
    while s.len() < k {
        s.insert(ChannelId(1 + rng.next_index(n as usize) as u32));
    }
    s
}

/// A valid scenario drawn from `seed`: two operators, random cells (some
/// shared), random grant requests and incumbent activations with legal
/// announce leads.
pub fn random_scenario(seed: u64, p: &RandomParams) -> Scenario {
    let mut rng = RngStream::new(seed, "scenario-gen");
    let ops = [OperatorId::new("A"), OperatorId::new("B")];
    let area = p.area_m;
    let h = p.horizon_tti;

    let channels: Vec<Channel> = (1..=p.lsa_channels)
        .map(|i| Channel {
            id: ChannelId(i),
            center_mhz: 2300.0 + 10.0 * f64::from(i) - 5.0,
            bandwidth_mhz: 10.0,
            regime: Regime::Lsa,
        })
        .collect();

    let mut zones = vec![GeoZone {
        id: ZoneId::new("all"),
        polygon: Polygon::rect(0.0, 0.0, area, area),
        tags: BTreeSet::new(),
        reference_point: None,
    }];
    for k in 0..4 {
        zones.push(GeoZone {
            id: ZoneId::new(format!("z{k}")),
            polygon: random_rect(&mut rng, area),
            tags: BTreeSet::new(),
            reference_point: None,
        });
    }

    let cells: Vec<CellConfig> = (0..p.cells)
        .map(|i| {
            let operators: BTreeSet<OperatorId> = match rng.next_index(3) {
                0 => [ops[0].clone()].into(),
                1 => [ops[1].clone()].into(),
                _ => ops.iter().cloned().collect(),
            };
            CellConfig {
                id: format!("c{i:02}"),
                position: Point::new(rng.next_range(0.0, area), rng.next_range(0.0, area)),
                eirp_dbm: [(Rat::Nr, 24.0 + rng.next_range(0.0, 6.0))].into(),
                operators,
                max_channels: 1 + rng.next_index(2),
                cluster: "edge".into(),
            }
        })
        .collect();

    let grant_requests: Vec<GrantRequest> = (0..p.grants)
        .map(|_| {
            let window = random_window(&mut rng, 0, h, h / 10);
            GrantRequest {
                at: window.start.saturating_sub(rng.next_index(200) as u64),
                licensee: ops[rng.next_index(2)].clone(),
                channels: random_subset(&mut rng, p.lsa_channels, 2),
                zone: zones[rng.next_index(zones.len())].id.clone(),
                window,
            }
        })
        .collect();

    let repositories = vec![RepositoryConfig {
        id: RepositoryId::new("repo"),
        latency_tti: 1 + rng.next_index(5) as i64,
        default_max_eirp_dbm: 30.0,
        qos: Vec::new(),
    }];
    let controller = ControllerConfig {
        rules: SharingRules {
            evacuation_deadline_tti: p.evacuation_deadline_tti,
            ..SharingRules::default()
        },
        ..ControllerConfig::default()
    };

    let mut scenario = Scenario {
        schema: SCHEMA.into(),
        name: format!("random-{seed}"),
        description: String::new(),
        seed,
        horizon_tti: h,
        tti_ms: 1.0,
        band_plan: None,
        channels,
        zones,
        operators: ops.to_vec(),
        cells,
        repositories,
        controller,
        grant_requests,
        activations: Vec::new(),
        propagation: PropagationParams::default(),
        traffic: Vec::new(),
        crrm: CrrmParams {
            kpi_window_tti: 1000,
            ..CrrmParams::default()
        },
        interferers: Vec::new(),
        faults: Faults::default(),
    };

    let lead = scenario.required_announce_lead();
    for k in 0..p.activations {
        let window = random_window(&mut rng, lead, h, h / 20);
        let slack = rng.next_index((window.start - lead) as usize + 1) as u64;
        scenario.activations.push(ActivationEvent {
            announce_at: window.start - lead - slack.min(2000),
            activation: IncumbentActivation {
                id: ActivationId::new(format!("inc{k}")),
                incumbent: "radar".into(),
                channels: random_subset(&mut rng, p.lsa_channels, 2),
                zone: scenario.zones[rng.next_index(scenario.zones.len())].id.clone(),
                window,
                protection_dbm: -100.0,
            },
        });
    }

    if p.with_traffic {
        for op in &ops {
            scenario.traffic.push(TrafficProfile {
                operator: op.clone(),
                arrival_rate_per_s: 0.5,
                holding_time_mean_s: 1.0,
                demand: Demand::OnOff {
                    rate_bps: 5e6,
                    activity: 0.5,
                    burst_mean_s: 0.1,
                },
                region: Polygon::rect(0.0, 0.0, area, area),
                mobility: Mobility::Static,
            });
        }
    }
    scenario
}
