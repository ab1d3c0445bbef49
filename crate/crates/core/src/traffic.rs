//! Session arrivals, offered demand and UE placement/mobility.

use serde::{Deserialize, Serialize};

use crate::engine::{RngStream, SimTime};
use crate::spectrum::{OperatorId, Point, Polygon};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Demand {
    /// Constant bit rate with a guaranteed-rate bearer.
    Gbr { rate_bps: f64 },
    /// Best-effort on-off source: `rate_bps` while on.
    OnOff {
        rate_bps: f64,
        activity: f64,
        burst_mean_s: f64,
    },
}

impl Demand {
    pub fn peak_rate_bps(&self) -> f64 {
        match self {
            Demand::Gbr { rate_bps } | Demand::OnOff { rate_bps, .. } => *rate_bps,
        }
    }

    pub fn mean_rate_bps(&self) -> f64 {
        match self {
            Demand::Gbr { rate_bps } => *rate_bps,
            Demand::OnOff { rate_bps, activity, .. } => rate_bps * activity,
        }
    }

    pub fn is_gbr(&self) -> bool {
        matches!(self, Demand::Gbr { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mobility {
    #[default]
    Static,
    RandomWaypoint {
        speed_mps: f64,
        pause_s: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficProfile {
    pub operator: OperatorId,
    pub arrival_rate_per_s: f64,
    pub holding_time_mean_s: f64,
    pub demand: Demand,
    /// Where UEs appear and roam.
    pub region: Polygon,
    #[serde(default)]
    pub mobility: Mobility,
}

impl TrafficProfile {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.arrival_rate_per_s >= 0.0) || !self.arrival_rate_per_s.is_finite() {
            v.push(format!(
                "arrival_rate_per_s {} must be finite and >= 0",
                self.arrival_rate_per_s
            ));
        }
        if !(self.holding_time_mean_s > 0.0) {
            v.push(format!("holding_time_mean_s {} must be > 0", self.holding_time_mean_s));
        }
        match &self.demand {
            Demand::Gbr { rate_bps } => {
                if !(*rate_bps > 0.0) {
                    v.push(format!("GBR rate {rate_bps} must be > 0"));
                }
            }
            Demand::OnOff {
                rate_bps,
                activity,
                burst_mean_s,
            } => {
                if !(*rate_bps >= 0.0) {
                    v.push(format!("rate_bps {rate_bps} must be >= 0"));
                }
                if !(*activity > 0.0 && *activity <= 1.0) {
                    v.push(format!("activity {activity} must be in (0, 1]"));
                }
                if !(*burst_mean_s > 0.0) {
                    v.push(format!("burst_mean_s {burst_mean_s} must be > 0"));
                }
            }
        }
        if let Mobility::RandomWaypoint { speed_mps, pause_s } = self.mobility {
            if !(speed_mps > 0.0) || !(pause_s >= 0.0) {
                v.push("random waypoint needs speed_mps > 0 and pause_s >= 0".into());
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arrival {
    pub operator: OperatorId,
    pub arrival: SimTime,
    pub departure: SimTime,
    pub position: Point,
}

/// Uniform point inside `region` by rejection from its bounding box.
pub fn sample_in(region: &Polygon, rng: &mut RngStream) -> Point {
    let (lo, hi) = region.bbox();
    for _ in 0..10_000 {
        let p = Point::new(rng.next_range(lo.x, hi.x), rng.next_range(lo.y, hi.y));
        if region.contains(p) {
            return p;
        }
    }
    region.vertices()[0]
}

fn s_to_tti(s: f64, tti_ms: f64) -> f64 {
    s * 1000.0 / tti_ms
}

/// Poisson arrivals over `[0, horizon)`. Each arrival draws its holding
/// time and placement from the same stream, so the whole list is a function
/// of (seed, stream id).
pub fn generate_arrivals(profile: &TrafficProfile, horizon: SimTime, tti_ms: f64, rng: &mut RngStream) -> Vec<Arrival> {
    let mut out = Vec::new();
    if profile.arrival_rate_per_s <= 0.0 {
        return out;
    }
    let mean_gap = 1.0 / profile.arrival_rate_per_s;
    let mut t_s = 0.0;
    loop {
        t_s += rng.next_exp(mean_gap);
        let at = s_to_tti(t_s, tti_ms).floor();
        if at >= horizon.0 as f64 {
            break;
        }
        let hold = s_to_tti(rng.next_exp(profile.holding_time_mean_s), tti_ms)
            .round()
            .max(1.0) as u64;
        let position = sample_in(&profile.region, rng);
        let arrival = SimTime(at as u64);
        out.push(Arrival {
            operator: profile.operator.clone(),
            arrival,
            departure: arrival.plus(hold),
            position,
        });
    }
    out
}

/// Per-session offered-traffic state. Bits are tracked as an integer running
/// total of `floor(rate * on_time)` so that per-TTI amounts never drift.
#[derive(Clone, Debug)]
pub struct DemandProcess {
    demand: Demand,
    tti_s: f64,
    on: bool,
    remaining_tti: u64,
    on_ttis: u64,
    emitted_bits: u64,
    rng: RngStream,
}

impl DemandProcess {
    pub fn new(demand: Demand, tti_ms: f64, mut rng: RngStream) -> Self {
        let tti_s = tti_ms / 1000.0;
        let (on, remaining_tti) = match &demand {
            Demand::Gbr { .. } => (true, u64::MAX),
            Demand::OnOff { activity, .. } if *activity >= 1.0 => (true, u64::MAX),
            Demand::OnOff {
                activity, burst_mean_s, ..
            } => {
                // start in the stationary regime
                let on = rng.next_uniform() < *activity;
                let mean = if on {
                    *burst_mean_s
                } else {
                    burst_mean_s * (1.0 - activity) / activity
                };
                (on, duration_tti(rng.next_exp(mean), tti_s))
            }
        };
        DemandProcess {
            demand,
            tti_s,
            on,
            remaining_tti,
            on_ttis: 0,
            emitted_bits: 0,
            rng,
        }
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    pub fn offered_total(&self) -> u64 {
        self.emitted_bits
    }

    /// Bits offered in the next TTI; advances the on-off state.
    pub fn next_bits(&mut self) -> u64 {
        let on = self.on;
        if on {
            self.on_ttis += 1;
        }
        if let Demand::OnOff {
            activity, burst_mean_s, ..
        } = &self.demand
        {
            if *activity < 1.0 {
                self.remaining_tti -= 1;
                if self.remaining_tti == 0 {
                    self.on = !self.on;
                    let mean = if self.on {
                        *burst_mean_s
                    } else {
                        burst_mean_s * (1.0 - activity) / activity
                    };
                    self.remaining_tti = duration_tti(self.rng.next_exp(mean), self.tti_s);
                }
            }
        }
        if !on {
            return 0;
        }
        let total = (self.demand.peak_rate_bps() * self.on_ttis as f64 * self.tti_s).floor() as u64;
        let bits = total - self.emitted_bits;
        self.emitted_bits = total;
        bits
    }
}

fn duration_tti(s: f64, tti_s: f64) -> u64 {
    ((s / tti_s).round() as u64).max(1)
}

/// Random-waypoint walker confined to a polygon.
#[derive(Clone, Debug)]
pub struct Walker {
    pub position: Point,
    target: Point,
    pause_left_tti: u64,
    speed_mps: f64,
    pause_tti: u64,
}

impl Walker {
    pub fn new(start: Point, speed_mps: f64, pause_s: f64, tti_ms: f64, region: &Polygon, rng: &mut RngStream) -> Self {
        Walker {
            position: start,
            target: sample_in(region, rng),
            pause_left_tti: 0,
            speed_mps,
            pause_tti: duration_tti(pause_s, tti_ms / 1000.0),
        }
    }

    /// Advances by `dt_tti` TTIs. Never leaves `region`: a step that would
    /// exit stops at the current point and picks a new waypoint.
    pub fn step(&mut self, dt_tti: u64, tti_ms: f64, region: &Polygon, rng: &mut RngStream) {
        if self.pause_left_tti > 0 {
            let d = dt_tti.min(self.pause_left_tti);
            self.pause_left_tti -= d;
            return;
        }
        let max_move = self.speed_mps * dt_tti as f64 * tti_ms / 1000.0;
        let dist = self.position.distance(self.target);
        let next = if dist <= max_move {
            self.target
        } else {
            let f = max_move / dist;
            Point::new(
                self.position.x + f * (self.target.x - self.position.x),
                self.position.y + f * (self.target.y - self.position.y),
            )
        };
        if !region.contains(next) {
            self.target = sample_in(region, rng);
            return;
        }
        self.position = next;
        if next == self.target {
            self.pause_left_tti = self.pause_tti;
            self.target = sample_in(region, rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(rate: f64, demand: Demand) -> TrafficProfile {
        TrafficProfile {
            operator: "A".into(),
            arrival_rate_per_s: rate,
            holding_time_mean_s: 2.0,
            demand,
            region: Polygon::rect(0.0, 0.0, 50.0, 50.0),
            mobility: Mobility::Static,
        }
    }

    #[test]
    fn zero_rate_is_empty() {
        let p = profile(0.0, Demand::Gbr { rate_bps: 1e6 });
        assert!(generate_arrivals(&p, SimTime(10_000), 1.0, &mut RngStream::new(1, "a")).is_empty());
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        let p = profile(10.0, Demand::Gbr { rate_bps: 1e6 });
        let v = generate_arrivals(&p, SimTime(1_000_000), 1.0, &mut RngStream::new(42, "arrivals:A"));
        assert!((v.len() as i64 - 10_000).abs() <= 300, "{}", v.len());
        assert!(v.windows(2).all(|w| w[0].arrival <= w[1].arrival));
        assert!(v
            .iter()
            .all(|a| a.departure > a.arrival && p.region.contains(a.position)));
    }

    #[test]
    fn arrivals_deterministic() {
        let p = profile(5.0, Demand::Gbr { rate_bps: 1e6 });
        let a = generate_arrivals(&p, SimTime(100_000), 1.0, &mut RngStream::new(7, "x"));
        let b = generate_arrivals(&p, SimTime(100_000), 1.0, &mut RngStream::new(7, "x"));
        assert_eq!(a, b);
    }

    #[test]
    fn gbr_bits_per_tti() {
        let mut d = DemandProcess::new(Demand::Gbr { rate_bps: 10e6 }, 1.0, RngStream::new(1, "d"));
        for _ in 0..5 {
            assert_eq!(d.next_bits(), 10_000);
        }
        // fractional rates accumulate without drift
        let mut d = DemandProcess::new(Demand::Gbr { rate_bps: 1500.5 }, 1.0, RngStream::new(1, "d"));
        let total: u64 = (0..1000).map(|_| d.next_bits()).sum();
        assert_eq!(total, 1500);
        assert_eq!(d.offered_total(), 1500);
    }

    #[test]
    fn full_activity_always_on() {
        let demand = Demand::OnOff {
            rate_bps: 1e6,
            activity: 1.0,
            burst_mean_s: 0.01,
        };
        let mut d = DemandProcess::new(demand, 1.0, RngStream::new(3, "d"));
        assert!((0..10_000).all(|_| d.next_bits() == 1000));
    }

    #[test]
    fn half_activity_long_run_mean() {
        let demand = Demand::OnOff {
            rate_bps: 1e6,
            activity: 0.5,
            burst_mean_s: 0.02,
        };
        let mut d = DemandProcess::new(demand, 1.0, RngStream::new(9, "onoff"));
        let n = 1_000_000u64;
        let total: u64 = (0..n).map(|_| d.next_bits()).sum();
        let mean_bps = total as f64 / (n as f64 / 1000.0);
        assert!((mean_bps / 0.5e6 - 1.0).abs() < 0.02, "{mean_bps}");
    }

    #[test]
    fn waypoint_moves_and_pauses() {
        let region = Polygon::rect(0.0, 0.0, 100.0, 100.0);
        let mut rng = RngStream::new(5, "mob");
        let mut w = Walker::new(Point::new(50.0, 50.0), 10.0, 1.0, 1.0, &region, &mut rng);
        let start = w.position;
        for _ in 0..100 {
            w.step(10, 1.0, &region, &mut rng);
        }
        assert_ne!(w.position, start);
    }

    proptest! {
        #[test]
        fn walker_stays_inside(seed in any::<u64>(), speed in 0.5f64..40.0) {
            // L-shaped, non-convex region
            let region = Polygon::new(vec![
                Point::new(0.0, 0.0), Point::new(100.0, 0.0), Point::new(100.0, 30.0),
                Point::new(30.0, 30.0), Point::new(30.0, 100.0), Point::new(0.0, 100.0),
            ]).unwrap();
            let mut rng = RngStream::new(seed, "mob");
            let start = sample_in(&region, &mut rng);
            let mut w = Walker::new(start, speed, 0.5, 1.0, &region, &mut rng);
            for _ in 0..500 {
                w.step(10, 1.0, &region, &mut rng);
                prop_assert!(region.contains(w.position));
            }
        }
    }
}
