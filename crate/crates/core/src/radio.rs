//! Physical-layer abstraction: pathloss, received power, SINR, incumbent
//! interference accounting and the gridded coverage map.
//!
//! Power sums are done in milliwatts; dB only appears at the edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::{RngStream, SimTime};
use crate::spectrum::{
    channels_overlap, ChannelId, IncumbentActivation, OperatorId, Point, SpectrumError, SpectrumMap,
};

/// Spectral-efficiency ceiling in b/s/Hz (256-QAM).
pub const SE_CAP: f64 = 8.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Shannon efficiency with the modulation cap.
pub fn spectral_efficiency(sinr_db: f64) -> f64 {
    (1.0 + dbm_to_mw(sinr_db)).log2().min(SE_CAP)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct PropagationParams {
    pub pl0_db: f64,
    pub exponent: f64,
    pub noise_density_dbm_per_hz: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            pl0_db: 38.0,
            exponent: 3.7,
            noise_density_dbm_per_hz: -174.0,
            shadowing_sigma_db: 0.0,
        }
    }
}

impl PropagationParams {
    /// Returns the name of each violated constraint.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !(self.exponent >= 2.0) {
            v.push("exponent must be >= 2");
        }
        if !(self.pl0_db > 0.0) {
            v.push("pl0_db must be > 0");
        }
        if !self.noise_density_dbm_per_hz.is_finite() {
            v.push("noise_density_dbm_per_hz must be finite");
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            v.push("shadowing_sigma_db must be >= 0");
        }
        v
    }

    pub fn noise_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.noise_density_dbm_per_hz + 10.0 * bandwidth_hz.log10()
    }
}

pub fn pathloss_db(tx: Point, rx: Point, p: &PropagationParams, shadow_db: Option<f64>) -> f64 {
    let d = tx.distance(rx).max(1.0);
    p.pl0_db + 10.0 * p.exponent * d.log10() + shadow_db.unwrap_or(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub position: Point,
    pub channel: ChannelId,
    pub eirp_dbm: f64,
    pub operator: OperatorId,
    pub cell: String,
}

/// Frozen log-normal shadowing: one draw per (transmitter, receiver grid
/// cell), derived from the run seed so every query sees the same value.
#[derive(Clone, Debug)]
pub struct Shadowing {
    pub sigma_db: f64,
    pub seed: u64,
    pub pitch_m: f64,
}

impl Shadowing {
    pub fn draw_db(&self, tx: &str, rx: Point) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        let (gx, gy) = grid_index(rx, self.pitch_m);
        let mut s = RngStream::new(self.seed, &format!("shadowing:{tx}:{gx}:{gy}"));
        self.sigma_db * s.next_standard_normal()
    }
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub params: PropagationParams,
    pub shadowing: Option<Shadowing>,
}

impl Propagation {
    pub fn new(params: PropagationParams) -> Self {
        Propagation {
            params,
            shadowing: None,
        }
    }

    pub fn with_shadowing(params: PropagationParams, seed: u64, pitch_m: f64) -> Self {
        let shadowing = (params.shadowing_sigma_db > 0.0).then_some(Shadowing {
            sigma_db: params.shadowing_sigma_db,
            seed,
            pitch_m,
        });
        Propagation { params, shadowing }
    }

    pub fn rx_power_dbm(&self, tx: &Transmission, rx: Point) -> f64 {
        let shadow = self.shadowing.as_ref().map(|s| s.draw_db(&tx.cell, rx));
        tx.eirp_dbm - pathloss_db(tx.position, rx, &self.params, shadow)
    }

    /// Noise plus co-channel interference from `active` at `rx`, in mW,
    /// excluding transmissions from `exclude_cell`.
    pub fn interference_plus_noise_mw(
        &self,
        channel: ChannelId,
        rx: Point,
        exclude_cell: Option<&str>,
        active: &[Transmission],
        map: &SpectrumMap,
    ) -> Result<f64, SpectrumError> {
        let ch = map.channel(channel)?;
        let mut sum = dbm_to_mw(self.params.noise_dbm(ch.bandwidth_hz()));
        for t in active {
            if Some(t.cell.as_str()) == exclude_cell {
                continue;
            }
            if channels_overlap(ch, map.channel(t.channel)?) {
                sum += dbm_to_mw(self.rx_power_dbm(t, rx));
            }
        }
        Ok(sum)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RadioError {
    #[error("desired transmission from {cell} on channel {channel} is not active")]
    DesiredNotActive { cell: String, channel: ChannelId },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// SINR from received powers in dBm.
pub fn sinr_from_powers_db(desired_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let i: f64 = interferers_dbm.iter().map(|p| dbm_to_mw(*p)).sum();
    mw_to_dbm(dbm_to_mw(desired_dbm) / (dbm_to_mw(noise_dbm) + i))
}

/// SINR of the downlink from `cell` on `channel` to a receiver at `rx`.
/// Interferers are other cells' transmissions on overlapping channels.
pub fn sinr_db(
    cell: &str,
    channel: ChannelId,
    rx: Point,
    active: &[Transmission],
    prop: &Propagation,
    map: &SpectrumMap,
) -> Result<f64, RadioError> {
    let desired = active
        .iter()
        .find(|t| t.cell == cell && t.channel == channel)
        .ok_or_else(|| RadioError::DesiredNotActive {
            cell: cell.to_string(),
            channel,
        })?;
    let s = dbm_to_mw(prop.rx_power_dbm(desired, rx));
    let in_mw = prop.interference_plus_noise_mw(channel, rx, Some(cell), active, map)?;
    Ok(mw_to_dbm(s / in_mw))
}

/// Aggregate licensee power at the activation's reference point on its
/// channels; `-inf` when nothing contributes.
pub fn incumbent_interference_dbm(
    a: &IncumbentActivation,
    active: &[Transmission],
    prop: &Propagation,
    map: &SpectrumMap,
) -> Result<f64, SpectrumError> {
    let reference = map.zone(&a.zone)?.reference();
    let mut sum = 0.0;
    for t in active {
        let tc = map.channel(t.channel)?;
        let mut hit = false;
        for c in &a.channels {
            hit |= channels_overlap(tc, map.channel(*c)?);
        }
        if hit {
            sum += dbm_to_mw(prop.rx_power_dbm(t, reference));
        }
    }
    Ok(if sum > 0.0 { mw_to_dbm(sum) } else { f64::NEG_INFINITY })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingReport {
    pub cell: String,
    pub channel: ChannelId,
    pub interference_dbm: f64,
    pub measured_at: SimTime,
    pub delivered_at: SimTime,
}

pub fn grid_index(p: Point, pitch_m: f64) -> (i64, i64) {
    ((p.x / pitch_m).floor() as i64, (p.y / pitch_m).floor() as i64)
}

/// Linear-domain EWMA: `beta * old + (1 - beta) * new`.
pub fn ewma_dbm(old_dbm: f64, new_dbm: f64, beta: f64) -> f64 {
    mw_to_dbm(beta * dbm_to_mw(old_dbm) + (1.0 - beta) * dbm_to_mw(new_dbm))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageEstimate {
    pub mw: f64,
    pub updated: SimTime,
}

impl CoverageEstimate {
    pub fn dbm(&self) -> f64 {
        mw_to_dbm(self.mw)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CoverageError {
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("report interference {0} dBm is not finite")]
    NonFinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub grid_x: i64,
    pub grid_y: i64,
    pub channel: ChannelId,
    pub interference_dbm: f64,
    pub updated: SimTime,
}

/// Per grid cell, per channel interference estimates. Grid cells that never
/// received a report are absent, which is how "unknown" is represented.
#[derive(Clone, Debug)]
pub struct CoverageMap {
    pitch_m: f64,
    beta: f64,
    channels: BTreeSet<ChannelId>,
    cells: BTreeMap<(i64, i64, ChannelId), CoverageEstimate>,
}

impl CoverageMap {
    pub fn new(pitch_m: f64, beta: f64, channels: impl IntoIterator<Item = ChannelId>) -> Self {
        assert!(pitch_m > 0.0, "grid pitch must be positive");
        assert!(beta > 0.0 && beta < 1.0, "EWMA factor must be in (0, 1)");
        CoverageMap {
            pitch_m,
            beta,
            channels: channels.into_iter().collect(),
            cells: BTreeMap::new(),
        }
    }

    pub fn pitch(&self) -> f64 {
        self.pitch_m
    }

    pub fn ingest(&mut self, r: &SensingReport, at: Point) -> Result<f64, CoverageError> {
        if !self.channels.contains(&r.channel) {
            return Err(CoverageError::UnknownChannel(r.channel));
        }
        if !r.interference_dbm.is_finite() {
            return Err(CoverageError::NonFinite(r.interference_dbm));
        }
        let (gx, gy) = grid_index(at, self.pitch_m);
        let new_mw = dbm_to_mw(r.interference_dbm);
        let e = self
            .cells
            .entry((gx, gy, r.channel))
            .and_modify(|e| e.mw = self.beta * e.mw + (1.0 - self.beta) * new_mw)
            .or_insert(CoverageEstimate {
                mw: new_mw,
                updated: r.delivered_at,
            });
        e.updated = r.delivered_at;
        Ok(e.dbm())
    }

    pub fn estimate(&self, at: Point, channel: ChannelId) -> Option<CoverageEstimate> {
        let (gx, gy) = grid_index(at, self.pitch_m);
        self.cells.get(&(gx, gy, channel)).copied()
    }

    /// Known entries, ordered by grid cell then channel.
    pub fn snapshot(&self) -> impl Iterator<Item = CoverageRow> + '_ {
        self.cells.iter().map(|(&(grid_x, grid_y, channel), e)| CoverageRow {
            grid_x,
            grid_y,
            channel,
            interference_dbm: e.dbm(),
            updated: e.updated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{Channel, GeoZone, Polygon, Regime, Window, ZoneId};
    use proptest::prelude::*;

    fn map() -> SpectrumMap {
        let ch = |id, c| Channel {
            id: ChannelId(id),
            center_mhz: c,
            bandwidth_mhz: 10.0,
            regime: Regime::Lsa,
        };
        SpectrumMap::new(
            [ch(1, 3500.0), ch(2, 3510.0), ch(3, 3505.0)],
            [GeoZone {
                id: ZoneId::new("z"),
                polygon: Polygon::rect(0.0, 0.0, 100.0, 100.0),
                tags: Default::default(),
                reference_point: Some(Point::new(0.0, 0.0)),
            }],
        )
    }

    fn tx(cell: &str, x: f64, ch: u32, eirp: f64) -> Transmission {
        Transmission {
            position: Point::new(x, 0.0),
            channel: ChannelId(ch),
            eirp_dbm: eirp,
            operator: "A".into(),
            cell: cell.into(),
        }
    }

    #[test]
    fn pathloss_examples() {
        let p = PropagationParams::default();
        let o = Point::new(0.0, 0.0);
        assert_eq!(pathloss_db(o, o, &p, None), 38.0);
        assert_eq!(pathloss_db(o, Point::new(0.5, 0.0), &p, None), 38.0);
        assert_eq!(pathloss_db(o, Point::new(10.0, 0.0), &p, None), 38.0 + 37.0);
        assert_eq!(pathloss_db(o, Point::new(100.0, 0.0), &p, None), 38.0 + 74.0);
        assert_eq!(pathloss_db(o, Point::new(10.0, 0.0), &p, Some(4.0)), 79.0);
    }

    #[test]
    fn sinr_three_transmitter_instance() {
        // Independent oracle: 1e-7 / (1e-10 + 1e-8 + 10^-8.3)
        let oracle_lin = 1e-7 / (1e-10 + 1e-8 + 10f64.powf(-8.3));
        let v = sinr_from_powers_db(-70.0, &[-80.0, -83.0], -100.0);
        assert!((10f64.powf(v / 10.0) / oracle_lin - 1.0).abs() < 1e-9);
        assert!((v - 8.206_817).abs() < 1e-6, "{v}");
    }

    #[test]
    fn snr_without_interferers_and_symmetry() {
        let m = map();
        let prop = Propagation::new(PropagationParams::default());
        let rx = Point::new(10.0, 0.0);
        let alone = [tx("c1", 0.0, 1, 20.0)];
        let noise = prop.params.noise_dbm(10e6);
        let snr = sinr_db("c1", ChannelId(1), rx, &alone, &prop, &m).unwrap();
        assert!((snr - (20.0 - 75.0 - noise)).abs() < 1e-9);
        // equal-power interferer mirrored around rx, noise negligible
        let pair = [tx("c1", 0.0, 1, 60.0), tx("c2", 20.0, 1, 60.0)];
        let s = sinr_db("c1", ChannelId(1), rx, &pair, &prop, &m).unwrap();
        assert!(s.abs() < 1e-6, "{s}");
        // non-overlapping channel does not interfere, partially overlapping does
        let adj = [tx("c1", 0.0, 1, 20.0), tx("c2", 20.0, 2, 20.0)];
        assert!((sinr_db("c1", ChannelId(1), rx, &adj, &prop, &m).unwrap() - snr).abs() < 1e-12);
        let part = [tx("c1", 0.0, 1, 20.0), tx("c2", 20.0, 3, 20.0)];
        assert!(sinr_db("c1", ChannelId(1), rx, &part, &prop, &m).unwrap() < snr);
    }

    #[test]
    fn desired_must_be_active() {
        let prop = Propagation::new(PropagationParams::default());
        assert!(matches!(
            sinr_db("c1", ChannelId(1), Point::new(1.0, 1.0), &[], &prop, &map()),
            Err(RadioError::DesiredNotActive { .. })
        ));
    }

    #[test]
    fn incumbent_interference_sum() {
        let m = map();
        let prop = Propagation::new(PropagationParams::default());
        let a = IncumbentActivation {
            id: "r".into(),
            incumbent: "radar".into(),
            channels: [ChannelId(1)].into(),
            zone: ZoneId::new("z"),
            window: Window::new(0, 10),
            protection_dbm: -100.0,
        };
        assert_eq!(
            incumbent_interference_dbm(&a, &[], &prop, &m).unwrap(),
            f64::NEG_INFINITY
        );
        // -90 dBm each at the reference point: eirp - 75 (10 m) = -90
        let one = [tx("c1", 10.0, 1, -15.0)];
        assert!((incumbent_interference_dbm(&a, &one, &prop, &m).unwrap() + 90.0).abs() < 1e-9);
        let two = [tx("c1", 10.0, 1, -15.0), tx("c2", -10.0, 1, -15.0)];
        let v = incumbent_interference_dbm(&a, &two, &prop, &m).unwrap();
        let oracle = 10.0 * (2.0 * 1e-9f64).log10();
        assert!((v - oracle).abs() < 1e-9);
        assert!((v + 86.99).abs() < 0.005);
    }

    #[test]
    fn coverage_ewma_examples() {
        let mut cov = CoverageMap::new(10.0, 0.9, [ChannelId(1)]);
        let at = Point::new(5.0, 5.0);
        assert!(cov.estimate(at, ChannelId(1)).is_none());
        let rep = |dbm, t| SensingReport {
            cell: "c".into(),
            channel: ChannelId(1),
            interference_dbm: dbm,
            measured_at: SimTime(t),
            delivered_at: SimTime(t),
        };
        assert!((cov.ingest(&rep(-80.0, 1), at).unwrap() + 80.0).abs() < 1e-12);
        assert!((cov.ingest(&rep(-80.0, 2), at).unwrap() + 80.0).abs() < 1e-9);
        let v = cov.ingest(&rep(-70.0, 3), at).unwrap();
        let oracle = 10.0 * (0.9 * 1e-8 + 0.1 * 1e-7f64).log10();
        assert!((v - oracle).abs() < 1e-9);
        assert!((v + 77.212).abs() < 1e-3, "{v}");
        let mut bad = rep(-70.0, 4);
        bad.channel = ChannelId(9);
        assert_eq!(cov.ingest(&bad, at), Err(CoverageError::UnknownChannel(ChannelId(9))));
        assert_eq!(cov.snapshot().count(), 1);
    }

    #[test]
    fn shadowing_is_frozen_per_grid_cell() {
        let prop = Propagation::with_shadowing(
            PropagationParams {
                shadowing_sigma_db: 6.0,
                ..Default::default()
            },
            7,
            10.0,
        );
        let t = tx("c1", 0.0, 1, 20.0);
        let a = prop.rx_power_dbm(&t, Point::new(31.0, 2.0));
        assert_eq!(a, prop.rx_power_dbm(&t, Point::new(31.0, 2.0)));
        // same grid cell, tiny move: only the distance term changes
        let b = prop.rx_power_dbm(&t, Point::new(31.5, 2.0));
        let dpl = 37.0 * (31.5f64.hypot(2.0) / 31.0f64.hypot(2.0)).log10();
        assert!((a - b - dpl).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn linear_additivity(
            d in -90.0f64..-40.0,
            a in proptest::collection::vec(-120.0f64..-50.0, 0..5),
            b in proptest::collection::vec(-120.0f64..-50.0, 0..5),
            n in -120.0f64..-90.0,
        ) {
            let all: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
            let ia: f64 = a.iter().map(|p| dbm_to_mw(*p)).sum();
            let ib: f64 = b.iter().map(|p| dbm_to_mw(*p)).sum();
            let lin = dbm_to_mw(sinr_from_powers_db(d, &all, n));
            let oracle = dbm_to_mw(d) / (dbm_to_mw(n) + ia + ib);
            prop_assert!((lin / oracle - 1.0).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_interferers_and_eirp(
            xs in proptest::collection::vec(5.0f64..200.0, 1..5),
            extra in 5.0f64..200.0,
            eirp in 0.0f64..30.0,
            bump in 0.0f64..10.0,
        ) {
            let m = map();
            let prop = Propagation::new(PropagationParams::default());
            let rx = Point::new(3.0, 4.0);
            let mut active = vec![tx("me", 0.0, 1, eirp)];
            for (i, x) in xs.iter().enumerate() {
                active.push(tx(&format!("i{i}"), *x, 1, 20.0));
            }
            let base = sinr_db("me", ChannelId(1), rx, &active, &prop, &m).unwrap();
            let mut more = active.clone();
            more.push(tx("extra", extra, 1, 20.0));
            prop_assert!(sinr_db("me", ChannelId(1), rx, &more, &prop, &m).unwrap() <= base);
            active[0].eirp_dbm += bump;
            prop_assert!(sinr_db("me", ChannelId(1), rx, &active, &prop, &m).unwrap() >= base);
        }

        #[test]
        fn pathloss_reciprocal(ax in -500.0f64..500.0, ay in -500.0f64..500.0, bx in -500.0f64..500.0, by in -500.0f64..500.0) {
            let p = PropagationParams::default();
            let (a, b) = (Point::new(ax, ay), Point::new(bx, by));
            prop_assert_eq!(pathloss_db(a, b, &p, None), pathloss_db(b, a, &p, None));
        }

        #[test]
        fn coverage_converges(truth in -110.0f64..-50.0, offset in -20.0f64..20.0) {
            let start = truth + offset;
            let mut cov = CoverageMap::new(10.0, 0.9, [ChannelId(1)]);
            let at = Point::new(1.0, 1.0);
            let mut r = SensingReport { cell: "c".into(), channel: ChannelId(1), interference_dbm: start, measured_at: SimTime(0), delivered_at: SimTime(0) };
            cov.ingest(&r, at).unwrap();
            r.interference_dbm = truth;
            let mut v = 0.0;
            for _ in 0..100 {
                v = cov.ingest(&r, at).unwrap();
            }
            prop_assert!((v - truth).abs() < 0.1, "{} vs {}", v, truth);
        }

        #[test]
        fn spectral_efficiency_capped(s in -50.0f64..200.0) {
            let se = spectral_efficiency(s);
            prop_assert!((0.0..=SE_CAP).contains(&se));
        }
    }

    #[test]
    fn full_rate_with_cap() {
        assert_eq!(20e6 * spectral_efficiency(30.0), 160e6);
        assert!((spectral_efficiency(0.0) - 1.0).abs() < 1e-12);
    }
}
