use std::cmp::Ordering;

use crate::spectrum::{ChannelId, OperatorId, Regime};

use super::QosClass;

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub channel: ChannelId,
    pub regime: Regime,
    /// Recent allocated fraction on this channel, in [0, 1].
    pub load: f64,
    /// LSA channels are admissible only while a covering grant is active.
    pub admissible: bool,
}

fn regime_rank(r: &Regime) -> u8 {
    match r {
        Regime::Licensed(_) => 0,
        Regime::Lsa => 1,
        Regime::Unlicensed => 2,
    }
}

/// Ordered channel preference for a session of `operator`.
///
/// GBR: own licensed, then LSA, then unlicensed; a list made only of
/// unlicensed channels is returned empty. Best effort: least loaded first.
/// Ties go to the lower channel id.
pub fn select_band_rat(qos: &QosClass, operator: &OperatorId, candidates: &[Candidate]) -> Vec<ChannelId> {
    let mut usable: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| c.admissible)
        .filter(|c| match &c.regime {
            Regime::Licensed(owner) => owner == operator,
            _ => true,
        })
        .collect();
    match qos {
        QosClass::Gbr { .. } => {
            usable.sort_by_key(|c| (regime_rank(&c.regime), c.channel));
            if usable.iter().all(|c| c.regime == Regime::Unlicensed) {
                return Vec::new();
            }
        }
        QosClass::BestEffort => {
            usable.sort_by(|a, b| {
                a.load
                    .partial_cmp(&b.load)
                    .unwrap_or(Ordering::Equal)
                    .then(a.channel.cmp(&b.channel))
            });
        }
    }
    usable.into_iter().map(|c| c.channel).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: u32, regime: Regime, load: f64, admissible: bool) -> Candidate {
        Candidate {
            channel: ChannelId(id),
            regime,
            load,
            admissible,
        }
    }

    #[test]
    fn gbr_prefers_licensed() {
        let op = OperatorId::new("A");
        let c = [
            cand(1, Regime::Lsa, 0.0, true),
            cand(2, Regime::Licensed(op.clone()), 0.0, true),
            cand(3, Regime::Unlicensed, 0.0, true),
        ];
        let r = select_band_rat(&QosClass::Gbr { rate_bps: 1e6 }, &op, &c);
        assert_eq!(r, [ChannelId(2), ChannelId(1), ChannelId(3)]);
    }

    #[test]
    fn gbr_never_unlicensed_alone() {
        let op = OperatorId::new("A");
        let c = [cand(3, Regime::Unlicensed, 0.0, true), cand(1, Regime::Lsa, 0.0, false)];
        assert!(select_band_rat(&QosClass::Gbr { rate_bps: 1e6 }, &op, &c).is_empty());
        // best effort may use it
        assert_eq!(select_band_rat(&QosClass::BestEffort, &op, &c), [ChannelId(3)]);
    }

    #[test]
    fn best_effort_least_loaded_first() {
        let op = OperatorId::new("A");
        let c = [
            cand(1, Regime::Lsa, 0.9, true),
            cand(2, Regime::Lsa, 0.2, true),
            cand(3, Regime::Unlicensed, 0.5, true),
        ];
        assert_eq!(
            select_band_rat(&QosClass::BestEffort, &op, &c),
            [ChannelId(2), ChannelId(3), ChannelId(1)]
        );
        let tie = [cand(5, Regime::Lsa, 0.3, true), cand(4, Regime::Lsa, 0.3, true)];
        assert_eq!(select_band_rat(&QosClass::BestEffort, &op, &tie)[0], ChannelId(4));
    }

    #[test]
    fn suspended_lsa_and_foreign_licensed_excluded() {
        let op = OperatorId::new("A");
        let c = [
            cand(1, Regime::Lsa, 0.0, false),
            cand(2, Regime::Licensed("B".into()), 0.0, true),
            cand(3, Regime::Licensed(op.clone()), 0.0, true),
        ];
        assert_eq!(select_band_rat(&QosClass::BestEffort, &op, &c), [ChannelId(3)]);
    }
}
