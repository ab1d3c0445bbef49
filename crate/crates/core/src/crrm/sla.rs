use std::collections::BTreeMap;

use crate::spectrum::OperatorId;

/// Per-operator bits in one closed measurement window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlaWindow {
    pub achieved_bits: BTreeMap<OperatorId, u64>,
    pub baseline_bits: BTreeMap<OperatorId, f64>,
}

/// Weight multipliers for the next window:
/// `clamp(baseline / max(achieved, 1), 1, w_max)`.
pub fn enforce_mocn_sla(window: &SlaWindow, w_max: f64) -> BTreeMap<OperatorId, f64> {
    window
        .baseline_bits
        .iter()
        .map(|(op, base)| {
            let got = window.achieved_bits.get(op).copied().unwrap_or(0).max(1) as f64;
            (op.clone(), (base / got).clamp(1.0, w_max.max(1.0)))
        })
        .collect()
}

/// Sharing stays enabled iff every pair of core-network clocks is within
/// `tolerance` TTIs.
pub fn check_sync(offsets: &[i64], tolerance: u64) -> bool {
    match (offsets.iter().min(), offsets.iter().max()) {
        (Some(lo), Some(hi)) => hi.abs_diff(*lo) <= tolerance,
        _ => true,
    }
}
