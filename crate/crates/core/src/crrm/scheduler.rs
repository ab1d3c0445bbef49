//! Per-channel, per-TTI resource sharing.

use crate::radio::spectral_efficiency;

/// Bits one TTI carries at full allocation.
pub fn full_allocation_bits(bandwidth_hz: f64, sinr_db: f64, tti_s: f64) -> f64 {
    bandwidth_hz * spectral_efficiency(sinr_db) * tti_s
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claimant {
    /// Operator weight times SLA multiplier.
    pub weight: f64,
    /// Largest useful fraction (backlog over full-allocation bits), ≥ 0.
    pub cap: f64,
}

/// Weighted proportional-fair split of `budget` with demand caps.
///
/// Maximising Σ w·log(x) under Σ x ≤ budget gives x ∝ w; claimants whose
/// cap is below their share are filled and the remainder is spread again
/// (water-filling). Sums run in input order so results are reproducible.
pub fn water_fill(budget: f64, claimants: &[Claimant]) -> Vec<f64> {
    let mut alloc = vec![0.0; claimants.len()];
    let mut open: Vec<usize> = (0..claimants.len())
        .filter(|&i| claimants[i].cap > 0.0 && claimants[i].weight > 0.0)
        .collect();
    let mut left = budget.clamp(0.0, 1.0);
    while !open.is_empty() && left > 0.0 {
        let w: f64 = open.iter().map(|&i| claimants[i].weight).sum();
        let capped: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&i| claimants[i].cap <= left * claimants[i].weight / w)
            .collect();
        if capped.is_empty() {
            for &i in &open {
                alloc[i] = left * claimants[i].weight / w;
            }
            break;
        }
        for &i in &capped {
            alloc[i] = claimants[i].cap;
            left -= claimants[i].cap;
        }
        open.retain(|i| !capped.contains(i));
    }
    alloc
}
