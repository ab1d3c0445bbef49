use std::collections::BTreeMap;

/// Time-to-trigger state for one UE.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HandoverTracker {
    candidate: Option<usize>,
    elapsed_tti: u64,
}

impl HandoverTracker {
    /// Feeds one measurement round covering `dt_tti` TTIs. Returns the
    /// target cell once the best candidate has beaten the serving cell by
    /// more than `hysteresis_db` for `ttt_tti` consecutive TTIs.
    pub fn observe(
        &mut self,
        rsrp_dbm: &BTreeMap<usize, f64>,
        serving: usize,
        hysteresis_db: f64,
        ttt_tti: u64,
        dt_tti: u64,
    ) -> Option<usize> {
        let Some(&serving_rsrp) = rsrp_dbm.get(&serving) else {
            *self = Self::default();
            return None;
        };
        let best =
            rsrp_dbm
                .iter()
                .filter(|(c, _)| **c != serving)
                .fold(None::<(usize, f64)>, |acc, (c, p)| match acc {
                    Some((_, bp)) if bp >= *p => acc,
                    _ => Some((*c, *p)),
                });
        match best {
            Some((c, p)) if p > serving_rsrp + hysteresis_db => {
                if self.candidate == Some(c) {
                    self.elapsed_tti += dt_tti;
                } else {
                    self.candidate = Some(c);
                    self.elapsed_tti = dt_tti;
                }
                if self.elapsed_tti >= ttt_tti {
                    *self = Self::default();
                    return Some(c);
                }
                None
            }
            _ => {
                *self = Self::default();
                None
            }
        }
    }
}
