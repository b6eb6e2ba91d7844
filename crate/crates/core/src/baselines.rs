//! Fixed-dwell reference policies.

use crate::comms::communication_time;
use crate::error::{IsacError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPolicy {
    dwell_fraction: f64,
}

impl FixedPolicy {
    pub fn new(dwell_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&dwell_fraction) {
            return Err(IsacError::config(format!(
                "fixed dwell fraction {dwell_fraction} outside [0, 1]"
            )));
        }
        Ok(Self { dwell_fraction })
    }

    pub fn dwell_fraction(&self) -> f64 {
        self.dwell_fraction
    }
}

/// Per-target dwells (s) and the communication time left over.
#[derive(Debug, Clone, PartialEq)]
pub struct DwellAllocation {
    pub dwells: Vec<f64>,
    pub tau_c: f64,
}

/// Every live target gets the same dwell; an over-subscribed budget leaves no
/// communication time but the dwells stand.
pub fn fixed_dwell_allocation(policy: FixedPolicy, live_targets: usize, t0: f64) -> DwellAllocation {
    let dwell = policy.dwell_fraction * t0;
    let dwells = vec![dwell; live_targets];
    let tau_c = communication_time(t0, dwells.iter().sum());
    DwellAllocation { dwells, tau_c }
}
