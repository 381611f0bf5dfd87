//! Resolution tiers: a desk-scale configuration for fast runs and the
//! full-scale configuration matching the published operating point.

use std::sync::Arc;

use cst_core::hilbert::space::HilbertSpace;
use cst_core::protocol::protocol_space;
use cst_core::device::DeviceParams;
use cst_core::Result;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    /// Desk scale: alpha = 1.2, reduced mode truncations, fast enough for CI.
    A,
    /// Full scale: alpha = 1.86 with truncations sized for the displaced
    /// 2-alpha branch; hours-scale sweeps.
    B,
}

impl Tier {
    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "A" | "a" => Some(Tier::A),
            "B" | "b" => Some(Tier::B),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tier::A => "A",
            Tier::B => "B",
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Tier::A => 1.2,
            Tier::B => 1.86,
        }
    }

    /// Mode truncations (single-photon cavities, displaced cavity 1',
    /// remaining coherent-state cavities).
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            Tier::A => (3, 18, 12),
            Tier::B => (3, 38, 17),
        }
    }

    pub fn default_trajectories(&self) -> usize {
        match self {
            Tier::A => 200,
            Tier::B => 500,
        }
    }

    /// Build the protocol space for `n` cavity pairs at this tier.
    pub fn space(&self, n: usize) -> Result<Arc<HilbertSpace>> {
        let (sps, c1p, cs) = self.dims();
        protocol_space(n, sps, c1p, cs)
    }

    /// Rescale the coherent amplitude of `p` to this tier.
    pub fn apply(&self, p: &mut DeviceParams) {
        p.alpha = C64::new(self.alpha(), 0.0);
    }
}
