//! Ripple-carry addition split into runway segments that run side by side.

use serde::{Deserialize, Serialize};

use crate::context::EvalContext;
use crate::cost::GadgetCost;
use crate::error::{Error, Result};
use crate::layout::{maj_block_layout, MAJ_ACTIVITY};
use crate::physical::parallel_copies;

/// Auto-corrected CZ patches per segment.
pub const CZ_PATCHES: u64 = 3;
/// Bridge patches per segment boundary.
pub const BRIDGE_PATCHES: u64 = 2;

/// How the carry chain is uncomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UncomputeMode {
    /// UMA undoes the carry with X-basis measurements and Clifford fix-ups.
    #[default]
    Measured,
    /// UMA runs its own Toffoli.
    Toffoli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdderConfig {
    pub register_bits: u64,
    pub r_sep: u64,
    pub r_pad: u64,
    pub uncompute: UncomputeMode,
}

impl AdderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.register_bits == 0 || self.r_sep == 0 {
            return Err(Error::domain(
                "register bits and runway separation must be positive",
            ));
        }
        Ok(())
    }

    pub fn segments(&self) -> u64 {
        self.register_bits.div_ceil(self.r_sep)
    }

    /// Register width including runway padding.
    pub fn padded_bits(&self) -> u64 {
        self.register_bits + self.segments() * self.r_pad
    }

    pub fn toffolis(&self) -> u64 {
        match self.uncompute {
            UncomputeMode::Measured => self.padded_bits(),
            UncomputeMode::Toffoli => 2 * self.padded_bits(),
        }
    }

    /// Reaction-limited ripple through one segment: MAJ pass then UMA pass.
    pub fn duration(&self, t_r: f64) -> f64 {
        2.0 * (self.r_sep + self.r_pad) as f64 * t_r
    }
}

/// Approximation error of one runway with `r_pad` padding bits.
pub fn runway_error(r_pad: u64) -> f64 {
    0.5f64.powi(r_pad.min(i32::MAX as u64) as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdderCost {
    pub cost: GadgetCost,
    pub segments: u64,
    pub toffolis: u64,
    pub maj_copies: u64,
    pub factories: u64,
    /// Factories the CCZ demand calls for before the cap.
    pub factories_needed: u64,
    pub working_patches: u64,
    pub register_patches: u64,
    pub factory_qubits: u64,
    pub clifford_error: f64,
    pub register_error: f64,
    pub runway_error: f64,
    pub violations: Vec<String>,
}

/// Cost of one addition of a `register_bits` addend into a padded target.
///
/// Both registers sit in the adder region with an SE round every active
/// cycle; only the bits inside MAJ/UMA blocks see gates. Factories are sized
/// to the reaction-limited Toffoli rate and capped at `max_factories`;
/// exceeding the cap is reported, not hidden.
pub fn adder_cost(cfg: &AdderConfig, ctx: &EvalContext, max_factories: u64) -> Result<AdderCost> {
    cfg.validate()?;
    if !(ctx.factory.throughput > 0.0) {
        return Err(Error::domain("factory throughput must be positive"));
    }
    let t_r = ctx.pp.reaction_time_s;
    let duration = cfg.duration(t_r);
    let segments = cfg.segments();
    let toffolis = cfg.toffolis();

    let maj = maj_block_layout(ctx.d);
    let maj_time = maj.duration(ctx.d, &ctx.pp)?;
    let copies = parallel_copies(maj_time, t_r, MAJ_ACTIVITY)?;
    let working = segments * (copies * maj.occupied_patches + CZ_PATCHES + BRIDGE_PATCHES);
    let registers = 2 * cfg.padded_bits();

    let demand = toffolis as f64 / duration;
    let needed = crate::physical::ceil_tolerant(demand / ctx.factory.throughput).max(1.0) as u64;
    let mut violations = Vec::new();
    if needed > max_factories {
        violations.push(format!(
            "addition needs {needed} factories to sustain {demand:.0} CCZ/s, cap is {max_factories}"
        ));
    }
    let factories = needed.min(max_factories.max(1));
    let factory_qubits = factories * ctx.factory.physical_qubits();

    let rounds = duration / ctx.active_round_time()?;
    let clifford = working as f64 * rounds * ctx.active_round_error(1.0);
    let register = registers as f64 * rounds * ctx.active_round_error(0.0);
    let runway = segments as f64 * runway_error(cfg.r_pad);

    let qubits = ctx.patch_qubits(working + registers) + factory_qubits;
    Ok(AdderCost {
        cost: GadgetCost::new(qubits, duration, clifford + register + runway, toffolis),
        segments,
        toffolis,
        maj_copies: copies,
        factories,
        factories_needed: needed,
        working_patches: working,
        register_patches: registers,
        factory_qubits,
        clifford_error: clifford,
        register_error: register,
        runway_error: runway,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::fixtures::reference_context;
    use proptest::prelude::*;

    fn rsa_adder(mode: UncomputeMode) -> AdderConfig {
        AdderConfig {
            register_bits: 2048,
            r_sep: 96,
            r_pad: 43,
            uncompute: mode,
        }
    }

    #[test]
    fn rsa_adder_timing_and_count() {
        let cfg = rsa_adder(UncomputeMode::Toffoli);
        assert_eq!(cfg.segments(), 22);
        assert_eq!(cfg.toffolis(), 5988);
        assert!((cfg.duration(1e-3) - 0.278).abs() < 1e-12);
        assert_eq!(rsa_adder(UncomputeMode::Measured).toffolis(), 2994);
    }

    #[test]
    fn single_segment() {
        let cfg = AdderConfig {
            register_bits: 100,
            r_sep: 100,
            r_pad: 0,
            uncompute: UncomputeMode::Toffoli,
        };
        assert_eq!(cfg.toffolis(), 200);
        assert!((cfg.duration(1e-3) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn runway_law() {
        assert!((runway_error(43) - 1.137e-13).abs() < 1e-16);
        assert_eq!(runway_error(0), 1.0);
        assert_eq!(runway_error(20), runway_error(10).powi(2));
    }

    #[test]
    fn reference_adder_cost() {
        let ctx = reference_context();
        let a = adder_cost(&rsa_adder(UncomputeMode::Measured), &ctx, 1000).unwrap();
        assert!(a.violations.is_empty());
        assert!(
            a.factories as f64 * ctx.factory.throughput >= a.toffolis as f64 / a.cost.duration_s
        );
        assert_eq!(
            a.cost.volume,
            a.cost.physical_qubits as f64 * a.cost.duration_s
        );
        let capped = adder_cost(&rsa_adder(UncomputeMode::Measured), &ctx, 2).unwrap();
        assert_eq!(capped.violations.len(), 1);
    }

    /// Walks each segment's MAJ chain then its UMA chain, bit by bit.
    fn toffoli_walk(bits: u64, r_sep: u64, r_pad: u64, mode: UncomputeMode) -> u64 {
        let mut count = 0;
        let mut start = 0;
        while start < bits {
            let end = (start + r_sep).min(bits);
            let width = end - start + r_pad;
            for _ in 0..width {
                count += 1; // MAJ
            }
            for _ in 0..width {
                if mode == UncomputeMode::Toffoli {
                    count += 1; // UMA
                }
            }
            start = end;
        }
        count
    }

    #[test]
    fn oracle_small_registers() {
        for n in 1..=8 {
            for r_sep in 1..=n {
                for r_pad in 0..=4 {
                    for mode in [UncomputeMode::Measured, UncomputeMode::Toffoli] {
                        let cfg = AdderConfig {
                            register_bits: n,
                            r_sep,
                            r_pad,
                            uncompute: mode,
                        };
                        assert_eq!(cfg.toffolis(), toffoli_walk(n, r_sep, r_pad, mode));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn duration_ignores_width(a in 1u64..5000, b in 1u64..5000, r_sep in 1u64..300, r_pad in 0u64..60) {
            let x = AdderConfig { register_bits: a, r_sep, r_pad, uncompute: UncomputeMode::Measured };
            let y = AdderConfig { register_bits: b, ..x };
            prop_assert_eq!(x.duration(1e-3), y.duration(1e-3));
        }

        #[test]
        fn rate_within_fleet(bits in 16u64..4096, r_sep in 8u64..512, r_pad in 0u64..64) {
            let ctx = reference_context();
            let cfg = AdderConfig { register_bits: bits, r_sep, r_pad, uncompute: UncomputeMode::Measured };
            let a = adder_cost(&cfg, &ctx, u64::MAX).unwrap();
            prop_assert!(a.violations.is_empty());
            prop_assert!(a.toffolis as f64 / a.cost.duration_s <= a.factories as f64 * ctx.factory.throughput * (1.0 + 1e-9));
        }
    }
}
