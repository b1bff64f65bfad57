//! Windowed modular exponentiation as a stream of lookup-additions, and the
//! end-to-end estimate built from the unit costs.

use serde::{Deserialize, Serialize};

use crate::adder::{adder_cost, AdderConfig, UncomputeMode};
use crate::context::EvalContext;
use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::error_model::{ErrorModelParams, StorageModel};
use crate::factory::{factory_build, factory_with_rounds, CultivationCurve, FactoryModel};
use crate::lookup::{lookup_cost, unlookup_cost, unlookup_entries, LookupConfig, UnlookupMode};
use crate::physical::{patch_move_time, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub n_bits: u64,
    pub exponent_bits: u64,
    pub w_exp: u32,
    pub w_mul: u32,
    pub r_sep: u64,
    pub r_pad: u64,
    pub d: CodeDistance,
    pub max_factories: u64,
    /// Probability mass reserved for CCZ state errors.
    pub ccz_budget_fraction: f64,
    pub total_error_budget: f64,
    pub uncompute: UncomputeMode,
    pub storage_density_factor: f64,
    /// `None` picks the volume-optimal interval.
    pub storage_interval_s: Option<f64>,
    pub qubit_cap: Option<u64>,
}

impl AlgorithmConfig {
    /// Reference parameters for a 2048-bit modulus.
    pub fn rsa2048() -> Self {
        Self {
            n_bits: 2048,
            exponent_bits: 3072,
            w_exp: 3,
            w_mul: 4,
            r_sep: 96,
            r_pad: 43,
            d: CodeDistance::new(27).expect("27 is a valid distance"),
            max_factories: 192,
            ccz_budget_fraction: 0.05,
            total_error_budget: 0.5,
            uncompute: UncomputeMode::Measured,
            storage_density_factor: 1.0,
            storage_interval_s: None,
            qubit_cap: None,
        }
    }

    /// Exponent length used when none is given: `ceil(1.5 n)`.
    pub fn default_exponent_bits(n_bits: u64) -> u64 {
        (3 * n_bits).div_ceil(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bits < 2 || self.exponent_bits == 0 {
            return Err(Error::domain("modulus and exponent sizes must be positive"));
        }
        if self.w_exp == 0 || self.w_mul == 0 || self.w_exp + self.w_mul > 30 {
            return Err(Error::domain(
                "windows must be at least 1 bit and at most 30 together",
            ));
        }
        if self.r_sep == 0 || self.max_factories == 0 {
            return Err(Error::domain(
                "runway separation and factory cap must be positive",
            ));
        }
        for (name, v) in [
            ("ccz_budget_fraction", self.ccz_budget_fraction),
            ("total_error_budget", self.total_error_budget),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        if !(self.storage_density_factor >= 1.0) {
            return Err(Error::domain("storage density factor must be at least 1"));
        }
        if let Some(dt) = self.storage_interval_s {
            if !(dt > 0.0) {
                return Err(Error::domain("storage interval must be positive"));
            }
        }
        Ok(())
    }

    /// Input register with coset padding.
    pub fn coset_register_bits(&self) -> u64 {
        self.n_bits + self.r_pad
    }

    pub fn adder(&self) -> AdderConfig {
        AdderConfig {
            register_bits: self.n_bits,
            r_sep: self.r_sep,
            r_pad: self.r_pad,
            uncompute: self.uncompute,
        }
    }

    pub fn address_bits(&self) -> u32 {
        self.w_exp + self.w_mul
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupSettings {
    pub ghz_grid_spacing: u64,
    pub pipeline_copies: u64,
    pub unlookup_mode: UnlookupMode,
}

impl Default for LookupSettings {
    fn default() -> Self {
        Self {
            ghz_grid_spacing: 2,
            pipeline_copies: 1,
            unlookup_mode: UnlookupMode::Measured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FactorySettings {
    /// `None` sweeps the SE rate and keeps the cheapest.
    pub se_rounds_per_layer: Option<f64>,
    pub curve: CultivationCurve,
}

/// Complete input of one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub physical: PhysicalParams,
    pub error_model: ErrorModelParams,
    pub algorithm: AlgorithmConfig,
    pub factory: FactorySettings,
    pub lookup: LookupSettings,
}

impl Scenario {
    /// Default hardware with the 2048-bit reference parameters.
    pub fn rsa2048() -> Self {
        Self {
            physical: PhysicalParams::default(),
            error_model: ErrorModelParams::default(),
            algorithm: AlgorithmConfig::rsa2048(),
            factory: FactorySettings::default(),
            lookup: LookupSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.error_model.validate()?;
        self.algorithm.validate()?;
        if self.lookup.ghz_grid_spacing == 0 || self.lookup.pipeline_copies == 0 {
            return Err(Error::domain(
                "grid spacing and pipeline copies must be positive",
            ));
        }
        Ok(())
    }

    fn lookup_config(&self) -> LookupConfig {
        LookupConfig {
            address_bits: self.algorithm.address_bits(),
            target_bits: self.algorithm.adder().padded_bits(),
            ghz_grid_spacing: self.lookup.ghz_grid_spacing,
            pipeline_copies: self.lookup.pipeline_copies,
        }
    }
}

/// Each exponent window performs one windowed multiplication: a multiply-add
/// pass and an uncompute pass, each walking the coset-padded register one
/// multiplication window at a time.
pub fn count_lookup_additions(cfg: &AlgorithmConfig) -> u64 {
    let exponent_windows = cfg.exponent_bits.div_ceil(cfg.w_exp as u64);
    let register_windows = cfg.coset_register_bits().div_ceil(cfg.w_mul as u64);
    exponent_windows * 2 * register_windows
}

/// Toffolis of one lookup-addition: table, unlookup table, adder.
pub fn toffolis_per_lookup_addition(cfg: &AlgorithmConfig, unlookup: UnlookupMode) -> u64 {
    let m = cfg.address_bits();
    let lookup = 1u64 << m;
    let unlookup = match unlookup {
        UnlookupMode::Measured => unlookup_entries(m),
        UnlookupMode::Full => lookup,
    };
    lookup + unlookup + cfg.adder().toffolis()
}

pub fn ccz_count(cfg: &AlgorithmConfig, unlookup: UnlookupMode) -> u64 {
    count_lookup_additions(cfg) * toffolis_per_lookup_addition(cfg, unlookup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetSplit {
    pub ccz_total: f64,
    pub per_ccz: f64,
    pub runway: f64,
    /// Left for Clifford gates and idling.
    pub clifford: f64,
}

/// Splits the error budget. The CCZ share is an absolute probability mass
/// spread evenly over all CCZ states.
pub fn allocate_budget(
    cfg: &AlgorithmConfig,
    ccz_count: u64,
    lookup_additions: u64,
) -> Result<BudgetSplit> {
    let ccz_total = cfg.ccz_budget_fraction;
    let per_ccz = if ccz_count == 0 {
        ccz_total
    } else {
        ccz_total / ccz_count as f64
    };
    let adder = cfg.adder();
    let runway =
        lookup_additions as f64 * adder.segments() as f64 * crate::adder::runway_error(cfg.r_pad);
    let clifford = cfg.total_error_budget - ccz_total - runway;
    if !(clifford > 0.0) {
        return Err(Error::infeasible(format!(
            "CCZ ({ccz_total:e}) and runway ({runway:e}) shares exhaust the error budget {}",
            cfg.total_error_budget
        )));
    }
    Ok(BudgetSplit {
        ccz_total,
        per_ccz,
        runway,
        clifford,
    })
}

/// Time a stored patch spends outside storage for one SE round.
pub fn storage_excursion(d: CodeDistance, pp: &PhysicalParams) -> Result<f64> {
    Ok(2.0 * patch_move_time(1.0, d, pp)? + pp.se_round_core_time() + pp.measure_time_s)
}

/// Volume-optimal storage SE interval, matching the storage error rate per
/// patch to that of an active patch.
pub fn auto_storage_interval(
    d: CodeDistance,
    em: &ErrorModelParams,
    pp: &PhysicalParams,
) -> Result<f64> {
    let active =
        crate::error_model::round_error(d, crate::error_model::GateLoad::gates(1.0), em, pp);
    let round = crate::physical::qec_cycle_time(&crate::layout::gate_stage(1.0, 1), d, pp)?;
    StorageModel {
        excursion_s: storage_excursion(d, pp)?,
        error_rate_per_s: active / round,
    }
    .optimal_interval(em, pp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseComponent {
    pub phase: String,
    pub component: String,
    pub qubits: u64,
    /// Logical error contributed over the whole run.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub total_physical_qubits: u64,
    pub runtime_s: f64,
    pub spacetime_volume: f64,
    pub ccz_count: u64,
    pub lookup_addition_count: u64,
    pub d: u32,
    pub lookup_time_s: f64,
    pub unlookup_time_s: f64,
    pub addition_time_s: f64,
    pub lookup_phase_qubits: u64,
    pub addition_phase_qubits: u64,
    pub factory_d: u32,
    pub factory_se_rounds_per_layer: f64,
    pub factory_cycle_s: f64,
    pub factory_throughput: f64,
    pub factory_qubits: u64,
    pub factories_lookup: u64,
    pub factories_addition: u64,
    pub per_ccz_target: f64,
    pub per_ccz_error: f64,
    pub storage_interval_s: f64,
    pub total_error: f64,
    pub ccz_error: f64,
    pub clifford_error: f64,
    pub runway_error: f64,
    pub breakdown: Vec<PhaseComponent>,
    pub violations: Vec<String>,
    /// Summed relative overshoot of every violated constraint; zero when
    /// feasible.
    pub constraint_excess: f64,
    pub assumptions: Vec<String>,
}

impl EstimateReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn runtime_days(&self) -> f64 {
        self.runtime_s / 86_400.0
    }
}

pub fn build_factory(s: &Scenario, per_ccz: f64) -> Result<FactoryModel> {
    match s.factory.se_rounds_per_layer {
        Some(r) => factory_with_rounds(per_ccz, r, &s.factory.curve, &s.error_model, &s.physical),
        None => factory_build(per_ccz, &s.factory.curve, &s.error_model, &s.physical),
    }
}

/// End-to-end estimate. Constraint violations are listed in the report;
/// model-domain problems are returned as errors.
pub fn estimate(s: &Scenario) -> Result<EstimateReport> {
    s.validate()?;
    let alg = &s.algorithm;
    let pp = s.physical;
    let em = s.error_model;
    let d = alg.d;

    let count = count_lookup_additions(alg);
    let cczs = ccz_count(alg, s.lookup.unlookup_mode);
    let budget = allocate_budget(alg, cczs, count)?;
    let factory = build_factory(s, budget.per_ccz)?;
    let storage_interval = match alg.storage_interval_s {
        Some(dt) => dt,
        None => auto_storage_interval(d, &em, &pp)?,
    };
    let ctx = EvalContext {
        d,
        pp,
        em,
        factory,
        storage_interval_s: storage_interval,
        storage_density: alg.storage_density_factor,
    };

    let lcfg = s.lookup_config();
    let lookup = lookup_cost(&lcfg, &ctx, alg.max_factories)?;
    let unlookup = unlookup_cost(&lcfg, s.lookup.unlookup_mode, &ctx, alg.max_factories)?;
    let adder = adder_cost(&alg.adder(), &ctx, alg.max_factories)?;

    let t_lookup = lookup.cost.duration_s + unlookup.cost.duration_s;
    let t_add = adder.cost.duration_s;
    let qpe = alg.exponent_bits as f64 * pp.reaction_time_s;
    let runtime = count as f64 * (t_lookup + t_add) + qpe;

    let x_reg = alg.coset_register_bits();
    let y_reg = alg.adder().padded_bits();
    let storage_rate = ctx.storage_error_rate();
    let n = count as f64;

    let factories_lookup = lookup.factories.max(unlookup.factories);
    let fq = ctx.factory.physical_qubits();
    let mut breakdown = vec![
        PhaseComponent {
            phase: "lookup".into(),
            component: "storage".into(),
            qubits: ctx.storage_qubits(x_reg + y_reg),
            error: n * (x_reg + y_reg) as f64 * t_lookup * storage_rate,
        },
        PhaseComponent {
            phase: "lookup".into(),
            component: "fanout".into(),
            qubits: ctx.patch_qubits(lookup.fanout_patches),
            error: n * (lookup.fanout_error + unlookup.fanout_error),
        },
        PhaseComponent {
            phase: "lookup".into(),
            component: "unary".into(),
            qubits: ctx.patch_qubits(lookup.unary_patches),
            error: n * (lookup.unary_error + unlookup.unary_error),
        },
        PhaseComponent {
            phase: "lookup".into(),
            component: "factories".into(),
            qubits: factories_lookup * fq,
            error: n * (lookup.toffolis + unlookup.toffolis) as f64 * ctx.factory.ccz_output_error,
        },
        PhaseComponent {
            phase: "addition".into(),
            component: "storage".into(),
            qubits: ctx.storage_qubits(x_reg),
            error: n * x_reg as f64 * t_add * storage_rate,
        },
        PhaseComponent {
            phase: "addition".into(),
            component: "target_register".into(),
            qubits: ctx.patch_qubits(adder.register_patches / 2),
            error: n * adder.register_error / 2.0,
        },
        PhaseComponent {
            phase: "addition".into(),
            component: "addend_register".into(),
            qubits: ctx.patch_qubits(adder.register_patches - adder.register_patches / 2),
            error: n * adder.register_error / 2.0,
        },
        PhaseComponent {
            phase: "addition".into(),
            component: "adder_blocks".into(),
            qubits: ctx.patch_qubits(adder.working_patches),
            error: n * (adder.clifford_error + adder.runway_error),
        },
        PhaseComponent {
            phase: "addition".into(),
            component: "factories".into(),
            qubits: adder.factory_qubits,
            error: n * adder.toffolis as f64 * ctx.factory.ccz_output_error,
        },
    ];
    // The unlookup table shares the lookup's fan-out and unary hardware.
    breakdown.retain(|c| c.qubits > 0 || c.error > 0.0);

    let phase_qubits = |p: &str| -> u64 {
        breakdown
            .iter()
            .filter(|c| c.phase == p)
            .map(|c| c.qubits)
            .sum()
    };
    let lookup_q = phase_qubits("lookup");
    let add_q = phase_qubits("addition");
    let total_q = lookup_q.max(add_q);

    let ccz_error = cczs as f64 * ctx.factory.ccz_output_error;
    let runway = n * adder.runway_error;
    let total_error: f64 = breakdown.iter().map(|c| c.error).sum();
    let clifford = total_error - ccz_error - runway;

    let over = |value: f64, limit: f64| (value / limit - 1.0).max(0.0);
    let mut excess = over(total_error, alg.total_error_budget);
    for needed in [
        lookup.factories_needed,
        unlookup.factories_needed,
        adder.factories_needed,
    ] {
        excess += over(needed as f64, alg.max_factories as f64);
    }
    if let Some(cap) = alg.qubit_cap {
        excess += over(total_q as f64, cap as f64);
    }

    let mut violations = Vec::new();
    violations.extend(lookup.violations.iter().cloned());
    violations.extend(unlookup.violations.iter().cloned());
    violations.extend(adder.violations.iter().cloned());
    if total_error > alg.total_error_budget {
        violations.push(format!(
            "total logical error {total_error:.3e} exceeds the budget {}",
            alg.total_error_budget
        ));
    }
    if let Some(cap) = alg.qubit_cap {
        if total_q > cap {
            violations.push(format!("footprint {total_q} exceeds the qubit cap {cap}"));
        }
    }

    let mut assumptions = vec![
        "SE round shuttling modeled as 4 single-site moves".to_string(),
        format!(
            "factory stage-2 height {} patches (calibration constant)",
            crate::layout::FACTORY_STAGE2_HEIGHT
        ),
    ];
    if s.lookup.unlookup_mode == UnlookupMode::Measured {
        assumptions.push("measured unlookup costed as a table over half the address bits".into());
    }
    if alg.uncompute == UncomputeMode::Measured {
        assumptions.push("adder carries uncomputed by measurement (one Toffoli per bit)".into());
    }

    Ok(EstimateReport {
        total_physical_qubits: total_q,
        runtime_s: runtime,
        spacetime_volume: total_q as f64 * runtime,
        ccz_count: cczs,
        lookup_addition_count: count,
        d: d.get(),
        lookup_time_s: lookup.cost.duration_s,
        unlookup_time_s: unlookup.cost.duration_s,
        addition_time_s: t_add,
        lookup_phase_qubits: lookup_q,
        addition_phase_qubits: add_q,
        factory_d: ctx.factory.d.get(),
        factory_se_rounds_per_layer: ctx.factory.rounds_per_layer,
        factory_cycle_s: ctx.factory.cycle_duration_s,
        factory_throughput: ctx.factory.throughput,
        factory_qubits: fq,
        factories_lookup,
        factories_addition: adder.factories,
        per_ccz_target: budget.per_ccz,
        per_ccz_error: ctx.factory.ccz_output_error,
        storage_interval_s: storage_interval,
        total_error,
        ccz_error,
        clifford_error: clifford,
        runway_error: runway,
        breakdown,
        violations,
        constraint_excess: excess,
        assumptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Walks every exponent bit and register bit, opening a new
    /// lookup-addition at each window boundary.
    fn count_oracle(n: u64, e: u64, w_exp: u64, w_mul: u64, pad: u64) -> u64 {
        let mut total = 0;
        for bit in 0..e {
            if bit % w_exp != 0 {
                continue;
            }
            let mut per_pass = 0;
            for r in 0..n + pad {
                if r % w_mul == 0 {
                    per_pass += 1;
                }
            }
            total += 2 * per_pass;
        }
        total
    }

    fn small(n: u64, w_exp: u32, w_mul: u32, r_pad: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            n_bits: n,
            exponent_bits: AlgorithmConfig::default_exponent_bits(n),
            w_exp,
            w_mul,
            r_pad,
            r_sep: n,
            ..AlgorithmConfig::rsa2048()
        }
    }

    #[test]
    fn reference_count() {
        let c = count_lookup_additions(&AlgorithmConfig::rsa2048());
        assert_eq!(c, 1024 * 2 * 523);
        assert!(((c as f64) - 1.07e6).abs() / 1.07e6 < 0.1);
    }

    #[test]
    fn tiny_count() {
        let cfg = small(4, 1, 1, 0);
        assert_eq!(cfg.exponent_bits, 6);
        assert_eq!(count_lookup_additions(&cfg), count_oracle(4, 6, 1, 1, 0));
        assert_eq!(count_lookup_additions(&cfg), 48);
    }

    #[test]
    fn single_window_collapse() {
        let mut cfg = small(16, 1, 1, 0);
        cfg.w_exp = cfg.exponent_bits as u32;
        cfg.w_mul = 16;
        assert_eq!(count_lookup_additions(&cfg), 2);
    }

    #[test]
    fn ccz_counts() {
        let cfg = AlgorithmConfig::rsa2048();
        let per = toffolis_per_lookup_addition(&cfg, UnlookupMode::Measured);
        assert_eq!(per, 128 + 12 + 2994);
        let full = AlgorithmConfig {
            uncompute: UncomputeMode::Toffoli,
            ..cfg
        };
        assert_eq!(
            toffolis_per_lookup_addition(&full, UnlookupMode::Full) - 128,
            128 + 5988
        );
        let total = ccz_count(&cfg, UnlookupMode::Measured) as f64;
        assert!((total - 3e9).abs() / 3e9 < 0.15, "{total:e}");
        let none = AlgorithmConfig {
            exponent_bits: 0,
            ..cfg
        };
        assert_eq!(count_lookup_additions(&none), 0);
    }

    #[test]
    fn budget_split() {
        let cfg = AlgorithmConfig::rsa2048();
        let b = allocate_budget(&cfg, 3_000_000_000, 1_070_000).unwrap();
        assert!((b.per_ccz - 1.667e-11).abs() < 1e-14);
        assert!(b.clifford > 0.4 && b.clifford < 0.45);
        let one = AlgorithmConfig {
            total_error_budget: 0.999,
            ..cfg
        };
        assert!((allocate_budget(&one, 1, 0).unwrap().per_ccz - 0.05).abs() < 1e-15);
        let tight = AlgorithmConfig {
            total_error_budget: 0.04,
            ..cfg
        };
        assert!(matches!(
            allocate_budget(&tight, 10, 10),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn storage_interval_bracket() {
        let pp = PhysicalParams::default();
        let em = ErrorModelParams::default();
        let dt = auto_storage_interval(CodeDistance::new(27).unwrap(), &em, &pp).unwrap();
        assert!((4e-3..=16e-3).contains(&dt), "{dt}");
    }

    #[test]
    fn reference_estimate_shape() {
        let r = estimate(&Scenario::rsa2048()).unwrap();
        let fanout = r
            .breakdown
            .iter()
            .find(|c| c.component == "fanout")
            .unwrap();
        assert!(fanout.qubits as f64 > 0.5 * r.lookup_phase_qubits as f64);
        let slack = r.runtime_s
            / (r.lookup_addition_count as f64
                * (r.lookup_time_s + r.unlookup_time_s + r.addition_time_s));
        assert!((slack - 1.0).abs() < 0.05);
        assert!(r.total_error <= 0.5, "{}", r.total_error);
        let add_largest = r
            .breakdown
            .iter()
            .filter(|c| c.phase == "addition")
            .max_by_key(|c| c.qubits)
            .unwrap();
        assert_eq!(add_largest.component, "factories");
        assert_eq!(r.constraint_excess, 0.0);
        let mut capped = Scenario::rsa2048();
        capped.algorithm.qubit_cap = Some(r.total_physical_qubits / 2);
        let c = estimate(&capped).unwrap();
        assert!(
            (c.constraint_excess - 1.0).abs() < 1e-6,
            "{}",
            c.constraint_excess
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn count_matches_walk(n in 2u64..=16, w_exp in 1u32..6, w_mul in 1u32..6, pad in 0u64..5) {
            let cfg = small(n, w_exp, w_mul, pad);
            prop_assert_eq!(
                count_lookup_additions(&cfg),
                count_oracle(n, cfg.exponent_bits, w_exp as u64, w_mul as u64, pad)
            );
        }
    }
}
