//! Table lookup by unary iteration, with each entry's data written through a
//! GHZ-assisted CNOT fan-out.

use serde::{Deserialize, Serialize};

use crate::context::EvalContext;
use crate::cost::GadgetCost;
use crate::error::{Error, Result};
use crate::error_model::{round_error, GateLoad};
use crate::layout::{ghz_counts, ghz_fanout_layout, ACTIVE_TARGET_FRACTION};
use crate::physical::qec_cycle_time;

/// Toffoli block used by the unary-iteration ladder.
const LADDER_BLOCK_PATCHES: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnlookupMode {
    /// Measure the targets in the X basis and fix phases with a table over
    /// half the address bits.
    #[default]
    Measured,
    /// Run the full lookup again.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupConfig {
    pub address_bits: u32,
    pub target_bits: u64,
    pub ghz_grid_spacing: u64,
    pub pipeline_copies: u64,
}

impl LookupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.address_bits == 0 || self.address_bits > 40 {
            return Err(Error::domain(format!(
                "address bits must be in 1..=40, got {}",
                self.address_bits
            )));
        }
        if self.target_bits == 0 || self.ghz_grid_spacing == 0 || self.pipeline_copies == 0 {
            return Err(Error::domain(
                "targets, grid spacing and pipeline copies must be positive",
            ));
        }
        Ok(())
    }

    pub fn entries(&self) -> u64 {
        1 << self.address_bits
    }

    /// Reaction steps to build the AND ladder before the first entry and tear
    /// it down after the last.
    pub fn ladder_steps(&self) -> u64 {
        2 * (self.address_bits as u64 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LookupCost {
    pub cost: GadgetCost,
    pub entries: u64,
    pub toffolis: u64,
    /// Duration of each GHZ pipeline stage.
    pub stage_times: Vec<f64>,
    /// Time between consecutive table entries.
    pub period_s: f64,
    pub factories: u64,
    /// Factories the CCZ demand calls for before the cap.
    pub factories_needed: u64,
    pub fanout_patches: u64,
    pub unary_patches: u64,
    pub factory_qubits: u64,
    pub fanout_error: f64,
    pub unary_error: f64,
    pub violations: Vec<String>,
}

fn table_cost(
    entries: u64,
    ladder_steps: u64,
    address_bits: u32,
    cfg: &LookupConfig,
    ctx: &EvalContext,
    max_factories: u64,
) -> Result<LookupCost> {
    cfg.validate()?;
    if !(ctx.factory.throughput > 0.0) {
        return Err(Error::domain("factory throughput must be positive"));
    }
    let t_r = ctx.pp.reaction_time_s;
    let fan = ghz_fanout_layout(cfg.target_bits, cfg.ghz_grid_spacing, ctx.d)?;
    let stage_times = fan
        .schedule
        .iter()
        .map(|b| qec_cycle_time(b, ctx.d, &ctx.pp))
        .collect::<Result<Vec<f64>>>()?;
    let slowest = stage_times.iter().copied().fold(0.0, f64::max);
    let period = t_r.max(slowest / cfg.pipeline_copies as f64);

    // The GHZ state for the first entry is prepared while the ladder builds;
    // the last one still has to be consumed and measured out.
    let n = stage_times.len();
    let drain_from = n.saturating_sub(2);
    let prep: f64 = stage_times[..drain_from].iter().sum();
    let drain: f64 = stage_times[drain_from..].iter().sum();
    let duration = (ladder_steps as f64 * t_r).max(prep) + entries as f64 * period + drain;

    let (ghz, helpers) = ghz_counts(cfg.target_bits, cfg.ghz_grid_spacing);
    let fanout_patches = cfg.target_bits + cfg.pipeline_copies * (ghz + helpers);
    let unary_patches = address_bits as u64 + (address_bits as u64 - 1) + LADDER_BLOCK_PATCHES;

    let toffolis = entries;
    let demand = toffolis as f64 / duration;
    let needed = crate::physical::ceil_tolerant(demand / ctx.factory.throughput).max(1.0) as u64;
    let mut violations = Vec::new();
    if needed > max_factories {
        violations.push(format!(
            "lookup needs {needed} factories to sustain {demand:.0} CCZ/s, cap is {max_factories}"
        ));
    }
    let factories = needed.min(max_factories.max(1));
    let factory_qubits = factories * ctx.factory.physical_qubits();

    // Every entry pushes one GHZ state through all stages, one round each,
    // and touches the active half of the targets; the rest idle for a period.
    let p1 = ctx.active_round_error(1.0);
    let round = ctx.active_round_time()?;
    let idle = GateLoad {
        cnots_per_se_round: 0.0,
        idle_time_per_round_s: (period - round).max(0.0),
    };
    let p0 = round_error(ctx.d, idle, &ctx.em, &ctx.pp);
    let active = (cfg.target_bits as f64 * ACTIVE_TARGET_FRACTION).ceil();
    let per_entry = (ghz + helpers) as f64 * n as f64 * p1
        + active * p1
        + (cfg.target_bits as f64 - active) * p0;
    let fanout_error = entries as f64 * per_entry;
    let unary_error = unary_patches as f64 * (duration / round) * p1;

    let qubits = ctx.patch_qubits(fanout_patches + unary_patches) + factory_qubits;
    Ok(LookupCost {
        cost: GadgetCost::new(qubits, duration, fanout_error + unary_error, toffolis),
        entries,
        toffolis,
        stage_times,
        period_s: period,
        factories,
        factories_needed: needed,
        fanout_patches,
        unary_patches,
        factory_qubits,
        fanout_error,
        unary_error,
        violations,
    })
}

pub fn lookup_cost(
    cfg: &LookupConfig,
    ctx: &EvalContext,
    max_factories: u64,
) -> Result<LookupCost> {
    cfg.validate()?;
    table_cost(
        cfg.entries(),
        cfg.ladder_steps(),
        cfg.address_bits,
        cfg,
        ctx,
        max_factories,
    )
}

/// Entries of the phase-fixup table used by measured unlookup.
pub fn unlookup_entries(address_bits: u32) -> u64 {
    crate::physical::ceil_tolerant(2f64.powf(address_bits as f64 / 2.0)) as u64
}

pub fn unlookup_cost(
    cfg: &LookupConfig,
    mode: UnlookupMode,
    ctx: &EvalContext,
    max_factories: u64,
) -> Result<LookupCost> {
    cfg.validate()?;
    match mode {
        UnlookupMode::Full => lookup_cost(cfg, ctx, max_factories),
        UnlookupMode::Measured => {
            let half = cfg.address_bits.div_ceil(2);
            let ladder = 2 * (half as u64 - 1);
            table_cost(
                unlookup_entries(cfg.address_bits),
                ladder,
                half,
                cfg,
                ctx,
                max_factories,
            )
        }
    }
}
