use crate::distance::CodeDistance;
use crate::error::Result;
use crate::error_model::{round_error, ErrorModelParams, GateLoad};
use crate::factory::FactoryModel;
use crate::layout::gate_stage;
use crate::physical::{qec_cycle_time, PhysicalParams};

/// Everything a gadget cost model needs besides its own configuration.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub d: CodeDistance,
    pub pp: PhysicalParams,
    pub em: ErrorModelParams,
    pub factory: FactoryModel,
    /// SE interval of idle storage registers.
    pub storage_interval_s: f64,
    /// Compression of idle storage relative to surface-code patches.
    pub storage_density: f64,
}

impl EvalContext {
    /// Logical error per patch per SE round of an active patch.
    pub fn active_round_error(&self, x: f64) -> f64 {
        round_error(self.d, GateLoad::gates(x), &self.em, &self.pp)
    }

    /// Wall-clock length of one active round: a 1-patch transversal CNOT
    /// with its SE round.
    pub fn active_round_time(&self) -> Result<f64> {
        qec_cycle_time(&gate_stage(1.0, 1), self.d, &self.pp)
    }

    /// Logical error per stored patch per second.
    pub fn storage_error_rate(&self) -> f64 {
        let load = GateLoad {
            cnots_per_se_round: 0.0,
            idle_time_per_round_s: self.storage_interval_s,
        };
        round_error(self.d, load, &self.em, &self.pp) / self.storage_interval_s
    }

    pub fn patch_qubits(&self, patches: u64) -> u64 {
        patches * self.d.qubits_per_patch()
    }

    pub fn storage_qubits(&self, patches: u64) -> u64 {
        (patches as f64 * self.d.qubits_per_patch() as f64 / self.storage_density).ceil() as u64
    }
}
